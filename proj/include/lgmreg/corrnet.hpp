#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "lgmreg/datagen.hpp"
#include "lgmreg/features.hpp"
#include "lgmreg/geom3d.hpp"
#include "lgmreg/latent_gmm.hpp"
#include "lgmreg/mt_solver.hpp"

namespace lgmreg {

// Point-wise classifier f(features) -> Gamma:
//   conv1  d   -> 64   ReLU
//   conv2  64  -> 128  ReLU, max-pooled over points to a global descriptor
//   head1  128 + 128 -> 128 ReLU  (per-point features concatenated with the pooled one)
//   head2  128 -> J, row softmax
inline constexpr std::size_t kConv1Width = 64;
inline constexpr std::size_t kConv2Width = 128;
inline constexpr std::size_t kHead1Width = 128;

struct ParamSlot {
  std::string name;
  std::size_t offset;
  std::size_t rows;
  std::size_t cols;
  std::size_t length() const { return rows * cols; }
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Flat parameter vector plus the layout that names every slice.
class CorrNetParams {
 public:
  enum Slot : std::size_t {
    kConv1W, kConv1B, kConv2W, kConv2B, kHead1W, kHead1B, kHead2W, kHead2B, kSlotCount
  };

  CorrNetParams() = default;
  /// All-zero parameters.
  CorrNetParams(std::size_t input_dim, std::size_t components);
  /// Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static CorrNetParams initialize(std::size_t input_dim, std::size_t components, Rng& rng);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t components() const { return components_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }
  const std::vector<ParamSlot>& layout() const { return layout_; }

  Eigen::Map<const RowMatrix> matrix(Slot s) const;
  Eigen::Map<RowMatrix> matrix(Slot s);

 private:
  std::size_t input_dim_ = 0;
  std::size_t components_ = 0;
  Eigen::VectorXd values_;
  std::vector<ParamSlot> layout_;
};

/// Activations kept for the backward pass.
struct ForwardCache {
  RowMatrix input;
  RowMatrix h1;  // after ReLU
  RowMatrix h2;  // after ReLU
  Eigen::RowVectorXd pooled;
  std::vector<Eigen::Index> argmax;  // pooled source row per channel (first max)
  RowMatrix h3;  // after ReLU
  Gamma gamma;
};

/// Row-softmax responsibilities. Throws InvalidArgument on a feature width
/// mismatch.
Gamma forward(const CorrNetParams& params, const FeatureMatrix& features);
Gamma forward(const CorrNetParams& params, const FeatureMatrix& features, ForwardCache& cache);

/// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(gamma).
void backward(const CorrNetParams& params, const ForwardCache& cache, const Gamma& grad_gamma,
              Eigen::VectorXd& grad);

enum class LossKind { kMse, kRmse };
std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& name);

/// |H(T) H(T_gt)^-1 - I|_F^2 + |H(T_inv) H(T_gt) - I|_F^2 over 4x4 homogeneous matrices.
double loss(const RigidTransform& T, const RigidTransform& T_inv, const RigidTransform& T_gt);

struct TransformGradient {
  Mat3 R = Mat3::Zero();
  Vec3 t = Vec3::Zero();
};

/// Loss and its gradients with respect to both predicted transforms.
double loss_with_gradient(const RigidTransform& T, const RigidTransform& T_inv, const RigidTransform& T_gt,
                          TransformGradient& grad_T, TransformGradient& grad_T_inv);

/// Registration-metric loss: rmse(T, T_gt, source) + rmse(T_inv, T_gt^-1, target)
/// over all points, in the (1/n) sqrt(sum) form used for evaluation.
double rmse_loss_with_gradient(const RigidTransform& T, const RigidTransform& T_inv, const RigidTransform& T_gt,
                               const PointCloud& source, const PointCloud& target, TransformGradient& grad_T,
                               TransformGradient& grad_T_inv);

struct PipelineOptions {
  InputMode input_mode = InputMode::kInvariantFeatures;
  std::size_t neighbors = kDefaultNeighbors;
  CentroidWeighting centroid_weighting = CentroidWeighting::kObjective;
  LossKind loss = LossKind::kMse;
  /// Relative singular-value gap below which a sample's gradient is zeroed.
  double svd_gap = 1e-6;
  /// Skip samples whose alignment is degenerate instead of throwing.
  bool skip_degenerate = true;
  std::size_t threads = 1;
};

struct PairPrediction {
  RigidTransform T;      // source -> target
  RigidTransform T_inv;  // target -> source
  Gamma source_gamma;
  Gamma target_gamma;
  Gmm source_gmm;
  Gmm target_gmm;
};

/// Full one-shot pipeline on precomputed features.
PairPrediction predict(const CorrNetParams& params, const PointCloud& source, const PointCloud& target,
                       const FeatureMatrix& source_features, const FeatureMatrix& target_features,
                       CentroidWeighting weighting = CentroidWeighting::kObjective);

/// Computes features per `options`, then predicts both directions. Propagates
/// DegenerateConfiguration.
PairPrediction register_pair(const CorrNetParams& params, const PointCloud& source, const PointCloud& target,
                             const PipelineOptions& options = {});

/// A pair with its network inputs precomputed.
struct TrainingSample {
  PointCloud source;
  PointCloud target;
  FeatureMatrix source_features;
  FeatureMatrix target_features;
  RigidTransform gt;
};

TrainingSample make_training_sample(const RegistrationPair& pair, const PipelineOptions& options);

struct SampleGradient {
  double loss = 0.0;
  Eigen::VectorXd grad;
  bool degenerate = false;  // alignment threw DegenerateConfiguration
  bool clamped = false;     // SVD differential guard fired
};

SampleGradient sample_gradient(const CorrNetParams& params, const TrainingSample& sample,
                               const PipelineOptions& options);
/// Loss only (no gradient). Throws DegenerateConfiguration.
double sample_loss(const CorrNetParams& params, const TrainingSample& sample, const PipelineOptions& options);

struct BatchGradient {
  double mean_loss = 0.0;
  Eigen::VectorXd grad;  // mean over contributing samples
  std::size_t used = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

/// Mean-loss gradient over a batch. Per-sample work may run on
/// `options.threads` threads; the reduction order is fixed. Degenerate samples
/// throw unless `options.skip_degenerate`, in which case they are skipped
/// with a warning.
BatchGradient grad(const CorrNetParams& params, const std::vector<const TrainingSample*>& batch,
                   const PipelineOptions& options);
BatchGradient grad(const CorrNetParams& params, const std::vector<TrainingSample>& batch,
                   const PipelineOptions& options);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros(std::size_t n);
};

/// Bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads, double lr);

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::size_t lr_patience = 10;
  double lr_decay = 0.5;
  std::uint64_t seed = 0;
  std::size_t components = 16;
  double val_fraction = 0.1;
  PipelineOptions pipeline;

  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  std::size_t skipped = 0;
};

struct TrainResult {
  CorrNetParams params;  // best validation loss
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Holds out `val_fraction` of the pairs (at least one) by seed, trains with
/// Adam, halves the rate when validation loss has not improved for more than
/// `lr_patience` epochs, and returns the best-validation parameters.
TrainResult train(const std::vector<RegistrationPair>& pairs, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Binary checkpoint: magic, version, metadata, layout table, little-endian doubles.
struct Checkpoint {
  CorrNetParams params;
  InputMode input_mode = InputMode::kInvariantFeatures;
  std::size_t neighbors = kDefaultNeighbors;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace lgmreg
