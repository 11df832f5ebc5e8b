#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lgmreg/corrnet.hpp"
#include "lgmreg/error.hpp"

namespace lgmreg {

AdamState AdamState::zeros(std::size_t n) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  s.v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  return s;
}

void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads, double lr) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw InvalidArgument("adam_step: length mismatch");
  ++state.step;
  const double t = static_cast<double>(state.step);
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
}

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || lr_patience < 1 || components < 1)
    throw InvalidArgument("training counts must be at least 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidArgument("learning rate must be positive");
  if (!(lr_decay > 0.0 && lr_decay < 1.0)) throw InvalidArgument("lr_decay must lie in (0, 1)");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw InvalidArgument("val_fraction must lie in (0, 1)");
  if (pipeline.input_mode == InputMode::kInvariantFeatures && pipeline.neighbors < 1)
    throw InvalidArgument("neighbors must be at least 1");
  if (pipeline.threads < 1) throw InvalidArgument("threads must be at least 1");
}

namespace {

double validation_loss(const CorrNetParams& params, const std::vector<TrainingSample>& val,
                       const PipelineOptions& options) {
  std::vector<double> losses(val.size(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(val.size(), options.threads, [&](std::size_t k) {
    try {
      losses[k] = sample_loss(params, val[k], options);
    } catch (const DegenerateConfiguration&) {
    }
  });
  double total = 0.0;
  std::size_t used = 0;
  for (double l : losses) {
    if (std::isnan(l)) continue;
    total += l;
    ++used;
  }
  return used > 0 ? total / static_cast<double>(used) : std::numeric_limits<double>::infinity();
}

}  // namespace

TrainResult train(const std::vector<RegistrationPair>& pairs, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (pairs.size() < 2) throw InvalidArgument("training needs at least two pairs (train and validation)");
  const PipelineOptions& opt = config.pipeline;

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng = make_rng(config.seed, "split");
  std::shuffle(order.begin(), order.end(), split_rng);
  const auto n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(pairs.size()))), 1,
      pairs.size() - 1);

  std::vector<TrainingSample> val, trn;
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> trn_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(trn_idx.begin(), trn_idx.end());
  val.resize(val_idx.size());
  trn.resize(trn_idx.size());
  parallel_for(val_idx.size(), opt.threads,
               [&](std::size_t k) { val[k] = make_training_sample(pairs[val_idx[k]], opt); });
  parallel_for(trn_idx.size(), opt.threads,
               [&](std::size_t k) { trn[k] = make_training_sample(pairs[trn_idx[k]], opt); });

  Rng init_rng = make_rng(config.seed, "init");
  CorrNetParams params =
      CorrNetParams::initialize(feature_dimension(opt.input_mode, opt.neighbors), config.components, init_rng);
  AdamState adam = AdamState::zeros(params.size());

  TrainResult result;
  result.train_size = trn.size();
  result.val_size = val.size();
  result.params = params;
  double best = std::numeric_limits<double>::infinity();
  double lr = config.lr;
  std::size_t since_best = 0;

  std::vector<std::size_t> perm(trn.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng = make_rng(config.seed, "shuffle", epoch);
    std::shuffle(perm.begin(), perm.end(), shuffle_rng);

    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.lr = lr;
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t b = 0; b < perm.size(); b += config.batch_size) {
      std::vector<const TrainingSample*> batch;
      for (std::size_t k = b; k < std::min(perm.size(), b + config.batch_size); ++k) batch.push_back(&trn[perm[k]]);
      const BatchGradient g = grad(params, batch, opt);
      stats.skipped += g.skipped;
      if (g.used == 0) continue;
      loss_sum += g.mean_loss * static_cast<double>(g.used);
      loss_count += g.used;
      adam_step(adam, params.values(), g.grad, lr);
    }
    stats.train_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count)
                                      : std::numeric_limits<double>::quiet_NaN();
    stats.val_loss = validation_loss(params, val, opt);

    if (stats.val_loss < best) {
      best = stats.val_loss;
      result.params = params;
      result.best_epoch = stats.epoch;
      since_best = 0;
    } else if (++since_best > config.lr_patience) {
      lr *= config.lr_decay;
      since_best = 0;
    }
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  if (result.best_epoch == 0) result.params = params;
  return result;
}

}  // namespace lgmreg
