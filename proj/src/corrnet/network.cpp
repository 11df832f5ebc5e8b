#include <cmath>

#include "lgmreg/corrnet.hpp"
#include "lgmreg/error.hpp"

namespace lgmreg {
namespace {

Eigen::Map<RowMatrix> grad_slice(Eigen::VectorXd& grad, const ParamSlot& s) {
  return {grad.data() + s.offset, static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols)};
}

RowMatrix relu(RowMatrix z) { return z.cwiseMax(0.0); }

}  // namespace

CorrNetParams::CorrNetParams(std::size_t input_dim, std::size_t components)
    : input_dim_(input_dim), components_(components) {
  if (input_dim == 0 || components == 0) throw InvalidArgument("network needs a positive input width and J");
  const std::size_t shapes[kSlotCount][2] = {
      {input_dim, kConv1Width},       {1, kConv1Width},  {kConv1Width, kConv2Width}, {1, kConv2Width},
      {2 * kConv2Width, kHead1Width}, {1, kHead1Width},  {kHead1Width, components},  {1, components},
  };
  const char* names[kSlotCount] = {"conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias",
                                   "head1.weight", "head1.bias", "head2.weight", "head2.bias"};
  std::size_t offset = 0;
  for (std::size_t s = 0; s < kSlotCount; ++s) {
    layout_.push_back({names[s], offset, shapes[s][0], shapes[s][1]});
    offset += shapes[s][0] * shapes[s][1];
  }
  values_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));
}

CorrNetParams CorrNetParams::initialize(std::size_t input_dim, std::size_t components, Rng& rng) {
  CorrNetParams p(input_dim, components);
  for (std::size_t s = 0; s < kSlotCount; s += 2) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.layout_[s].rows));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t k : {s, s + 1}) {
      const ParamSlot& slot = p.layout_[k];
      for (std::size_t i = 0; i < slot.length(); ++i) p.values_(static_cast<Eigen::Index>(slot.offset + i)) = u(rng);
    }
  }
  return p;
}

Eigen::Map<const RowMatrix> CorrNetParams::matrix(Slot s) const {
  const ParamSlot& slot = layout_.at(s);
  return {values_.data() + slot.offset, static_cast<Eigen::Index>(slot.rows), static_cast<Eigen::Index>(slot.cols)};
}

Eigen::Map<RowMatrix> CorrNetParams::matrix(Slot s) {
  const ParamSlot& slot = layout_.at(s);
  return {values_.data() + slot.offset, static_cast<Eigen::Index>(slot.rows), static_cast<Eigen::Index>(slot.cols)};
}

Gamma forward(const CorrNetParams& params, const FeatureMatrix& features) {
  ForwardCache cache;
  return forward(params, features, cache);
}

Gamma forward(const CorrNetParams& params, const FeatureMatrix& features, ForwardCache& cache) {
  using P = CorrNetParams;
  if (static_cast<std::size_t>(features.cols()) != params.input_dim())
    throw InvalidArgument("feature width " + std::to_string(features.cols()) + " does not match network input " +
                          std::to_string(params.input_dim()));
  if (features.rows() == 0) throw InvalidArgument("network input has no points");
  const auto C2 = static_cast<Eigen::Index>(kConv2Width);

  cache.input = features;
  cache.h1 = relu((cache.input * params.matrix(P::kConv1W)).rowwise() + params.matrix(P::kConv1B).row(0));
  cache.h2 = relu((cache.h1 * params.matrix(P::kConv2W)).rowwise() + params.matrix(P::kConv2B).row(0));

  cache.pooled.resize(C2);
  cache.argmax.assign(static_cast<std::size_t>(C2), 0);
  for (Eigen::Index c = 0; c < C2; ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < cache.h2.rows(); ++i)
      if (cache.h2(i, c) > cache.h2(best, c)) best = i;
    cache.argmax[static_cast<std::size_t>(c)] = best;
    cache.pooled(c) = cache.h2(best, c);
  }

  const auto W3 = params.matrix(P::kHead1W);
  const Eigen::RowVectorXd global = cache.pooled * W3.bottomRows(C2) + params.matrix(P::kHead1B).row(0);
  cache.h3 = relu((cache.h2 * W3.topRows(C2)).rowwise() + global);

  RowMatrix logits = (cache.h3 * params.matrix(P::kHead2W)).rowwise() + params.matrix(P::kHead2B).row(0);
  cache.gamma.resize(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - m).exp().matrix();
    cache.gamma.row(i) = e / e.sum();
  }
  return cache.gamma;
}

void backward(const CorrNetParams& params, const ForwardCache& cache, const Gamma& grad_gamma, Eigen::VectorXd& grad) {
  using P = CorrNetParams;
  const auto& L = params.layout();
  const auto C2 = static_cast<Eigen::Index>(kConv2Width);
  if (grad.size() != static_cast<Eigen::Index>(params.size())) grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));

  // Softmax.
  const Eigen::VectorXd inner = (grad_gamma.array() * cache.gamma.array()).rowwise().sum();
  const RowMatrix g_logits = (cache.gamma.array() * (grad_gamma.colwise() - inner).array()).matrix();

  grad_slice(grad, L[P::kHead2W]) += cache.h3.transpose() * g_logits;
  grad_slice(grad, L[P::kHead2B]) += g_logits.colwise().sum();
  RowMatrix g_z3 = g_logits * params.matrix(P::kHead2W).transpose();
  g_z3 = (cache.h3.array() > 0.0).select(g_z3, 0.0);

  const auto W3 = params.matrix(P::kHead1W);
  const Eigen::RowVectorXd g_z3_sum = g_z3.colwise().sum();
  auto gW3 = grad_slice(grad, L[P::kHead1W]);
  gW3.topRows(C2) += cache.h2.transpose() * g_z3;
  gW3.bottomRows(C2) += cache.pooled.transpose() * g_z3_sum;
  grad_slice(grad, L[P::kHead1B]) += g_z3_sum;

  RowMatrix g_h2 = g_z3 * W3.topRows(C2).transpose();
  const Eigen::RowVectorXd g_pooled = g_z3_sum * W3.bottomRows(C2).transpose();
  for (Eigen::Index c = 0; c < C2; ++c) g_h2(cache.argmax[static_cast<std::size_t>(c)], c) += g_pooled(c);
  g_h2 = (cache.h2.array() > 0.0).select(g_h2, 0.0);

  grad_slice(grad, L[P::kConv2W]) += cache.h1.transpose() * g_h2;
  grad_slice(grad, L[P::kConv2B]) += g_h2.colwise().sum();
  RowMatrix g_h1 = g_h2 * params.matrix(P::kConv2W).transpose();
  g_h1 = (cache.h1.array() > 0.0).select(g_h1, 0.0);

  grad_slice(grad, L[P::kConv1W]) += cache.input.transpose() * g_h1;
  grad_slice(grad, L[P::kConv1B]) += g_h1.colwise().sum();
}

}  // namespace lgmreg
