#include "bdc/problems/mlp_task.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "bdc/error.hpp"
#include "bdc/rng.hpp"

namespace bdc {

MlpDataset sine_regression(Index n, std::uint64_t seed, double noise) {
  if (n < 1) throw UsageError("sine_regression: n must be >= 1");
  Engine eng = make_engine(seed, "data");
  std::uniform_real_distribution<double> ux(-std::numbers::pi, std::numbers::pi);
  std::normal_distribution<double> nd(0.0, noise);
  MlpDataset d;
  d.kind = LossKind::kMse;
  d.X.resize(1, n);
  d.y.resize(n);
  for (Index j = 0; j < n; ++j) {
    d.X(0, j) = ux(eng);
    d.y(j) = std::sin(d.X(0, j)) + 1.5 + (noise > 0.0 ? nd(eng) : 0.0);
  }
  shift_labels(d);
  return d;
}

MlpDataset gaussian_blobs(Index n, int classes, std::uint64_t seed) {
  if (n < 1) throw UsageError("gaussian_blobs: n must be >= 1");
  if (classes < 2) throw UsageError("gaussian_blobs: need at least 2 classes");
  Engine eng = make_engine(seed, "data");
  std::normal_distribution<double> nd(0.0, 1.0);
  MlpDataset d;
  d.kind = LossKind::kCrossEntropy;
  d.X.resize(2, n);
  d.y.resize(n);
  for (Index j = 0; j < n; ++j) {
    const int c = static_cast<int>(j % classes);
    const double ang = 2.0 * std::numbers::pi * c / classes;
    d.X(0, j) = 2.5 * std::cos(ang) + nd(eng);
    d.X(1, j) = 2.5 * std::sin(ang) + nd(eng);
    d.y(j) = c;
  }
  return d;
}

void shift_labels(MlpDataset& data) {
  if (data.kind != LossKind::kMse || data.y.size() == 0) return;
  const double c = std::max(0.0, -data.y.minCoeff());
  data.y.array() += c;
  data.label_shift += c;
}

MlpTaskProblem::MlpTaskProblem(MlpParams shape, MlpDataset data) : shape_(std::move(shape)), data_(std::move(data)) {
  shape_.validate();
  if (data_.X.rows() != shape_.input_dim()) throw UsageError("mlp task: input dimension mismatch");
  if (data_.y.size() != data_.X.cols()) throw UsageError("mlp task: one label per sample required");
  if (data_.size() == 0) throw UsageError("mlp task: empty dataset");
  check_labels(shape_, data_.y, data_.kind);
  partition_ = shape_.partition();
}

std::pair<Matrix, Vector> MlpTaskProblem::gather(const SampleHandle& s) const {
  if (s.indices.empty()) return {data_.X, data_.y};
  Matrix X(data_.X.rows(), static_cast<Index>(s.indices.size()));
  Vector y(static_cast<Index>(s.indices.size()));
  for (std::size_t k = 0; k < s.indices.size(); ++k) {
    const auto j = static_cast<Index>(s.indices[k]);
    if (j >= data_.X.cols()) throw UsageError("mlp task: sample index out of range");
    X.col(static_cast<Index>(k)) = data_.X.col(j);
    y(static_cast<Index>(k)) = data_.y(j);
  }
  return {X, y};
}

double MlpTaskProblem::eval_f(const BlockVector& theta, const SampleHandle& s) const {
  const auto [X, y] = gather(s);
  const MlpParams p = params(theta);
  const double total = data_.kind == LossKind::kMse ? mse_loss(p, X, y) : ce_loss(p, X, y);
  return total / static_cast<double>(X.cols());
}

double MlpTaskProblem::eval_f(const BlockVector& theta) const { return eval_f(theta, SampleHandle{}); }

double MlpTaskProblem::eval_g(std::size_t i, const BlockVector& theta, const SampleHandle& s) const {
  partition_->offset(i);
  const auto [X, y] = gather(s);
  return loss_from_state(forward_split(params(theta), X), y, data_.kind).g / static_cast<double>(X.cols());
}

double MlpTaskProblem::eval_h(std::size_t i, const BlockVector& theta, const SampleHandle& s) const {
  partition_->offset(i);
  const auto [X, y] = gather(s);
  return loss_from_state(forward_split(params(theta), X), y, data_.kind).h / static_cast<double>(X.cols());
}

Vector MlpTaskProblem::grad_g_block(std::size_t i, const BlockVector& theta, const SampleHandle& s) const {
  const auto [X, y] = gather(s);
  const MlpParams p = params(theta);
  return block_grads_from_state(p, forward_split(p, X), X, y, data_.kind, i).g / static_cast<double>(X.cols());
}

Vector MlpTaskProblem::subgrad_h_block(std::size_t i, const BlockVector& theta, const SampleHandle& s) const {
  const auto [X, y] = gather(s);
  const MlpParams p = params(theta);
  return block_grads_from_state(p, forward_split(p, X), X, y, data_.kind, i).h / static_cast<double>(X.cols());
}

BlockSubproblem MlpTaskProblem::subproblem(std::size_t i, const BlockVector& theta, const SampleHandle& s) const {
  partition_->offset(i);
  auto [Xb, yb] = gather(s);
  auto X = std::make_shared<const Matrix>(std::move(Xb));
  auto y = std::make_shared<const Vector>(std::move(yb));
  auto base = std::make_shared<const MlpParams>(params(theta));
  // Layers below i are frozen, so their split is computed once.
  auto cache = std::make_shared<const SplitState>(forward_split(*base, *X));
  const LossKind kind = data_.kind;
  const double scale = 1.0 / static_cast<double>(X->cols());

  const auto state_at = [=](const Vector& x, MlpParams& p) {
    p = *base;
    p.set_block(i, x);
    SplitState st = *cache;
    forward_split_from(p, i, *X, st);
    return st;
  };
  BlockSubproblem sp;
  sp.method = InnerMethod::kProxGradient;
  sp.kinks_at_zero = true;
  sp.smooth_value = [=](const Vector& x) {
    MlpParams p;
    const SplitState st = state_at(x, p);
    return scale * loss_from_state(st, *y, kind).g;
  };
  sp.smooth_grad = [=](const Vector& x) {
    MlpParams p;
    const SplitState st = state_at(x, p);
    return Vector(scale * block_grads_from_state(p, st, *X, *y, kind, i).g);
  };
  return sp;
}

double MlpTaskProblem::eval_g(std::size_t i, const BlockVector& theta) const { return eval_g(i, theta, SampleHandle{}); }
double MlpTaskProblem::eval_h(std::size_t i, const BlockVector& theta) const { return eval_h(i, theta, SampleHandle{}); }
Vector MlpTaskProblem::grad_g_block(std::size_t i, const BlockVector& theta) const {
  return grad_g_block(i, theta, SampleHandle{});
}
Vector MlpTaskProblem::subgrad_h_block(std::size_t i, const BlockVector& theta) const {
  return subgrad_h_block(i, theta, SampleHandle{});
}
BlockSubproblem MlpTaskProblem::subproblem(std::size_t i, const BlockVector& theta) const {
  return subproblem(i, theta, SampleHandle{});
}

double MlpTaskProblem::accuracy(const BlockVector& theta) const {
  if (data_.kind != LossKind::kCrossEntropy) throw UsageError("accuracy: classification tasks only");
  const Matrix F = forward_standard(params(theta), data_.X);
  Index hits = 0;
  for (Index n = 0; n < F.cols(); ++n) {
    Index arg = 0;
    F.col(n).maxCoeff(&arg);
    hits += (arg == static_cast<Index>(data_.y(n)));
  }
  return static_cast<double>(hits) / static_cast<double>(F.cols());
}

std::shared_ptr<MlpTaskProblem> mlp_task_problem(MlpParams shape, MlpDataset data) {
  return std::make_shared<MlpTaskProblem>(std::move(shape), std::move(data));
}

}  // namespace bdc
