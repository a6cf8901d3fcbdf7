#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "bdc/problem.hpp"
#include "bdc/relu.hpp"

namespace bdc {

/// Columns of X are samples. Regression labels are stored shifted by label_shift >= 0 so
/// that y >= 0; class labels are 0-based.
struct MlpDataset {
  Matrix X;
  Vector y;
  LossKind kind = LossKind::kMse;
  double label_shift = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(X.cols()); }
};

/// y = sin(x) + 1.5 + noise on x uniform in [-pi, pi]; shifted if any label is negative.
MlpDataset sine_regression(Index n, std::uint64_t seed, double noise = 0.1);
/// 2-D isotropic Gaussian blobs with centers on a circle of radius 2.5, unit spread.
MlpDataset gaussian_blobs(Index n, int classes, std::uint64_t seed);
/// Shifts regression labels by c = max(0, -min y) and records c.
void shift_labels(MlpDataset& data);

/// Empirical risk (1/N) sum loss over the dataset, one block per layer. Stochastic oracles
/// are minibatch means with the same per-sample decomposition.
class MlpTaskProblem final : public StochasticBdcProblem {
 public:
  MlpTaskProblem(MlpParams shape, MlpDataset data);

  using StochasticBdcProblem::eval_g;
  using StochasticBdcProblem::eval_h;
  using StochasticBdcProblem::grad_g_block;
  using StochasticBdcProblem::subgrad_h_block;
  using StochasticBdcProblem::subproblem;

  const PartitionPtr& partition() const override { return partition_; }
  std::size_t population() const override { return data_.size(); }
  const MlpDataset& data() const { return data_; }
  const MlpParams& shape() const { return shape_; }

  MlpParams params(const BlockVector& theta) const { return shape_.with_data(theta.data()); }
  BlockVector pack(const MlpParams& p) const { return BlockVector(partition_, p.flatten()); }

  double eval_f(const BlockVector& theta) const override;
  double eval_g(std::size_t i, const BlockVector& theta) const override;
  double eval_h(std::size_t i, const BlockVector& theta) const override;
  Vector grad_g_block(std::size_t i, const BlockVector& theta) const override;
  Vector subgrad_h_block(std::size_t i, const BlockVector& theta) const override;
  BlockSubproblem subproblem(std::size_t i, const BlockVector& theta) const override;

  double eval_g(std::size_t i, const BlockVector& theta, const SampleHandle& s) const override;
  double eval_h(std::size_t i, const BlockVector& theta, const SampleHandle& s) const override;
  Vector grad_g_block(std::size_t i, const BlockVector& theta, const SampleHandle& s) const override;
  Vector subgrad_h_block(std::size_t i, const BlockVector& theta, const SampleHandle& s) const override;
  BlockSubproblem subproblem(std::size_t i, const BlockVector& theta, const SampleHandle& s) const override;

  /// Mean loss over a sample (the full dataset when s is empty).
  double eval_f(const BlockVector& theta, const SampleHandle& s) const;
  /// Classification accuracy on the full dataset (CE only).
  double accuracy(const BlockVector& theta) const;

 private:
  std::pair<Matrix, Vector> gather(const SampleHandle& s) const;

  MlpParams shape_;
  MlpDataset data_;
  PartitionPtr partition_;
};

std::shared_ptr<MlpTaskProblem> mlp_task_problem(MlpParams shape, MlpDataset data);

}  // namespace bdc
