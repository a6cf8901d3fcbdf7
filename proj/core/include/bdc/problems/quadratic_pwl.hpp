#pragma once

#include <cstdint>
#include <memory>

#include "bdc/problem.hpp"

namespace bdc {

/// f(theta) = 1/2 theta^T Q theta + q^T theta - lambda sum_j |a_j^T theta - beta_j|, with
/// Q = M^T M + I. Per block g_i is the quadratic part and h_i the piecewise-linear part, so
/// g_i is L-smooth with L = lambda_max(Q_ii) and h_i is Lipschitz. Block solves are exact.
class QuadraticPwlProblem final : public BdcProblem {
 public:
  QuadraticPwlProblem(Matrix Q, Vector q, Matrix A, Vector beta, double lambda, std::vector<Index> block_dims);

  const PartitionPtr& partition() const override { return partition_; }

  double eval_f(const BlockVector& theta) const override;
  double eval_g(std::size_t i, const BlockVector& theta) const override;
  double eval_h(std::size_t i, const BlockVector& theta) const override;
  Vector grad_g_block(std::size_t i, const BlockVector& theta) const override;
  /// lambda sum_j sign(a_j^T theta - beta_j) a_j restricted to block i, sign(0) = 0.
  Vector subgrad_h_block(std::size_t i, const BlockVector& theta) const override;
  BlockSubproblem subproblem(std::size_t i, const BlockVector& theta) const override;

  /// lambda_max of the diagonal block Q_ii.
  double block_lipschitz(std::size_t i) const;

 private:
  Matrix Q_;
  Vector q_;
  Matrix A_;  // rows a_j^T
  Vector beta_;
  double lambda_;
  PartitionPtr partition_;
};

/// Random instance: dims per block, `pieces` absolute-value terms, all from the "data" stream.
std::shared_ptr<QuadraticPwlProblem> random_quadratic_pwl(const std::vector<Index>& block_dims, Index pieces,
                                                          double lambda, std::uint64_t seed);

}  // namespace bdc
