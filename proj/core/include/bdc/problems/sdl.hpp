#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "bdc/problem.hpp"

namespace bdc {

enum class SdlVariant { kL1, kL1MinusLq };

const char* to_string(SdlVariant v);

/// min_{D in C, X} 1/2 |Y - DX|_F^2 + alpha sum_i (|x_i|_1 - [L1MinusLq] |x_i|_Q),
/// C = {D : |d_j|_2 <= 1}. Block 0 is vec(D) (m x l, column-major), block 1 is vec(X).
struct SdlInstance {
  Matrix Y;
  Index atoms = 0;  // l
  double alpha = 0.1;
  int Q = 5;
  SdlVariant variant = SdlVariant::kL1MinusLq;

  Index m() const { return Y.rows(); }
  Index n() const { return Y.cols(); }
  void validate() const;
};

struct SdlData {
  Matrix Y;
  Matrix D_true;
  Matrix X_true;
};

/// D* columns i.i.d. normal then unit-normalized; each X* column has exactly k nonzeros at
/// uniform positions with standard normal values; Y = D* X*.
SdlData sdl_synthetic(Index m, Index l, Index n, Index k_nonzero, std::uint64_t seed);

/// Sum of the Q largest |x_j|.
double lq_norm(const Vector& x, int Q);
/// sign(x_j) on the top-Q set (ties to the lowest index, sign(0) = +1), 0 elsewhere.
Vector lq_subgrad(const Vector& x, int Q);

/// Soft threshold sign(z) max(|z| - lambda, 0), elementwise.
Vector soft_threshold(const Vector& z, double lambda);

class SdlProblem final : public BdcProblem {
 public:
  explicit SdlProblem(SdlInstance inst);

  static constexpr std::size_t kDictBlock = 0;
  static constexpr std::size_t kCodeBlock = 1;

  const PartitionPtr& partition() const override { return partition_; }
  const SdlInstance& instance() const { return inst_; }

  double eval_f(const BlockVector& theta) const override;
  double eval_g(std::size_t i, const BlockVector& theta) const override;
  double eval_h(std::size_t i, const BlockVector& theta) const override;
  Vector grad_g_block(std::size_t i, const BlockVector& theta) const override;
  Vector subgrad_h_block(std::size_t i, const BlockVector& theta) const override;
  BlockDomain domain(std::size_t i) const override;
  Vector block_residual(std::size_t i, const BlockVector& theta, const Vector& u) const override;
  BlockSubproblem subproblem(std::size_t i, const BlockVector& theta) const override;

  Matrix D(const BlockVector& theta) const;
  Matrix X(const BlockVector& theta) const;
  BlockVector pack(const Matrix& D, const Matrix& X) const;

  /// |Y - DX|_F^2.
  double reconstruction_error(const BlockVector& theta) const;
  /// Regularizer alpha sum_i (|x_i|_1 - [variant] |x_i|_Q).
  double regularizer(const Matrix& X) const;
  /// Full-objective subgradient in (D, X) used by the gradient-descent baseline.
  std::pair<Matrix, Matrix> joint_subgradient(const Matrix& D, const Matrix& X) const;

 private:
  double lq_sum(const Matrix& X) const;
  void check_block(std::size_t i) const { partition_->offset(i); }

  SdlInstance inst_;
  PartitionPtr partition_;
};

std::shared_ptr<SdlProblem> sdl_problem(SdlInstance inst);

/// Random unit-norm dictionary columns from the "init" stream, zero codes.
BlockVector sdl_initial_point(const SdlProblem& p, std::uint64_t seed);

/// Fraction of entries equal to zero (|x| <= threshold).
double sparsity(const Matrix& X, double threshold = 0.0);

struct GdTrace {
  std::vector<double> objective;
  std::vector<double> reconstruction;
  std::vector<double> sparsity;  // with the 1e-8 reporting threshold
  Matrix D;
  Matrix X;
};

/// Joint full-batch subgradient steps on (D, X) with eta = 1 / (|D|_2^2 + |X|_2^2) and
/// column projection of D after each step. objective[0] is the starting value.
GdTrace gd_baseline_sdl(const SdlProblem& p, const BlockVector& theta0, int iters);

}  // namespace bdc
