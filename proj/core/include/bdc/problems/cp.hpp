#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "bdc/problem.hpp"

namespace bdc {

/// Dense order-n tensor; the first index varies fastest.
struct DenseTensor {
  std::vector<Index> dims;
  Vector data;

  DenseTensor() = default;
  explicit DenseTensor(std::vector<Index> d);

  Index numel() const;
  std::size_t order() const { return dims.size(); }
};

/// [[A_1, ..., A_n]] = sum_c a_{1c} o ... o a_{nc}; every factor is m_i x r.
DenseTensor cp_reconstruct(const std::vector<Matrix>& factors);

/// Random factors (standard normal, "data" stream) and their exact rank-r tensor.
std::pair<DenseTensor, std::vector<Matrix>> cp_random_exact(const std::vector<Index>& dims, Index rank,
                                                            std::uint64_t seed);

/// f(A_1..A_n) = 1/2 |T - [[A]]|_F^2 with g_i = f and h_i = 0. Block i is vec(A_i).
/// Block solves are closed-form: A_i = (M_i + U + rho P)(Gamma_i + rho I)^{-1}, with the
/// MTTKRP M_i and Gamma_i the Hadamard product of the other factor Gram matrices.
class CpProblem final : public BdcProblem {
 public:
  CpProblem(DenseTensor T, Index rank);

  const PartitionPtr& partition() const override { return partition_; }
  const DenseTensor& tensor() const { return T_; }
  Index rank() const { return rank_; }

  double eval_f(const BlockVector& theta) const override;
  double eval_g(std::size_t i, const BlockVector& theta) const override;
  double eval_h(std::size_t i, const BlockVector& theta) const override;
  Vector grad_g_block(std::size_t i, const BlockVector& theta) const override;
  Vector subgrad_h_block(std::size_t i, const BlockVector& theta) const override;
  BlockSubproblem subproblem(std::size_t i, const BlockVector& theta) const override;

  std::vector<Matrix> factors(const BlockVector& theta) const;
  Matrix mttkrp(const std::vector<Matrix>& factors, std::size_t i) const;
  Matrix gamma(const std::vector<Matrix>& factors, std::size_t i) const;
  /// |T - [[A]]|_F / |T|_F.
  double relative_error(const BlockVector& theta) const;

 private:
  DenseTensor T_;
  Index rank_;
  PartitionPtr partition_;
};

/// Validates order (1..4), dims (1..32) and rank.
std::shared_ptr<CpProblem> cp_problem(DenseTensor T, Index rank);
/// Standard-normal initial factors from the "init" stream.
BlockVector cp_initial_point(const CpProblem& p, std::uint64_t seed);

}  // namespace bdc
