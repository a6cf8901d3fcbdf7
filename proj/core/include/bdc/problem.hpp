#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "bdc/block.hpp"

namespace bdc {

/// Feasible set of one block. Unconstrained unless a projection is supplied.
struct BlockDomain {
  enum class Kind { kUnconstrained, kBallProduct, kConvexSet };

  Kind kind = Kind::kUnconstrained;
  /// Ball product: the block is a stack of columns of length column_dim, each in the ball of
  /// the given radius.
  Index column_dim = 0;
  double radius = 1.0;
  /// Euclidean projection onto the set (kConvexSet; filled automatically for kBallProduct).
  std::function<Vector(const Vector&)> project;

  static BlockDomain unconstrained() { return {}; }
  static BlockDomain ball_product(Index column_dim, double radius = 1.0);

  bool constrained() const { return kind != Kind::kUnconstrained; }
  Vector projection(const Vector& x) const;
  /// Normal-cone reduction: the minimum-norm element of w + N(x).
  Vector min_norm_with_normal_cone(const Vector& x, const Vector& w) const;
};

enum class InnerMethod { kProxGradient, kFrankWolfeBallProduct, kClosedForm };

/// The convex function x -> g_i(x; theta_bar_i) handed to an inner solver, split as
/// smooth(x) + nonsmooth(x) over the block domain. The solver adds the linearization of
/// h_i and the proximal term itself.
struct BlockSubproblem {
  InnerMethod method = InnerMethod::kProxGradient;

  std::function<double(const Vector&)> smooth_value;
  std::function<Vector(const Vector&)> smooth_grad;
  /// Nonsmooth part psi; empty means psi = 0.
  std::function<double(const Vector&)> nonsmooth_value;
  /// prox_{t psi}(v); empty means identity. Indicator constraints are folded in here.
  std::function<Vector(const Vector&, double)> prox;
  /// Hessian-vector product of the smooth part (quadratic smooth parts, Frank-Wolfe).
  std::function<Vector(const Vector&)> hess_vec;
  /// Lipschitz constant of smooth_grad if known; 0 selects backtracking.
  double lipschitz = 0.0;
  /// The smooth part has kinks where coordinates cross 0 (ReLU weight splits).
  bool kinks_at_zero = false;
  /// Ball-product geometry for Frank-Wolfe.
  Index column_dim = 0;
  double radius = 1.0;
  /// Exact minimizer of smooth(x) - <u, x> + rho/2 |x - anchor|^2 (kClosedForm).
  std::function<Vector(const Vector& u, double rho, const Vector& anchor)> closed_form;

  double value(const Vector& x) const {
    return smooth_value(x) + (nonsmooth_value ? nonsmooth_value(x) : 0.0);
  }
};

/// Abstract BDC objective: for every block i, f = g_i - h_i with g_i, h_i convex in block i.
///
/// Implementations must be safe for concurrent const evaluation. subgrad_h_block returns one
/// fixed element of the block subdifferential of h_i (selection rule documented per problem).
class BdcProblem {
 public:
  virtual ~BdcProblem() = default;

  virtual const PartitionPtr& partition() const = 0;
  std::size_t n_blocks() const { return partition()->n_blocks(); }

  virtual double eval_f(const BlockVector& theta) const = 0;
  virtual double eval_g(std::size_t i, const BlockVector& theta) const = 0;
  virtual double eval_h(std::size_t i, const BlockVector& theta) const = 0;
  /// Gradient of g_i in block i, or one subgradient when g_i is nonsmooth.
  virtual Vector grad_g_block(std::size_t i, const BlockVector& theta) const = 0;
  virtual Vector subgrad_h_block(std::size_t i, const BlockVector& theta) const = 0;

  virtual BlockDomain domain(std::size_t /*i*/) const { return BlockDomain::unconstrained(); }

  /// Block stationarity vector z_i for a chosen u in the subdifferential of h_i. Default is
  /// grad_g_block - u, reduced by the normal cone on constrained blocks. Problems with a
  /// nonsmooth g_i override this with the minimum-norm element of (subdiff g_i - u).
  virtual Vector block_residual(std::size_t i, const BlockVector& theta, const Vector& u) const;

  /// The convex block function handed to the inner solver. Default: g_i as a single
  /// "smooth" term driven by grad_g_block with backtracking, projected onto the domain.
  virtual BlockSubproblem subproblem(std::size_t i, const BlockVector& theta) const;
};

/// Replayable minibatch draw: the same handle always yields identical stochastic oracles.
struct SampleHandle {
  std::uint64_t id = 0;
  std::vector<std::size_t> indices;
};

/// Uniform minibatch without replacement, a pure function of (seed, id).
SampleHandle draw_minibatch(std::size_t population, std::size_t batch, std::uint64_t seed,
                            std::uint64_t id);

/// BDC objective with an expectation structure f = E_s[g_i(.;s) - h_i(.;s)].
class StochasticBdcProblem : public BdcProblem {
 public:
  using BdcProblem::eval_g;
  using BdcProblem::eval_h;
  using BdcProblem::grad_g_block;
  using BdcProblem::subgrad_h_block;
  using BdcProblem::subproblem;

  /// Size of the finite population minibatches are drawn from.
  virtual std::size_t population() const = 0;

  virtual double eval_g(std::size_t i, const BlockVector& theta, const SampleHandle& s) const = 0;
  virtual double eval_h(std::size_t i, const BlockVector& theta, const SampleHandle& s) const = 0;
  virtual Vector grad_g_block(std::size_t i, const BlockVector& theta,
                              const SampleHandle& s) const = 0;
  virtual Vector subgrad_h_block(std::size_t i, const BlockVector& theta,
                                 const SampleHandle& s) const = 0;
  virtual BlockSubproblem subproblem(std::size_t i, const BlockVector& theta,
                                     const SampleHandle& s) const = 0;
};

/// Norm of the stacked block residuals z_i = (grad g_i - u_i) with the problem's chosen u_i.
/// An upper bound on dist(0, Clarke subdifferential of f), exact where h is differentiable.
double residual_upper(const BdcProblem& p, const BlockVector& theta);

using ProblemPtr = std::shared_ptr<const BdcProblem>;

}  // namespace bdc
