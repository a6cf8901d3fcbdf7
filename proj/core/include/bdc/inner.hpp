#pragma once

#include <functional>

#include "bdc/block.hpp"

namespace bdc {

enum class InnerStatus { kConverged, kBudget, kStalled };

const char* to_string(InnerStatus s);

struct InnerResult {
  Vector x;
  int iters = 0;
  InnerStatus status = InnerStatus::kBudget;
  double value = 0.0;     // objective at x
  double residual = 0.0;  // last gradient-mapping norm (prox-gradient) or FW gap
};

/// min_x s(x) + psi(x). Monotone: every accepted iterate has objective <= the previous one.
struct ProxGradientProblem {
  std::function<double(const Vector&)> smooth_value;
  std::function<Vector(const Vector&)> smooth_grad;
  std::function<double(const Vector&)> nonsmooth_value;       // empty: psi = 0
  std::function<Vector(const Vector&, double)> prox;           // empty: identity
  double lipschitz = 0.0;                                      // 0: backtracking
  bool accelerate = false;                                     // monotone FISTA; needs lipschitz > 0
  bool kinks_at_zero = false;  // nonsmooth where a coordinate is 0; enables sign-clipped trials
};

/// Stops when |G_t(x)| <= tol * (1 + |F(x)|) with G_t(x) = (x - prox_t(x - t grad s(x))) / t.
/// Backtracking that cannot find a sufficient-decrease step (nonsmooth s) returns the
/// current iterate with status kStalled. With kinks_at_zero a rejected trial is retried with
/// sign-changing coordinates stopped at 0, so a coordinate sitting on its kink does not block
/// the others.
InnerResult inner_prox_gradient(const ProxGradientProblem& prob, const Vector& x0, int budget, double tol);

/// min q(x) over a product of column balls, q quadratic with Hessian-vector product hess_vec.
/// LMO per column is -radius * grad_c / |grad_c| (zero-gradient columns keep the current
/// point); the step is the exact line-search minimizer clamped to [0, 1].
struct FrankWolfeProblem {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> grad;
  std::function<Vector(const Vector&)> hess_vec;
  Index column_dim = 0;
  double radius = 1.0;
};

InnerResult inner_frank_wolfe_ball_product(const FrankWolfeProblem& prob, const Vector& x0, int budget,
                                           double tol);

/// Frank-Wolfe gap max_{s in M} <grad q(x), x - s> over the ball product.
double frank_wolfe_gap(const FrankWolfeProblem& prob, const Vector& x);

}  // namespace bdc
