#pragma once

#include <functional>
#include <vector>

#include "bdc/problem.hpp"

namespace bdc {

/// sum_r alpha_r f_r with the sign-split decomposition:
///   g_i = sum alpha_r^+ g_i^(r) + sum alpha_r^- h_i^(r),
///   h_i = sum alpha_r^+ h_i^(r) + sum alpha_r^- g_i^(r).
ProblemPtr combine_linear(std::vector<ProblemPtr> problems, std::vector<double> alpha);

/// max_r f_r with g_i = max_r (g_i^(r) + sum_{s != r} h_i^(s)) and h_i = sum_k h_i^(k).
/// Subgradients of the max use the lowest-index active term.
ProblemPtr combine_max(std::vector<ProblemPtr> problems);

/// min_r f_r = -max_r(-f_r).
ProblemPtr combine_min(std::vector<ProblemPtr> problems);

/// A vector map E(theta) in R^m whose every component is BDC per block:
/// E_j = a_ij(theta_i; .) - b_ij(theta_i; .) with a_ij, b_ij convex in block i.
struct ComponentwiseBdcMap {
  PartitionPtr partition;
  Index components = 0;
  std::function<Vector(const BlockVector&)> eval;
  /// (a_i, b_i) evaluated at theta, each of length m.
  std::function<std::pair<Vector, Vector>(std::size_t i, const BlockVector&)> split;
  /// Subgradient Jacobians (m x d_i) of a_i and b_i with respect to block i.
  std::function<std::pair<Matrix, Matrix>(std::size_t i, const BlockVector&)> split_jacobian;
};

/// Conjugate f*(t) = max_{u in U} <u, t> - f(u) over a compact U, with its maximizer.
struct ConjugateOracle {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> maximizer;
};

struct CoordinateBounds {
  Vector lower;  // min_{u in U} u_j
  Vector upper;  // max_{u in U} u_j
};

/// f* o E with h_i = <c+, a_i> + <d+, b_i>, g_i = f*(E) + h_i, where
/// c+_j = max(-lower_j, 0) and d+_j = max(upper_j, 0).
ProblemPtr conjugate_compose(ComponentwiseBdcMap map, ConjugateOracle fstar, CoordinateBounds bounds);

/// Shift vectors (c+, d+) used by conjugate_compose.
std::pair<Vector, Vector> conjugate_shifts(const CoordinateBounds& bounds);

/// Log-sum-exp as the conjugate of negative entropy on the simplex: U = simplex, bounds [0, 1].
ConjugateOracle log_sum_exp_conjugate();
CoordinateBounds simplex_bounds(Index classes);

}  // namespace bdc
