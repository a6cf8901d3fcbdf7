#pragma once

#include <cstddef>
#include <functional>

#include "bdc/problem.hpp"

namespace bdc {

using EllFn = std::function<double(double)>;

/// E = sup{u > 0 : u^2 <= 2 ell(2u) G} for a continuous, nondecreasing, positive,
/// subquadratic ell. Doubling bracket (at most 2^10 doublings) then bisection.
double compute_E(const EllFn& ell, double G);

/// rho_min = L_eff * 2 (E + R) / E.
double rho_from(double E, double L_eff, double R);

struct RhoPlan {
  double G = 0.0;
  double R = 0.0;
  double E = 0.0;
  double L_eff = 0.0;  // ell(2E)
  double rho_min = 0.0;
};

RhoPlan plan_rho(const EllFn& ell, double G, double R);

/// max over gamma in {delta, 2 delta, ..., floor(1/delta) delta} of
/// |grad(x + gamma d) - grad(x)| / (gamma |d|); 0 when d = 0.
double smoothness_estimate(const std::function<Vector(const Vector&)>& grad, const Vector& x, const Vector& d,
                           double delta);
/// Same, for block i of a problem with d = theta_next_i - theta_i.
double smoothness_estimate(const BdcProblem& p, const BlockVector& theta, const BlockVector& theta_next,
                           std::size_t i, double delta);

/// gap^L_M(theta) = max_{x in M} <z, theta - x> - (L/2)|x - theta|^2, evaluated at the
/// maximizer x* = Proj_M(theta - z / L).
double gap_L(const BlockDomain& M, const Vector& theta, const Vector& z, double L);

/// Stochastic theory preset: rho = c sqrt(K), batch = ceil(c' sqrt(K)) capped at population.
struct TheoryPreset {
  double rho = 0.0;
  std::size_t batch = 0;
};
TheoryPreset theory_preset(int K, double c, double c_prime, std::size_t population);

}  // namespace bdc
