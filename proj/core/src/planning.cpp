#include "bdc/planning.hpp"

#include <algorithm>
#include <cmath>

#include "bdc/error.hpp"

namespace bdc {

double compute_E(const EllFn& ell, double G) {
  if (!(G > 0.0) || !std::isfinite(G)) throw UsageError("compute_E: G must be positive and finite");
  const auto feasible = [&](double u) {
    const double l = ell(2.0 * u);
    if (!(l > 0.0) || !std::isfinite(l)) throw UsageError("compute_E: ell must be positive and finite");
    return u * u <= 2.0 * l * G;
  };
  const double l0 = ell(0.0);
  if (!(l0 > 0.0)) throw UsageError("compute_E: ell(0) must be positive");
  // u = sqrt(2 ell(0) G) is feasible because ell is nondecreasing.
  double lo = std::sqrt(2.0 * l0 * G);
  double hi = 2.0 * lo;
  int doublings = 0;
  while (feasible(hi)) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 1024) throw UsageError("compute_E: ell not subquadratic on probed range");
  }
  while (hi - lo > 1e-15 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (feasible(mid) ? lo : hi) = mid;
  }
  return lo;
}

double rho_from(double E, double L_eff, double R) {
  if (!(E > 0.0)) throw UsageError("rho_from: E must be positive");
  if (L_eff < 0.0 || R < 0.0) throw UsageError("rho_from: L_eff and R must be nonnegative");
  return L_eff * 2.0 * (E + R) / E;
}

RhoPlan plan_rho(const EllFn& ell, double G, double R) {
  RhoPlan plan;
  plan.G = G;
  plan.R = R;
  plan.E = compute_E(ell, G);
  plan.L_eff = ell(2.0 * plan.E);
  plan.rho_min = rho_from(plan.E, plan.L_eff, R);
  return plan;
}

double smoothness_estimate(const std::function<Vector(const Vector&)>& grad, const Vector& x, const Vector& d,
                           double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw UsageError("smoothness_estimate: delta must be in (0, 1]");
  const double dn = d.norm();
  if (dn == 0.0) return 0.0;
  const Vector g0 = grad(x);
  // Integer grid index avoids accumulating gamma; includes gamma = 1 when 1/delta is integral.
  const auto steps = static_cast<long>(std::floor(1.0 / delta + 1e-12));
  double best = 0.0;
  for (long j = 1; j <= steps; ++j) {
    const double gamma = static_cast<double>(j) * delta;
    best = std::max(best, (grad(x + gamma * d) - g0).norm() / (gamma * dn));
  }
  return best;
}

double smoothness_estimate(const BdcProblem& p, const BlockVector& theta, const BlockVector& theta_next,
                           std::size_t i, double delta) {
  const Vector x = extract_block(theta, i);
  const Vector d = extract_block(theta_next, i) - x;
  return smoothness_estimate([&](const Vector& v) { return p.grad_g_block(i, replace_block(theta, i, v)); }, x, d,
                             delta);
}

double gap_L(const BlockDomain& M, const Vector& theta, const Vector& z, double L) {
  if (!(L > 0.0)) throw UsageError("gap_L: L must be positive");
  if (M.kind == BlockDomain::Kind::kConvexSet && !M.project) throw UsageError("gap_L: missing projection oracle");
  const Vector x = M.projection(theta - z / L);
  return z.dot(theta - x) - 0.5 * L * (x - theta).squaredNorm();
}

TheoryPreset theory_preset(int K, double c, double c_prime, std::size_t population) {
  if (K < 1) throw UsageError("theory_preset: K must be >= 1");
  if (!(c > 0.0) || !(c_prime > 0.0)) throw UsageError("theory_preset: constants must be positive");
  const double sk = std::sqrt(static_cast<double>(K));
  TheoryPreset t;
  t.rho = c * sk;
  t.batch = static_cast<std::size_t>(std::ceil(c_prime * sk));
  t.batch = std::clamp<std::size_t>(t.batch, 1, std::max<std::size_t>(population, 1));
  return t;
}

}  // namespace bdc
