#include "bdc/inner.hpp"

#include <cmath>

#include "bdc/error.hpp"

namespace bdc {
namespace {

void check_finite(double v, const char* who) {
  if (!std::isfinite(v)) throw SolverError(std::string(who) + ": non-finite objective");
}

InnerResult accelerated(const ProxGradientProblem& prob, const Vector& x0, int budget, double tol) {
  const auto F = [&](const Vector& x) {
    return prob.smooth_value(x) + (prob.nonsmooth_value ? prob.nonsmooth_value(x) : 0.0);
  };
  const double t = 1.0 / prob.lipschitz;
  InnerResult r;
  r.x = x0;
  r.value = F(x0);
  check_finite(r.value, "inner_prox_gradient");
  Vector y = x0;
  double tk = 1.0;
  for (int it = 1; it <= budget; ++it) {
    r.iters = it;
    Vector v = y - t * prob.smooth_grad(y);
    Vector z = prob.prox ? prob.prox(v, t) : v;
    r.residual = (y - z).norm() / t;
    const double fz = F(z);
    check_finite(fz, "inner_prox_gradient");
    const Vector x_prev = r.x;
    if (fz <= r.value) {
      r.x = z;
      r.value = fz;
    }
    const double tk1 = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    if (r.residual <= tol * (1.0 + std::abs(r.value))) {
      r.status = InnerStatus::kConverged;
      return r;
    }
    y = r.x + (tk / tk1) * (z - r.x) + ((tk - 1.0) / tk1) * (r.x - x_prev);
    tk = tk1;
  }
  r.status = InnerStatus::kBudget;
  return r;
}

}  // namespace

const char* to_string(InnerStatus s) {
  switch (s) {
    case InnerStatus::kConverged:
      return "converged";
    case InnerStatus::kBudget:
      return "budget";
    case InnerStatus::kStalled:
      return "stalled";
  }
  return "unknown";
}

InnerResult inner_prox_gradient(const ProxGradientProblem& prob, const Vector& x0, int budget, double tol) {
  if (budget < 1) throw UsageError("inner_prox_gradient: budget must be >= 1");
  if (!prob.smooth_value || !prob.smooth_grad) throw UsageError("inner_prox_gradient: missing smooth oracle");
  if (prob.accelerate && prob.lipschitz > 0.0) return accelerated(prob, x0, budget, tol);

  const auto psi = [&](const Vector& x) { return prob.nonsmooth_value ? prob.nonsmooth_value(x) : 0.0; };
  const bool fixed = prob.lipschitz > 0.0;
  const double t0 = fixed ? 1.0 / prob.lipschitz : 1.0;
  double t = t0;

  InnerResult r;
  r.x = x0;
  double sx = prob.smooth_value(x0);
  r.value = sx + psi(x0);
  check_finite(r.value, "inner_prox_gradient");

  for (int it = 1; it <= budget; ++it) {
    r.iters = it;
    const Vector g = prob.smooth_grad(r.x);
    Vector xp, diff;
    double sp = 0.0;
    // Backtracking on the quadratic upper model; with a known Lipschitz constant the first
    // trial passes up to rounding. A sufficient decrease of the full objective is accepted
    // too, which lets steps cross kinks of a nonsmooth convex part.
    for (;;) {
      const Vector v = r.x - t * g;
      xp = prob.prox ? prob.prox(v, t) : v;
      diff = xp - r.x;
      sp = prob.smooth_value(xp);
      const double model = sx + g.dot(diff) + diff.squaredNorm() / (2.0 * t);
      if (std::isfinite(sp) && sp <= model + 1e-12 * std::abs(sx)) break;
      const auto sufficient = [&](const Vector& d, double s) {
        return std::isfinite(s) && d.squaredNorm() > 0.0 && s <= r.value - 1e-4 * d.squaredNorm() / t;
      };
      if (sufficient(diff, sp + psi(xp))) break;
      if (prob.kinks_at_zero) {
        Vector xc = xp;
        for (Index j = 0; j < xc.size(); ++j) {
          if (r.x(j) * xp(j) < 0.0 || r.x(j) == 0.0) xc(j) = 0.0;
        }
        const Vector dc = xc - r.x;
        const double sc = prob.smooth_value(xc);
        if (sufficient(dc, sc + psi(xc))) {
          xp = std::move(xc);
          diff = dc;
          sp = sc;
          break;
        }
      }
      t *= 0.5;
      if (t < 1e-20 * t0) {
        r.status = InnerStatus::kStalled;
        return r;
      }
    }
    r.residual = diff.norm() / t;
    const double fp = sp + psi(xp);
    check_finite(fp, "inner_prox_gradient");
    const bool small = r.residual <= tol * (1.0 + std::abs(r.value));
    if (fp <= r.value) {
      r.x = std::move(xp);
      r.value = fp;
      sx = sp;
    } else if (!small) {
      // The model slack admitted a step that does not descend: shrink and retry.
      t *= 0.5;
      if (t < 1e-20 * t0) {
        r.status = InnerStatus::kStalled;
        return r;
      }
      continue;
    }
    if (small) {
      r.status = InnerStatus::kConverged;
      return r;
    }
    if (!fixed) t = std::min(t * 2.0, 1e12);
  }
  r.status = InnerStatus::kBudget;
  return r;
}

double frank_wolfe_gap(const FrankWolfeProblem& prob, const Vector& x) {
  const Vector g = prob.grad(x);
  double gap = 0.0;
  for (Index c = 0; c < x.size() / prob.column_dim; ++c) {
    const auto gc = g.segment(c * prob.column_dim, prob.column_dim);
    const auto xc = x.segment(c * prob.column_dim, prob.column_dim);
    // <g_c, x_c - s_c> with s_c = -r g_c / |g_c|.
    gap += gc.dot(xc) + prob.radius * gc.norm();
  }
  return gap;
}

InnerResult inner_frank_wolfe_ball_product(const FrankWolfeProblem& prob, const Vector& x0, int budget,
                                           double tol) {
  if (budget < 1) throw UsageError("frank_wolfe: budget must be >= 1");
  if (prob.column_dim < 1 || x0.size() % prob.column_dim != 0) {
    throw UsageError("frank_wolfe: block length is not a multiple of column_dim");
  }
  const Index cols = x0.size() / prob.column_dim;
  const Index m = prob.column_dim;
  InnerResult r;
  r.x = x0;
  r.value = prob.value(x0);
  check_finite(r.value, "frank_wolfe");
  for (int it = 1; it <= budget; ++it) {
    r.iters = it;
    const Vector g = prob.grad(r.x);
    Vector d(r.x.size());
    for (Index c = 0; c < cols; ++c) {
      const auto gc = g.segment(c * m, m);
      const double gn = gc.norm();
      if (gn > 0.0) {
        d.segment(c * m, m) = -prob.radius * gc / gn - r.x.segment(c * m, m);
      } else {
        d.segment(c * m, m).setZero();
      }
    }
    const double gap = -g.dot(d);
    r.residual = gap;
    if (gap <= tol * (1.0 + std::abs(r.value))) {
      r.status = InnerStatus::kConverged;
      return r;
    }
    const double curv = d.dot(prob.hess_vec(d));
    const double gamma = curv > 0.0 ? std::min(1.0, gap / curv) : 1.0;
    Vector xn = r.x + gamma * d;
    const double vn = prob.value(xn);
    check_finite(vn, "frank_wolfe");
    if (vn > r.value) {
      r.status = InnerStatus::kStalled;
      return r;
    }
    r.x = std::move(xn);
    r.value = vn;
  }
  r.residual = frank_wolfe_gap(prob, r.x);
  r.status = InnerStatus::kBudget;
  return r;
}

}  // namespace bdc
