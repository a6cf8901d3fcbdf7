#include "bdc/solver.hpp"

#include <chrono>
#include <cmath>

#include "bdc/csv.hpp"
#include "bdc/error.hpp"
#include "bdc/rng.hpp"

namespace bdc {

Algorithm parse_algorithm(const std::string& s) {
  if (s == "bdca") return Algorithm::kBdca;
  if (s == "prox") return Algorithm::kProxBdca;
  if (s == "stoch") return Algorithm::kStochProxBdca;
  throw UsageError("unknown algorithm '" + s + "' (expected bdca, prox or stoch)");
}

BlockRule parse_block_rule(const std::string& s) {
  if (s == "uniform") return BlockRule::kUniform;
  if (s == "cyclic") return BlockRule::kCyclic;
  throw UsageError("unknown block rule '" + s + "' (expected uniform or cyclic)");
}

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kBdca:
      return "bdca";
    case Algorithm::kProxBdca:
      return "prox";
    case Algorithm::kStochProxBdca:
      return "stoch";
  }
  return "unknown";
}

const char* to_string(BlockRule r) { return r == BlockRule::kUniform ? "uniform" : "cyclic"; }

void SolverConfig::validate() const {
  if (K < 0) throw UsageError("solver: K must be >= 0");
  if (!(rho >= 0.0)) throw UsageError("solver: rho must be >= 0");
  if (algorithm != Algorithm::kBdca && !(rho > 0.0)) throw UsageError("solver: proximal algorithms need rho > 0");
  if (inner_budget < 1) throw UsageError("solver: inner_budget must be >= 1");
  if (!(inner_tol >= 0.0)) throw UsageError("solver: inner_tol must be >= 0");
  if (residual_stride < 1) throw UsageError("solver: residual_stride must be >= 1");
}

StepResult solve_surrogate(const BlockSubproblem& sp, const Vector& u, double rho, const Vector& anchor, int budget,
                           double tol) {
  const auto surrogate = [&](const Vector& x) {
    return sp.value(x) - u.dot(x) + 0.5 * rho * (x - anchor).squaredNorm();
  };
  StepResult r;
  r.u = u;
  r.surrogate_before = surrogate(anchor);

  switch (sp.method) {
    case InnerMethod::kClosedForm: {
      if (!sp.closed_form) throw UsageError("subproblem declares closed form without a solver");
      r.x = sp.closed_form(u, rho, anchor);
      r.inner_iters = 1;
      r.status = InnerStatus::kConverged;
      r.surrogate_after = surrogate(r.x);
      // Exact minimizer; keep the anchor if rounding says otherwise.
      if (!(r.surrogate_after <= r.surrogate_before)) {
        if (!std::isfinite(r.surrogate_after)) throw SolverError("closed-form block solve produced non-finite values");
        r.x = anchor;
        r.surrogate_after = r.surrogate_before;
      }
      break;
    }
    case InnerMethod::kFrankWolfeBallProduct: {
      FrankWolfeProblem fw;
      fw.value = surrogate;
      fw.grad = [&](const Vector& x) { Vector g = sp.smooth_grad(x) - u; g += rho * (x - anchor); return g; };
      fw.hess_vec = [&](const Vector& d) { Vector h = sp.hess_vec(d); h += rho * d; return h; };
      fw.column_dim = sp.column_dim;
      fw.radius = sp.radius;
      InnerResult ir = inner_frank_wolfe_ball_product(fw, anchor, budget, tol);
      r.x = std::move(ir.x);
      r.inner_iters = ir.iters;
      r.status = ir.status;
      r.surrogate_after = ir.value;
      break;
    }
    case InnerMethod::kProxGradient: {
      ProxGradientProblem pg;
      pg.smooth_value = [&](const Vector& x) {
        return sp.smooth_value(x) - u.dot(x) + 0.5 * rho * (x - anchor).squaredNorm();
      };
      pg.smooth_grad = [&](const Vector& x) { Vector g = sp.smooth_grad(x) - u; g += rho * (x - anchor); return g; };
      pg.nonsmooth_value = sp.nonsmooth_value;
      pg.prox = sp.prox;
      pg.lipschitz = sp.lipschitz > 0.0 ? sp.lipschitz + rho : 0.0;
      pg.accelerate = sp.lipschitz > 0.0;
      pg.kinks_at_zero = sp.kinks_at_zero;
      InnerResult ir = inner_prox_gradient(pg, anchor, budget, tol);
      r.x = std::move(ir.x);
      r.inner_iters = ir.iters;
      r.status = ir.status;
      r.surrogate_after = ir.value;
      break;
    }
  }
  if (!std::isfinite(r.surrogate_after)) throw SolverError("block subproblem produced a non-finite surrogate value");
  if (r.surrogate_after > r.surrogate_before + 1e-12 * (1.0 + std::abs(r.surrogate_before))) {
    throw SolverError("block subproblem increased the surrogate (" + format_double(r.surrogate_before) + " -> " +
                      format_double(r.surrogate_after) + ")");
  }
  r.step_norm = (r.x - anchor).norm();
  return r;
}

namespace {

Vector reduce_residual(const BlockDomain& dom, const Vector& x, const Vector& w) {
  return dom.constrained() ? dom.min_norm_with_normal_cone(x, w) : w;
}

}  // namespace

StepResult bdca_step(const BdcProblem& p, const BlockVector& theta, std::size_t i, int budget, double tol) {
  const Vector u = p.subgrad_h_block(i, theta);
  return solve_surrogate(p.subproblem(i, theta), u, 0.0, extract_block(theta, i), budget, tol);
}

StepResult prox_bdca_step(const BdcProblem& p, const BlockVector& theta, std::size_t i, double rho, int budget,
                          double tol) {
  if (!(rho > 0.0)) throw UsageError("prox_bdca_step: rho must be > 0");
  const Vector u = p.subgrad_h_block(i, theta);
  StepResult r = solve_surrogate(p.subproblem(i, theta), u, rho, extract_block(theta, i), budget, tol);
  r.step_bound = (2.0 / rho) * p.block_residual(i, theta, u).norm();
  return r;
}

StepResult stoch_prox_bdca_step(const StochasticBdcProblem& p, const BlockVector& theta, std::size_t i, double rho,
                                const SampleHandle& s, int budget, double tol) {
  if (!(rho > 0.0)) throw UsageError("stoch_prox_bdca_step: rho must be > 0");
  const Vector u = p.subgrad_h_block(i, theta, s);
  const Vector x0 = extract_block(theta, i);
  StepResult r = solve_surrogate(p.subproblem(i, theta, s), u, rho, x0, budget, tol);
  const Vector w = p.grad_g_block(i, theta, s) - u;
  r.step_bound = (2.0 / rho) * reduce_residual(p.domain(i), x0, w).norm();
  return r;
}

std::size_t IterTrace::step_bound_violations(double tol) const {
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.step_norm > r.step_bound + tol) ++n;
  }
  return n;
}

long long IterTrace::oracle_calls() const {
  long long n = 0;
  for (const auto& r : records) n += r.inner_iters;
  return n;
}

std::size_t choose_block(const SolverConfig& cfg, int k, std::size_t n_blocks) {
  if (cfg.block_rule == BlockRule::kCyclic) return (cfg.cyclic_start + static_cast<std::size_t>(k)) % n_blocks;
  const CounterRng rng(substream_seed(cfg.seed, "blocks"));
  return static_cast<std::size_t>(rng.below(n_blocks, static_cast<std::uint64_t>(k)));
}

IterTrace run(const BdcProblem& p, const BlockVector& theta0, const SolverConfig& cfg, const Observer& observer) {
  cfg.validate();
  if (!(theta0.partition() == *p.partition())) throw UsageError("run: theta0 does not match the problem partition");
  const auto* sp = dynamic_cast<const StochasticBdcProblem*>(&p);
  if (cfg.algorithm == Algorithm::kStochProxBdca && sp == nullptr) {
    throw UsageError("run: stochastic algorithm needs a problem with stochastic oracles");
  }
  const std::size_t n = p.n_blocks();
  const std::uint64_t batch_seed = substream_seed(cfg.seed, "minibatch");

  IterTrace trace;
  BlockVector theta = theta0;
  double h0 = 0.0;
  for (int k = 0; k < cfg.K; ++k) {
    const std::size_t i = choose_block(cfg, k, n);
    IterRecord rec;
    rec.k = k;
    rec.block = i;
    rec.f = p.eval_f(theta);
    rec.g_block = p.eval_g(i, theta);
    rec.h_block = p.eval_h(i, theta);
    if (k == 0) h0 = rec.h_block;
    rec.h_drift = rec.h_block - h0;
    rec.residual_upper =
        (k % cfg.residual_stride == 0) ? residual_upper(p, theta) : std::numeric_limits<double>::quiet_NaN();

    const auto t0 = std::chrono::steady_clock::now();
    StepResult step;
    switch (cfg.algorithm) {
      case Algorithm::kBdca:
        step = bdca_step(p, theta, i, cfg.inner_budget, cfg.inner_tol);
        break;
      case Algorithm::kProxBdca:
        step = prox_bdca_step(p, theta, i, cfg.rho, cfg.inner_budget, cfg.inner_tol);
        break;
      case Algorithm::kStochProxBdca: {
        const std::size_t pop = sp->population();
        const std::size_t b = cfg.batch_size == 0 ? pop : std::min(cfg.batch_size, pop);
        const SampleHandle s = draw_minibatch(pop, b, batch_seed, static_cast<std::uint64_t>(k));
        rec.sample_id = static_cast<std::int64_t>(s.id);
        step = stoch_prox_bdca_step(*sp, theta, i, cfg.rho, s, cfg.inner_budget, cfg.inner_tol);
        break;
      }
    }
    if (cfg.record_wall) {
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    rec.step_norm = step.step_norm;
    rec.step_bound = step.step_bound;
    rec.inner_iters = step.inner_iters;
    rec.inner_status = step.status;

    BlockVector next = replace_block(theta, i, step.x);
    if (observer) observer(rec, theta, next);
    trace.records.push_back(rec);
    theta = std::move(next);
  }
  trace.final_theta = theta.data();
  trace.f_final = p.eval_f(theta);
  return trace;
}

std::vector<std::string> trace_header() {
  return {"k",         "block",       "f",       "g_block",    "h_block", "residual_upper",
          "step_norm", "inner_iters", "wall_ms", "step_bound", "h_drift", "sample_id"};
}

void write_trace_csv(const IterTrace& trace, const std::filesystem::path& path) {
  CsvWriter w(path, trace_header());
  for (const auto& r : trace.records) {
    w.row_cells({std::to_string(r.k), std::to_string(r.block), format_double(r.f), format_double(r.g_block),
                 format_double(r.h_block), format_double(r.residual_upper), format_double(r.step_norm),
                 std::to_string(r.inner_iters), format_double(r.wall_ms), format_double(r.step_bound),
                 format_double(r.h_drift), std::to_string(r.sample_id)});
  }
}

}  // namespace bdc
