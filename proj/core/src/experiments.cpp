#include "bdc/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "bdc/csv.hpp"
#include "bdc/error.hpp"
#include "bdc/monomial.hpp"
#include "bdc/problems/cp.hpp"
#include "bdc/problems/mlp_task.hpp"
#include "bdc/relu.hpp"
#include "bdc/rng.hpp"

#ifndef BDC_GIT_DESCRIBE
#define BDC_GIT_DESCRIBE "unknown"
#endif

namespace bdc {
namespace fs = std::filesystem;

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s / double(v.size() - 1));
}

const char* variant_tag(SdlVariant v) { return v == SdlVariant::kL1 ? "L1" : "LQ"; }
const char* variant_file(SdlVariant v) { return v == SdlVariant::kL1 ? "l1" : "lq"; }

std::vector<SdlVariant> parse_variants(const std::string& s) {
  if (s == "both") return {SdlVariant::kL1, SdlVariant::kL1MinusLq};
  if (s == "l1") return {SdlVariant::kL1};
  if (s == "lq" || s == "l1-lq") return {SdlVariant::kL1MinusLq};
  throw UsageError("sdl: variant must be one of both, l1, lq");
}

SdlVariant parse_variant(const std::string& s) {
  const auto v = parse_variants(s);
  if (v.size() != 1) throw UsageError("sdl: gd_variant must be l1 or lq");
  return v.front();
}

template <class T>
std::vector<T> to_index_list(const std::vector<long long>& v) {
  return std::vector<T>(v.begin(), v.end());
}

int checked_int(const Config& c, const std::string& key, long long lo) {
  const long long v = c.get_int(key);
  if (v < lo || v > std::numeric_limits<int>::max()) {
    throw UsageError(key + " must be >= " + std::to_string(lo));
  }
  return static_cast<int>(v);
}

}  // namespace

// ---- SDL ------------------------------------------------------------------------------

double SdlReport::median_final_reconstruction(SdlVariant v) const {
  std::vector<double> f;
  for (const auto& r : runs) {
    if (r.variant == v && !r.reconstruction.empty()) f.push_back(r.reconstruction.back());
  }
  return median(f);
}

double SdlReport::median_final_sparsity(SdlVariant v) const {
  std::vector<double> f;
  for (const auto& r : runs) {
    if (r.variant == v && !r.sparsity.empty()) f.push_back(r.sparsity.back());
  }
  return median(f);
}

SdlReport run_sdl_experiment(const SdlExperiment& cfg) {
  if (cfg.seeds < 1) throw UsageError("sdl: seeds must be >= 1");
  if (cfg.iters < 0) throw UsageError("sdl: iters must be >= 0");
  if (cfg.k_nonzero > cfg.l) throw UsageError("sdl: k must be <= l");
  SdlReport rep;
  rep.true_sparsity = 1.0 - double(cfg.k_nonzero) / double(cfg.l);
  for (int s = 0; s < cfg.seeds; ++s) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(s);
    const SdlData data = sdl_synthetic(cfg.m, cfg.l, cfg.n, cfg.k_nonzero, seed);
    for (SdlVariant v : cfg.variants) {
      SdlInstance inst;
      inst.Y = data.Y;
      inst.atoms = cfg.l;
      inst.alpha = cfg.alpha;
      inst.Q = cfg.Q;
      inst.variant = v;
      const auto p = sdl_problem(inst);
      const BlockVector theta0 = sdl_initial_point(*p, seed);

      SolverConfig sc;
      sc.K = 2 * cfg.iters;
      sc.rho = cfg.rho;
      sc.algorithm = cfg.rho > 0.0 ? Algorithm::kProxBdca : Algorithm::kBdca;
      sc.inner_budget = cfg.inner_budget;
      sc.inner_tol = cfg.inner_tol;
      sc.seed = seed;
      sc.block_rule = BlockRule::kCyclic;
      sc.cyclic_start = SdlProblem::kCodeBlock;

      SdlRun run_rec;
      run_rec.variant = v;
      run_rec.seed = seed;
      run_rec.max_column_norm = p->D(theta0).colwise().norm().maxCoeff();
      const auto observer = [&](const IterRecord& rec, const BlockVector&, const BlockVector& after) {
        const Matrix D = p->D(after);
        run_rec.max_column_norm = std::max(run_rec.max_column_norm, D.colwise().norm().maxCoeff());
        if (rec.k % 2 == 1) {
          run_rec.objective.push_back(p->eval_f(after));
          run_rec.reconstruction.push_back(p->reconstruction_error(after));
          run_rec.sparsity.push_back(sparsity(p->X(after)));
        }
      };
      run_rec.trace = run(*p, theta0, sc, observer);

      if (v == cfg.gd_variant && s < cfg.gd_seeds) {
        SdlGdComparison cmp;
        cmp.seed = seed;
        // One oracle is a full (sub)gradient; a block gradient is half of one.
        cmp.budget = (run_rec.trace.oracle_calls() + 1) / 2;
        cmp.bdca_objective = run_rec.trace.f_final;
        cmp.gd = gd_baseline_sdl(*p, theta0, static_cast<int>(cmp.budget));
        cmp.gd_objective = cmp.gd.objective.back();
        rep.gd.push_back(std::move(cmp));
      }
      rep.runs.push_back(std::move(run_rec));
    }
  }
  return rep;
}

std::vector<fs::path> write_sdl_outputs(const SdlReport& rep, const SdlExperiment& cfg, const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& r : rep.runs) {
    const std::string stem = std::string("sdl_") + variant_file(r.variant) + "_seed" + std::to_string(r.seed);
    const fs::path trace = dir / (stem + "_trace.csv");
    write_trace_csv(r.trace, trace);
    files.push_back(trace);
    const fs::path metrics = dir / (stem + ".csv");
    CsvWriter w(metrics, {"iter", "objective", "rec_error", "sparsity"});
    for (std::size_t t = 0; t < r.objective.size(); ++t) {
      w.row_cells({std::to_string(t + 1), format_double(r.objective[t]), format_double(r.reconstruction[t]),
                   format_double(r.sparsity[t])});
    }
    files.push_back(metrics);
  }

  // Banded summary: mean over seeds plus min/max and mean +- 2 sd bands.
  std::vector<std::string> header{"iter"};
  std::vector<std::pair<std::string, std::pair<SdlVariant, bool>>> series;  // name, (variant, is_rec)
  for (bool is_rec : {true, false}) {
    for (SdlVariant v : cfg.variants) {
      series.push_back({std::string(is_rec ? "rec_errors_" : "sparsities_") + variant_tag(v), {v, is_rec}});
    }
  }
  for (const auto& s : series) header.push_back(s.first);
  for (const auto& s : series) {
    for (const char* suf : {"_min", "_max", "_lo2sd", "_hi2sd"}) header.push_back(s.first + suf);
  }
  header.push_back("true_sparsity");
  const fs::path summary = dir / "sdl_summary.csv";
  CsvWriter w(summary, header);
  for (int t = 0; t < cfg.iters; ++t) {
    std::vector<std::string> cells{std::to_string(t + 1)};
    std::vector<std::string> bands;
    for (const auto& s : series) {
      std::vector<double> vals;
      for (const auto& r : rep.runs) {
        if (r.variant == s.second.first) {
          vals.push_back(s.second.second ? r.reconstruction[static_cast<std::size_t>(t)]
                                         : r.sparsity[static_cast<std::size_t>(t)]);
        }
      }
      const double mu = mean(vals);
      const double sd = stddev(vals);
      cells.push_back(format_double(mu));
      bands.push_back(format_double(*std::min_element(vals.begin(), vals.end())));
      bands.push_back(format_double(*std::max_element(vals.begin(), vals.end())));
      bands.push_back(format_double(mu - 2.0 * sd));
      bands.push_back(format_double(mu + 2.0 * sd));
    }
    cells.insert(cells.end(), bands.begin(), bands.end());
    cells.push_back(format_double(rep.true_sparsity));
    w.row_cells(cells);
  }
  files.push_back(summary);

  if (!rep.gd.empty()) {
    const fs::path cmp = dir / "sdl_compare.csv";
    CsvWriter c(cmp, {"seed", "budget", "bdca_objective", "gd_objective"});
    for (const auto& g : rep.gd) {
      c.row_cells({std::to_string(g.seed), std::to_string(g.budget), format_double(g.bdca_objective),
                   format_double(g.gd_objective)});
      const fs::path gdf = dir / ("sdl_gd_seed" + std::to_string(g.seed) + ".csv");
      CsvWriter gw(gdf, {"iter", "objective", "rec_error", "sparsity"});
      const std::size_t n = g.gd.objective.size();
      const std::size_t stride = std::max<std::size_t>(1, n / 1000);
      for (std::size_t t = 0; t < n; ++t) {
        if (t % stride != 0 && t + 1 != n) continue;
        gw.row_cells({std::to_string(t), format_double(g.gd.objective[t]), format_double(g.gd.reconstruction[t]),
                      format_double(g.gd.sparsity[t])});
      }
      files.push_back(gdf);
    }
    files.push_back(cmp);
  }
  return files;
}

// ---- ReLU -----------------------------------------------------------------------------

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("fit_line: need at least two points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    sxx += (x[j] - mx) * (x[j] - mx);
    sxy += (x[j] - mx) * (y[j] - my);
  }
  if (!(sxx > 0.0)) throw UsageError("fit_line: x values are all equal");
  const double b = sxy / sxx;
  return {my - b * mx, b};
}

ReluRun run_relu_experiment(const ReluExperiment& cfg, std::uint64_t seed) {
  if (cfg.epochs < 0) throw UsageError("relu: epochs must be >= 0");
  if (cfg.samples < 1) throw UsageError("relu: samples must be >= 1");
  if (cfg.stride < 1) throw UsageError("relu: stride must be >= 1");
  if (!(cfg.delta > 0.0 && cfg.delta <= 1.0)) throw UsageError("relu: delta must be in (0, 1]");
  MlpDataset data;
  Index out_dim = 1;
  if (cfg.task == "blobs") {
    data = gaussian_blobs(cfg.samples, cfg.classes, seed);
    out_dim = cfg.classes;
  } else if (cfg.task == "sine") {
    data = sine_regression(cfg.samples, seed);
  } else {
    throw UsageError("relu: task must be blobs or sine");
  }
  std::vector<Index> widths{data.X.rows()};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(out_dim);
  Engine eng = make_engine(seed, "init");
  const auto p = mlp_task_problem(random_mlp(widths, eng, cfg.bias_scale), data);

  ReluRun out;
  out.seed = seed;
  const std::size_t pop = p->population();
  std::size_t batch = cfg.batch == 0 ? pop : std::min(cfg.batch, pop);
  out.K = cfg.epochs * static_cast<int>((pop + batch - 1) / batch);
  double rho = cfg.rho;
  if (cfg.preset && out.K > 0) {
    const TheoryPreset tp = theory_preset(out.K, cfg.c, cfg.c_prime, pop);
    rho = tp.rho;
    batch = tp.batch;
  }
  out.rho = rho;
  out.batch = batch;

  const BlockVector theta0 = p->pack(p->shape());
  out.loss_initial = p->eval_f(theta0);
  SolverConfig sc;
  sc.K = out.K;
  sc.rho = rho;
  sc.algorithm = cfg.algorithm;
  sc.batch_size = batch;
  sc.inner_budget = cfg.inner_budget;
  sc.inner_tol = cfg.inner_tol;
  sc.seed = seed;
  sc.residual_stride = cfg.stride;
  const double scatter_rho = rho > 0.0 ? rho : 1.0;

  const auto observer = [&](const IterRecord& rec, const BlockVector& before, const BlockVector&) {
    if (rec.k % cfg.stride != 0) return;
    for (std::size_t i = 0; i < p->n_blocks(); ++i) {
      const double gnorm = p->grad_g_block(i, before).norm();
      const StepResult cand = prox_bdca_step(*p, before, i, scatter_rho, cfg.inner_budget, cfg.inner_tol);
      const BlockVector next = replace_block(before, i, cand.x);
      const double lhat = smoothness_estimate(*p, before, next, i, cfg.delta);
      if (!(gnorm > 0.0) || !(lhat > 0.0)) continue;  // zero step: log undefined
      out.scatter.push_back({std::log(gnorm), std::log(lhat), rec.k, i});
    }
  };
  out.trace = run(*p, theta0, sc, observer);
  out.loss_final = out.trace.f_final;

  if (!out.trace.records.empty()) {
    const std::size_t K = out.trace.records.size();
    const std::size_t win = std::max<std::size_t>(1, K / 10);
    double s = out.trace.f_final;
    for (std::size_t j = K - win + 1; j < K; ++j) s += out.trace.records[j].f;
    out.loss_final_smoothed = s / double(win);
    std::vector<double> ks;
    std::vector<double> rs;
    for (const auto& r : out.trace.records) {
      if (std::isfinite(r.residual_upper)) {
        ks.push_back(r.k);
        rs.push_back(r.residual_upper);
      }
    }
    out.residual_slope = ks.size() >= 2 ? fit_line(ks, rs).second : 0.0;
  } else {
    out.loss_final_smoothed = out.loss_initial;
  }
  return out;
}

// ---- Tensor ---------------------------------------------------------------------------

TensorRun run_tensor_experiment(const TensorExperiment& cfg) {
  if (cfg.sweeps < 0) throw UsageError("tensor: sweeps must be >= 0");
  for (Index d : cfg.dims) {
    if (d < 1 || d > 32) throw UsageError("tensor: every dimension must be in [1, 32]");
  }
  auto [T, truth] = cp_random_exact(cfg.dims, cfg.rank, cfg.seed);
  const auto p = cp_problem(std::move(T), cfg.rank);
  const BlockVector theta0 = cp_initial_point(*p, cfg.seed);
  const std::size_t order = cfg.dims.size();

  SolverConfig sc;
  sc.K = cfg.sweeps * static_cast<int>(order);
  sc.rho = cfg.rho;
  sc.algorithm = cfg.rho > 0.0 ? Algorithm::kProxBdca : Algorithm::kBdca;
  sc.block_rule = BlockRule::kCyclic;
  sc.seed = cfg.seed;
  sc.inner_budget = 1;
  sc.residual_stride = static_cast<int>(order);

  TensorRun out;
  out.objective.push_back(p->eval_f(theta0));
  out.relative_error.push_back(p->relative_error(theta0));
  const auto observer = [&](const IterRecord& rec, const BlockVector&, const BlockVector& after) {
    const double f = p->eval_f(after);
    if (f > rec.f + 1e-12 * (1.0 + std::abs(rec.f))) ++out.monotone_violations;
    out.objective.push_back(f);
    out.relative_error.push_back(p->relative_error(after));
    out.blocks.push_back(rec.block);
    if (out.sweeps_to_tol < 0 && (rec.k + 1) % static_cast<int>(order) == 0 &&
        out.relative_error.back() <= cfg.tol) {
      out.sweeps_to_tol = (rec.k + 1) / static_cast<int>(order);
    }
  };
  run(*p, theta0, sc, observer);
  return out;
}

// ---- Options --------------------------------------------------------------------------

std::vector<std::string> command_names() { return {"monomial", "sdl", "relu", "tensor", "plan-rho"}; }

const std::vector<OptionSpec>& command_options(const std::string& cmd) {
  static const std::map<std::string, std::vector<OptionSpec>> table = {
      {"monomial",
       {{"b", "", "exponents, comma-separated (e.g. 1,1,2,4)"},
        {"group", "", "block grouping, 1-based, '|' between groups (e.g. 1,2|3,4)"},
        {"bounds", "false", "print the atom-count bounds", true},
        {"verify", "false", "check the identity at random points", true},
        {"csv", "false", "write the atom list to monomial_atoms.csv", true},
        {"trials", "1000", "random points for --verify"},
        {"tol", "1e-6", "relative error tolerance for --verify"},
        {"seed", "0", "master seed"},
        {"out", "bdc_out", "output directory"}}},
      {"sdl",
       {{"m", "10", "signal dimension"},
        {"l", "32", "dictionary atoms"},
        {"n", "100", "samples"},
        {"k", "5", "nonzeros per true code column"},
        {"alpha", "0.1", "regularization weight"},
        {"Q", "5", "largest-Q norm parameter"},
        {"seeds", "10", "number of seeds"},
        {"seed", "0", "first seed"},
        {"iters", "700", "outer iterations (X then D sweeps)"},
        {"variant", "both", "both, l1 or lq"},
        {"rho", "1e-3", "proximal weight (0 runs plain BDCA)"},
        {"inner_budget", "10", "inner iterations per block update"},
        {"inner_tol", "1e-8", "inner relative tolerance"},
        {"gd_seeds", "3", "seeds with a gradient-descent baseline"},
        {"gd_variant", "lq", "variant used for the baseline comparison"},
        {"out", "bdc_out", "output directory"}}},
      {"relu",
       {{"task", "blobs", "blobs or sine"},
        {"classes", "3", "classes for blobs"},
        {"samples", "150", "dataset size"},
        {"hidden", "16", "hidden widths, comma-separated"},
        {"bias_scale", "0.1", "standard deviation of the initial biases"},
        {"epochs", "20", "epochs of ceil(samples/batch) iterations"},
        {"batch", "16", "minibatch size (0 = full batch)"},
        {"preset", "true", "theory preset rho = c sqrt(K), batch = ceil(c' sqrt(K))"},
        {"c", "0.5", "preset rho constant"},
        {"c_prime", "3", "preset batch constant"},
        {"rho", "1", "proximal weight when the preset is off"},
        {"algorithm", "stoch", "bdca, prox or stoch"},
        {"seed", "0", "first seed"},
        {"seeds", "1", "number of seeds"},
        {"inner_budget", "20", "inner iterations per block update"},
        {"inner_tol", "1e-8", "inner relative tolerance"},
        {"stride", "10", "smoothness scatter and residual sampling stride"},
        {"delta", "0.25", "smoothness estimator grid step"},
        {"out", "bdc_out", "output directory"}}},
      {"tensor",
       {{"dims", "4,5,6", "tensor dimensions"},
        {"rank", "2", "CP rank"},
        {"sweeps", "200", "ALS sweeps"},
        {"seed", "0", "seed"},
        {"rho", "0", "proximal weight (0 = exact ALS)"},
        {"tol", "1e-6", "relative error target reported as sweeps_to_tol"},
        {"out", "bdc_out", "output directory"}}},
      {"plan-rho",
       {{"ell", "const", "const (L0), affine (a + c u) or power (a + c u^p)"},
        {"L0", "1", "constant smoothness"},
        {"a", "1", "ell intercept"},
        {"c", "1", "ell slope"},
        {"p", "1.5", "ell exponent, below 2"},
        {"G", "1", "optimality gap bound"},
        {"R", "0", "Lipschitz constant of h"},
        {"K", "0", "iterations for the stochastic preset (0 = skip)"},
        {"c_rho", "1", "preset rho constant"},
        {"c_batch", "1", "preset batch constant"},
        {"population", "1000", "population for the preset batch cap"},
        {"out", "bdc_out", "output directory"}}},
  };
  const auto it = table.find(cmd);
  if (it == table.end()) throw UsageError("unknown command '" + cmd + "'");
  return it->second;
}

Config default_config(const std::string& cmd) {
  Config c;
  for (const auto& o : command_options(cmd)) c.set(o.name, o.default_value);
  return c;
}

// ---- Commands -------------------------------------------------------------------------

RunOutcome cmd_monomial(const Config& cfg, const fs::path& dir, std::ostream& out) {
  RunOutcome res;
  if (cfg.get_string("b").empty()) throw UsageError("monomial: --b is required");
  const Monomial m(to_index_list<int>(cfg.get_int_list("b")));
  const int trials = checked_int(cfg, "trials", 1);
  const double tol = cfg.get_double("tol");
  const std::uint64_t seed = cfg.get_u64("seed");
  res.seeds.push_back(seed);
  const bool bounds = cfg.get_bool("bounds");
  const bool verify = cfg.get_bool("verify");
  const std::string group = cfg.get_string("group");
  bool acted = false;

  if (bounds) {
    const AtomBounds b = dc_atom_bounds(m);
    out << "lower=" << b.lower << " upper=" << b.upper << "\n";
    acted = true;
  }
  if (!group.empty()) {
    const BlockDecomposition dec = bdc_block_decompose(m, parse_grouping(group));
    const auto counts = dec.counts();
    out << "atoms=" << dec.total_atoms() << " (";
    for (std::size_t j = 0; j < counts.size(); ++j) out << (j ? "+" : "") << counts[j];
    out << ")\n";
    if (verify) {
      const VerifyReport r = verify_identity(dec, m, trials, tol, seed);
      out << (r.pass ? "pass" : "fail") << " max_rel_error=" << format_double(r.max_rel_error)
          << " trials=" << r.trials << "\n";
      if (!r.pass) res.failures.push_back("verify:max_rel_error=" + format_double(r.max_rel_error));
    }
    acted = true;
  }
  const AtomDecomposition dec = polarize(m);
  if (verify && group.empty()) {
    const VerifyReport r = verify_identity(dec, m, trials, tol, seed);
    out << (r.pass ? "pass" : "fail") << " max_rel_error=" << format_double(r.max_rel_error)
        << " trials=" << r.trials << "\n";
    if (!r.pass) res.failures.push_back("verify:max_rel_error=" + format_double(r.max_rel_error));
    acted = true;
  }
  if (!acted) {
    out << "atoms=" << dec.size() << " merged=" << dec.merged_count() << "\n";
    for (const auto& a : dec.atoms) out << "  " << format_atom(a, dec.scale) << "\n";
  }
  if (cfg.get_bool("csv")) {
    const fs::path f = dir / "monomial_atoms.csv";
    write_atoms_csv(dec, f);
    res.outputs.push_back(f);
  }
  return res;
}

RunOutcome cmd_sdl(const Config& cfg, const fs::path& dir, std::ostream& out) {
  SdlExperiment e;
  e.m = cfg.get_int("m");
  e.l = cfg.get_int("l");
  e.n = cfg.get_int("n");
  e.k_nonzero = cfg.get_int("k");
  e.alpha = cfg.get_double("alpha");
  e.Q = checked_int(cfg, "Q", 1);
  e.seeds = checked_int(cfg, "seeds", 1);
  e.seed = cfg.get_u64("seed");
  e.iters = checked_int(cfg, "iters", 0);
  e.variants = parse_variants(cfg.get_string("variant"));
  e.rho = cfg.get_double("rho");
  e.inner_budget = checked_int(cfg, "inner_budget", 1);
  e.inner_tol = cfg.get_double("inner_tol");
  e.gd_seeds = checked_int(cfg, "gd_seeds", 0);
  e.gd_variant = parse_variant(cfg.get_string("gd_variant"));

  RunOutcome res;
  for (int s = 0; s < e.seeds; ++s) res.seeds.push_back(e.seed + static_cast<std::uint64_t>(s));
  const SdlReport rep = run_sdl_experiment(e);
  res.outputs = write_sdl_outputs(rep, e, dir);

  for (const auto& r : rep.runs) {
    const std::string tag = std::string(variant_file(r.variant)) + "_seed" + std::to_string(r.seed);
    if (const auto v = r.trace.step_bound_violations(); v > 0) {
      res.failures.push_back("step_bound:" + tag + ":" + std::to_string(v));
    }
    if (r.max_column_norm > 1.0 + 1e-10) res.failures.push_back("dictionary_feasibility:" + tag);
    if (!std::isfinite(r.trace.f_final)) res.failures.push_back("non_finite:" + tag);
  }
  out << "true_sparsity=" << format_double(rep.true_sparsity) << "\n";
  for (SdlVariant v : e.variants) {
    out << "median_final_rec_error_" << variant_tag(v) << "=" << format_double(rep.median_final_reconstruction(v))
        << " median_final_sparsity_" << variant_tag(v) << "=" << format_double(rep.median_final_sparsity(v))
        << "\n";
  }
  if (!rep.gd.empty()) {
    std::vector<double> b;
    std::vector<double> g;
    for (const auto& c : rep.gd) {
      b.push_back(c.bdca_objective);
      g.push_back(c.gd_objective);
    }
    out << "median_bdca_objective=" << format_double(median(b)) << " median_gd_objective=" << format_double(median(g))
        << "\n";
  }
  return res;
}

RunOutcome cmd_relu(const Config& cfg, const fs::path& dir, std::ostream& out) {
  ReluExperiment e;
  e.task = cfg.get_string("task");
  e.classes = checked_int(cfg, "classes", 2);
  e.samples = cfg.get_int("samples");
  e.hidden = to_index_list<Index>(cfg.get_int_list("hidden"));
  e.bias_scale = cfg.get_double("bias_scale");
  e.epochs = checked_int(cfg, "epochs", 0);
  e.batch = static_cast<std::size_t>(checked_int(cfg, "batch", 0));
  e.preset = cfg.get_bool("preset");
  e.c = cfg.get_double("c");
  e.c_prime = cfg.get_double("c_prime");
  e.rho = cfg.get_double("rho");
  e.algorithm = parse_algorithm(cfg.get_string("algorithm"));
  e.seed = cfg.get_u64("seed");
  e.seeds = checked_int(cfg, "seeds", 1);
  e.inner_budget = checked_int(cfg, "inner_budget", 1);
  e.inner_tol = cfg.get_double("inner_tol");
  e.stride = checked_int(cfg, "stride", 1);
  e.delta = cfg.get_double("delta");

  RunOutcome res;
  for (int s = 0; s < e.seeds; ++s) {
    const std::uint64_t seed = e.seed + static_cast<std::uint64_t>(s);
    res.seeds.push_back(seed);
    const ReluRun r = run_relu_experiment(e, seed);
    const fs::path loss = dir / ("relu_loss_seed" + std::to_string(seed) + ".csv");
    write_trace_csv(r.trace, loss);
    const fs::path scatter = dir / ("relu_smoothness_seed" + std::to_string(seed) + ".csv");
    CsvWriter w(scatter, {"logG", "logLhat", "t", "block"});
    for (const auto& row : r.scatter) {
      w.row_cells({format_double(row.logG), format_double(row.logLhat), std::to_string(row.t),
                   std::to_string(row.block)});
    }
    res.outputs.push_back(loss);
    res.outputs.push_back(scatter);

    const std::string tag = "seed" + std::to_string(seed);
    if (e.algorithm != Algorithm::kBdca) {
      if (const auto v = r.trace.step_bound_violations(); v > 0) {
        res.failures.push_back("step_bound:" + tag + ":" + std::to_string(v));
      }
    }
    if (!std::isfinite(r.loss_final)) res.failures.push_back("non_finite:" + tag);
    for (const auto& row : r.scatter) {
      if (!std::isfinite(row.logG) || !std::isfinite(row.logLhat)) {
        res.failures.push_back("scatter_non_finite:" + tag);
        break;
      }
    }
    out << tag << " K=" << r.K << " rho=" << format_double(r.rho) << " batch=" << r.batch
        << " loss_initial=" << format_double(r.loss_initial) << " loss_final=" << format_double(r.loss_final)
        << " loss_final_smoothed=" << format_double(r.loss_final_smoothed)
        << " residual_slope=" << format_double(r.residual_slope) << "\n";
    std::vector<double> gx;
    std::vector<double> ly;
    for (const auto& row : r.scatter) {
      gx.push_back(row.logG);
      ly.push_back(row.logLhat);
    }
    bool distinct = gx.size() >= 2 && *std::max_element(gx.begin(), gx.end()) > *std::min_element(gx.begin(), gx.end());
    if (distinct) {
      const auto [a, b] = fit_line(gx, ly);
      out << tag << " scatter_rows=" << r.scatter.size() << " fit_intercept=" << format_double(a)
          << " fit_slope=" << format_double(b) << "\n";
    } else {
      out << tag << " scatter_rows=" << r.scatter.size() << " fit=unavailable\n";
    }
  }
  return res;
}

RunOutcome cmd_tensor(const Config& cfg, const fs::path& dir, std::ostream& out) {
  TensorExperiment e;
  e.dims = to_index_list<Index>(cfg.get_int_list("dims"));
  e.rank = cfg.get_int("rank");
  e.sweeps = checked_int(cfg, "sweeps", 0);
  e.seed = cfg.get_u64("seed");
  e.rho = cfg.get_double("rho");
  e.tol = cfg.get_double("tol");
  if (e.dims.size() < 2 || e.dims.size() > 4) throw UsageError("tensor: order must be in [2, 4]");
  if (e.rank < 1) throw UsageError("tensor: rank must be >= 1");

  RunOutcome res;
  res.seeds.push_back(e.seed);
  const TensorRun r = run_tensor_experiment(e);
  const fs::path f = dir / ("tensor_seed" + std::to_string(e.seed) + ".csv");
  CsvWriter w(f, {"update", "sweep", "block", "objective", "relative_error"});
  const std::size_t order = e.dims.size();
  w.row_cells({"0", "0", "-1", format_double(r.objective[0]), format_double(r.relative_error[0])});
  for (std::size_t j = 0; j < r.blocks.size(); ++j) {
    w.row_cells({std::to_string(j + 1), std::to_string(j / order + 1), std::to_string(r.blocks[j]),
                 format_double(r.objective[j + 1]), format_double(r.relative_error[j + 1])});
  }
  res.outputs.push_back(f);
  if (r.monotone_violations > 0) res.failures.push_back("monotone:" + std::to_string(r.monotone_violations));
  if (!std::isfinite(r.objective.back())) res.failures.push_back("non_finite:objective");
  out << "final_relative_error=" << format_double(r.relative_error.back()) << " sweeps_to_tol=" << r.sweeps_to_tol
      << " monotone_violations=" << r.monotone_violations << "\n";
  return res;
}

RunOutcome cmd_plan_rho(const Config& cfg, const fs::path& dir, std::ostream& out) {
  const std::string kind = cfg.get_string("ell");
  const double L0 = cfg.get_double("L0");
  const double a = cfg.get_double("a");
  const double c = cfg.get_double("c");
  const double pw = cfg.get_double("p");
  EllFn ell;
  if (kind == "const") {
    ell = [L0](double) { return L0; };
  } else if (kind == "affine") {
    ell = [a, c](double u) { return a + c * u; };
  } else if (kind == "power") {
    if (!(pw < 2.0)) throw UsageError("plan-rho: p must be below 2 (subquadratic ell)");
    ell = [a, c, pw](double u) { return a + c * std::pow(u, pw); };
  } else {
    throw UsageError("plan-rho: ell must be const, affine or power");
  }
  const double G = cfg.get_double("G");
  const double R = cfg.get_double("R");
  const RhoPlan plan = plan_rho(ell, G, R);
  const double resid = std::abs(plan.E * plan.E - 2.0 * ell(2.0 * plan.E) * G);

  RunOutcome res;
  out << "E=" << format_double(plan.E) << " L_eff=" << format_double(plan.L_eff)
      << " rho_min=" << format_double(plan.rho_min) << " fixed_point_residual=" << format_double(resid) << "\n";
  std::vector<std::string> header{"G", "R", "E", "L_eff", "rho_min"};
  std::vector<std::string> row{format_double(G), format_double(R), format_double(plan.E), format_double(plan.L_eff),
                               format_double(plan.rho_min)};
  const int K = checked_int(cfg, "K", 0);
  if (K > 0) {
    const auto pop = static_cast<std::size_t>(checked_int(cfg, "population", 1));
    const TheoryPreset tp = theory_preset(K, cfg.get_double("c_rho"), cfg.get_double("c_batch"), pop);
    out << "preset_rho=" << format_double(tp.rho) << " preset_batch=" << tp.batch << "\n";
    header.insert(header.end(), {"K", "preset_rho", "preset_batch"});
    row.insert(row.end(), {std::to_string(K), format_double(tp.rho), std::to_string(tp.batch)});
  }
  const fs::path f = dir / "plan_rho.csv";
  CsvWriter w(f, header);
  w.row_cells(row);
  res.outputs.push_back(f);
  if (resid > 1e-8 * (1.0 + plan.E * plan.E)) res.failures.push_back("fixed_point:" + format_double(resid));
  return res;
}

// ---- Driver ---------------------------------------------------------------------------

namespace {

void write_manifest(const fs::path& path, const std::string& cmd, const Config& cfg, const std::string& status,
                    const RunOutcome* res, double wall_seconds, const std::string& reason) {
  nlohmann::ordered_json j;
  j["subcommand"] = cmd;
  j["status"] = status;
  j["git_describe"] = BDC_GIT_DESCRIBE;
  j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : cfg.values()) j["config"][k] = v;
  j["seeds"] = nlohmann::ordered_json::array();
  j["outputs"] = nlohmann::ordered_json::array();
  if (res != nullptr) {
    for (auto s : res->seeds) j["seeds"].push_back(s);
    for (const auto& o : res->outputs) j["outputs"].push_back(o.filename().string());
    j["failures"] = res->failures;
  }
  j["wall_seconds"] = wall_seconds;
  if (!reason.empty()) j["reason"] = reason;
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write manifest " + path.string());
  out << j.dump(2) << "\n";
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int run_command(const std::string& cmd, const Config& cfg, std::ostream& out, std::ostream& err) {
  Config resolved;
  fs::path manifest;
  try {
    resolved = default_config(cmd);
    for (const auto& [k, v] : cfg.values()) {
      if (!resolved.has(k)) throw UsageError("unknown key '" + k + "' for command " + cmd);
      resolved.set(k, v);
    }
    const fs::path dir = resolved.get_string("out");
    fs::create_directories(dir);
    std::string stem = cmd;
    std::replace(stem.begin(), stem.end(), '-', '_');
    manifest = dir / (stem + "_manifest.json");
    write_manifest(manifest, cmd, resolved, "running", nullptr, 0.0, "");

    const auto t0 = std::chrono::steady_clock::now();
    RunOutcome res;
    if (cmd == "monomial") res = cmd_monomial(resolved, dir, out);
    else if (cmd == "sdl") res = cmd_sdl(resolved, dir, out);
    else if (cmd == "relu") res = cmd_relu(resolved, dir, out);
    else if (cmd == "tensor") res = cmd_tensor(resolved, dir, out);
    else res = cmd_plan_rho(resolved, dir, out);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::string reason;
    if (!res.ok()) {
      const std::string& f = res.failures.front();
      const auto colon = f.find(':');
      reason = "FAIL reason=" + f.substr(0, colon) +
               " detail=" + (colon == std::string::npos ? std::string("none") : f.substr(colon + 1)) +
               " count=" + std::to_string(res.failures.size());
    }
    write_manifest(manifest, cmd, resolved, res.ok() ? "ok" : "failed", &res, wall, reason);
    if (!res.ok()) {
      err << reason << "\n";
      return 1;
    }
    return 0;
  } catch (const UsageError& e) {
    const std::string reason = "FAIL reason=usage detail=\"" + one_line(e.what()) + "\"";
    if (!manifest.empty()) write_manifest(manifest, cmd, resolved, "failed", nullptr, 0.0, reason);
    err << reason << "\n";
    return 2;
  } catch (const SolverError& e) {
    const std::string reason = "FAIL reason=solver detail=\"" + one_line(e.what()) + "\"";
    if (!manifest.empty()) write_manifest(manifest, cmd, resolved, "failed", nullptr, 0.0, reason);
    err << reason << "\n";
    return 1;
  }
}

}  // namespace bdc
