#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bdc/config.hpp"
#include "bdc/planning.hpp"
#include "bdc/problems/sdl.hpp"
#include "bdc/solver.hpp"

namespace bdc {

// ---- Sparse dictionary learning -------------------------------------------------------

struct SdlExperiment {
  Index m = 10;
  Index l = 32;
  Index n = 100;
  Index k_nonzero = 5;
  double alpha = 0.1;
  int Q = 5;
  int seeds = 10;
  std::uint64_t seed = 0;  // seed s runs with seed + s
  int iters = 700;         // outer iterations, each a cyclic sweep X then D
  std::vector<SdlVariant> variants{SdlVariant::kL1, SdlVariant::kL1MinusLq};
  double rho = 1e-3;
  int inner_budget = 10;
  double inner_tol = 1e-8;
  int gd_seeds = 3;  // GD baseline on the first gd_seeds seeds of gd_variant
  SdlVariant gd_variant = SdlVariant::kL1MinusLq;
};

struct SdlRun {
  SdlVariant variant = SdlVariant::kL1;
  std::uint64_t seed = 0;
  std::vector<double> objective;       // per outer iteration, after the D update
  std::vector<double> reconstruction;  // |Y - DX|_F^2
  std::vector<double> sparsity;        // exact zeros of X
  IterTrace trace;
  double max_column_norm = 0.0;        // over every iterate
};

struct SdlGdComparison {
  std::uint64_t seed = 0;
  long long budget = 0;  // full-gradient equivalents of the BDCA inner iterations
  double bdca_objective = 0.0;
  double gd_objective = 0.0;
  GdTrace gd;
};

struct SdlReport {
  std::vector<SdlRun> runs;
  std::vector<SdlGdComparison> gd;
  double true_sparsity = 0.0;

  /// Median over seeds of the final value of a per-run series.
  double median_final_reconstruction(SdlVariant v) const;
  double median_final_sparsity(SdlVariant v) const;
};

SdlReport run_sdl_experiment(const SdlExperiment& cfg);
/// Writes per-seed traces, the banded summary and the GD comparison; returns the files.
std::vector<std::filesystem::path> write_sdl_outputs(const SdlReport& report, const SdlExperiment& cfg,
                                                     const std::filesystem::path& dir);

// ---- Toy MLP training -----------------------------------------------------------------

struct ReluExperiment {
  std::string task = "blobs";  // blobs (cross-entropy) or sine (MSE)
  int classes = 3;
  Index samples = 150;
  std::vector<Index> hidden{16};
  double bias_scale = 0.1;  // nonzero so output biases start off the kink of relu(b)
  int epochs = 20;  // K = epochs * ceil(samples / batch)
  std::size_t batch = 16;
  bool preset = true;  // rho = c sqrt(K), batch = ceil(c' sqrt(K))
  double c = 0.5;
  double c_prime = 3.0;
  double rho = 1.0;  // used when preset is off
  Algorithm algorithm = Algorithm::kStochProxBdca;
  std::uint64_t seed = 0;
  int seeds = 1;
  int inner_budget = 20;
  double inner_tol = 1e-8;
  int stride = 10;  // smoothness scatter and residual_upper sampling
  double delta = 0.25;
};

struct ScatterRow {
  double logG = 0.0;
  double logLhat = 0.0;
  int t = 0;
  std::size_t block = 0;
};

struct ReluRun {
  std::uint64_t seed = 0;
  int K = 0;
  double rho = 0.0;
  std::size_t batch = 0;
  IterTrace trace;
  std::vector<ScatterRow> scatter;
  double loss_initial = 0.0;
  double loss_final = 0.0;
  double loss_final_smoothed = 0.0;  // mean f over the last max(1, K/10) iterates
  double residual_slope = 0.0;       // least-squares slope of sampled residual_upper vs k
};

ReluRun run_relu_experiment(const ReluExperiment& cfg, std::uint64_t seed);

/// Least-squares line y = a + b x; returns (a, b). Needs two distinct x values.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);

// ---- CP tensor ALS --------------------------------------------------------------------

struct TensorExperiment {
  std::vector<Index> dims{4, 5, 6};
  Index rank = 2;
  int sweeps = 200;
  std::uint64_t seed = 0;
  double rho = 0.0;  // 0 runs exact block minimization
  double tol = 1e-6;
};

struct TensorRun {
  std::vector<double> objective;       // entry 0 is the start, then one per block update
  std::vector<double> relative_error;  // same indexing
  std::vector<std::size_t> blocks;     // block of update j (objective index j + 1)
  int sweeps_to_tol = -1;              // first sweep ending with relative error <= tol
  std::size_t monotone_violations = 0;
};

TensorRun run_tensor_experiment(const TensorExperiment& cfg);

// ---- Command layer --------------------------------------------------------------------

struct OptionSpec {
  std::string name;
  std::string default_value;
  std::string help;
  bool flag = false;  // boolean switch without a value
};

std::vector<std::string> command_names();
const std::vector<OptionSpec>& command_options(const std::string& cmd);
Config default_config(const std::string& cmd);

/// Verification gates that failed, plus the files a command produced.
struct RunOutcome {
  std::vector<std::string> failures;  // "gate:detail"
  std::vector<std::filesystem::path> outputs;
  std::vector<std::uint64_t> seeds;

  bool ok() const { return failures.empty(); }
};

RunOutcome cmd_monomial(const Config& cfg, const std::filesystem::path& dir, std::ostream& out);
RunOutcome cmd_sdl(const Config& cfg, const std::filesystem::path& dir, std::ostream& out);
RunOutcome cmd_relu(const Config& cfg, const std::filesystem::path& dir, std::ostream& out);
RunOutcome cmd_tensor(const Config& cfg, const std::filesystem::path& dir, std::ostream& out);
RunOutcome cmd_plan_rho(const Config& cfg, const std::filesystem::path& dir, std::ostream& out);

/// Resolves `cfg` over the command defaults, writes the manifest before and after the run,
/// and returns the exit code: 0 when every gate passes, 1 on a failed gate, 2 on a usage
/// error. Failures print one line "FAIL reason=<gate> detail=<...>" to err.
int run_command(const std::string& cmd, const Config& cfg, std::ostream& out, std::ostream& err);

}  // namespace bdc
