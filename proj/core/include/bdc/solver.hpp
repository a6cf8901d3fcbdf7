#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "bdc/inner.hpp"
#include "bdc/problem.hpp"

namespace bdc {

enum class Algorithm { kBdca, kProxBdca, kStochProxBdca };
enum class BlockRule { kUniform, kCyclic };

Algorithm parse_algorithm(const std::string& s);
BlockRule parse_block_rule(const std::string& s);
const char* to_string(Algorithm a);
const char* to_string(BlockRule r);

struct SolverConfig {
  int K = 100;
  double rho = 0.0;
  int inner_budget = 100;
  double inner_tol = 1e-8;
  std::uint64_t seed = 0;
  BlockRule block_rule = BlockRule::kUniform;
  std::size_t cyclic_start = 0;
  std::size_t batch_size = 0;  // stochastic only
  Algorithm algorithm = Algorithm::kProxBdca;
  bool record_wall = false;    // wall_ms stays 0 otherwise so traces are byte-reproducible
  int residual_stride = 1;     // residual_upper every stride iterations (NaN elsewhere)

  void validate() const;
};

struct StepResult {
  Vector x;                // new block i
  Vector u;                // chosen subgradient of h_i (sampled when stochastic)
  double step_norm = 0.0;
  double step_bound = std::numeric_limits<double>::infinity();  // (2/rho)|v - u|
  double surrogate_before = 0.0;
  double surrogate_after = 0.0;
  int inner_iters = 0;
  InnerStatus status = InnerStatus::kConverged;
};

/// theta_i <- argmin g_i(.) - <u, .> over the block domain.
StepResult bdca_step(const BdcProblem& p, const BlockVector& theta, std::size_t i, int budget, double tol);
/// Adds (rho/2)|. - theta_i|^2 to the surrogate.
StepResult prox_bdca_step(const BdcProblem& p, const BlockVector& theta, std::size_t i, double rho, int budget,
                          double tol);
/// Surrogate built from the sampled g_i(.; s) and u(s).
StepResult stoch_prox_bdca_step(const StochasticBdcProblem& p, const BlockVector& theta, std::size_t i, double rho,
                                const SampleHandle& s, int budget, double tol);

/// Minimizes sp(x) - <u, x> + rho/2 |x - anchor|^2 from anchor with the method sp declares.
StepResult solve_surrogate(const BlockSubproblem& sp, const Vector& u, double rho, const Vector& anchor,
                           int budget, double tol);

struct IterRecord {
  int k = 0;
  std::size_t block = 0;
  double f = 0.0;         // f(theta^k)
  double g_block = 0.0;   // g_{i_k}(theta^k)
  double h_block = 0.0;   // h_{i_k}(theta^k)
  double residual_upper = 0.0;
  double step_norm = 0.0;
  int inner_iters = 0;
  double wall_ms = 0.0;
  double step_bound = 0.0;
  double h_drift = 0.0;   // h_{i_k}(theta^k) - h_{i_0}(theta^0)
  std::int64_t sample_id = -1;
  InnerStatus inner_status = InnerStatus::kConverged;
};

struct IterTrace {
  std::vector<IterRecord> records;
  Vector final_theta;  // theta^{K}
  double f_final = 0.0;

  /// Iterations where step_norm > step_bound + tol.
  std::size_t step_bound_violations(double tol = 1e-9) const;
  /// Total inner iterations, i.e. smooth-gradient oracle calls of the block solvers.
  long long oracle_calls() const;
};

std::size_t choose_block(const SolverConfig& cfg, int k, std::size_t n_blocks);

using Observer = std::function<void(const IterRecord&, const BlockVector& before, const BlockVector& after)>;

/// Runs cfg.K block updates from theta0. The stochastic algorithm requires a
/// StochasticBdcProblem.
IterTrace run(const BdcProblem& p, const BlockVector& theta0, const SolverConfig& cfg,
              const Observer& observer = {});

/// Columns: k, block, f, g_block, h_block, residual_upper, step_norm, inner_iters, wall_ms,
/// step_bound, h_drift, sample_id.
void write_trace_csv(const IterTrace& trace, const std::filesystem::path& path);
std::vector<std::string> trace_header();

}  // namespace bdc
