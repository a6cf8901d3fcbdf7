#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "bdc/error.hpp"
#include "bdc/inner.hpp"
#include "bdc/planning.hpp"
#include "bdc/problems/mlp_task.hpp"
#include "bdc/problems/sdl.hpp"
#include "bdc/solver.hpp"
#include "test_support.hpp"

namespace bdc {
namespace {

using testing::random_vector;

std::shared_ptr<testing::QuadraticDc> scalar_quadratic(double center) {
  return std::make_shared<testing::QuadraticDc>(Matrix::Identity(1, 1), Matrix::Zero(1, 1),
                                                Vector::Constant(1, -center), std::vector<Index>{1});
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BlockSubproblem lasso_scalar(double z, double lambda) {
  BlockSubproblem sp;
  sp.smooth_value = [z](const Vector& x) { return 0.5 * (x(0) - z) * (x(0) - z); };
  sp.smooth_grad = [z](const Vector& x) { return Vector::Constant(1, x(0) - z); };
  sp.nonsmooth_value = [lambda](const Vector& x) { return lambda * x.cwiseAbs().sum(); };
  sp.prox = [lambda](const Vector& v, double t) { return soft_threshold(v, lambda * t); };
  return sp;
}

// ---- steps ---------------------------------------------------------------------------

TEST(BdcaStep, QuadraticReachesCenter) {
  const auto p = std::make_shared<testing::QuadraticDc>(Matrix::Identity(3, 3), Matrix::Zero(3, 3),
                                                        -Vector::LinSpaced(3, 1, 3), std::vector<Index>{3});
  const BlockVector theta(p->partition(), Vector::Zero(3));
  const StepResult r = bdca_step(*p, theta, 0, 100, 1e-12);
  EXPECT_LE((r.x - Vector::LinSpaced(3, 1, 3)).norm(), 1e-8);
  EXPECT_LE(r.surrogate_after, r.surrogate_before);
}

TEST(SolveSurrogate, ScalarLassoIsSoftThreshold) {
  const StepResult a = solve_surrogate(lasso_scalar(1.0, 1.0), Vector::Zero(1), 0.0, Vector::Constant(1, 0.7), 200, 1e-12);
  EXPECT_NEAR(a.x(0), 0.0, 1e-10);
  const StepResult b = solve_surrogate(lasso_scalar(3.0, 1.0), Vector::Zero(1), 0.0, Vector::Zero(1), 200, 1e-12);
  EXPECT_NEAR(b.x(0), 2.0, 1e-8);
}

TEST(BdcaStep, LargestQSubgradientHasQNonzerosPerColumn) {
  const SdlData d = sdl_synthetic(5, 8, 6, 3, 2);
  const auto p = sdl_problem({d.Y, 8, 0.2, 3, SdlVariant::kL1MinusLq});
  Engine eng = make_engine(40, "test");
  const BlockVector theta = p->pack(d.D_true, Matrix::Random(8, 6));
  const Vector u = p->subgrad_h_block(SdlProblem::kCodeBlock, theta);
  const Matrix U = Eigen::Map<const Matrix>(u.data(), 8, 6);
  for (Index c = 0; c < 6; ++c) {
    EXPECT_EQ((U.col(c).array() != 0.0).count(), 3);
    EXPECT_NEAR(U.col(c).cwiseAbs().maxCoeff(), 0.2, 1e-15);
  }
}

TEST(ProxBdcaStep, ScalarProximalStep) {
  const auto p = scalar_quadratic(0.0);
  const BlockVector theta(p->partition(), Vector::Ones(1));
  const StepResult r = prox_bdca_step(*p, theta, 0, 1.0, 100, 1e-12);
  EXPECT_NEAR(r.x(0), 0.5, 1e-9);
  EXPECT_LE(r.step_norm, r.step_bound + 1e-12);
}

TEST(ProxBdcaStep, LargeRhoFreezesBlock) {
  const auto p = testing::random_quadratic_dc({3, 2}, 8);
  Engine eng = make_engine(41, "test");
  const BlockVector theta(p->partition(), random_vector(5, eng));
  double prev = std::numeric_limits<double>::infinity();
  for (double rho : {1.0, 1e2, 1e4, 1e8}) {
    const StepResult r = prox_bdca_step(*p, theta, 0, rho, 200, 1e-14);
    EXPECT_LE(r.step_norm, prev + 1e-15);
    prev = r.step_norm;
  }
  EXPECT_LE(prev, 1e-6);
  EXPECT_THROW(SolverConfig({.K = 1, .rho = 0.0, .algorithm = Algorithm::kProxBdca}).validate(), UsageError);
}

TEST(ProxBdcaStep, StepBoundHoldsOnSdl) {
  const SdlData d = sdl_synthetic(6, 10, 20, 3, 4);
  const auto p = sdl_problem({d.Y, 10, 0.1, 3, SdlVariant::kL1MinusLq});
  SolverConfig cfg;
  cfg.K = 60;
  cfg.rho = 0.05;
  cfg.inner_budget = 30;
  cfg.seed = 3;
  const IterTrace t = run(*p, sdl_initial_point(*p, 3), cfg);
  EXPECT_EQ(t.step_bound_violations(1e-9), 0u);
}

// ---- stochastic ----------------------------------------------------------------------

std::shared_ptr<MlpTaskProblem> small_mlp_task(std::uint64_t seed) {
  Engine eng = make_engine(seed, "init");
  return mlp_task_problem(random_mlp({2, 5, 3}, eng, 0.1), gaussian_blobs(24, 3, seed));
}

TEST(StochProxBdcaStep, FullBatchEqualsDeterministic) {
  const auto p = small_mlp_task(5);
  const BlockVector theta = p->pack(p->shape());
  const SampleHandle all = draw_minibatch(p->population(), p->population(), 1, 0);
  for (std::size_t i = 0; i < 2; ++i) {
    const StepResult a = prox_bdca_step(*p, theta, i, 2.0, 20, 1e-10);
    const StepResult b = stoch_prox_bdca_step(*p, theta, i, 2.0, all, 20, 1e-10);
    EXPECT_LE((a.x - b.x).norm(), 1e-12 * (1 + a.x.norm()));
  }
}

TEST(StochProxBdcaStep, RequiresStochasticProblem) {
  const auto p = testing::random_quadratic_dc({2}, 1);
  SolverConfig cfg;
  cfg.K = 2;
  cfg.rho = 1.0;
  cfg.batch_size = 1;
  cfg.algorithm = Algorithm::kStochProxBdca;
  EXPECT_THROW(run(*p, BlockVector(p->partition()), cfg), UsageError);
}

TEST(DrawMinibatch, ReplayableUniqueSorted) {
  const SampleHandle a = draw_minibatch(50, 12, 9, 4);
  const SampleHandle b = draw_minibatch(50, 12, 9, 4);
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_EQ(std::set<std::size_t>(a.indices.begin(), a.indices.end()).size(), 12u);
  EXPECT_TRUE(std::is_sorted(a.indices.begin(), a.indices.end()));
  EXPECT_LT(a.indices.back(), 50u);
  EXPECT_NE(draw_minibatch(50, 12, 9, 5).indices, a.indices);
  EXPECT_THROW(draw_minibatch(5, 6, 0, 0), UsageError);
}

// ---- run -----------------------------------------------------------------------------

TEST(Run, EmptyAndSingleIteration) {
  const auto p = testing::random_quadratic_dc({2, 2}, 9);
  const BlockVector theta0(p->partition(), Vector::Ones(4));
  SolverConfig cfg;
  cfg.rho = 1.0;
  cfg.K = 0;
  EXPECT_TRUE(run(*p, theta0, cfg).records.empty());
  cfg.K = 1;
  const IterTrace t = run(*p, theta0, cfg);
  ASSERT_EQ(t.records.size(), 1u);
  EXPECT_DOUBLE_EQ(t.records[0].f, p->eval_f(theta0));
}

TEST(Run, MonotoneDescentDeterministic) {
  for (Algorithm a : {Algorithm::kBdca, Algorithm::kProxBdca}) {
    const auto p = testing::random_quadratic_dc({2, 3, 2}, 10);
    SolverConfig cfg;
    cfg.K = 80;
    cfg.algorithm = a;
    cfg.rho = a == Algorithm::kBdca ? 0.0 : 0.5;
    cfg.inner_tol = 1e-10;
    cfg.seed = 4;
    Engine eng = make_engine(42, "test");
    const IterTrace t = run(*p, BlockVector(p->partition(), random_vector(7, eng)), cfg);
    for (std::size_t k = 1; k < t.records.size(); ++k) {
      EXPECT_LE(t.records[k].f, t.records[k - 1].f + 2 * cfg.inner_tol * (1 + std::abs(t.records[k - 1].f)));
    }
    EXPECT_LE(t.f_final, t.records.back().f + 1e-12);
  }
}

TEST(Run, FrozenBlocksUnchanged) {
  const auto p = small_mlp_task(6);
  SolverConfig cfg;
  cfg.K = 1;
  cfg.rho = 1.0;
  cfg.inner_budget = 5;
  cfg.block_rule = BlockRule::kCyclic;
  cfg.cyclic_start = 1;
  const BlockVector theta0 = p->pack(p->shape());
  const IterTrace t = run(*p, theta0, cfg);
  const BlockVector after(theta0.partition_ptr(), t.final_theta);
  EXPECT_EQ(extract_block(after, 0), extract_block(theta0, 0));
  EXPECT_NE(extract_block(after, 1), extract_block(theta0, 1));
}

TEST(Run, SeedReplayIsByteIdentical) {
  const auto p = small_mlp_task(7);
  SolverConfig cfg;
  cfg.K = 25;
  cfg.rho = 3.0;
  cfg.batch_size = 8;
  cfg.inner_budget = 5;
  cfg.seed = 11;
  cfg.algorithm = Algorithm::kStochProxBdca;
  const auto dir = std::filesystem::temp_directory_path();
  write_trace_csv(run(*p, p->pack(p->shape()), cfg), dir / "bdc_replay_a.csv");
  write_trace_csv(run(*p, p->pack(p->shape()), cfg), dir / "bdc_replay_b.csv");
  EXPECT_EQ(slurp(dir / "bdc_replay_a.csv"), slurp(dir / "bdc_replay_b.csv"));
  cfg.seed = 12;
  write_trace_csv(run(*p, p->pack(p->shape()), cfg), dir / "bdc_replay_b.csv");
  EXPECT_NE(slurp(dir / "bdc_replay_a.csv"), slurp(dir / "bdc_replay_b.csv"));
}

TEST(Run, TraceHeaderStartsWithRequiredColumns) {
  const std::vector<std::string> want{"k", "block", "f", "g_block", "h_block", "residual_upper", "step_norm",
                                      "inner_iters", "wall_ms"};
  const auto h = trace_header();
  ASSERT_GE(h.size(), want.size());
  EXPECT_TRUE(std::equal(want.begin(), want.end(), h.begin()));
}

TEST(ChooseBlock, UniformReplayAndCyclic) {
  SolverConfig cfg;
  cfg.seed = 5;
  std::vector<int> hist(4, 0);
  for (int k = 0; k < 4000; ++k) {
    const std::size_t i = choose_block(cfg, k, 4);
    EXPECT_EQ(i, choose_block(cfg, k, 4));
    ++hist[i];
  }
  for (int h : hist) EXPECT_NEAR(h, 1000, 150);
  cfg.block_rule = BlockRule::kCyclic;
  cfg.cyclic_start = 2;
  EXPECT_EQ(choose_block(cfg, 0, 4), 2u);
  EXPECT_EQ(choose_block(cfg, 3, 4), 1u);
}

// ---- inner solvers -------------------------------------------------------------------

TEST(InnerProxGradient, LeastSquaresMatchesNormalEquations) {
  Engine eng = make_engine(43, "test");
  Matrix A(8, 4);
  for (Index j = 0; j < 4; ++j) A.col(j) = random_vector(8, eng);
  const Vector b = random_vector(8, eng);
  ProxGradientProblem prob;
  prob.smooth_value = [&](const Vector& x) { return 0.5 * (A * x - b).squaredNorm(); };
  prob.smooth_grad = [&](const Vector& x) { return Vector(A.transpose() * (A * x - b)); };
  const Vector exact = (A.transpose() * A).ldlt().solve(A.transpose() * b);
  for (bool accelerate : {false, true}) {
    prob.accelerate = accelerate;
    prob.lipschitz = accelerate ? (A.transpose() * A).eigenvalues().real().maxCoeff() : 0.0;
    const InnerResult r = inner_prox_gradient(prob, Vector::Zero(4), 5000, 1e-13);
    EXPECT_LE((r.x - exact).norm(), 1e-8) << accelerate;
  }
}

TEST(InnerProxGradient, ProjectionOntoUnitBall) {
  ProxGradientProblem prob;
  const Vector target = (Vector(2) << 3.0, 4.0).finished();
  prob.smooth_value = [&](const Vector& x) { return 0.5 * (x - target).squaredNorm(); };
  prob.smooth_grad = [&](const Vector& x) { return Vector(x - target); };
  prob.prox = [](const Vector& v, double) { return Vector(v / std::max(1.0, v.norm())); };
  const InnerResult r = inner_prox_gradient(prob, Vector::Zero(2), 500, 1e-12);
  EXPECT_LE((r.x - target / 5.0).norm(), 1e-8);
}

TEST(InnerProxGradient, ObjectiveNonIncreasing) {
  Engine eng = make_engine(44, "test");
  const Matrix Q = testing::random_psd(6, eng, 0.1);
  const Vector c = random_vector(6, eng);
  ProxGradientProblem prob;
  prob.smooth_value = [&](const Vector& x) { return 0.5 * x.dot(Q * x) + c.dot(x); };
  prob.smooth_grad = [&](const Vector& x) { return Vector(Q * x + c); };
  prob.nonsmooth_value = [](const Vector& x) { return 0.3 * x.cwiseAbs().sum(); };
  prob.prox = [](const Vector& v, double t) { return soft_threshold(v, 0.3 * t); };
  double prev = std::numeric_limits<double>::infinity();
  for (int budget = 1; budget <= 40; ++budget) {
    const InnerResult r = inner_prox_gradient(prob, Vector::Ones(6), budget, 0.0);
    EXPECT_LE(r.value, prev + 1e-14);
    prev = r.value;
  }
}

FrankWolfeProblem fw_problem(const Matrix& Y, const Matrix& X) {
  FrankWolfeProblem fw;
  const Index m = Y.rows(), l = X.rows();
  const auto D = [m, l](const Vector& v) { return Eigen::Map<const Matrix>(v.data(), m, l); };
  fw.value = [=](const Vector& v) { return 0.5 * (Y - D(v) * X).squaredNorm(); };
  fw.grad = [=](const Vector& v) {
    const Matrix G = (D(v) * X - Y) * X.transpose();
    return Vector(Eigen::Map<const Vector>(G.data(), G.size()));
  };
  fw.hess_vec = [=](const Vector& v) {
    const Matrix H = D(v) * X * X.transpose();
    return Vector(Eigen::Map<const Vector>(H.data(), H.size()));
  };
  fw.column_dim = m;
  return fw;
}

TEST(FrankWolfe, SeparableProjectionRecoversTarget) {
  Engine eng = make_engine(45, "test");
  Matrix Y(4, 3);
  for (Index j = 0; j < 3; ++j) Y.col(j) = random_vector(4, eng).normalized();
  const FrankWolfeProblem fw = fw_problem(Y, Matrix::Identity(3, 3));
  const InnerResult r = inner_frank_wolfe_ball_product(fw, Vector::Zero(12), 2000, 1e-12);
  EXPECT_LE(fw.value(r.x), 1e-8);
}

std::pair<FrankWolfeProblem, Vector> random_fw_instance(double y_scale, std::uint64_t seed) {
  Engine eng = make_engine(seed, "test");
  Matrix Y(5, 7), X(4, 7);
  for (Index j = 0; j < 7; ++j) {
    Y.col(j) = random_vector(5, eng, y_scale);
    X.col(j) = random_vector(4, eng);
  }
  return {fw_problem(Y, X), Vector::Zero(20)};
}

double projected_gradient_optimum(const FrankWolfeProblem& fw, const Vector& x0) {
  const BlockDomain ball = BlockDomain::ball_product(fw.column_dim);
  ProxGradientProblem pg;
  pg.smooth_value = fw.value;
  pg.smooth_grad = fw.grad;
  pg.prox = [ball](const Vector& v, double) { return ball.projection(v); };
  return fw.value(inner_prox_gradient(pg, x0, 20000, 1e-13).x);
}

TEST(FrankWolfe, AgreesWithProjectedGradientWhenColumnsActive) {
  // Large targets put every optimal column on its sphere, where Frank-Wolfe converges fast.
  const auto [fw, x0] = random_fw_instance(10.0, 46);
  const InnerResult a = inner_frank_wolfe_ball_product(fw, x0, 20000, 1e-13);
  EXPECT_NEAR(fw.value(a.x), projected_gradient_optimum(fw, x0), 1e-6);
  EXPECT_LE(frank_wolfe_gap(fw, a.x), frank_wolfe_gap(fw, x0));
  for (Index c = 0; c < 4; ++c) EXPECT_LE(a.x.segment(5 * c, 5).norm(), 1.0 + 1e-12);
}

TEST(FrankWolfe, GapCertifiesSuboptimalityWithInteriorColumns) {
  // An interior optimal column makes Frank-Wolfe sublinear; the gap still bounds f - f*.
  const auto [fw, x0] = random_fw_instance(2.0, 46);
  const InnerResult a = inner_frank_wolfe_ball_product(fw, x0, 2000, 1e-13);
  const double fstar = projected_gradient_optimum(fw, x0);
  const double gap = frank_wolfe_gap(fw, a.x);
  EXPECT_GE(fw.value(a.x), fstar - 1e-9);
  EXPECT_LE(fw.value(a.x) - fstar, gap + 1e-9);
  EXPECT_LE(gap, frank_wolfe_gap(fw, x0));
}

// ---- planning ------------------------------------------------------------------------

TEST(ComputeE, ConstantEll) {
  for (double L0 : {0.5, 1.0, 7.0}) {
    for (double G : {0.1, 2.0, 30.0}) {
      const double E = compute_E([L0](double) { return L0; }, G);
      EXPECT_NEAR(E, std::sqrt(2 * L0 * G), 1e-10 * E);
    }
  }
}

TEST(ComputeE, AffineEllClosedForm) {
  const double a = 2.0, c = 3.0, G = 0.5;
  const double E = compute_E([=](double u) { return a + c * u; }, G);
  const double want = 2 * G * c + std::sqrt(4 * G * G * c * c + 2 * a * G);
  EXPECT_NEAR(E, want, 1e-10 * want);
  EXPECT_LE(std::abs(E * E - 2 * (a + c * 2 * E) * G), 1e-8 * (1 + E * E));
}

TEST(ComputeE, SuperquadraticEllHasNoBracket) {
  EXPECT_THROW(compute_E([](double u) { return 1.0 + u * u * u; }, 1.0), UsageError);
}

TEST(RhoFrom, ZeroRGivesTwiceL) {
  EXPECT_DOUBLE_EQ(rho_from(3.0, 5.0, 0.0), 10.0);
  const RhoPlan plan = plan_rho([](double) { return 4.0; }, 2.0, 1.0);
  EXPECT_GE(plan.rho_min, 2 * plan.L_eff);
  EXPECT_LE(plan.E * plan.E, 2 * plan.L_eff * plan.G + 1e-9);
}

TEST(SmoothnessEstimate, Examples) {
  Engine eng = make_engine(47, "test");
  const Matrix Q = testing::random_psd(4, eng);
  const Vector x = random_vector(4, eng), d = random_vector(4, eng);
  const auto quad = [&](const Vector& v) { return Vector(Q * v); };
  EXPECT_NEAR(smoothness_estimate(quad, x, d, 0.1), (Q * d).norm() / d.norm(), 1e-12);
  const auto quartic = [](const Vector& v) { return Vector::Constant(1, 4 * std::pow(v(0), 3)); };
  EXPECT_NEAR(smoothness_estimate(quartic, Vector::Ones(1), Vector::Ones(1), 0.25), 28.0, 1e-12);
  EXPECT_NEAR(smoothness_estimate(quartic, Vector::Ones(1), Vector::Ones(1), 1.0), 28.0, 1e-12);
  EXPECT_NEAR(smoothness_estimate(quartic, Vector::Ones(1), Vector::Constant(1, 0.5), 1.0),
              std::abs(4 * std::pow(1.5, 3) - 4) / 0.5, 1e-12);
  EXPECT_EQ(smoothness_estimate(quartic, Vector::Ones(1), Vector::Zero(1), 0.25), 0.0);
}

TEST(GapL, Examples) {
  const BlockDomain free = BlockDomain::unconstrained();
  EXPECT_DOUBLE_EQ(gap_L(free, Vector::Zero(2), (Vector(2) << 3, 4).finished(), 1.0), 12.5);
  const BlockDomain ball = BlockDomain::ball_product(2);
  EXPECT_DOUBLE_EQ(gap_L(ball, (Vector(2) << 0.1, 0.2).finished(), Vector::Zero(2), 1.0), 0.0);
  // On the boundary with the descent direction -z along the outward normal, the step is
  // blocked by the ball.
  const Vector theta = (Vector(2) << 1.0, 0.0).finished();
  const Vector z = (Vector(2) << -0.8, 0.0).finished();
  EXPECT_LT(gap_L(ball, theta, z, 1.0), z.squaredNorm() / 2.0);
  BlockDomain set;
  set.kind = BlockDomain::Kind::kConvexSet;
  EXPECT_THROW(gap_L(set, theta, z, 1.0), UsageError);
}

TEST(TheoryPreset, ScalesWithSqrtK) {
  const TheoryPreset t = theory_preset(100, 0.5, 3.0, 1000);
  EXPECT_DOUBLE_EQ(t.rho, 5.0);
  EXPECT_EQ(t.batch, 30u);
  EXPECT_EQ(theory_preset(100, 0.5, 3.0, 20).batch, 20u);
}

}  // namespace
}  // namespace bdc
