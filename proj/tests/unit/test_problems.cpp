#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bdc/error.hpp"
#include "bdc/problems/cp.hpp"
#include "bdc/problems/mlp_task.hpp"
#include "bdc/problems/quadratic_pwl.hpp"
#include "bdc/problems/sdl.hpp"
#include "bdc/solver.hpp"
#include "test_support.hpp"

namespace bdc {
namespace {

using testing::random_vector;

// ---- sparse dictionary learning ------------------------------------------------------

TEST(SdlSynthetic, DefaultsHaveTrueSparsity) {
  for (std::uint64_t seed : {0u, 1u, 7u}) {
    const SdlData d = sdl_synthetic(10, 32, 100, 5, seed);
    EXPECT_DOUBLE_EQ(sparsity(d.X_true), 1.0 - 5.0 / 32.0);
    EXPECT_DOUBLE_EQ(sparsity(d.X_true), 0.84375);
    for (Index j = 0; j < 32; ++j) EXPECT_NEAR(d.D_true.col(j).norm(), 1.0, 1e-14);
    for (Index c = 0; c < 100; ++c) EXPECT_EQ((d.X_true.col(c).array() != 0.0).count(), 5);
    EXPECT_LE((d.Y - d.D_true * d.X_true).norm(), 1e-12);
    Eigen::FullPivLU<Matrix> lu(d.Y);
    EXPECT_LE(lu.rank(), 10);
  }
}

TEST(SdlSynthetic, DeterministicAndDenseWhenFull) {
  EXPECT_EQ(sdl_synthetic(4, 6, 5, 2, 3).Y, sdl_synthetic(4, 6, 5, 2, 3).Y);
  EXPECT_NE(sdl_synthetic(4, 6, 5, 2, 3).Y, sdl_synthetic(4, 6, 5, 2, 4).Y);
  EXPECT_DOUBLE_EQ(sparsity(sdl_synthetic(4, 6, 5, 6, 3).X_true), 0.0);
  EXPECT_THROW(sdl_synthetic(4, 6, 5, 7, 3), UsageError);
}

TEST(LqNorm, Examples) {
  const Vector x = (Vector(3) << 3, -1, 2).finished();
  EXPECT_DOUBLE_EQ(lq_norm(x, 2), 5.0);
  EXPECT_EQ(lq_subgrad(x, 2), (Vector(3) << 1, 0, 1).finished());
  EXPECT_DOUBLE_EQ(lq_norm(x, 3), x.cwiseAbs().sum());
  EXPECT_EQ(lq_subgrad(x, 3), (Vector(3) << 1, -1, 1).finished());
  EXPECT_DOUBLE_EQ(lq_norm(Vector::Zero(4), 2), 0.0);
  EXPECT_EQ(lq_subgrad(Vector::Zero(4), 2), (Vector(4) << 1, 1, 0, 0).finished());
  EXPECT_THROW(lq_norm(x, 0), UsageError);
  EXPECT_THROW(lq_subgrad(x, 4), UsageError);
}

TEST(LqNorm, MatchesSortingAndSubgradientInequality) {
  Engine eng = make_engine(50, "test");
  for (int t = 0; t < 1000; ++t) {
    const int Q = 1 + t % 5;
    const Vector x = random_vector(6, eng), y = random_vector(6, eng);
    std::vector<double> a(6);
    for (Index j = 0; j < 6; ++j) a[static_cast<std::size_t>(j)] = std::abs(x(j));
    std::sort(a.rbegin(), a.rend());
    EXPECT_NEAR(lq_norm(x, Q), std::accumulate(a.begin(), a.begin() + Q, 0.0), 1e-14);
    EXPECT_GE(lq_norm(y, Q), lq_norm(x, Q) + lq_subgrad(x, Q).dot(y - x) - 1e-10);
  }
}

TEST(SoftThreshold, ScalarFormula) {
  const Vector z = (Vector(4) << 3, -0.5, 1, -2).finished();
  EXPECT_EQ(soft_threshold(z, 1.0), (Vector(4) << 2, 0, 0, -1).finished());
}

double sdl_direct_objective(const SdlInstance& inst, const Matrix& D, const Matrix& X) {
  double reg = X.cwiseAbs().sum();
  if (inst.variant == SdlVariant::kL1MinusLq) {
    for (Index c = 0; c < X.cols(); ++c) reg -= lq_norm(X.col(c), inst.Q);
  }
  return 0.5 * (inst.Y - D * X).squaredNorm() + inst.alpha * reg;
}

TEST(SdlProblem, DecompositionMatchesObjective) {
  const SdlData d = sdl_synthetic(5, 8, 10, 2, 6);
  Engine eng = make_engine(51, "test");
  for (SdlVariant v : {SdlVariant::kL1, SdlVariant::kL1MinusLq}) {
    const SdlInstance inst{d.Y, 8, 0.3, 3, v};
    const auto p = sdl_problem(inst);
    for (int t = 0; t < 20; ++t) {
      const Matrix D = Matrix::Random(5, 8), X = Matrix::Random(8, 10);
      const BlockVector theta = p->pack(D, X);
      const double f = sdl_direct_objective(inst, D, X);
      EXPECT_NEAR(p->eval_f(theta), f, 1e-10 * (1 + f));
      for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(p->eval_g(i, theta) - p->eval_h(i, theta), f, 1e-10 * (1 + f));
      double lq = 0.0;
      for (Index c = 0; c < X.cols(); ++c) lq += lq_norm(X.col(c), inst.Q);
      const double h_expected = v == SdlVariant::kL1 ? 0.0 : inst.alpha * lq;
      for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(p->eval_h(i, theta), h_expected, 1e-12 * (1 + lq));
    }
  }
}

TEST(SdlProblem, ZeroAlphaIsAlternatingLeastSquares) {
  const SdlData d = sdl_synthetic(5, 6, 12, 2, 7);
  const auto p = sdl_problem({d.Y, 6, 0.0, 2, SdlVariant::kL1MinusLq});
  const BlockVector theta = p->pack(d.D_true, Matrix::Zero(6, 12));
  EXPECT_DOUBLE_EQ(p->eval_h(SdlProblem::kCodeBlock, theta), 0.0);
  // Exact block minimization over X is the least-squares solve.
  const StepResult r = bdca_step(*p, theta, SdlProblem::kCodeBlock, 5000, 1e-13);
  const Matrix X = Eigen::Map<const Matrix>(r.x.data(), 6, 12);
  const Matrix Xls = d.D_true.colPivHouseholderQr().solve(d.Y);
  EXPECT_NEAR((d.Y - d.D_true * X).squaredNorm(), (d.Y - d.D_true * Xls).squaredNorm(), 1e-8);
}

TEST(SdlProblem, DictionaryUpdatesStayFeasible) {
  const SdlData d = sdl_synthetic(6, 10, 30, 3, 8);
  const auto p = sdl_problem({d.Y, 10, 0.1, 5, SdlVariant::kL1MinusLq});
  SolverConfig cfg;
  cfg.K = 40;
  cfg.rho = 1e-3;
  cfg.inner_budget = 20;
  cfg.block_rule = BlockRule::kCyclic;
  double worst = 0.0;
  run(*p, sdl_initial_point(*p, 8), cfg, [&](const IterRecord&, const BlockVector&, const BlockVector& after) {
    const Matrix D = p->D(after);
    for (Index j = 0; j < D.cols(); ++j) worst = std::max(worst, D.col(j).norm());
  });
  EXPECT_LE(worst, 1.0 + 1e-10);
}

TEST(SdlProblem, CodeBlockSubproblemProducesExactZeros) {
  const SdlData d = sdl_synthetic(6, 10, 30, 3, 9);
  const auto p = sdl_problem({d.Y, 10, 0.5, 5, SdlVariant::kL1});
  const StepResult r = bdca_step(*p, p->pack(d.D_true, Matrix::Zero(10, 30)), SdlProblem::kCodeBlock, 200, 1e-10);
  EXPECT_GT((r.x.array() == 0.0).count(), 0);
}

TEST(GdBaseline, ZeroGradientIsFixedPoint) {
  const SdlData d = sdl_synthetic(4, 5, 6, 2, 10);
  const auto p = sdl_problem({Matrix::Zero(4, 6), 5, 0.1, 2, SdlVariant::kL1});
  const BlockVector theta = p->pack(d.D_true, Matrix::Zero(5, 6));
  const GdTrace t = gd_baseline_sdl(*p, theta, 5);
  ASSERT_EQ(t.objective.size(), 6u);
  EXPECT_LE((t.D - d.D_true).norm(), 1e-14);
  EXPECT_EQ(t.X, Matrix::Zero(5, 6));
}

TEST(GdBaseline, StepsAreFiniteAndFeasible) {
  const SdlData d = sdl_synthetic(6, 8, 20, 3, 11);
  const auto p = sdl_problem({d.Y, 8, 0.1, 3, SdlVariant::kL1MinusLq});
  const GdTrace t = gd_baseline_sdl(*p, sdl_initial_point(*p, 11), 50);
  for (double f : t.objective) EXPECT_TRUE(std::isfinite(f));
  for (Index j = 0; j < t.D.cols(); ++j) EXPECT_LE(t.D.col(j).norm(), 1.0 + 1e-12);
  EXPECT_LT(t.objective.back(), t.objective.front());
}

// ---- CP tensor ALS -------------------------------------------------------------------

TEST(CpProblem, RankOneRecoveredInOneSweep) {
  const auto [T, truth] = cp_random_exact({4, 5, 6}, 1, 3);
  const auto p = cp_problem(T, 1);
  SolverConfig cfg;
  cfg.K = 3;
  cfg.algorithm = Algorithm::kBdca;
  cfg.block_rule = BlockRule::kCyclic;
  cfg.inner_budget = 1;
  const IterTrace t = run(*p, cp_initial_point(*p, 3), cfg);
  EXPECT_LE(p->relative_error(BlockVector(p->partition(), t.final_theta)), 1e-10);
}

TEST(CpProblem, BlockSolveIsOptimalAndMonotone) {
  const auto [T, truth] = cp_random_exact({4, 5, 6}, 2, 4);
  const auto p = cp_problem(T, 2);
  BlockVector theta = cp_initial_point(*p, 4);
  double prev = p->eval_f(theta);
  for (int k = 0; k < 30; ++k) {
    const std::size_t i = static_cast<std::size_t>(k % 3);
    const StepResult r = bdca_step(*p, theta, i, 1, 1e-12);
    theta = replace_block(theta, i, r.x);
    EXPECT_LE(p->grad_g_block(i, theta).norm(), 1e-8 * (1 + p->eval_f(theta)));
    const double f = p->eval_f(theta);
    EXPECT_LE(f, prev + 1e-12 * (1 + prev));
    prev = f;
    EXPECT_DOUBLE_EQ(p->eval_h(i, theta), 0.0);
  }
}

TEST(CpProblem, ReconstructionAndValidation) {
  Matrix A(2, 1), B(3, 1);
  A << 1, 2;
  B << 1, 0, -1;
  const DenseTensor T = cp_reconstruct({A, B});
  EXPECT_EQ(T.dims, (std::vector<Index>{2, 3}));
  // First index fastest: T(i, j) = A_i B_j.
  EXPECT_DOUBLE_EQ(T.data(1), 2.0);
  EXPECT_DOUBLE_EQ(T.data(4), -1.0);
  EXPECT_THROW(cp_problem(DenseTensor({4, 40}), 2), UsageError);
  EXPECT_THROW(cp_problem(DenseTensor({4, 4}), 0), UsageError);
  EXPECT_THROW(cp_problem(DenseTensor({2, 2, 2, 2, 2}), 1), UsageError);
}

// ---- MLP tasks -----------------------------------------------------------------------

MlpTaskProblem linear_task(Engine& eng, MlpDataset& data) {
  data.kind = LossKind::kMse;
  data.X.resize(3, 40);
  for (Index j = 0; j < 40; ++j) data.X.col(j) = random_vector(3, eng);
  const Vector w_true = (Vector(3) << 0.5, -1.0, 2.0).finished();
  data.y = (data.X.transpose() * w_true).array() + 5.0 + random_vector(40, eng, 0.1).array();
  shift_labels(data);
  return *mlp_task_problem(random_mlp({3, 1}, eng, 0.5), data);
}

Vector normal_equations(const MlpDataset& data) {
  Matrix Z(data.X.cols(), data.X.rows() + 1);
  Z.leftCols(data.X.rows()) = data.X.transpose();
  Z.col(data.X.rows()).setOnes();
  return Z.colPivHouseholderQr().solve(data.y);
}

TEST(MlpTask, LinearNetReachesLeastSquaresWithinSignPattern) {
  Engine eng = make_engine(52, "test");
  MlpDataset data;
  const MlpTaskProblem p = linear_task(eng, data);
  const Vector ls = normal_equations(data);
  // Same signs as the minimizer: the split is smooth along the path, so BDCA solves least squares.
  const Vector start = ls.array() * (1.0 + 0.5 * random_vector(4, eng).array().abs());
  SolverConfig cfg;
  cfg.K = 100;
  cfg.algorithm = Algorithm::kBdca;
  cfg.inner_budget = 20000;
  cfg.inner_tol = 1e-14;
  const IterTrace t = run(p, BlockVector(p.partition(), start), cfg);
  EXPECT_LE((t.final_theta - ls).norm(), 1e-6);
}

TEST(MlpTask, ZeroWeightsAreCriticalForSignSplit) {
  Engine eng = make_engine(52, "test");
  MlpDataset data;
  const MlpTaskProblem p = linear_task(eng, data);
  Vector start = normal_equations(data);
  start(1) = 0.0;
  SolverConfig cfg;
  cfg.K = 50;
  cfg.algorithm = Algorithm::kBdca;
  cfg.inner_budget = 2000;
  const IterTrace t = run(p, BlockVector(p.partition(), start), cfg);
  EXPECT_EQ(t.final_theta(1), 0.0);
}

TEST(MlpTask, DecompositionEqualsBatchLoss) {
  Engine eng = make_engine(53, "test");
  const MlpParams shape = random_mlp({2, 6, 3}, eng, 0.2);
  const auto p = mlp_task_problem(shape, gaussian_blobs(30, 3, 1));
  for (int t = 0; t < 10; ++t) {
    const BlockVector theta(p->partition(), random_vector(p->partition()->total_dim(), eng));
    const SampleHandle s = draw_minibatch(30, 7, 2, static_cast<std::uint64_t>(t));
    const double f = p->eval_f(theta, s);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(p->eval_g(i, theta, s) - p->eval_h(i, theta, s), f, 1e-9 * (1 + f));
    Matrix X(2, 7);
    Vector y(7);
    for (std::size_t k = 0; k < 7; ++k) {
      X.col(static_cast<Index>(k)) = p->data().X.col(static_cast<Index>(s.indices[k]));
      y(static_cast<Index>(k)) = p->data().y(static_cast<Index>(s.indices[k]));
    }
    EXPECT_NEAR(f, ce_loss(p->params(theta), X, y) / 7.0, 1e-12 * (1 + f));
  }
}

TEST(MlpTask, DatasetsAndLabelShift) {
  const MlpDataset sine = sine_regression(50, 3);
  EXPECT_GE(sine.y.minCoeff(), 0.0);
  EXPECT_EQ(sine.kind, LossKind::kMse);
  MlpDataset neg;
  neg.kind = LossKind::kMse;
  neg.X = Matrix::Zero(1, 3);
  neg.y = (Vector(3) << -2.0, 1.0, 0.5).finished();
  shift_labels(neg);
  EXPECT_DOUBLE_EQ(neg.label_shift, 2.0);
  EXPECT_EQ(neg.y, (Vector(3) << 0.0, 3.0, 2.5).finished());
  const MlpDataset blobs = gaussian_blobs(30, 3, 3);
  EXPECT_EQ(blobs.kind, LossKind::kCrossEntropy);
  EXPECT_DOUBLE_EQ(blobs.y.maxCoeff(), 2.0);
  EXPECT_THROW(gaussian_blobs(30, 1, 3), UsageError);
}

// ---- quadratic plus piecewise-linear -------------------------------------------------

TEST(QuadraticPwl, ClosedFormSubproblemMinimizesSurrogate) {
  const auto p = random_quadratic_pwl({3, 2, 4}, 8, 0.6, 5);
  Engine eng = make_engine(54, "test");
  const BlockVector theta(p->partition(), random_vector(9, eng));
  for (std::size_t i = 0; i < 3; ++i) {
    const StepResult r = prox_bdca_step(*p, theta, i, 0.3, 1, 1e-12);
    const Vector u = p->subgrad_h_block(i, theta);
    const BlockVector next = replace_block(theta, i, r.x);
    const Vector stationarity = p->grad_g_block(i, next) - u + 0.3 * (r.x - extract_block(theta, i));
    EXPECT_LE(stationarity.norm(), 1e-10);
    EXPECT_GT(p->block_lipschitz(i), 1.0 - 1e-12);
  }
}

}  // namespace
}  // namespace bdc
