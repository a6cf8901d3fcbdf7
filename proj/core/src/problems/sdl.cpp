#include "bdc/problems/sdl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bdc/error.hpp"
#include "bdc/rng.hpp"

namespace bdc {
namespace {

std::vector<Index> top_q(const Vector& x, int Q) {
  std::vector<Index> idx(static_cast<std::size_t>(x.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return std::abs(x(a)) > std::abs(x(b)); });
  idx.resize(static_cast<std::size_t>(Q));
  return idx;
}

void check_q(const Vector& x, int Q) {
  if (Q < 1 || Q > x.size()) throw UsageError("largest-Q norm: Q must be in [1, len(x)]");
}

double spectral_norm_sq(const Matrix& A) {
  // |A|_2^2 = largest eigenvalue of the smaller Gram matrix.
  const Matrix G = A.rows() <= A.cols() ? Matrix(A * A.transpose()) : Matrix(A.transpose() * A);
  if (G.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

Vector sign0(const Vector& x) { return x.unaryExpr([](double v) { return double((v > 0) - (v < 0)); }); }

}  // namespace

const char* to_string(SdlVariant v) { return v == SdlVariant::kL1 ? "l1" : "l1-lq"; }

void SdlInstance::validate() const {
  if (Y.size() == 0) throw UsageError("sdl: empty data matrix");
  if (atoms < 1) throw UsageError("sdl: dictionary size must be >= 1");
  if (alpha < 0.0) throw UsageError("sdl: alpha must be >= 0");
  if (variant == SdlVariant::kL1MinusLq && (Q < 1 || Q > atoms)) throw UsageError("sdl: Q must be in [1, l]");
}

SdlData sdl_synthetic(Index m, Index l, Index n, Index k_nonzero, std::uint64_t seed) {
  if (m < 1 || l < 1 || n < 1) throw UsageError("sdl_synthetic: dimensions must be positive");
  if (k_nonzero < 0 || k_nonzero > l) throw UsageError("sdl_synthetic: k_nonzero must be in [0, l]");
  Engine eng = make_engine(seed, "data");
  std::normal_distribution<double> nd(0.0, 1.0);
  SdlData d;
  d.D_true.resize(m, l);
  for (Index j = 0; j < l; ++j) {
    for (Index r = 0; r < m; ++r) d.D_true(r, j) = nd(eng);
    d.D_true.col(j).normalize();
  }
  d.X_true = Matrix::Zero(l, n);
  std::vector<Index> pos(static_cast<std::size_t>(l));
  for (Index c = 0; c < n; ++c) {
    std::iota(pos.begin(), pos.end(), Index{0});
    for (Index t = 0; t < k_nonzero; ++t) {
      std::uniform_int_distribution<Index> pick(t, l - 1);
      std::swap(pos[static_cast<std::size_t>(t)], pos[static_cast<std::size_t>(pick(eng))]);
    }
    for (Index t = 0; t < k_nonzero; ++t) d.X_true(pos[static_cast<std::size_t>(t)], c) = nd(eng);
  }
  d.Y = d.D_true * d.X_true;
  return d;
}

double lq_norm(const Vector& x, int Q) {
  check_q(x, Q);
  double s = 0.0;
  for (Index j : top_q(x, Q)) s += std::abs(x(j));
  return s;
}

Vector lq_subgrad(const Vector& x, int Q) {
  check_q(x, Q);
  Vector u = Vector::Zero(x.size());
  for (Index j : top_q(x, Q)) u(j) = x(j) < 0.0 ? -1.0 : 1.0;
  return u;
}

Vector soft_threshold(const Vector& z, double lambda) {
  return z.unaryExpr([lambda](double v) {
    const double a = std::abs(v) - lambda;
    return a > 0.0 ? std::copysign(a, v) : 0.0;
  });
}

SdlProblem::SdlProblem(SdlInstance inst) : inst_(std::move(inst)) {
  inst_.validate();
  partition_ = make_partition({inst_.m() * inst_.atoms, inst_.atoms * inst_.n()});
}

Matrix SdlProblem::D(const BlockVector& theta) const {
  return Eigen::Map<const Matrix>(theta.data().data(), inst_.m(), inst_.atoms);
}

Matrix SdlProblem::X(const BlockVector& theta) const {
  return Eigen::Map<const Matrix>(theta.data().data() + partition_->offset(kCodeBlock), inst_.atoms, inst_.n());
}

BlockVector SdlProblem::pack(const Matrix& D, const Matrix& X) const {
  if (D.rows() != inst_.m() || D.cols() != inst_.atoms || X.rows() != inst_.atoms || X.cols() != inst_.n()) {
    throw UsageError("sdl pack: shape mismatch");
  }
  Vector v(partition_->total_dim());
  v.head(D.size()) = Eigen::Map<const Vector>(D.data(), D.size());
  v.tail(X.size()) = Eigen::Map<const Vector>(X.data(), X.size());
  return BlockVector(partition_, std::move(v));
}

double SdlProblem::lq_sum(const Matrix& X) const {
  if (inst_.variant == SdlVariant::kL1) return 0.0;
  double s = 0.0;
  for (Index c = 0; c < X.cols(); ++c) s += lq_norm(X.col(c), inst_.Q);
  return s;
}

double SdlProblem::regularizer(const Matrix& X) const {
  return inst_.alpha * (X.cwiseAbs().sum() - lq_sum(X));
}

double SdlProblem::reconstruction_error(const BlockVector& theta) const {
  return (inst_.Y - D(theta) * X(theta)).squaredNorm();
}

double SdlProblem::eval_f(const BlockVector& theta) const {
  const Matrix Xm = X(theta);
  return 0.5 * (inst_.Y - D(theta) * Xm).squaredNorm() + regularizer(Xm);
}

// Both blocks share g = 1/2 |Y - DX|^2 + alpha |X|_1 and h = alpha [variant] sum |x_i|_Q; on
// the D block the X terms are constants.
double SdlProblem::eval_g(std::size_t i, const BlockVector& theta) const {
  check_block(i);
  const Matrix Xm = X(theta);
  return 0.5 * (inst_.Y - D(theta) * Xm).squaredNorm() + inst_.alpha * Xm.cwiseAbs().sum();
}

double SdlProblem::eval_h(std::size_t i, const BlockVector& theta) const {
  check_block(i);
  return inst_.alpha * lq_sum(X(theta));
}

Vector SdlProblem::grad_g_block(std::size_t i, const BlockVector& theta) const {
  const Matrix Dm = D(theta);
  const Matrix Xm = X(theta);
  const Matrix R = Dm * Xm - inst_.Y;
  if (i == kDictBlock) {
    const Matrix G = R * Xm.transpose();
    return Eigen::Map<const Vector>(G.data(), G.size());
  }
  check_block(i);
  Matrix G = Dm.transpose() * R;
  const Vector flat = Eigen::Map<const Vector>(G.data(), G.size()) +
                      inst_.alpha * sign0(Eigen::Map<const Vector>(Xm.data(), Xm.size()));
  return flat;
}

Vector SdlProblem::subgrad_h_block(std::size_t i, const BlockVector& theta) const {
  if (i == kDictBlock || inst_.variant == SdlVariant::kL1) return Vector::Zero(partition_->dim(i));
  check_block(i);
  const Matrix Xm = X(theta);
  Matrix U(Xm.rows(), Xm.cols());
  for (Index c = 0; c < Xm.cols(); ++c) U.col(c) = inst_.alpha * lq_subgrad(Xm.col(c), inst_.Q);
  return Eigen::Map<const Vector>(U.data(), U.size());
}

BlockDomain SdlProblem::domain(std::size_t i) const {
  if (i == kDictBlock) return BlockDomain::ball_product(inst_.m(), 1.0);
  check_block(i);
  return BlockDomain::unconstrained();
}

Vector SdlProblem::block_residual(std::size_t i, const BlockVector& theta, const Vector& u) const {
  if (i == kDictBlock) return BdcProblem::block_residual(i, theta, u);
  // Minimum-norm element of grad s + alpha d|X|_1 - u.
  const Matrix Dm = D(theta);
  const Matrix Xm = X(theta);
  const Matrix Gs = Dm.transpose() * (Dm * Xm - inst_.Y);
  const Vector w = Eigen::Map<const Vector>(Gs.data(), Gs.size()) - u;
  const Vector x = Eigen::Map<const Vector>(Xm.data(), Xm.size());
  Vector z(w.size());
  for (Index j = 0; j < w.size(); ++j) {
    if (x(j) != 0.0) {
      z(j) = w(j) + inst_.alpha * (x(j) > 0 ? 1.0 : -1.0);
    } else {
      const double a = std::abs(w(j)) - inst_.alpha;
      z(j) = a > 0.0 ? std::copysign(a, w(j)) : 0.0;
    }
  }
  return z;
}

BlockSubproblem SdlProblem::subproblem(std::size_t i, const BlockVector& theta) const {
  BlockSubproblem sp;
  const Index m = inst_.m();
  const Index l = inst_.atoms;
  const Index n = inst_.n();
  const double alpha = inst_.alpha;
  if (i == kDictBlock) {
    const Matrix Xm = X(theta);
    auto gram = std::make_shared<const Matrix>(Xm * Xm.transpose());
    auto yx = std::make_shared<const Matrix>(inst_.Y * Xm.transpose());
    const double c0 = 0.5 * inst_.Y.squaredNorm() + alpha * Xm.cwiseAbs().sum();
    sp.method = InnerMethod::kFrankWolfeBallProduct;
    sp.smooth_value = [=](const Vector& v) {
      const Eigen::Map<const Matrix> Dm(v.data(), m, l);
      return c0 - (Dm.array() * yx->array()).sum() + 0.5 * (Dm.array() * (Dm * *gram).array()).sum();
    };
    sp.smooth_grad = [=](const Vector& v) {
      const Eigen::Map<const Matrix> Dm(v.data(), m, l);
      const Matrix G = Dm * *gram - *yx;
      return Vector(Eigen::Map<const Vector>(G.data(), G.size()));
    };
    sp.hess_vec = [=](const Vector& v) {
      const Eigen::Map<const Matrix> Vm(v.data(), m, l);
      const Matrix H = Vm * *gram;
      return Vector(Eigen::Map<const Vector>(H.data(), H.size()));
    };
    sp.column_dim = m;
    sp.radius = 1.0;
    return sp;
  }
  check_block(i);
  const Matrix Dm = D(theta);
  auto dtd = std::make_shared<const Matrix>(Dm.transpose() * Dm);
  auto dty = std::make_shared<const Matrix>(Dm.transpose() * inst_.Y);
  auto Y = std::make_shared<const Matrix>(inst_.Y);
  auto Dp = std::make_shared<const Matrix>(Dm);
  sp.method = InnerMethod::kProxGradient;
  sp.smooth_value = [=](const Vector& v) {
    const Eigen::Map<const Matrix> Xm(v.data(), l, n);
    return 0.5 * (*Y - *Dp * Xm).squaredNorm();
  };
  sp.smooth_grad = [=](const Vector& v) {
    const Eigen::Map<const Matrix> Xm(v.data(), l, n);
    const Matrix G = *dtd * Xm - *dty;
    return Vector(Eigen::Map<const Vector>(G.data(), G.size()));
  };
  sp.hess_vec = [=](const Vector& v) {
    const Eigen::Map<const Matrix> Vm(v.data(), l, n);
    const Matrix H = *dtd * Vm;
    return Vector(Eigen::Map<const Vector>(H.data(), H.size()));
  };
  sp.nonsmooth_value = [alpha](const Vector& v) { return alpha * v.cwiseAbs().sum(); };
  sp.prox = [alpha](const Vector& v, double t) { return soft_threshold(v, alpha * t); };
  sp.lipschitz = std::max(spectral_norm_sq(Dm), 1e-12);
  return sp;
}

std::shared_ptr<SdlProblem> sdl_problem(SdlInstance inst) { return std::make_shared<SdlProblem>(std::move(inst)); }

BlockVector sdl_initial_point(const SdlProblem& p, std::uint64_t seed) {
  const auto& inst = p.instance();
  Engine eng = make_engine(seed, "init");
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix D(inst.m(), inst.atoms);
  for (Index j = 0; j < D.cols(); ++j) {
    for (Index r = 0; r < D.rows(); ++r) D(r, j) = nd(eng);
    D.col(j).normalize();
  }
  return p.pack(D, Matrix::Zero(inst.atoms, inst.n()));
}

double sparsity(const Matrix& X, double threshold) {
  if (X.size() == 0) return 0.0;
  return static_cast<double>((X.array().abs() <= threshold).count()) / static_cast<double>(X.size());
}

std::pair<Matrix, Matrix> SdlProblem::joint_subgradient(const Matrix& Dm, const Matrix& Xm) const {
  const Matrix R = Dm * Xm - inst_.Y;
  Matrix GD = R * Xm.transpose();
  Matrix GX = Dm.transpose() * R;
  for (Index c = 0; c < Xm.cols(); ++c) {
    Vector s = inst_.alpha * sign0(Xm.col(c));
    if (inst_.variant == SdlVariant::kL1MinusLq) s -= inst_.alpha * lq_subgrad(Xm.col(c), inst_.Q);
    GX.col(c) += s;
  }
  return {GD, GX};
}

GdTrace gd_baseline_sdl(const SdlProblem& p, const BlockVector& theta0, int iters) {
  if (iters < 0) throw UsageError("gd_baseline_sdl: iters must be >= 0");
  GdTrace t;
  t.D = p.D(theta0);
  t.X = p.X(theta0);
  const BlockDomain C = BlockDomain::ball_product(p.instance().m());
  const auto record = [&]() {
    const double rec = (p.instance().Y - t.D * t.X).squaredNorm();
    t.reconstruction.push_back(rec);
    t.objective.push_back(0.5 * rec + p.regularizer(t.X));
    t.sparsity.push_back(sparsity(t.X, 1e-8));
  };
  record();
  for (int k = 0; k < iters; ++k) {
    const double denom = spectral_norm_sq(t.D) + spectral_norm_sq(t.X);
    if (!(denom > 0.0)) throw SolverError("gd_baseline_sdl: step size undefined for D = 0 and X = 0");
    const double eta = 1.0 / denom;
    auto [GD, GX] = p.joint_subgradient(t.D, t.X);
    Matrix Dn = t.D - eta * GD;
    const Vector proj = C.projection(Eigen::Map<const Vector>(Dn.data(), Dn.size()));
    t.D = Eigen::Map<const Matrix>(proj.data(), Dn.rows(), Dn.cols());
    t.X -= eta * GX;
    record();
  }
  return t;
}

}  // namespace bdc
