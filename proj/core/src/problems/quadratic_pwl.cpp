#include "bdc/problems/quadratic_pwl.hpp"

#include <random>

#include "bdc/error.hpp"
#include "bdc/rng.hpp"

namespace bdc {

QuadraticPwlProblem::QuadraticPwlProblem(Matrix Q, Vector q, Matrix A, Vector beta, double lambda,
                                         std::vector<Index> block_dims)
    : Q_(std::move(Q)), q_(std::move(q)), A_(std::move(A)), beta_(std::move(beta)), lambda_(lambda) {
  partition_ = make_partition(std::move(block_dims));
  const Index d = partition_->total_dim();
  if (Q_.rows() != d || Q_.cols() != d || q_.size() != d || A_.cols() != d || A_.rows() != beta_.size()) {
    throw UsageError("quadratic_pwl: shape mismatch");
  }
  if (lambda_ < 0.0) throw UsageError("quadratic_pwl: lambda must be >= 0");
}

double QuadraticPwlProblem::eval_f(const BlockVector& theta) const {
  const Vector& x = theta.data();
  return 0.5 * x.dot(Q_ * x) + q_.dot(x) - lambda_ * (A_ * x - beta_).cwiseAbs().sum();
}

double QuadraticPwlProblem::eval_g(std::size_t i, const BlockVector& theta) const {
  partition_->offset(i);
  const Vector& x = theta.data();
  return 0.5 * x.dot(Q_ * x) + q_.dot(x);
}

double QuadraticPwlProblem::eval_h(std::size_t i, const BlockVector& theta) const {
  partition_->offset(i);
  return lambda_ * (A_ * theta.data() - beta_).cwiseAbs().sum();
}

Vector QuadraticPwlProblem::grad_g_block(std::size_t i, const BlockVector& theta) const {
  const Index o = partition_->offset(i);
  const Index d = partition_->dim(i);
  return Q_.middleRows(o, d) * theta.data() + q_.segment(o, d);
}

Vector QuadraticPwlProblem::subgrad_h_block(std::size_t i, const BlockVector& theta) const {
  const Index o = partition_->offset(i);
  const Index d = partition_->dim(i);
  const Vector r = A_ * theta.data() - beta_;
  const Vector s = r.unaryExpr([](double v) { return double((v > 0) - (v < 0)); });
  return lambda_ * A_.middleCols(o, d).transpose() * s;
}

double QuadraticPwlProblem::block_lipschitz(std::size_t i) const {
  const Index o = partition_->offset(i);
  const Index d = partition_->dim(i);
  Eigen::SelfAdjointEigenSolver<Matrix> es(Q_.block(o, o, d, d), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

BlockSubproblem QuadraticPwlProblem::subproblem(std::size_t i, const BlockVector& theta) const {
  const Index o = partition_->offset(i);
  const Index d = partition_->dim(i);
  // g_i(x) = 1/2 x^T Q_ii x + c^T x + const with c = q_i + Q_{i,~i} theta_~i.
  const Vector others = complement(theta, i).data();
  auto Qii = std::make_shared<const Matrix>(Q_.block(o, o, d, d));
  const Vector c = q_.segment(o, d) + Q_.middleRows(o, d) * others;
  const double c0 = 0.5 * others.dot(Q_ * others) + q_.dot(others);
  BlockSubproblem sp;
  sp.method = InnerMethod::kClosedForm;
  sp.smooth_value = [Qii, c, c0](const Vector& x) { return 0.5 * x.dot(*Qii * x) + c.dot(x) + c0; };
  sp.smooth_grad = [Qii, c](const Vector& x) { return Vector(*Qii * x + c); };
  sp.hess_vec = [Qii](const Vector& v) { return Vector(*Qii * v); };
  sp.lipschitz = block_lipschitz(i);
  sp.closed_form = [Qii, c, d](const Vector& u, double rho, const Vector& anchor) {
    const Matrix H = *Qii + rho * Matrix::Identity(d, d);
    return Vector(H.llt().solve(u + rho * anchor - c));
  };
  return sp;
}

std::shared_ptr<QuadraticPwlProblem> random_quadratic_pwl(const std::vector<Index>& block_dims, Index pieces,
                                                          double lambda, std::uint64_t seed) {
  Index d = 0;
  for (Index b : block_dims) d += b;
  Engine eng = make_engine(seed, "data");
  std::normal_distribution<double> nd(0.0, 1.0);
  const auto gauss = [&](Index r, Index c) {
    Matrix M(r, c);
    for (Index j = 0; j < c; ++j) {
      for (Index k = 0; k < r; ++k) M(k, j) = nd(eng);
    }
    return M;
  };
  const Matrix M = gauss(d, d) / std::sqrt(static_cast<double>(d));
  Matrix Q = M.transpose() * M + Matrix::Identity(d, d);
  const Vector q = gauss(d, 1).col(0);
  const Matrix A = gauss(pieces, d) / std::sqrt(static_cast<double>(d));
  const Vector beta = gauss(pieces, 1).col(0);
  return std::make_shared<QuadraticPwlProblem>(std::move(Q), q, A, beta, lambda, block_dims);
}

}  // namespace bdc
