#include "bdc/problems/cp.hpp"

#include <random>

#include "bdc/error.hpp"
#include "bdc/rng.hpp"

namespace bdc {
namespace {

// Advances a first-index-fastest multi-index; false after the last entry.
bool next_multi(std::vector<Index>& idx, const std::vector<Index>& dims) {
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (++idx[j] < dims[j]) return true;
    idx[j] = 0;
  }
  return false;
}

}  // namespace

DenseTensor::DenseTensor(std::vector<Index> d) : dims(std::move(d)) { data = Vector::Zero(numel()); }

Index DenseTensor::numel() const {
  Index n = 1;
  for (Index d : dims) n *= d;
  return n;
}

DenseTensor cp_reconstruct(const std::vector<Matrix>& factors) {
  if (factors.empty()) throw UsageError("cp_reconstruct: no factors");
  const Index r = factors.front().cols();
  std::vector<Index> dims;
  for (const auto& A : factors) {
    if (A.cols() != r) throw UsageError("cp_reconstruct: factors disagree on rank");
    dims.push_back(A.rows());
  }
  DenseTensor T(dims);
  std::vector<Index> idx(dims.size(), 0);
  Index lin = 0;
  do {
    double v = 0.0;
    for (Index c = 0; c < r; ++c) {
      double prod = 1.0;
      for (std::size_t j = 0; j < factors.size(); ++j) prod *= factors[j](idx[j], c);
      v += prod;
    }
    T.data(lin++) = v;
  } while (next_multi(idx, dims));
  return T;
}

std::pair<DenseTensor, std::vector<Matrix>> cp_random_exact(const std::vector<Index>& dims, Index rank,
                                                            std::uint64_t seed) {
  Engine eng = make_engine(seed, "data");
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<Matrix> factors;
  for (Index d : dims) {
    Matrix A(d, rank);
    for (Index c = 0; c < rank; ++c) {
      for (Index r = 0; r < d; ++r) A(r, c) = nd(eng);
    }
    factors.push_back(std::move(A));
  }
  return {cp_reconstruct(factors), factors};
}

CpProblem::CpProblem(DenseTensor T, Index rank) : T_(std::move(T)), rank_(rank) {
  std::vector<Index> bd;
  for (Index d : T_.dims) bd.push_back(d * rank_);
  partition_ = make_partition(std::move(bd));
}

std::vector<Matrix> CpProblem::factors(const BlockVector& theta) const {
  std::vector<Matrix> F;
  for (std::size_t i = 0; i < T_.order(); ++i) {
    F.push_back(Eigen::Map<const Matrix>(theta.data().data() + partition_->offset(i), T_.dims[i], rank_));
  }
  return F;
}

Matrix CpProblem::mttkrp(const std::vector<Matrix>& F, std::size_t i) const {
  Matrix M = Matrix::Zero(T_.dims[i], rank_);
  std::vector<Index> idx(T_.order(), 0);
  Index lin = 0;
  Vector w(rank_);
  do {
    const double t = T_.data(lin++);
    w.setConstant(t);
    for (std::size_t j = 0; j < F.size(); ++j) {
      if (j != i) w.array() *= F[j].row(idx[j]).transpose().array();
    }
    M.row(idx[i]) += w.transpose();
  } while (next_multi(idx, T_.dims));
  return M;
}

Matrix CpProblem::gamma(const std::vector<Matrix>& F, std::size_t i) const {
  Matrix G = Matrix::Ones(rank_, rank_);
  for (std::size_t j = 0; j < F.size(); ++j) {
    if (j != i) G.array() *= (F[j].transpose() * F[j]).array();
  }
  return G;
}

double CpProblem::eval_f(const BlockVector& theta) const {
  return 0.5 * (T_.data - cp_reconstruct(factors(theta)).data).squaredNorm();
}

double CpProblem::eval_g(std::size_t i, const BlockVector& theta) const {
  partition_->offset(i);
  return eval_f(theta);
}

double CpProblem::eval_h(std::size_t i, const BlockVector& /*theta*/) const {
  partition_->offset(i);
  return 0.0;
}

Vector CpProblem::grad_g_block(std::size_t i, const BlockVector& theta) const {
  const auto F = factors(theta);
  const Matrix G = F.at(i) * gamma(F, i) - mttkrp(F, i);
  return Eigen::Map<const Vector>(G.data(), G.size());
}

Vector CpProblem::subgrad_h_block(std::size_t i, const BlockVector& /*theta*/) const {
  return Vector::Zero(partition_->dim(i));
}

BlockSubproblem CpProblem::subproblem(std::size_t i, const BlockVector& theta) const {
  BlockSubproblem sp;
  sp.method = InnerMethod::kClosedForm;
  auto base = std::make_shared<const BlockVector>(theta);
  sp.smooth_value = [this, i, base](const Vector& x) { return eval_f(replace_block(*base, i, x)); };
  sp.smooth_grad = [this, i, base](const Vector& x) { return grad_g_block(i, replace_block(*base, i, x)); };
  const auto F = factors(theta);
  auto M = std::make_shared<const Matrix>(mttkrp(F, i));
  auto G = std::make_shared<const Matrix>(gamma(F, i));
  const Index rows = T_.dims[i];
  const Index r = rank_;
  sp.closed_form = [M, G, rows, r](const Vector& u, double rho, const Vector& anchor) {
    const Matrix rhs = *M + Eigen::Map<const Matrix>(u.data(), rows, r) +
                       rho * Eigen::Map<const Matrix>(anchor.data(), rows, r);
    const Matrix A = *G + rho * Matrix::Identity(r, r);
    // A is symmetric, so X A = rhs  <=>  A X^T = rhs^T.
    const Matrix X = A.completeOrthogonalDecomposition().solve(rhs.transpose()).transpose();
    return Vector(Eigen::Map<const Vector>(X.data(), X.size()));
  };
  return sp;
}

double CpProblem::relative_error(const BlockVector& theta) const {
  const double tn = T_.data.norm();
  const double e = (T_.data - cp_reconstruct(factors(theta)).data).norm();
  return tn > 0.0 ? e / tn : e;
}

std::shared_ptr<CpProblem> cp_problem(DenseTensor T, Index rank) {
  if (T.order() < 2 || T.order() > 4) throw UsageError("cp: tensor order must be in [2, 4]");
  for (Index d : T.dims) {
    if (d < 1 || d > 32) throw UsageError("cp: every dimension must be in [1, 32]");
  }
  if (T.data.size() != T.numel()) throw UsageError("cp: tensor data length does not match dims");
  if (rank < 1) throw UsageError("cp: rank must be >= 1");
  return std::make_shared<CpProblem>(std::move(T), rank);
}

BlockVector cp_initial_point(const CpProblem& p, std::uint64_t seed) {
  Engine eng = make_engine(seed, "init");
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector v(p.partition()->total_dim());
  for (Index j = 0; j < v.size(); ++j) v(j) = nd(eng);
  return BlockVector(p.partition(), std::move(v));
}

}  // namespace bdc
