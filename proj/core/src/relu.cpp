#include "bdc/relu.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "bdc/error.hpp"

namespace bdc {
namespace {

Matrix relu(const Matrix& m) { return m.cwiseMax(0.0); }

Matrix pos_mask(const Matrix& m) { return (m.array() > 0.0).cast<double>().matrix(); }

Matrix add_bias(Matrix m, const Vector& b) {
  m.colwise() += b;
  return m;
}

// Column-wise log-sum-exp and softmax of logits F (C x N).
Vector lse_cols(const Matrix& F) {
  Vector out(F.cols());
  for (Index n = 0; n < F.cols(); ++n) {
    const double mx = F.col(n).maxCoeff();
    out(n) = mx + std::log((F.col(n).array() - mx).exp().sum());
  }
  return out;
}

Matrix softmax_cols(const Matrix& F) {
  Matrix S(F.rows(), F.cols());
  for (Index n = 0; n < F.cols(); ++n) {
    const double mx = F.col(n).maxCoeff();
    Vector e = (F.col(n).array() - mx).exp();
    S.col(n) = e / e.sum();
  }
  return S;
}

Vector flatten_layer(const Matrix& dW, const Vector& db) {
  Vector out(dW.size() + db.size());
  out.head(dW.size()) = Eigen::Map<const Vector>(dW.data(), dW.size());
  out.tail(db.size()) = db;
  return out;
}

// Gradient of sum <pi, sigma(W) P + sigma(-W) M> + <nu, sigma(W) M + sigma(-W) P> in W.
Matrix split_weight_grad(const Matrix& W, const Matrix& pi, const Matrix& nu, const Matrix& P, const Matrix& M) {
  const Matrix pos = (W.array() > 0.0).cast<double>().matrix();
  const Matrix neg = (W.array() < 0.0).cast<double>().matrix();
  return pos.cwiseProduct(pi * P.transpose() + nu * M.transpose()) -
         neg.cwiseProduct(pi * M.transpose() + nu * P.transpose());
}

}  // namespace

void MlpParams::validate() const {
  if (layers.empty()) throw UsageError("mlp: at least one layer required");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].b.size() != layers[l].W.rows()) throw UsageError("mlp: bias length != rows of W");
    if (l > 0 && layers[l].W.cols() != layers[l - 1].W.rows()) {
      throw UsageError("mlp: layer dimensions do not chain");
    }
  }
}

PartitionPtr MlpParams::partition() const {
  std::vector<Index> dims;
  for (const auto& ly : layers) dims.push_back(ly.W.size() + ly.b.size());
  return make_partition(std::move(dims));
}

Vector MlpParams::block(std::size_t l) const { return flatten_layer(layers.at(l).W, layers.at(l).b); }

Vector MlpParams::flatten() const {
  Index total = 0;
  for (const auto& ly : layers) total += ly.W.size() + ly.b.size();
  Vector out(total);
  Index off = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Vector blk = block(l);
    out.segment(off, blk.size()) = blk;
    off += blk.size();
  }
  return out;
}

void MlpParams::set_block(std::size_t l, const Vector& v) {
  Layer& ly = layers.at(l);
  if (v.size() != ly.W.size() + ly.b.size()) throw UsageError("mlp set_block: length mismatch");
  ly.W = Eigen::Map<const Matrix>(v.data(), ly.W.rows(), ly.W.cols());
  ly.b = v.tail(ly.b.size());
}

MlpParams MlpParams::with_data(const Vector& flat) const {
  MlpParams out = *this;
  Index off = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Index d = layers[l].W.size() + layers[l].b.size();
    if (off + d > flat.size()) throw UsageError("mlp with_data: vector too short");
    out.set_block(l, flat.segment(off, d));
    off += d;
  }
  if (off != flat.size()) throw UsageError("mlp with_data: vector too long");
  return out;
}

MlpParams random_mlp(const std::vector<Index>& widths, Engine& eng, double bias_scale) {
  if (widths.size() < 2) throw UsageError("random_mlp: need input and output widths");
  std::normal_distribution<double> nd(0.0, 1.0);
  MlpParams p;
  for (std::size_t l = 1; l < widths.size(); ++l) {
    Layer ly;
    ly.W.resize(widths[l], widths[l - 1]);
    ly.b.resize(widths[l]);
    const double s = std::sqrt(2.0 / static_cast<double>(widths[l - 1]));
    for (Index c = 0; c < ly.W.cols(); ++c) {
      for (Index r = 0; r < ly.W.rows(); ++r) ly.W(r, c) = s * nd(eng);
    }
    for (Index r = 0; r < ly.b.size(); ++r) ly.b(r) = bias_scale * nd(eng);
    p.layers.push_back(std::move(ly));
  }
  return p;
}

Matrix forward_standard(const MlpParams& p, const Matrix& X) {
  p.validate();
  if (X.rows() != p.input_dim()) throw UsageError("forward: input dimension mismatch");
  Matrix a = X;
  for (std::size_t l = 0; l + 1 < p.L(); ++l) a = relu(add_bias(p.layers[l].W * a, p.layers[l].b));
  return add_bias(p.layers.back().W * a, p.layers.back().b);
}

Vector forward_standard(const MlpParams& p, const Vector& x) {
  return forward_standard(p, Matrix(x)).col(0);
}

std::vector<Matrix> standard_activations(const MlpParams& p, const Matrix& X) {
  p.validate();
  std::vector<Matrix> acts{X};
  for (std::size_t l = 0; l + 1 < p.L(); ++l) acts.push_back(relu(add_bias(p.layers[l].W * acts.back(), p.layers[l].b)));
  return acts;
}

void forward_split_from(const MlpParams& p, std::size_t j, const Matrix& X, SplitState& s) {
  const std::size_t L = p.L();
  if (j >= L) throw UsageError("forward_split_from: layer index out of range");
  s.z_plus.resize(L);
  s.z_minus.resize(L);
  s.pre.resize(L);
  for (std::size_t t = j; t < L; ++t) {
    const Matrix& W = p.layers[t].W;
    const Vector& b = p.layers[t].b;
    const Matrix Wp = W.cwiseMax(0.0);
    const Matrix Wm = (-W).cwiseMax(0.0);
    if (t + 1 == L) {
      s.A = add_bias(Wp * s.z_plus[t] + Wm * s.z_minus[t], b.cwiseMax(0.0));
      s.B = add_bias(Wp * s.z_minus[t] + Wm * s.z_plus[t], (-b).cwiseMax(0.0));
    } else if (t == 0) {
      s.pre[1] = add_bias(W * X, b);
      s.z_plus[1] = relu(s.pre[1]);
      s.z_minus[1] = Matrix::Zero(W.rows(), X.cols());
    } else {
      s.pre[t + 1] = add_bias(Wp * s.z_plus[t] + Wm * s.z_minus[t], b);
      s.z_minus[t + 1] = Wp * s.z_minus[t] + Wm * s.z_plus[t];
      s.z_plus[t + 1] = s.pre[t + 1].cwiseMax(s.z_minus[t + 1]);
    }
  }
}

SplitState forward_split(const MlpParams& p, const Matrix& X) {
  p.validate();
  if (X.rows() != p.input_dim()) throw UsageError("forward_split: input dimension mismatch");
  SplitState s;
  s.z_plus.resize(p.L());
  s.z_minus.resize(p.L());
  s.pre.resize(p.L());
  s.z_plus[0] = relu(X);
  s.z_minus[0] = relu(-X);
  forward_split_from(p, 0, X, s);
  return s;
}

SplitState forward_split(const MlpParams& p, const Vector& x) { return forward_split(p, Matrix(x)); }

void check_labels(const MlpParams& p, const Vector& y, LossKind kind) {
  if (kind == LossKind::kMse) {
    if (p.output_dim() != 1) throw UsageError("mse: output dimension must be 1");
    if (y.size() > 0 && y.minCoeff() < 0.0) {
      throw UsageError("mse: labels must be >= 0; shift labels and outputs by max(0, -min y) first");
    }
    return;
  }
  if (p.output_dim() < 2) throw UsageError("cross-entropy: need at least 2 classes");
  for (Index n = 0; n < y.size(); ++n) {
    if (y(n) != std::floor(y(n)) || y(n) < 0 || y(n) >= static_cast<double>(p.output_dim())) {
      throw UsageError("cross-entropy: invalid class index");
    }
  }
}

LossSplit loss_from_state(const SplitState& s, const Vector& y, LossKind kind) {
  LossSplit out;
  if (kind == LossKind::kMse) {
    const auto A = s.A.row(0).transpose().array();
    const auto B = s.B.row(0).transpose().array();
    out.g = 2.0 * (A.square() + (B + y.array()).square()).sum();
    out.h = (A + B + y.array()).square().sum();
    return out;
  }
  const Vector lse = lse_cols(s.F());
  for (Index n = 0; n < s.A.cols(); ++n) {
    const auto c = static_cast<Index>(y(n));
    const double bsum = s.B.col(n).sum();
    out.g += lse(n) + bsum + s.B(c, n);
    out.h += s.A(c, n) + bsum;
  }
  return out;
}

LossSplit loss_bdc(const MlpParams& p, const Matrix& X, const Vector& y, LossKind kind) {
  if (y.size() != X.cols()) throw UsageError("loss: one label per sample required");
  check_labels(p, y, kind);
  return loss_from_state(forward_split(p, X), y, kind);
}

LossSplit mse_bdc(const MlpParams& p, const Matrix& X, const Vector& y) { return loss_bdc(p, X, y, LossKind::kMse); }
LossSplit ce_bdc(const MlpParams& p, const Matrix& X, const Vector& y) {
  return loss_bdc(p, X, y, LossKind::kCrossEntropy);
}

double mse_loss(const MlpParams& p, const Matrix& X, const Vector& y) {
  const Matrix F = forward_standard(p, X);
  return (F.row(0).transpose() - y).squaredNorm();
}

double ce_loss(const MlpParams& p, const Matrix& X, const Vector& y) {
  const Matrix F = forward_standard(p, X);
  const Vector lse = lse_cols(F);
  double acc = 0.0;
  for (Index n = 0; n < F.cols(); ++n) acc += lse(n) - F(static_cast<Index>(y(n)), n);
  return acc;
}

Vector split_block_vjp(const MlpParams& p, const SplitState& s, const Matrix& X, std::size_t j,
                       const Matrix& lambda_A, const Matrix& lambda_B) {
  const std::size_t L = p.L();
  if (j >= L) throw UsageError("block gradient: layer index out of range");
  std::size_t t = L - 1;
  {
    const Matrix& W = p.layers[t].W;
    const Vector& b = p.layers[t].b;
    if (j == t) {
      const Matrix dW = split_weight_grad(W, lambda_A, lambda_B, s.z_plus[t], s.z_minus[t]);
      const Vector sa = lambda_A.rowwise().sum();
      const Vector sb = lambda_B.rowwise().sum();
      const Vector db = (b.array() > 0.0).cast<double>() * sa.array() - (b.array() < 0.0).cast<double>() * sb.array();
      return flatten_layer(dW, db);
    }
  }
  // Adjoints of (Z+, Z-) of the layer feeding layer t.
  Matrix mu_p, mu_m;
  {
    const Matrix& W = p.layers[t].W;
    const Matrix Wp = W.cwiseMax(0.0);
    const Matrix Wm = (-W).cwiseMax(0.0);
    mu_p = Wp.transpose() * lambda_A + Wm.transpose() * lambda_B;
    mu_m = Wm.transpose() * lambda_A + Wp.transpose() * lambda_B;
  }
  while (t-- > j) {
    // Now t indexes the hidden layer producing z[t + 1] from z[t].
    const Matrix& W = p.layers[t].W;
    if (t == 0) {
      const Matrix dq = mu_p.cwiseProduct(pos_mask(s.pre[1]));
      return flatten_layer(dq * X.transpose(), dq.rowwise().sum());
    }
    const Matrix take_p = (s.pre[t + 1].array() >= s.z_minus[t + 1].array()).cast<double>().matrix();
    const Matrix pi = mu_p.cwiseProduct(take_p);
    const Matrix nu = mu_m + mu_p - pi;
    if (t == j) {
      return flatten_layer(split_weight_grad(W, pi, nu, s.z_plus[t], s.z_minus[t]), pi.rowwise().sum());
    }
    const Matrix Wp = W.cwiseMax(0.0);
    const Matrix Wm = (-W).cwiseMax(0.0);
    mu_p = Wp.transpose() * pi + Wm.transpose() * nu;
    mu_m = Wm.transpose() * pi + Wp.transpose() * nu;
  }
  throw UsageError("block gradient: unreachable layer");
}

BlockGrads block_grads_from_state(const MlpParams& p, const SplitState& s, const Matrix& X, const Vector& y,
                                  LossKind kind, std::size_t l) {
  BlockGrads out;
  const Index C = s.A.rows();
  const Index N = s.A.cols();
  if (kind == LossKind::kMse) {
    const Matrix Y = y.transpose();
    const Matrix lam_h = 2.0 * (s.A + s.B + Y);
    out.g = split_block_vjp(p, s, X, l, 4.0 * s.A, 4.0 * (s.B + Y));
    out.h = split_block_vjp(p, s, X, l, lam_h, lam_h);
    return out;
  }
  const Matrix S = softmax_cols(s.F());
  Matrix onehot = Matrix::Zero(C, N);
  for (Index n = 0; n < N; ++n) onehot(static_cast<Index>(y(n)), n) = 1.0;
  // g = max_u <u, A> + <1 - u, B> - Ent(u) + B_y: adjoints (u*, 1 - u* + e_y).
  out.g = split_block_vjp(p, s, X, l, S, Matrix::Ones(C, N) - S + onehot);
  out.h = split_block_vjp(p, s, X, l, onehot, Matrix::Ones(C, N));
  return out;
}

BlockGrads block_grads(const MlpParams& p, const Matrix& X, const Vector& y, LossKind kind, std::size_t l) {
  if (y.size() != X.cols()) throw UsageError("block gradient: one label per sample required");
  check_labels(p, y, kind);
  return block_grads_from_state(p, forward_split(p, X), X, y, kind, l);
}

Vector block_grad_g(const MlpParams& p, const Matrix& X, const Vector& y, LossKind kind, std::size_t l) {
  return block_grads(p, X, y, kind, l).g;
}

Vector block_subgrad_h(const MlpParams& p, const Matrix& X, const Vector& y, LossKind kind, std::size_t l) {
  return block_grads(p, X, y, kind, l).h;
}

void write_checkpoint(const MlpParams& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open " + path.string() + " for writing");
  out << "# shapes:";
  for (std::size_t l = 0; l < p.L(); ++l) {
    out << (l ? "; " : " ") << p.layers[l].W.rows() << "x" << p.layers[l].W.cols() << "+" << p.layers[l].b.size();
  }
  out << "\n" << to_csv_row(p.flatten()) << "\n";
}

MlpParams read_checkpoint(const MlpParams& shape_template, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    return shape_template.with_data(from_csv_row(line));
  }
  throw UsageError("checkpoint " + path.string() + " has no data row");
}

}  // namespace bdc
