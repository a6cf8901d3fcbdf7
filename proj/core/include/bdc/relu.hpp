#pragma once

#include <filesystem>
#include <vector>

#include "bdc/block.hpp"
#include "bdc/rng.hpp"

namespace bdc {

struct Layer {
  Matrix W;  // d_l x d_{l-1}
  Vector b;  // d_l
};

/// ReLU MLP F(x) = W_L a_{L-1} + b_L with a_0 = x, a_l = relu(W_l a_{l-1} + b_l).
/// Block l (0-based) of the flattened parameter vector is vec(W_l) (column-major) then b_l.
struct MlpParams {
  std::vector<Layer> layers;

  std::size_t L() const { return layers.size(); }
  Index input_dim() const { return layers.front().W.cols(); }
  Index output_dim() const { return layers.back().W.rows(); }
  /// Throws UsageError unless consecutive layer shapes chain.
  void validate() const;

  PartitionPtr partition() const;
  Vector flatten() const;
  Vector block(std::size_t l) const;
  void set_block(std::size_t l, const Vector& v);
  /// Same shapes, parameters read from a flat vector.
  MlpParams with_data(const Vector& flat) const;
};

/// Layer widths (d_0, ..., d_L); He-style Gaussian weights, zero biases.
MlpParams random_mlp(const std::vector<Index>& widths, Engine& eng, double bias_scale = 0.0);

/// Split activations for a batch (columns are samples). Index l = 1..L-1 holds hidden
/// layer l; index 0 holds (x+, x-), the source of the output layer when L = 1.
struct SplitState {
  std::vector<Matrix> z_plus;
  std::vector<Matrix> z_minus;
  std::vector<Matrix> pre;  // p_l; for l = 1 the pre-activation W_1 x + b_1
  Matrix A;
  Matrix B;

  Matrix F() const { return A - B; }
};

Matrix forward_standard(const MlpParams& p, const Matrix& X);
Vector forward_standard(const MlpParams& p, const Vector& x);
/// Hidden activations a_1..a_{L-1} of the standard network (index 0 holds x).
std::vector<Matrix> standard_activations(const MlpParams& p, const Matrix& X);

SplitState forward_split(const MlpParams& p, const Matrix& X);
SplitState forward_split(const MlpParams& p, const Vector& x);

/// Recomputes layers l..L-1 (0-based block l) of `state` in place, reusing the cached
/// split of layer l-1. Only parameters of layers >= l may differ from those that produced
/// the cache.
void forward_split_from(const MlpParams& p, std::size_t l, const Matrix& X, SplitState& state);

enum class LossKind { kMse, kCrossEntropy };

struct LossSplit {
  double g = 0.0;
  double h = 0.0;
  double loss() const { return g - h; }
};

/// Batch-summed losses. MSE needs C = 1 and y >= 0; CE takes 0-based class indices in y.
LossSplit mse_bdc(const MlpParams& p, const Matrix& X, const Vector& y);
LossSplit ce_bdc(const MlpParams& p, const Matrix& X, const Vector& y);
LossSplit loss_bdc(const MlpParams& p, const Matrix& X, const Vector& y, LossKind kind);
LossSplit loss_from_state(const SplitState& s, const Vector& y, LossKind kind);
void check_labels(const MlpParams& p, const Vector& y, LossKind kind);

/// Plain losses from the standard forward pass (batch sums).
double mse_loss(const MlpParams& p, const Matrix& X, const Vector& y);
double ce_loss(const MlpParams& p, const Matrix& X, const Vector& y);

/// Subgradient in block l of sum_n <lambda_A, A_n> + <lambda_B, B_n> for nonnegative
/// adjoints (C x N). Kinks: relu'(0) = 0, ties in max(p, Z-) go to p. Only layers >= l are
/// traversed.
Vector split_block_vjp(const MlpParams& p, const SplitState& s, const Matrix& X, std::size_t l,
                       const Matrix& lambda_A, const Matrix& lambda_B);

struct BlockGrads {
  Vector g;
  Vector h;
};

BlockGrads block_grads(const MlpParams& p, const Matrix& X, const Vector& y, LossKind kind,
                       std::size_t l);
BlockGrads block_grads_from_state(const MlpParams& p, const SplitState& s, const Matrix& X,
                                  const Vector& y, LossKind kind, std::size_t l);
Vector block_grad_g(const MlpParams& p, const Matrix& X, const Vector& y, LossKind kind, std::size_t l);
Vector block_subgrad_h(const MlpParams& p, const Matrix& X, const Vector& y, LossKind kind, std::size_t l);

/// Checkpoint: first line "# shapes: d_L x d_{L-1} + d_L; ...", then one CSV row.
void write_checkpoint(const MlpParams& p, const std::filesystem::path& path);
MlpParams read_checkpoint(const MlpParams& shape_template, const std::filesystem::path& path);

}  // namespace bdc
