#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "syrem/types.hpp"

namespace syrem {

// Multi-endpoint trajectory regressor: a plain MLP whose last layer emits
// n_heads 2-D endpoints, trained with a winner-takes-all squared error.
// Parameters and gradients live in flat vectors with a fixed, documented
// layout so that cosine scoring and gradient projection can treat the whole
// network as one dense vector.

enum class Activation { tanh, relu };

struct NetConfig {
  int input_dim = 1;
  std::vector<int> hidden_dims;  // may be empty: single affine layer
  int n_heads = 1;               // W endpoints, each (x, y)
  Activation activation = Activation::tanh;

  int output_dim() const { return 2 * n_heads; }
  void validate() const;  // throws ConfigError on non-positive dims
};

/// Flat parameter layout: layer-major, weights before biases, weight entries
/// in Eigen's native column-major order. Identical for every vector built
/// from the same NetConfig.
struct Layout {
  struct Layer {
    int rows = 0;      // fan-out
    int cols = 0;      // fan-in
    int w_offset = 0;  // start of the weight block in the flat vector
    int b_offset = 0;  // start of the bias block
  };
  std::vector<Layer> layers;
  int total = 0;
  Activation activation = Activation::tanh;

  static Layout from_config(const NetConfig& config);
  int num_layers() const { return static_cast<int>(layers.size()); }
  bool operator==(const Layout& other) const;
};

struct ParamVector {
  Vec values;
  Layout layout;

  Eigen::Map<const Mat> weight(int layer) const;
  Eigen::Map<const Vec> bias(int layer) const;
  Eigen::Map<Mat> weight(int layer);
  Eigen::Map<Vec> bias(int layer);
};

/// Gradient aligned to a ParamVector's flat layout.
struct GradVector {
  Vec values;

  int size() const { return static_cast<int>(values.size()); }
};

/// W predicted endpoints, column k = (x, y) of head k, meters.
struct Prediction {
  Eigen::Matrix2Xd endpoints;

  int n_heads() const { return static_cast<int>(endpoints.cols()); }
};

struct OptimizerState {
  std::int64_t step = 0;
  Vec first_moment;
  Vec second_moment;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;

  static OptimizerState init(int n_params);
};

/// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
/// Deterministic for a fixed seed.
ParamVector init_network(const NetConfig& config, std::uint64_t seed);

/// Pure forward pass. Throws ConfigError on a feature-length mismatch.
Prediction forward(const ParamVector& params, const Eigen::Ref<const Vec>& features);

/// Winner-takes-all loss: min over heads of the squared endpoint error.
double wta_loss(const Prediction& pred, const Vec2& gt);

/// Mean wta_loss over the batch, forward passes only.
double batch_loss(const ParamVector& params, std::span<const Sample> batch);

/// Mean wta_loss over the batch and its exact gradient via backpropagation.
/// The winning head is the argmin, ties broken by lowest head index; only
/// that head receives gradient. Throws ConfigError on an empty batch.
std::pair<double, GradVector> loss_and_grad(const ParamVector& params,
                                            std::span<const Sample> batch);

/// Standard Adam update with bias correction; increments state.step.
/// Throws ConfigError when grad is not aligned to params.
void adam_step(ParamVector& params, const GradVector& grad, OptimizerState& state);

}  // namespace syrem
