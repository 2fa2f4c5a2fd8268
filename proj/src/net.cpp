#include "syrem/net.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "syrem/errors.hpp"

namespace syrem {

void NetConfig::validate() const {
  if (input_dim < 1) throw ConfigError("net: input_dim must be >= 1");
  if (n_heads < 1) throw ConfigError("net: n_heads must be >= 1");
  for (int h : hidden_dims) {
    if (h < 1) throw ConfigError("net: hidden_dims entries must be >= 1");
  }
}

Layout Layout::from_config(const NetConfig& config) {
  config.validate();
  std::vector<int> dims;
  dims.push_back(config.input_dim);
  for (int h : config.hidden_dims) dims.push_back(h);
  dims.push_back(config.output_dim());

  Layout layout;
  layout.activation = config.activation;
  int offset = 0;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    Layer layer;
    layer.cols = dims[i];
    layer.rows = dims[i + 1];
    layer.w_offset = offset;
    offset += layer.rows * layer.cols;
    layer.b_offset = offset;
    offset += layer.rows;
    layout.layers.push_back(layer);
  }
  layout.total = offset;
  return layout;
}

bool Layout::operator==(const Layout& other) const {
  if (total != other.total || activation != other.activation ||
      layers.size() != other.layers.size()) {
    return false;
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& a = layers[i];
    const Layer& b = other.layers[i];
    if (a.rows != b.rows || a.cols != b.cols || a.w_offset != b.w_offset ||
        a.b_offset != b.b_offset) {
      return false;
    }
  }
  return true;
}

Eigen::Map<const Mat> ParamVector::weight(int layer) const {
  const Layout::Layer& l = layout.layers.at(layer);
  return {values.data() + l.w_offset, l.rows, l.cols};
}

Eigen::Map<const Vec> ParamVector::bias(int layer) const {
  const Layout::Layer& l = layout.layers.at(layer);
  return {values.data() + l.b_offset, l.rows};
}

Eigen::Map<Mat> ParamVector::weight(int layer) {
  const Layout::Layer& l = layout.layers.at(layer);
  return {values.data() + l.w_offset, l.rows, l.cols};
}

Eigen::Map<Vec> ParamVector::bias(int layer) {
  const Layout::Layer& l = layout.layers.at(layer);
  return {values.data() + l.b_offset, l.rows};
}

OptimizerState OptimizerState::init(int n_params) {
  OptimizerState state;
  state.first_moment = Vec::Zero(n_params);
  state.second_moment = Vec::Zero(n_params);
  return state;
}

ParamVector init_network(const NetConfig& config, std::uint64_t seed) {
  ParamVector params;
  params.layout = Layout::from_config(config);
  params.values = Vec::Zero(params.layout.total);

  std::mt19937_64 rng(seed);
  for (int i = 0; i < params.layout.num_layers(); ++i) {
    const Layout::Layer& l = params.layout.layers[i];
    const double limit = std::sqrt(6.0 / (l.cols + l.rows));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (int k = 0; k < l.rows * l.cols; ++k) {
      params.values[l.w_offset + k] = dist(rng);
    }
    // biases stay zero
  }
  return params;
}

namespace {

inline void apply_activation(Vec& z, Activation act) {
  if (act == Activation::tanh) {
    z = z.array().tanh();
  } else {
    z = z.cwiseMax(0.0);
  }
}

// Derivative expressed through the post-activation value: tanh' = 1 - a^2,
// relu' = [a > 0] (the z = 0 kink takes the zero branch).
inline Vec activation_grad(const Vec& a, Activation act) {
  if (act == Activation::tanh) {
    return 1.0 - a.array().square();
  }
  return (a.array() > 0.0).cast<double>();
}

int winning_head(const Prediction& pred, const Vec2& gt, double* best_sq = nullptr) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < pred.n_heads(); ++k) {
    const double d = (pred.endpoints.col(k) - gt).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  if (best_sq != nullptr) *best_sq = best_d;
  return best;
}

}  // namespace

Prediction forward(const ParamVector& params, const Eigen::Ref<const Vec>& features) {
  const Layout& layout = params.layout;
  if (features.size() != layout.layers.front().cols) {
    throw ConfigError("net: feature length does not match input_dim");
  }
  Vec a = features;
  const int n_layers = layout.num_layers();
  for (int i = 0; i < n_layers; ++i) {
    Vec z = params.weight(i) * a + params.bias(i);
    if (i + 1 < n_layers) apply_activation(z, layout.activation);
    a = std::move(z);
  }
  Prediction pred;
  pred.endpoints = Eigen::Map<const Eigen::Matrix2Xd>(a.data(), 2, a.size() / 2);
  return pred;
}

double wta_loss(const Prediction& pred, const Vec2& gt) {
  double best = 0.0;
  winning_head(pred, gt, &best);
  return best;
}

double batch_loss(const ParamVector& params, std::span<const Sample> batch) {
  if (batch.empty()) throw ConfigError("net: batch_loss on empty batch");
  double sum = 0.0;
  for (const Sample& sample : batch) {
    sum += wta_loss(forward(params, sample.features), sample.gt_endpoint);
  }
  return sum / static_cast<double>(batch.size());
}

std::pair<double, GradVector> loss_and_grad(const ParamVector& params,
                                            std::span<const Sample> batch) {
  if (batch.empty()) throw ConfigError("net: loss_and_grad on empty batch");
  const Layout& layout = params.layout;
  const int n_layers = layout.num_layers();

  GradVector grad;
  grad.values = Vec::Zero(layout.total);
  double loss_sum = 0.0;

  std::vector<Vec> activations(n_layers + 1);  // activations[0] = input
  for (const Sample& sample : batch) {
    if (sample.features.size() != layout.layers.front().cols) {
      throw ConfigError("net: feature length does not match input_dim");
    }
    activations[0] = sample.features;
    for (int i = 0; i < n_layers; ++i) {
      Vec z = params.weight(i) * activations[i] + params.bias(i);
      if (i + 1 < n_layers) apply_activation(z, layout.activation);
      activations[i + 1] = std::move(z);
    }

    const Vec& out = activations[n_layers];
    Prediction pred;
    pred.endpoints = Eigen::Map<const Eigen::Matrix2Xd>(out.data(), 2, out.size() / 2);
    double best_sq = 0.0;
    const int k = winning_head(pred, sample.gt_endpoint, &best_sq);
    loss_sum += best_sq;

    // Sub-gradient through the winning head only.
    Vec delta = Vec::Zero(out.size());
    delta.segment<2>(2 * k) = 2.0 * (pred.endpoints.col(k) - sample.gt_endpoint);

    for (int i = n_layers - 1; i >= 0; --i) {
      const Layout::Layer& l = layout.layers[i];
      Eigen::Map<Mat> dw(grad.values.data() + l.w_offset, l.rows, l.cols);
      Eigen::Map<Vec> db(grad.values.data() + l.b_offset, l.rows);
      dw.noalias() += delta * activations[i].transpose();
      db += delta;
      if (i > 0) {
        Vec upstream = params.weight(i).transpose() * delta;
        delta = upstream.cwiseProduct(activation_grad(activations[i], layout.activation));
      }
    }
  }

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  grad.values *= inv_n;
  return {loss_sum * inv_n, std::move(grad)};
}

void adam_step(ParamVector& params, const GradVector& grad, OptimizerState& state) {
  if (grad.values.size() != params.values.size() ||
      state.first_moment.size() != params.values.size()) {
    throw ConfigError("net: gradient/optimizer state not aligned to parameters");
  }
  state.step += 1;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  state.first_moment = b1 * state.first_moment + (1.0 - b1) * grad.values;
  state.second_moment =
      b2 * state.second_moment.array() + (1.0 - b2) * grad.values.array().square();

  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  params.values.array() -=
      state.lr * (state.first_moment.array() / bc1) /
      ((state.second_moment.array() / bc2).sqrt() + state.eps_adam);
}

}  // namespace syrem
