#include <doctest.h>

#include <cmath>
#include <random>

#include "support/oracles.hpp"
#include "syrem/errors.hpp"
#include "syrem/net.hpp"

using namespace syrem;
using test_oracles::fd_gradient;
using test_oracles::fd_safe;
using test_oracles::make_sample;
using test_oracles::max_rel_error;
using test_oracles::random_batch;

TEST_CASE("layout size matches the hand count") {
  NetConfig config;
  config.input_dim = 4;
  config.hidden_dims = {8};
  config.n_heads = 2;
  const Layout layout = Layout::from_config(config);
  // 4*8 + 8 weights+biases, then 8*4 + 4
  CHECK(layout.total == 76);
  CHECK(layout.num_layers() == 2);
  CHECK(layout.layers[1].w_offset == 40);
}

TEST_CASE("layout rejects invalid configs") {
  NetConfig config;
  config.input_dim = 0;
  CHECK_THROWS_AS(Layout::from_config(config), ConfigError);
  config.input_dim = 2;
  config.n_heads = 0;
  CHECK_THROWS_AS(Layout::from_config(config), ConfigError);
  config.n_heads = 1;
  config.hidden_dims = {4, 0};
  CHECK_THROWS_AS(Layout::from_config(config), ConfigError);
}

TEST_CASE("init is deterministic, bounded, and zero-biased") {
  NetConfig config;
  config.input_dim = 4;
  config.hidden_dims = {8};
  config.n_heads = 2;
  const ParamVector a = init_network(config, 77);
  const ParamVector b = init_network(config, 77);
  CHECK(a.values == b.values);
  CHECK(init_network(config, 78).values != a.values);

  for (int layer = 0; layer < a.layout.num_layers(); ++layer) {
    const auto& shape = a.layout.layers[layer];
    const double limit = std::sqrt(6.0 / (shape.rows + shape.cols));
    CHECK(a.weight(layer).cwiseAbs().maxCoeff() <= limit);
    CHECK(a.bias(layer).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("parameter flattening round-trips through the layer views") {
  NetConfig config;
  config.input_dim = 3;
  config.hidden_dims = {5, 4};
  config.n_heads = 3;
  ParamVector params = init_network(config, 9);

  Mat w1 = Mat::Random(4, 5);
  Vec b1 = Vec::Random(4);
  params.weight(1) = w1;
  params.bias(1) = b1;
  CHECK(params.weight(1) == w1);
  CHECK(params.bias(1) == b1);
  // neighbors untouched
  CHECK(params.weight(0) == init_network(config, 9).weight(0));
}

TEST_CASE("forward: zero network predicts the origin and is pure") {
  NetConfig config;
  config.input_dim = 5;
  config.hidden_dims = {6};
  config.n_heads = 3;
  ParamVector params = init_network(config, 1);
  params.values.setZero();

  const Vec features = Vec::Random(5);
  const Prediction pred = forward(params, features);
  REQUIRE(pred.n_heads() == 3);
  CHECK(pred.endpoints.cwiseAbs().maxCoeff() == 0.0);

  ParamVector live = init_network(config, 2);
  const Prediction p1 = forward(live, features);
  const Prediction p2 = forward(live, features);
  CHECK(p1.endpoints == p2.endpoints);

  CHECK_THROWS_AS(forward(live, Vec::Zero(4)), ConfigError);
}

TEST_CASE("forward matches a hand-computed affine map") {
  NetConfig config;
  config.input_dim = 2;
  config.hidden_dims = {};
  config.n_heads = 1;
  ParamVector params = init_network(config, 0);
  params.weight(0) << 1.0, 2.0, 3.0, 4.0;
  params.bias(0) << 0.5, -0.5;

  Vec x(2);
  x << 1.0, 1.0;
  const Prediction pred = forward(params, x);
  CHECK(pred.endpoints(0, 0) == doctest::Approx(3.5).epsilon(1e-14));
  CHECK(pred.endpoints(1, 0) == doctest::Approx(6.5).epsilon(1e-14));
}

TEST_CASE("wta loss: exact hit, hand value, homogeneity, loop oracle") {
  Prediction pred;
  pred.endpoints.resize(2, 2);
  pred.endpoints.col(0) << 1.0, 0.0;
  pred.endpoints.col(1) << 0.0, 2.0;
  CHECK(wta_loss(pred, {0.0, 0.0}) == doctest::Approx(1.0));
  CHECK(wta_loss(pred, {1.0, 0.0}) == 0.0);

  // doubling every head error quadruples the loss
  Prediction doubled;
  doubled.endpoints = 2.0 * pred.endpoints;
  CHECK(wta_loss(doubled, {0.0, 0.0}) == doctest::Approx(4.0 * wta_loss(pred, {0.0, 0.0})));

  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 50; ++trial) {
    Prediction p;
    p.endpoints.resize(2, 6);
    for (int k = 0; k < 6; ++k) p.endpoints.col(k) << gauss(rng), gauss(rng);
    const Vec2 gt{gauss(rng), gauss(rng)};
    double expected = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 6; ++k) {
      const double dx = p.endpoints(0, k) - gt.x();
      const double dy = p.endpoints(1, k) - gt.y();
      expected = std::min(expected, dx * dx + dy * dy);
    }
    CHECK(wta_loss(p, gt) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(wta_loss(p, gt) >= 0.0);
  }
}

TEST_CASE("backprop matches central finite differences") {
  std::mt19937_64 rng(42);
  int checked = 0;
  int attempts = 0;
  while (checked < 6 && attempts < 100) {
    ++attempts;
    NetConfig config;
    config.input_dim = 3 + static_cast<int>(rng() % 4);
    config.hidden_dims = {3 + static_cast<int>(rng() % 5)};
    config.n_heads = 1 + static_cast<int>(rng() % 3);
    config.activation = (rng() % 2 == 0) ? Activation::tanh : Activation::relu;
    const ParamVector params = init_network(config, rng());
    REQUIRE(params.layout.total <= 200);

    const auto batch = random_batch(rng, config.input_dim, 4);
    if (!fd_safe(params, batch)) continue;  // argmin/relu flip under the probe
    ++checked;

    const auto [loss, grad] = loss_and_grad(params, batch);
    CHECK(loss >= 0.0);
    const Vec fd = fd_gradient(params, batch);
    CHECK(max_rel_error(grad.values, fd) <= 1e-4);
  }
  CHECK(checked == 6);
}

TEST_CASE("duplicated batch leaves mean loss and gradient unchanged") {
  std::mt19937_64 rng(7);
  NetConfig config;
  config.input_dim = 4;
  config.hidden_dims = {6};
  config.n_heads = 2;
  const ParamVector params = init_network(config, 3);
  auto batch = random_batch(rng, 4, 3);

  const auto [loss_once, grad_once] = loss_and_grad(params, batch);
  auto doubled = batch;
  doubled.insert(doubled.end(), batch.begin(), batch.end());
  const auto [loss_twice, grad_twice] = loss_and_grad(params, doubled);
  CHECK(loss_once == doctest::Approx(loss_twice).epsilon(1e-15));
  CHECK((grad_once.values - grad_twice.values).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("gradient vanishes at an analytic stationary point") {
  // single affine head on x = +-1; the unique minimum interpolates both
  // targets exactly
  NetConfig config;
  config.input_dim = 1;
  config.hidden_dims = {};
  config.n_heads = 1;
  ParamVector params = init_network(config, 0);
  params.weight(0) << 1.0, 0.0;
  params.bias(0) << 1.0, 0.0;

  Vec plus(1), minus(1);
  plus << 1.0;
  minus << -1.0;
  std::vector<Sample> batch{make_sample(plus, {2.0, 0.0}), make_sample(minus, {0.0, 0.0})};
  const auto [loss, grad] = loss_and_grad(params, batch);
  CHECK(loss == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(grad.values.norm() <= 1e-8);

  // conflicting targets for the same input: stationary with nonzero loss
  std::vector<Sample> conflict{make_sample(plus, {2.0, 0.0}), make_sample(plus, {0.0, 0.0})};
  ParamVector mid = params;
  mid.weight(0) << 0.4, 0.0;
  mid.bias(0) << 0.6, 0.0;
  const auto [mid_loss, mid_grad] = loss_and_grad(mid, conflict);
  CHECK(mid_loss == doctest::Approx(1.0));
  CHECK(mid_grad.values.norm() <= 1e-8);

  CHECK_THROWS_AS(loss_and_grad(params, std::span<const Sample>{}), ConfigError);
}

TEST_CASE("adam: zero update, first-step magnitude, step counter") {
  NetConfig config;
  config.input_dim = 3;
  config.hidden_dims = {4};
  config.n_heads = 2;
  ParamVector params = init_network(config, 11);
  const Vec before = params.values;
  OptimizerState state = OptimizerState::init(params.layout.total);

  GradVector zero;
  zero.values = Vec::Zero(params.layout.total);
  adam_step(params, zero, state);
  CHECK(params.values == before);
  CHECK(state.step == 1);

  // unit gradient, fresh state: bias-corrected first step is lr / (1 + eps)
  ParamVector fresh = init_network(config, 11);
  OptimizerState fresh_state = OptimizerState::init(fresh.layout.total);
  GradVector ones;
  ones.values = Vec::Ones(fresh.layout.total);
  adam_step(fresh, ones, fresh_state);
  const double expected_delta = fresh_state.lr / (1.0 + fresh_state.eps_adam);
  for (Eigen::Index i = 0; i < fresh.values.size(); ++i) {
    CHECK(before[i] - fresh.values[i] == doctest::Approx(expected_delta).epsilon(1e-12));
  }

  for (int i = 0; i < 5; ++i) adam_step(fresh, ones, fresh_state);
  CHECK(fresh_state.step == 6);

  GradVector misaligned;
  misaligned.values = Vec::Zero(params.layout.total + 1);
  CHECK_THROWS_AS(adam_step(params, misaligned, state), ConfigError);
}
