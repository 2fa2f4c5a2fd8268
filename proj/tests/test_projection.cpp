#include <doctest.h>

#include <random>

#include "syrem/errors.hpp"
#include "syrem/projection.hpp"

using namespace syrem;

namespace {

Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

Vec random_vec(std::mt19937_64& rng, int dim, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
  return v;
}

}  // namespace

TEST_CASE("satisfied constraint passes the gradient through") {
  const auto out = project(vec2(1, 0), vec2(0, 1));
  CHECK_FALSE(out.projected);
  CHECK(out.lambda == 0.0);
  CHECK(out.inner_product == 0.0);
  CHECK(out.gradient.values == vec2(1, 0));
}

TEST_CASE("violating gradient lands on the constraint boundary") {
  const Vec g = vec2(1, -1);
  const Vec g_mem = vec2(0, 1);
  const auto out = project(g, g_mem);
  CHECK(out.projected);
  CHECK(out.inner_product == doctest::Approx(-1.0));
  CHECK(out.lambda == doctest::Approx(1.0));
  CHECK(out.gradient.values[0] == doctest::Approx(1.0));
  CHECK(out.gradient.values[1] == doctest::Approx(0.0));
  CHECK(out.gradient.values.dot(g_mem) == doctest::Approx(0.0));
}

TEST_CASE("anti-parallel memory gradient cancels the update") {
  const auto out = project(vec2(-1, 0), vec2(1, 0));
  CHECK(out.projected);
  CHECK(out.gradient.values.norm() == doctest::Approx(0.0));
}

TEST_CASE("near-zero memory gradient skips projection") {
  const auto out = project(vec2(-1, 0), vec2(1e-8, 0));
  CHECK_FALSE(out.projected);
  CHECK(out.gradient.values == vec2(-1, 0));
}

TEST_CASE("misaligned vectors are rejected") {
  Vec three(3);
  three.setOnes();
  CHECK_THROWS_AS(project(vec2(1, 0), three), ConfigError);
}

TEST_CASE("projection properties hold for random pairs") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim_dist(2, 64);
  for (int trial = 0; trial < 500; ++trial) {
    const int dim = dim_dist(rng);
    const Vec g = random_vec(rng, dim, 3.0);
    const Vec g_mem = random_vec(rng, dim, 2.0);
    const auto out = project(g, g_mem);

    CHECK(out.lambda >= 0.0);
    CHECK(out.gradient.values.dot(g_mem) >= -1e-9);

    // re-projecting may still see a tiny negative inner product from
    // cancellation, but the gradient itself must not move
    const auto again = project(out.gradient.values, g_mem);
    CHECK((again.gradient.values - out.gradient.values).norm() <=
          1e-12 * (1.0 + out.gradient.values.norm()));

    if (out.projected) {
      const double scale = out.gradient.values.norm() * g_mem.norm();
      CHECK(std::abs(out.gradient.values.dot(g_mem)) <= 1e-6 * (1.0 + scale));
    } else {
      CHECK(out.gradient.values == g);
    }
  }
}

TEST_CASE("projected gradient is the closest feasible vector") {
  std::mt19937_64 rng(77);
  int projected_cases = 0;
  while (projected_cases < 20) {
    const int dim = 2 + static_cast<int>(rng() % 30);
    const Vec g = random_vec(rng, dim);
    const Vec g_mem = random_vec(rng, dim);
    const auto out = project(g, g_mem);
    if (!out.projected) continue;
    ++projected_cases;

    const double own_dist = (g - out.gradient.values).norm();
    const Vec unit_mem = g_mem / g_mem.norm();
    for (int probe = 0; probe < 1000; ++probe) {
      Vec h = random_vec(rng, dim, 2.0);
      const double along = h.dot(unit_mem);
      if (along < 0.0) h -= along * unit_mem;  // clip to the feasible half-space
      CHECK(h.dot(g_mem) >= -1e-9);
      CHECK(own_dist <= (g - h).norm() + 1e-9);
    }
  }
}
