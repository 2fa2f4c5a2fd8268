#include <doctest.h>

#include <algorithm>
#include <random>

#include "support/oracles.hpp"
#include "syrem/errors.hpp"
#include "syrem/rehearsal.hpp"

using namespace syrem;
using test_oracles::brute_force_select;
using test_oracles::make_sample;
using test_oracles::random_batch;

namespace {

GradVector gv(std::initializer_list<double> values) {
  GradVector g;
  g.values = Vec(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) g.values[i++] = v;
  return g;
}

ParamVector small_net(std::uint64_t seed) {
  NetConfig config;
  config.input_dim = 4;
  config.hidden_dims = {6};
  config.n_heads = 2;
  return init_network(config, seed);  // 64 parameters
}

std::vector<Candidate> as_candidates(std::vector<Sample> samples) {
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.push_back({std::move(samples[i]), static_cast<int>(i)});
  }
  return out;
}

}  // namespace

TEST_CASE("cosine score endpoints and hand value") {
  const GradVector a = gv({1, 0, 0});
  CHECK(cosine_score(a, a) == doctest::Approx(1.0));
  CHECK(cosine_score(a, gv({-1, 0, 0})) == doctest::Approx(-1.0));
  CHECK(cosine_score(gv({1, 1}), gv({1, 0})) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(cosine_score(gv({0, 0}), gv({1, 0})) == 0.0);
  CHECK(cosine_score(a, gv({1e-13, 0, 0})) == 0.0);
  CHECK_THROWS_AS(cosine_score(a, gv({1, 0})), ConfigError);
}

TEST_CASE("selecting all candidates returns them sorted by score") {
  std::mt19937_64 rng(3);
  const ParamVector params = small_net(1);
  TemporalBuffer temporal;
  set_temporal(temporal, random_batch(rng, 4, 4));
  const auto candidates = as_candidates(random_batch(rng, 4, 6));

  const RehearsalSet set = select_rehearsal(params, temporal, candidates, 6);
  REQUIRE(set.size() == 6);
  CHECK(std::is_sorted(set.scores.rbegin(), set.scores.rend()));
  std::vector<int> sorted_idx = set.buffer_indices;
  std::sort(sorted_idx.begin(), sorted_idx.end());
  CHECK(sorted_idx == std::vector<int>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("an exact copy of a temporal sample ranks first with score 1") {
  std::mt19937_64 rng(9);
  const ParamVector params = small_net(2);
  const auto batch = random_batch(rng, 4, 1);
  TemporalBuffer temporal;
  set_temporal(temporal, batch);

  auto candidates = as_candidates(random_batch(rng, 4, 5));
  candidates.push_back({batch.front(), 5});

  const RehearsalSet set = select_rehearsal(params, temporal, candidates, 3);
  CHECK(set.buffer_indices.front() == 5);
  CHECK(set.scores.front() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("selection matches the brute-force oracle") {
  std::mt19937_64 rng(2025);
  for (int trial = 0; trial < 40; ++trial) {
    const ParamVector params = small_net(rng());
    const int n_cand = 4 + static_cast<int>(rng() % 29);  // up to 32
    const int b = 1 + static_cast<int>(rng() % n_cand);
    TemporalBuffer temporal;
    set_temporal(temporal, random_batch(rng, 4, 3));
    const auto candidates = as_candidates(random_batch(rng, 4, n_cand));

    const RehearsalSet set = select_rehearsal(params, temporal, candidates, b);
    const auto brute = brute_force_select(params, temporal.batch, candidates, b);
    REQUIRE(set.size() == b);
    CHECK(set.buffer_indices == brute.buffer_indices);
    for (int i = 0; i < b; ++i) {
      CHECK(set.scores[static_cast<std::size_t>(i)] ==
            doctest::Approx(brute.scores[static_cast<std::size_t>(i)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("scores stay in [-1, 1] and unselected never beat selected") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const ParamVector params = small_net(rng());
    TemporalBuffer temporal;
    set_temporal(temporal, random_batch(rng, 4, 4));
    const auto candidates = as_candidates(random_batch(rng, 4, 12));

    const GradVector g_c = reference_gradient(params, temporal, GcMode::batch_mean);
    const auto scored = score_candidates(params, g_c, candidates);
    for (const ScoredCandidate& sc : scored) {
      CHECK(sc.score >= -1.0 - 1e-9);
      CHECK(sc.score <= 1.0 + 1e-9);
    }

    const RehearsalSet set = select_top(scored, 5);
    double worst_selected = set.scores.back();
    for (const ScoredCandidate& sc : scored) {
      const bool selected = std::find(set.buffer_indices.begin(), set.buffer_indices.end(),
                                      sc.buffer_index) != set.buffer_indices.end();
      if (!selected) CHECK(sc.score <= worst_selected + 1e-15);
    }
  }
}

TEST_CASE("equal-score ties resolve by buffer index regardless of order") {
  std::mt19937_64 rng(11);
  const ParamVector params = small_net(4);
  const auto batch = random_batch(rng, 4, 2);
  TemporalBuffer temporal;
  set_temporal(temporal, batch);

  // three identical samples (one shared gradient direction) plus two others
  const Sample dup = random_batch(rng, 4, 1).front();
  std::vector<Candidate> candidates;
  candidates.push_back({dup, 7});
  candidates.push_back({dup, 2});
  candidates.push_back({dup, 5});
  auto others = random_batch(rng, 4, 2);
  candidates.push_back({others[0], 0});
  candidates.push_back({others[1], 9});

  const RehearsalSet first = select_rehearsal(params, temporal, candidates, 2);
  for (int perm = 0; perm < 10; ++perm) {
    std::shuffle(candidates.begin(), candidates.end(), rng);
    const RehearsalSet again = select_rehearsal(params, temporal, candidates, 2);
    CHECK(again.buffer_indices == first.buffer_indices);
  }
}

TEST_CASE("selection is invariant to positive rescaling of the reference") {
  std::mt19937_64 rng(13);
  const ParamVector params = small_net(5);
  TemporalBuffer temporal;
  set_temporal(temporal, random_batch(rng, 4, 3));
  const auto candidates = as_candidates(random_batch(rng, 4, 10));

  GradVector g_c = reference_gradient(params, temporal, GcMode::batch_mean);
  const RehearsalSet base = select_top(score_candidates(params, g_c, candidates), 4);
  for (double scale : {0.25, 3.0, 1e4}) {
    GradVector scaled;
    scaled.values = scale * g_c.values;
    const RehearsalSet set = select_top(score_candidates(params, scaled, candidates), 4);
    CHECK(set.buffer_indices == base.buffer_indices);
  }
}

TEST_CASE("last-sample reference mode matches a single-sample oracle") {
  std::mt19937_64 rng(17);
  const ParamVector params = small_net(6);
  TemporalBuffer temporal;
  set_temporal(temporal, random_batch(rng, 4, 4));
  const auto candidates = as_candidates(random_batch(rng, 4, 8));

  const RehearsalSet set =
      select_rehearsal(params, temporal, candidates, 3, GcMode::last_sample);
  const auto brute = brute_force_select(params, temporal.batch, candidates, 3, true);
  CHECK(set.buffer_indices == brute.buffer_indices);
}

TEST_CASE("rehearsal loss: mean of winner-takes-all losses") {
  // all-zero single-head net predicts the origin, so the loss of a sample
  // is its squared endpoint norm
  NetConfig config;
  config.input_dim = 2;
  config.hidden_dims = {};
  config.n_heads = 1;
  ParamVector zero = init_network(config, 0);
  zero.values.setZero();

  RehearsalSet identical;
  for (int i = 0; i < 3; ++i) {
    identical.samples.push_back(make_sample(Vec::Zero(2), {2.0, 0.0}));
    identical.scores.push_back(0.0);
  }
  CHECK(rehearsal_loss(zero, identical) == doctest::Approx(4.0));

  RehearsalSet perfect;
  perfect.samples.push_back(make_sample(Vec::Zero(2), {0.0, 0.0}));
  perfect.scores.push_back(0.0);
  CHECK(rehearsal_loss(zero, perfect) == 0.0);

  RehearsalSet two;
  two.samples.push_back(make_sample(Vec::Zero(2), {1.0, 0.0}));          // loss 1
  two.samples.push_back(make_sample(Vec::Zero(2), {std::sqrt(3.0), 0})); // loss 3
  two.scores = {0.0, 0.0};
  CHECK(rehearsal_loss(zero, two) == doctest::Approx(2.0));

  CHECK_THROWS_AS(rehearsal_loss(zero, RehearsalSet{}), ConfigError);
}

TEST_CASE("total loss adds the current and rehearsal terms") {
  NetConfig config;
  config.input_dim = 2;
  config.hidden_dims = {};
  config.n_heads = 1;
  ParamVector zero = init_network(config, 0);
  zero.values.setZero();

  std::vector<Sample> current{make_sample(Vec::Zero(2), {std::sqrt(1.5), 0.0})};
  CHECK(total_loss(zero, current, RehearsalSet{}) == doctest::Approx(1.5));

  RehearsalSet reh;
  reh.samples.push_back(make_sample(Vec::Zero(2), {std::sqrt(0.5), 0.0}));
  reh.scores.push_back(0.0);
  CHECK(total_loss(zero, current, reh) == doctest::Approx(2.0));

  std::vector<Sample> perfect{make_sample(Vec::Zero(2), {0.0, 0.0})};
  RehearsalSet reh_perfect;
  reh_perfect.samples.push_back(make_sample(Vec::Zero(2), {0.0, 0.0}));
  reh_perfect.scores.push_back(0.0);
  CHECK(total_loss(zero, perfect, reh_perfect) == 0.0);
}
