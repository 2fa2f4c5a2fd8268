#include "syrem/rehearsal.hpp"

#include <algorithm>
#include <cmath>

#include "syrem/errors.hpp"

namespace syrem {

double cosine_score(const GradVector& g_c, const GradVector& g_k) {
  if (g_c.values.size() != g_k.values.size()) {
    throw ConfigError("rehearsal: misaligned gradient vectors");
  }
  constexpr double kNormFloor = 1e-12;
  const double norm_c = g_c.values.norm();
  const double norm_k = g_k.values.norm();
  if (norm_c < kNormFloor || norm_k < kNormFloor) return 0.0;
  return g_c.values.dot(g_k.values) / (norm_c * norm_k);
}

GradVector reference_gradient(const ParamVector& params, const TemporalBuffer& temporal,
                              GcMode mode) {
  if (temporal.empty()) throw ConfigError("rehearsal: temporal buffer is empty");
  if (mode == GcMode::last_sample) {
    return loss_and_grad(params, std::span<const Sample>(&temporal.batch.back(), 1)).second;
  }
  return loss_and_grad(params, temporal.batch).second;
}

std::vector<ScoredCandidate> score_candidates(const ParamVector& params,
                                              const GradVector& g_reference,
                                              std::span<const Candidate> candidates) {
  std::vector<ScoredCandidate> scored;
  scored.reserve(candidates.size());
  for (const Candidate& c : candidates) {
    const GradVector g_k =
        loss_and_grad(params, std::span<const Sample>(&c.sample, 1)).second;
    scored.push_back({c.sample, cosine_score(g_reference, g_k), c.buffer_index});
  }
  return scored;
}

RehearsalSet select_top(std::vector<ScoredCandidate> scored, int b) {
  if (b < 1 || b > static_cast<int>(scored.size())) {
    throw ConfigError("rehearsal: selection size out of range");
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const ScoredCandidate& l, const ScoredCandidate& r) {
                     if (l.score != r.score) return l.score > r.score;
                     return l.buffer_index < r.buffer_index;
                   });
  RehearsalSet set;
  set.samples.reserve(static_cast<std::size_t>(b));
  set.scores.reserve(static_cast<std::size_t>(b));
  set.buffer_indices.reserve(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i) {
    set.samples.push_back(std::move(scored[static_cast<std::size_t>(i)].sample));
    set.scores.push_back(scored[static_cast<std::size_t>(i)].score);
    set.buffer_indices.push_back(scored[static_cast<std::size_t>(i)].buffer_index);
  }
  return set;
}

RehearsalSet select_rehearsal(const ParamVector& params, const TemporalBuffer& temporal,
                              std::span<const Candidate> candidates, int b, GcMode mode) {
  const GradVector g_c = reference_gradient(params, temporal, mode);
  return select_top(score_candidates(params, g_c, candidates), b);
}

double rehearsal_loss(const ParamVector& params, const RehearsalSet& reh) {
  if (reh.empty()) throw ConfigError("rehearsal: loss of an empty rehearsal set");
  return batch_loss(params, reh.samples);
}

double total_loss(const ParamVector& params, std::span<const Sample> current_batch,
                  const RehearsalSet& reh) {
  double loss = batch_loss(params, current_batch);
  if (!reh.empty()) loss += rehearsal_loss(params, reh);
  return loss;
}

}  // namespace syrem
