#pragma once

#include <span>
#include <vector>

#include "syrem/memory.hpp"
#include "syrem/net.hpp"
#include "syrem/types.hpp"

namespace syrem {

// Selective memory rehearsal: score buffer candidates by the cosine
// similarity between their loss gradients and the gradient of the last
// observed batch, then replay the best-scoring ones alongside the current
// batch. Replayed samples come from the long-term buffer, so the extra
// signal cannot conflict with stored knowledge.

/// Reference gradient source: mean over the whole temporal batch, or the
/// single most recent sample.
enum class GcMode { batch_mean, last_sample };

struct ScoredCandidate {
  Sample sample;
  double score = 0.0;    // cosine similarity in [-1, 1], 0 for zero gradients
  int buffer_index = 0;
};

struct RehearsalSet {
  std::vector<Sample> samples;
  std::vector<double> scores;       // aligned, non-increasing
  std::vector<int> buffer_indices;  // aligned long-term buffer slots

  bool empty() const { return samples.empty(); }
  int size() const { return static_cast<int>(samples.size()); }
};

/// (a . b) / (|a| |b|); returns 0 when either norm is below 1e-12.
/// Throws ConfigError on misaligned vectors.
double cosine_score(const GradVector& g_c, const GradVector& g_k);

/// Gradient of the temporal-buffer loss at the current parameters.
GradVector reference_gradient(const ParamVector& params, const TemporalBuffer& temporal,
                              GcMode mode);

/// Per-candidate gradient (one backward pass each) and cosine score against
/// the reference gradient. Order preserved.
std::vector<ScoredCandidate> score_candidates(const ParamVector& params,
                                              const GradVector& g_reference,
                                              std::span<const Candidate> candidates);

/// Top-b scored candidates, score descending, ties by ascending buffer index.
RehearsalSet select_top(std::vector<ScoredCandidate> scored, int b);

/// Full selection pipeline of the rehearsal step. Requires a non-empty
/// temporal buffer and at least b candidates.
RehearsalSet select_rehearsal(const ParamVector& params, const TemporalBuffer& temporal,
                              std::span<const Candidate> candidates, int b,
                              GcMode mode = GcMode::batch_mean);

/// Mean winner-takes-all loss over the rehearsal set.
double rehearsal_loss(const ParamVector& params, const RehearsalSet& reh);

/// Current-batch loss plus rehearsal loss (unweighted sum); the rehearsal
/// term is 0 when the set is empty.
double total_loss(const ParamVector& params, std::span<const Sample> current_batch,
                  const RehearsalSet& reh);

}  // namespace syrem
