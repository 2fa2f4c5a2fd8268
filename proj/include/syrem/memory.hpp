#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "syrem/types.hpp"

namespace syrem {

// Two-part memory: a fixed-capacity long-term buffer that reservoir-samples
// the one-pass stream (every stream element ends up stored with probability
// capacity / stream length), and a temporal buffer holding the last observed
// training batch as the similarity reference.

class LongTermBuffer {
 public:
  LongTermBuffer() = default;
  LongTermBuffer(int capacity, std::uint64_t seed);

  /// Reservoir update: append while below capacity, afterwards draw
  /// r ~ Uniform{1..seen} and replace slot r iff r <= capacity.
  void insert(const Sample& sample);

  const std::vector<Sample>& slots() const { return slots_; }
  int capacity() const { return capacity_; }
  std::int64_t seen() const { return seen_; }
  int size() const { return static_cast<int>(slots_.size()); }

  /// Versioned text dump for experiment resumption; round-trips exactly.
  void save(const std::filesystem::path& path) const;
  static LongTermBuffer load(const std::filesystem::path& path);

 private:
  int capacity_ = 0;
  std::int64_t seen_ = 0;
  std::vector<Sample> slots_;
  std::mt19937_64 rng_;
};

/// Checks the compact-memory requirement against a declared stream length:
/// the buffer may hold at most 5% of the stream.
bool buffer_within_budget(int capacity, std::int64_t declared_stream_length);

struct Candidate {
  Sample sample;
  int buffer_index = 0;  // slot in the long-term buffer at draw time
};

/// m distinct indices drawn uniformly from 0..n-1 (partial Fisher-Yates).
std::vector<int> draw_without_replacement(int n, int m, std::mt19937_64& rng);

/// Draws m distinct slots uniformly without replacement; the buffer is not
/// modified. Throws ConfigError when occupancy < m.
std::vector<Candidate> sample_candidates(const LongTermBuffer& buffer, int m,
                                         std::mt19937_64& rng);

/// Same draw contract as sample_candidates; used for the memory gradient.
std::vector<Sample> sample_projection_batch(const LongTermBuffer& buffer, int b,
                                            std::mt19937_64& rng);

struct TemporalBuffer {
  std::vector<Sample> batch;

  bool empty() const { return batch.empty(); }
};

/// Replaces the temporal buffer contents with the given batch.
void set_temporal(TemporalBuffer& tmp, std::span<const Sample> batch);

}  // namespace syrem
