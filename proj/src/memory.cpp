#include "syrem/memory.hpp"

#include <fstream>
#include <iomanip>
#include <numeric>

#include "syrem/errors.hpp"

namespace syrem {

LongTermBuffer::LongTermBuffer(int capacity, std::uint64_t seed)
    : capacity_(capacity), rng_(seed) {
  if (capacity < 0) throw ConfigError("memory: buffer capacity must be >= 0");
  slots_.reserve(static_cast<std::size_t>(capacity));
}

void LongTermBuffer::insert(const Sample& sample) {
  seen_ += 1;
  if (seen_ <= capacity_) {
    slots_.push_back(sample);
    return;
  }
  if (capacity_ == 0) return;
  std::uniform_int_distribution<std::int64_t> dist(1, seen_);
  const std::int64_t r = dist(rng_);
  if (r <= capacity_) {
    slots_[static_cast<std::size_t>(r - 1)] = sample;
  }
}

bool buffer_within_budget(int capacity, std::int64_t declared_stream_length) {
  if (declared_stream_length <= 0) return true;  // length unknown, no check
  return static_cast<double>(capacity) <= 0.05 * static_cast<double>(declared_stream_length);
}

std::vector<int> draw_without_replacement(int n, int m, std::mt19937_64& rng) {
  if (m < 0 || m > n) throw ConfigError("memory: draw size out of range");
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < m; ++i) {
    std::uniform_int_distribution<int> dist(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(dist(rng))]);
  }
  idx.resize(static_cast<std::size_t>(m));
  return idx;
}

namespace {

void write_sample(std::ostream& os, const Sample& s) {
  os << s.task_id << ' ' << s.case_id << ' ' << s.ta_speed << ' '
     << s.heading_unit.x() << ' ' << s.heading_unit.y() << ' '
     << s.gt_endpoint.x() << ' ' << s.gt_endpoint.y() << ' ' << s.features.size();
  for (Eigen::Index i = 0; i < s.features.size(); ++i) os << ' ' << s.features[i];
  os << '\n';
}

Sample read_sample(std::istream& is) {
  Sample s;
  Eigen::Index n = 0;
  is >> s.task_id >> s.case_id >> s.ta_speed >> s.heading_unit.x() >>
      s.heading_unit.y() >> s.gt_endpoint.x() >> s.gt_endpoint.y() >> n;
  if (!is || n < 0) throw DataError("buffer file: malformed sample record");
  s.features = Vec(n);
  for (Eigen::Index i = 0; i < n; ++i) is >> s.features[i];
  if (!is) throw DataError("buffer file: truncated sample features");
  return s;
}

constexpr const char* kBufferMagic = "syrem-buffer";
constexpr int kBufferVersion = 1;

}  // namespace

void LongTermBuffer::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open buffer file for writing: " + path.string());
  os << std::setprecision(17);
  os << kBufferMagic << ' ' << kBufferVersion << '\n';
  os << capacity_ << ' ' << seen_ << '\n';
  os << rng_ << '\n';
  os << slots_.size() << '\n';
  for (const Sample& s : slots_) write_sample(os, s);
  if (!os) throw IoError("failed writing buffer file: " + path.string());
}

LongTermBuffer LongTermBuffer::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open buffer file: " + path.string());
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (!is || magic != kBufferMagic) throw DataError("buffer file: bad header");
  if (version != kBufferVersion) {
    throw DataError("buffer file: unsupported version " + std::to_string(version));
  }
  LongTermBuffer buffer;
  is >> buffer.capacity_ >> buffer.seen_;
  is >> buffer.rng_;
  std::size_t count = 0;
  is >> count;
  if (!is) throw DataError("buffer file: malformed counters");
  buffer.slots_.reserve(count);
  for (std::size_t i = 0; i < count; ++i) buffer.slots_.push_back(read_sample(is));
  return buffer;
}

std::vector<Candidate> sample_candidates(const LongTermBuffer& buffer, int m,
                                         std::mt19937_64& rng) {
  if (m < 0 || m > buffer.size()) {
    throw ConfigError("memory: candidate draw larger than buffer occupancy");
  }
  std::vector<Candidate> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int idx : draw_without_replacement(buffer.size(), m, rng)) {
    out.push_back({buffer.slots()[static_cast<std::size_t>(idx)], idx});
  }
  return out;
}

std::vector<Sample> sample_projection_batch(const LongTermBuffer& buffer, int b,
                                            std::mt19937_64& rng) {
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(b));
  for (Candidate& c : sample_candidates(buffer, b, rng)) {
    out.push_back(std::move(c.sample));
  }
  return out;
}

void set_temporal(TemporalBuffer& tmp, std::span<const Sample> batch) {
  tmp.batch.assign(batch.begin(), batch.end());
}

}  // namespace syrem
