#include "syrem/stream.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "syrem/errors.hpp"
#include "syrem/rng.hpp"

namespace syrem {

Family family_from_string(const std::string& name) {
  if (name == "constant_velocity") return Family::constant_velocity;
  if (name == "constant_turn") return Family::constant_turn;
  if (name == "sinusoidal_weave") return Family::sinusoidal_weave;
  if (name == "stop_and_go") return Family::stop_and_go;
  if (name == "merge_drift") return Family::merge_drift;
  throw ConfigError("stream: unknown task family '" + name + "'");
}

std::string to_string(Family family) {
  switch (family) {
    case Family::constant_velocity: return "constant_velocity";
    case Family::constant_turn: return "constant_turn";
    case Family::sinusoidal_weave: return "sinusoidal_weave";
    case Family::stop_and_go: return "stop_and_go";
    case Family::merge_drift: return "merge_drift";
  }
  throw ConfigError("stream: invalid family value");
}

double TaskSpec::param(const std::string& key, double fallback) const {
  const auto it = family_params.find(key);
  return it == family_params.end() ? fallback : it->second;
}

void TaskSpec::validate() const {
  if (n_train < 1 || n_test < 1) {
    throw ConfigError("stream: n_train and n_test must be >= 1");
  }
  if (n_surrounding < 0) throw ConfigError("stream: n_surrounding must be >= 0");
  if (param("noise_sigma", 0.0) < 0.0) {
    throw ConfigError("stream: noise_sigma must be >= 0");
  }
}

int Horizon::history_steps() const {
  return static_cast<int>(std::lround(t_obs / dt));
}

void Horizon::validate() const {
  if (t_obs <= 0.0 || t_pred <= 0.0 || dt <= 0.0) {
    throw ConfigError("stream: t_obs, t_pred and dt must be > 0");
  }
  if (history_steps() < 1) throw ConfigError("stream: observation window shorter than dt");
}

int feature_dim(int n_surrounding, const Horizon& horizon) {
  return (n_surrounding + 1) * horizon.history_steps() * 4;
}

namespace {

constexpr double kMinFrameSpeed = 0.1;  // below this the frame stays world-aligned
constexpr double kFeatureScale = 0.1;   // meters (and m/s) per feature unit

// Per-case kinematic parameters in the canonical frame (origin at t = 0,
// initial heading +x).
struct CaseDynamics {
  Family family = Family::constant_velocity;
  double v = 0.0;
  double omega = 0.0;
  double amplitude = 0.0;
  double period = 1.0;
  double phase = 0.0;
  double lat_rate = 0.0;
  double t_merge = 0.0;
};

void canonical_state(const CaseDynamics& d, double t, Vec2& pos, Vec2& vel) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  switch (d.family) {
    case Family::constant_velocity:
      pos = {d.v * t, 0.0};
      vel = {d.v, 0.0};
      return;
    case Family::constant_turn: {
      if (std::abs(d.omega) < 1e-9) {  // straight-line limit
        pos = {d.v * t, 0.0};
        vel = {d.v, 0.0};
        return;
      }
      const double r = d.v / d.omega;
      pos = {r * std::sin(d.omega * t), r * (1.0 - std::cos(d.omega * t))};
      vel = {d.v * std::cos(d.omega * t), d.v * std::sin(d.omega * t)};
      return;
    }
    case Family::sinusoidal_weave: {
      const double w = kTwoPi / d.period;
      pos = {d.v * t, d.amplitude * (std::sin(w * t + d.phase) - std::sin(d.phase))};
      vel = {d.v, d.amplitude * w * std::cos(w * t + d.phase)};
      return;
    }
    case Family::stop_and_go: {
      // speed profile s(t) = v (1 + cos(w t + phase)) / 2, integrated exactly
      const double w = kTwoPi / d.period;
      pos = {0.5 * d.v * (t + (std::sin(w * t + d.phase) - std::sin(d.phase)) / w), 0.0};
      vel = {0.5 * d.v * (1.0 + std::cos(w * t + d.phase)), 0.0};
      return;
    }
    case Family::merge_drift: {
      const double since = t - d.t_merge;
      pos = {d.v * t, d.lat_rate * std::max(0.0, since)};
      vel = {d.v, since > 0.0 ? d.lat_rate : 0.0};
      return;
    }
  }
  throw ConfigError("stream: invalid family value");
}

Eigen::Matrix2d rotation(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

RawCase generate_case(const TaskSpec& spec, const Horizon& horizon, int task_id,
                      std::int64_t case_id, std::mt19937_64& rng) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  CaseDynamics dyn;
  dyn.family = spec.family;
  const double jitter = spec.param("speed_jitter", 0.0);
  dyn.v = std::max(0.0, spec.param("speed", 5.0) + jitter * sym(rng));
  switch (spec.family) {
    case Family::constant_velocity:
      break;
    case Family::constant_turn:
      dyn.omega = spec.param("turn_rate", 0.3) + spec.param("turn_jitter", 0.0) * sym(rng);
      break;
    case Family::sinusoidal_weave:
      dyn.amplitude = spec.param("amplitude", 1.5);
      dyn.period = spec.param("period", 4.0);
      dyn.phase = kTwoPi * unit(rng);
      break;
    case Family::stop_and_go:
      dyn.period = spec.param("period", 4.0);
      dyn.phase = kTwoPi * unit(rng);
      break;
    case Family::merge_drift:
      dyn.lat_rate = spec.param("lat_rate", 1.0);
      dyn.t_merge = horizon.history_steps() * horizon.dt;  // drift starts at t_c
      break;
  }

  const Vec2 origin{100.0 * sym(rng), 100.0 * sym(rng)};
  const Eigen::Matrix2d world = rotation(kTwoPi * unit(rng));
  const double sigma = spec.param("noise_sigma", 0.0);

  const int n_hist = horizon.history_steps();
  const double t_c = n_hist * horizon.dt;

  RawCase raw;
  raw.task_id = task_id;
  raw.case_id = case_id;

  AgentTrack target;
  target.agent_id = 0;
  target.is_target = true;
  for (int k = 1; k <= n_hist; ++k) {
    const double t = k * horizon.dt;
    Vec2 pos, vel;
    canonical_state(dyn, t, pos, vel);
    Vec2 wpos = origin + world * pos;
    Vec2 wvel = world * vel;
    if (sigma > 0.0) {
      wpos += sigma * Vec2{gauss(rng), gauss(rng)};
      wvel += sigma * Vec2{gauss(rng), gauss(rng)};
    }
    target.t.push_back(t);
    target.pos.push_back(wpos);
    target.vel.push_back(wvel);
  }
  {
    // future row: exact kinematics, no observation noise
    Vec2 pos, vel;
    canonical_state(dyn, t_c + horizon.t_pred, pos, vel);
    target.t.push_back(t_c + horizon.t_pred);
    target.pos.push_back(origin + world * pos);
    target.vel.push_back(world * vel);
  }
  raw.agents.push_back(std::move(target));

  for (int j = 0; j < spec.n_surrounding; ++j) {
    AgentTrack sa;
    sa.agent_id = j + 1;
    Vec2 offset{20.0 * sym(rng), 20.0 * sym(rng)};
    while (offset.norm() < 2.0) offset = {20.0 * sym(rng), 20.0 * sym(rng)};
    const double sa_speed = (0.3 + unit(rng)) * std::max(1.0, dyn.v);
    const Vec2 sa_vel = rotation(kTwoPi * unit(rng)) * Vec2{sa_speed, 0.0};
    const Vec2 sa_origin = origin + offset;
    for (int k = 1; k <= n_hist; ++k) {
      const double t = k * horizon.dt;
      Vec2 wpos = sa_origin + t * sa_vel;
      Vec2 wvel = sa_vel;
      if (sigma > 0.0) {
        wpos += sigma * Vec2{gauss(rng), gauss(rng)};
        wvel += sigma * Vec2{gauss(rng), gauss(rng)};
      }
      sa.t.push_back(t);
      sa.pos.push_back(wpos);
      sa.vel.push_back(wvel);
    }
    raw.agents.push_back(std::move(sa));
  }
  return raw;
}

std::optional<std::size_t> find_row(const AgentTrack& track, double t, double tol) {
  std::size_t best = 0;
  double best_err = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < track.t.size(); ++i) {
    const double err = std::abs(track.t[i] - t);
    if (err < best_err) {
      best_err = err;
      best = i;
    }
  }
  if (best_err <= tol) return best;
  return std::nullopt;
}

std::string case_label(const RawCase& raw) {
  return "task " + std::to_string(raw.task_id) + " case " + std::to_string(raw.case_id);
}

}  // namespace

RawTaskData generate_raw_task(const TaskSpec& spec, const Horizon& horizon) {
  spec.validate();
  horizon.validate();
  RawTaskData data;
  std::mt19937_64 train_rng(mix_seed(spec.seed, 0x7261696eull));  // "rain"
  std::mt19937_64 test_rng(mix_seed(spec.seed, 0x74657374ull));   // "test"
  data.train.reserve(static_cast<std::size_t>(spec.n_train));
  for (int i = 0; i < spec.n_train; ++i) {
    data.train.push_back(generate_case(spec, horizon, spec.task_id, i, train_rng));
  }
  data.test.reserve(static_cast<std::size_t>(spec.n_test));
  for (int i = 0; i < spec.n_test; ++i) {
    data.test.push_back(generate_case(spec, horizon, spec.task_id, i, test_rng));
  }
  return data;
}

Sample normalize_case(const RawCase& raw, const Horizon& horizon, int n_surrounding) {
  const int n_hist = horizon.history_steps();
  const double tol = 0.5 * horizon.dt;

  const AgentTrack* target = nullptr;
  for (const AgentTrack& agent : raw.agents) {
    for (std::size_t i = 1; i < agent.t.size(); ++i) {
      if (!(agent.t[i] > agent.t[i - 1])) {
        throw DataError(case_label(raw) + ": non-monotone timestamps for agent " +
                        std::to_string(agent.agent_id));
      }
    }
    if (agent.is_target) {
      if (target != nullptr) throw DataError(case_label(raw) + ": multiple target agents");
      target = &agent;
    }
  }
  if (target == nullptr) throw DataError(case_label(raw) + ": missing target agent");
  if (static_cast<int>(target->t.size()) < n_hist + 1) {
    throw DataError(case_label(raw) + ": target history shorter than observation window");
  }

  const double t_c = target->t[static_cast<std::size_t>(n_hist - 1)];
  const auto future = find_row(*target, t_c + horizon.t_pred, tol);
  if (!future) {
    throw DataError(case_label(raw) + ": no target row at t_c + t_pred");
  }

  const Vec2 center = target->pos[static_cast<std::size_t>(n_hist - 1)];
  const Vec2 v_c = target->vel[static_cast<std::size_t>(n_hist - 1)];
  const double speed = v_c.norm();

  Eigen::Matrix2d align = Eigen::Matrix2d::Identity();
  if (speed >= kMinFrameSpeed) {
    const Vec2 u = v_c / speed;
    align << u.x(), u.y(), -u.y(), u.x();
  }

  // surrounding agents by distance at t_c, then agent id; missing t_c row sorts last
  struct Ranked {
    const AgentTrack* agent;
    double dist;
  };
  std::vector<Ranked> ranked;
  for (const AgentTrack& agent : raw.agents) {
    if (agent.is_target) continue;
    double dist = std::numeric_limits<double>::infinity();
    if (const auto row = find_row(agent, t_c, tol)) {
      dist = (agent.pos[*row] - center).norm();
    }
    ranked.push_back({&agent, dist});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.agent->agent_id < b.agent->agent_id;
  });

  Sample sample;
  sample.task_id = raw.task_id;
  sample.case_id = raw.case_id;
  sample.features = Vec::Zero(feature_dim(n_surrounding, horizon));

  const auto fill_agent = [&](int slot, const AgentTrack& agent) {
    for (int k = 0; k < n_hist; ++k) {
      const auto row = find_row(agent, target->t[static_cast<std::size_t>(k)], tol);
      if (!row) continue;  // stays zero-padded
      const Vec2 rel_pos = kFeatureScale * (align * (agent.pos[*row] - center));
      const Vec2 rel_vel = kFeatureScale * (align * agent.vel[*row]);
      const int base = ((slot * n_hist) + k) * 4;
      sample.features[base + 0] = rel_pos.x();
      sample.features[base + 1] = rel_pos.y();
      sample.features[base + 2] = rel_vel.x();
      sample.features[base + 3] = rel_vel.y();
    }
  };

  fill_agent(0, *target);
  for (int j = 0; j < n_surrounding && j < static_cast<int>(ranked.size()); ++j) {
    if (!std::isfinite(ranked[static_cast<std::size_t>(j)].dist)) break;
    fill_agent(j + 1, *ranked[static_cast<std::size_t>(j)].agent);
  }

  sample.gt_endpoint = align * (target->pos[*future] - center);
  sample.ta_speed = speed;
  const double disp = sample.gt_endpoint.norm();
  sample.heading_unit = disp > 1e-9 ? Vec2(sample.gt_endpoint / disp) : Vec2(1.0, 0.0);
  return sample;
}

TaskData generate_task(const TaskSpec& spec, const Horizon& horizon) {
  const RawTaskData raw = generate_raw_task(spec, horizon);
  TaskData data;
  data.train.reserve(raw.train.size());
  data.test.reserve(raw.test.size());
  for (const RawCase& c : raw.train) {
    data.train.push_back(normalize_case(c, horizon, spec.n_surrounding));
  }
  for (const RawCase& c : raw.test) {
    data.test.push_back(normalize_case(c, horizon, spec.n_surrounding));
  }
  return data;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

constexpr const char* kCsvHeader = "task_id,case_id,agent_id,t,x,y,vx,vy,is_target";

struct CsvRow {
  double t, x, y, vx, vy;
  bool is_target;
};

template <typename T>
T parse_number(const std::string& field, int line, const char* what) {
  T value{};
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{} || result.ptr != end) {
    throw DataError("csv line " + std::to_string(line) + ": malformed " + what + " '" +
                    field + "'");
  }
  return value;
}

}  // namespace

void write_cases_csv(const std::filesystem::path& path, std::span<const RawCase> cases) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open csv for writing: " + path.string());
  os << kCsvHeader << '\n';
  for (const RawCase& raw : cases) {
    for (const AgentTrack& agent : raw.agents) {
      for (std::size_t i = 0; i < agent.t.size(); ++i) {
        os << raw.task_id << ',' << raw.case_id << ',' << agent.agent_id << ','
           << format_double(agent.t[i]) << ',' << format_double(agent.pos[i].x()) << ','
           << format_double(agent.pos[i].y()) << ',' << format_double(agent.vel[i].x())
           << ',' << format_double(agent.vel[i].y()) << ',' << (agent.is_target ? 1 : 0)
           << '\n';
      }
    }
  }
  if (!os) throw IoError("failed writing csv: " + path.string());
}

std::vector<RawCase> read_cases_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open csv: " + path.string());

  std::string line;
  if (!std::getline(is, line)) throw DataError("csv: empty file " + path.string());
  if (line.ends_with('\r')) line.pop_back();
  if (line != kCsvHeader) {
    throw DataError("csv line 1: expected header '" + std::string(kCsvHeader) + "'");
  }

  // (task_id, case_id) -> agent_id -> rows
  std::map<std::pair<int, std::int64_t>, std::map<int, std::vector<CsvRow>>> grouped;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.ends_with('\r')) line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 9) {
      throw DataError("csv line " + std::to_string(line_no) + ": expected 9 fields, got " +
                      std::to_string(fields.size()));
    }

    const int task_id = parse_number<int>(fields[0], line_no, "task_id");
    const auto case_id = parse_number<std::int64_t>(fields[1], line_no, "case_id");
    const int agent_id = parse_number<int>(fields[2], line_no, "agent_id");
    CsvRow row;
    row.t = parse_number<double>(fields[3], line_no, "t");
    row.x = parse_number<double>(fields[4], line_no, "x");
    row.y = parse_number<double>(fields[5], line_no, "y");
    row.vx = parse_number<double>(fields[6], line_no, "vx");
    row.vy = parse_number<double>(fields[7], line_no, "vy");
    if (fields[8] != "0" && fields[8] != "1") {
      throw DataError("csv line " + std::to_string(line_no) + ": is_target must be 0 or 1");
    }
    row.is_target = fields[8] == "1";
    grouped[{task_id, case_id}][agent_id].push_back(row);
  }

  std::vector<RawCase> cases;
  cases.reserve(grouped.size());
  for (auto& [key, agents] : grouped) {
    RawCase raw;
    raw.task_id = key.first;
    raw.case_id = key.second;
    for (auto& [agent_id, rows] : agents) {
      std::sort(rows.begin(), rows.end(),
                [](const CsvRow& a, const CsvRow& b) { return a.t < b.t; });
      AgentTrack track;
      track.agent_id = agent_id;
      track.is_target = rows.front().is_target;
      for (const CsvRow& row : rows) {
        if (row.is_target != track.is_target) {
          throw DataError(case_label(raw) + ": inconsistent is_target for agent " +
                          std::to_string(agent_id));
        }
        track.t.push_back(row.t);
        track.pos.push_back({row.x, row.y});
        track.vel.push_back({row.vx, row.vy});
      }
      raw.agents.push_back(std::move(track));
    }
    cases.push_back(std::move(raw));
  }
  return cases;
}

std::map<int, std::vector<Sample>> load_samples_csv(const std::filesystem::path& path,
                                                    const Horizon& horizon,
                                                    int n_surrounding) {
  std::map<int, std::vector<Sample>> out;
  for (const RawCase& raw : read_cases_csv(path)) {
    out[raw.task_id].push_back(normalize_case(raw, horizon, n_surrounding));
  }
  return out;
}

void StreamConfig::validate() const {
  if (batch_size < 1) throw ConfigError("stream: batch_size must be >= 1");
  horizon.validate();
  if (tasks.empty()) throw ConfigError("stream: no tasks configured");
  for (const TaskSpec& spec : tasks) spec.validate();
  for (const TaskSpec& spec : tasks) {
    if (spec.n_surrounding != tasks.front().n_surrounding) {
      throw ConfigError("stream: all tasks must share n_surrounding");
    }
  }
}

std::int64_t StreamConfig::total_train() const {
  return std::accumulate(tasks.begin(), tasks.end(), std::int64_t{0},
                         [](std::int64_t acc, const TaskSpec& t) { return acc + t.n_train; });
}

Stream::Stream(const StreamConfig& config, std::span<const TaskData> data,
               std::uint64_t shuffle_seed) {
  config.validate();
  if (data.size() != config.tasks.size()) {
    throw ConfigError("stream: dataset count does not match task count");
  }
  for (std::size_t ti = 0; ti < config.tasks.size(); ++ti) {
    std::vector<Sample> samples = data[ti].train;
    std::mt19937_64 rng(mix_seed(shuffle_seed, ti));
    std::shuffle(samples.begin(), samples.end(), rng);

    const int b = config.batch_size;
    const std::int64_t n = static_cast<std::int64_t>(samples.size());
    for (std::int64_t pos = 0; pos < n; pos += b) {
      Batch batch;
      batch.task_id = config.tasks[ti].task_id;
      batch.task_index = static_cast<int>(ti);
      const std::int64_t end = std::min<std::int64_t>(pos + b, n);
      batch.samples.assign(samples.begin() + pos, samples.begin() + end);
      batch.last_in_task = end == n;
      batches_.push_back(std::move(batch));
    }
    total_ += n;
  }
}

std::optional<Stream::Batch> Stream::next() {
  if (cursor_ >= batches_.size()) return std::nullopt;
  return batches_[cursor_++];
}

}  // namespace syrem
