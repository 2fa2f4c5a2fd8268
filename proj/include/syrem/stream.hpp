#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "syrem/types.hpp"

namespace syrem {

// Synthetic sequential forecasting tasks and the one-pass batched stream that
// serves them. Each task family is a parametric scenario distribution; samples
// are normalized into a target-centered, heading-aligned frame with a fixed
// feature layout: (n_surrounding + 1) agents x history steps x (x, y, vx, vy),
// target agent first, surrounding agents sorted by distance at t_c, absent
// agents zero-padded. Feature channels are scaled to 0.1 per meter (and per
// m/s) to sit in the active range of the regressor; ground-truth endpoints
// stay in meters.

enum class Family {
  constant_velocity,
  constant_turn,
  sinusoidal_weave,
  stop_and_go,
  merge_drift,
};

Family family_from_string(const std::string& name);  // throws ConfigError
std::string to_string(Family family);

/// Parametric description of one scenario distribution.
///
/// family_params keys (all optional, defaults in parentheses):
///   speed (5)         mean target speed, m/s
///   speed_jitter (0)  uniform +- spread of the per-case speed
///   noise_sigma (0)   observation noise sigma on history rows, meters
///   turn_rate (0.3)   constant_turn: yaw rate, rad/s
///   turn_jitter (0)   constant_turn: uniform +- spread of the yaw rate
///   amplitude (1.5)   sinusoidal_weave: lateral amplitude, m
///   period (4)        sinusoidal_weave / stop_and_go: cycle period, s
///   lat_rate (1)      merge_drift: lateral speed after the merge point, m/s
struct TaskSpec {
  int task_id = 0;
  Family family = Family::constant_velocity;
  std::map<std::string, double> family_params;
  int n_surrounding = 2;
  int n_train = 1;
  int n_test = 1;
  std::uint64_t seed = 0;

  double param(const std::string& key, double fallback) const;
  void validate() const;
};

struct Horizon {
  double t_obs = 1.0;
  double t_pred = 3.0;
  double dt = 0.1;

  int history_steps() const;  // round(t_obs / dt)
  void validate() const;
};

/// Flattened feature length: (n_surrounding + 1) * history_steps * 4.
int feature_dim(int n_surrounding, const Horizon& horizon);

/// World-frame trajectory of one agent within a case.
struct AgentTrack {
  int agent_id = 0;
  bool is_target = false;
  std::vector<double> t;
  std::vector<Vec2> pos;
  std::vector<Vec2> vel;
};

/// A case as it appears on disk: noisy observed history for every agent plus
/// the target's future row. Normalization happens on load.
struct RawCase {
  int task_id = 0;
  std::int64_t case_id = 0;
  std::vector<AgentTrack> agents;
};

struct RawTaskData {
  std::vector<RawCase> train;
  std::vector<RawCase> test;
};

struct TaskData {
  std::vector<Sample> train;
  std::vector<Sample> test;
};

/// Simulates the task's scenario distribution; deterministic for a fixed
/// spec.seed. Train and test cases come from independent substreams.
RawTaskData generate_raw_task(const TaskSpec& spec, const Horizon& horizon);

/// Cuts the observation/prediction windows, centers on the target agent at
/// t_c, aligns the frame with its observed heading (world frame below
/// 0.1 m/s), and flattens features. Throws DataError on an unusable case.
Sample normalize_case(const RawCase& raw, const Horizon& horizon, int n_surrounding);

/// generate_raw_task + normalize_case for every case.
TaskData generate_task(const TaskSpec& spec, const Horizon& horizon);

/// CSV schema (header required):
///   task_id:int,case_id:int,agent_id:int,t:float,x:float,y:float,
///   vx:float,vy:float,is_target:{0,1}
/// Exactly one is_target=1 agent per case. Values round-trip exactly.
void write_cases_csv(const std::filesystem::path& path, std::span<const RawCase> cases);

/// Parses and groups rows by (task_id, case_id); row order is irrelevant.
/// Throws DataError with the line number on malformed rows.
std::vector<RawCase> read_cases_csv(const std::filesystem::path& path);

/// read_cases_csv + normalize_case, grouped per task (ascending task_id).
std::map<int, std::vector<Sample>> load_samples_csv(const std::filesystem::path& path,
                                                    const Horizon& horizon,
                                                    int n_surrounding);

struct StreamConfig {
  std::vector<TaskSpec> tasks;  // served in this order, each exhausted in turn
  int batch_size = 8;
  Horizon horizon;

  void validate() const;
  std::int64_t total_train() const;
};

/// One-pass batch iterator over the configured task order. Samples are
/// shuffled within each task; batches never straddle a task boundary.
class Stream {
 public:
  struct Batch {
    int task_id = 0;
    int task_index = 0;  // position in the configured task order
    std::vector<Sample> samples;
    bool last_in_task = false;
  };

  Stream(const StreamConfig& config, std::span<const TaskData> data,
         std::uint64_t shuffle_seed);

  std::optional<Batch> next();
  std::int64_t total_samples() const { return total_; }

 private:
  std::vector<Batch> batches_;
  std::size_t cursor_ = 0;
  std::int64_t total_ = 0;
};

}  // namespace syrem
