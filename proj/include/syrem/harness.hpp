#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "syrem/memory.hpp"
#include "syrem/metrics.hpp"
#include "syrem/net.hpp"
#include "syrem/rehearsal.hpp"
#include "syrem/stream.hpp"
#include "syrem/types.hpp"

namespace syrem {

// Experiment driver: runs one training strategy over the one-pass stream,
// evaluates on every test set at each task boundary, and records everything
// needed to rebuild the reported metrics.

enum class Strategy { vanilla, vanilla_gp, syrem_r, syrem, jotr };

Strategy strategy_from_string(const std::string& name);  // throws ConfigError
std::string to_string(Strategy strategy);

/// All randomness flows from these four named seeds; each consumer derives
/// its own substream so that enabling or disabling one mechanism never
/// shifts the draws of another.
struct Seeds {
  std::uint64_t data = 1;
  std::uint64_t init = 2;
  std::uint64_t buffer = 3;
  std::uint64_t selection = 4;
};

struct StrategyConfig {
  Strategy strategy = Strategy::syrem;
  int buffer_capacity = 1000;
  int m_candidates = 16;
  int batch_size = 8;
  GcMode gc_mode = GcMode::batch_mean;
  Seeds seeds;
  double learning_rate = 1e-3;
  bool rehearsal_enabled = true;   // diagnostic switches for the syrem path
  bool projection_enabled = true;
  int eval_every = 0;  // optional intra-task joint-test cadence, 0 = off

  /// m_candidates >= 2 * batch_size is enforced; a buffer above 5% of the
  /// declared stream length only warns (stderr).
  void validate(std::int64_t declared_stream_length) const;
};

/// Architecture knobs; input_dim is derived from the stream geometry.
struct NetSpec {
  std::vector<int> hidden_dims{64, 64};
  int n_heads = 6;
  Activation activation = Activation::tanh;
};

struct DataSource {
  enum class Kind { synthetic, csv };
  Kind kind = Kind::synthetic;
  std::filesystem::path train_csv;
  std::filesystem::path test_csv;
  int n_surrounding = 2;  // agent slots when normalizing CSV cases
};

struct ExperimentConfig {
  DataSource source;
  StreamConfig stream;  // tasks listed here for synthetic data
  NetSpec net;
  StrategyConfig strategy;
};

/// Stream config with final task list, materialized datasets, and the fixed
/// joint test union.
struct ResolvedExperiment {
  StreamConfig stream;
  NetConfig net;
  std::vector<TaskData> data;
  std::vector<Sample> joint_test;
};

/// Generates synthetic tasks (seeded from seeds.data and each task's own
/// seed) or loads the configured CSVs.
ResolvedExperiment resolve_experiment(const ExperimentConfig& config);

struct StepLog {
  std::int64_t step = 0;
  int task_id = 0;
  double loss_current = 0.0;
  double loss_rehearsal = 0.0;
  bool rehearsed = false;
  bool projected = false;
  double inner_product = 0.0;
  double lambda = 0.0;
};

struct SimTraceRow {
  std::int64_t step = 0;
  int rank = 0;          // position within the selected batch, score order
  int buffer_index = 0;  // long-term buffer slot of the replayed sample
  double score = 0.0;
};

/// Mutable training-loop state owned by the driver.
struct TrainState {
  ParamVector params;
  OptimizerState opt;
  LongTermBuffer buffer;
  TemporalBuffer temporal;
  std::mt19937_64 candidate_rng;   // rehearsal candidate draws
  std::mt19937_64 pick_rng;        // syrem_r's random picks
  std::mt19937_64 projection_rng;  // memory-gradient batch draws
  std::int64_t step = 0;

  static TrainState init(const NetConfig& net, const StrategyConfig& cfg);
};

struct StepOutcome {
  StepLog log;
  std::vector<SimTraceRow> trace;
};

/// One optimizer update on `batch` under the configured strategy, including
/// buffer maintenance. Degenerate early-stream steps (buffer or temporal
/// still empty) degrade to the plain update.
StepOutcome train_step(TrainState& state, std::span<const Sample> batch, int task_id,
                       const StrategyConfig& cfg);

/// Per-stage snapshot of everything the run logged at a task boundary.
struct StageMetrics {
  int stage = 0;  // 0-based: index of the task just finished
  std::vector<Score> per_task;
  Score joint;
  Score ct;
  std::optional<Score> bwt;  // absent at stage 0
  std::optional<Score> fwt;  // absent at the final stage
};

/// Intra-task diagnostic evaluation (only with eval_every > 0).
struct DiagPoint {
  std::int64_t step = 0;
  Score joint;
};

struct RunRecord {
  static constexpr int kSchemaVersion = 1;

  std::string strategy;
  Seeds seeds;
  std::map<std::string, std::string> config_kv;  // canonical config snapshot
  std::string config_hash;
  ResultMatrix matrix;
  std::vector<StageMetrics> stages;
  std::vector<DiagPoint> diagnostics;
  std::vector<StepLog> step_logs;
  std::vector<SimTraceRow> sim_trace;
  double mean_similarity = 0.0;  // mean score over every replayed sample
  std::int64_t total_steps = 0;
  std::int64_t projected_steps = 0;
  double wall_seconds = 0.0;

  /// Writes record.json plus loss.csv / projection.csv / sim_trace.csv.
  void save(const std::filesystem::path& dir) const;
  /// Reads record.json (given the file or its directory). Step logs are not
  /// reloaded. Throws DataError on schema mismatch.
  static RunRecord load(const std::filesystem::path& path);
};

/// Runs the configured strategy over the one-pass stream; fills one result
/// row per task boundary. `final_params`, when given, receives the trained
/// parameters.
RunRecord run_experiment(const ExperimentConfig& config,
                         ParamVector* final_params = nullptr);

/// Joint-training reference: for every prefix length, trains a fresh model
/// on the shuffled union of the prefix tasks with the same step budget the
/// one-pass run spends there, then evaluates like any other stage.
RunRecord run_jotr(const ExperimentConfig& config);

/// Renders BWT/CT/FWT tables, the joint-test series, R-matrix grids, and
/// similarity aggregates as CSV files plus a plain-text summary.
void report(std::span<const RunRecord> records, const std::filesystem::path& out_dir);

}  // namespace syrem
