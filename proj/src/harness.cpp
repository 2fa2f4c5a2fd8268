#include "syrem/harness.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>

#include "syrem/config.hpp"
#include "syrem/errors.hpp"
#include "syrem/projection.hpp"
#include "syrem/rng.hpp"

namespace syrem {

namespace {

// Substream tags for the named seeds.
constexpr std::uint64_t kCandidateStream = 1;
constexpr std::uint64_t kPickStream = 2;
constexpr std::uint64_t kProjectionStream = 3;
constexpr std::uint64_t kStreamShuffle = 4;
constexpr std::uint64_t kJotrShuffle = 5;

}  // namespace

Strategy strategy_from_string(const std::string& name) {
  if (name == "vanilla") return Strategy::vanilla;
  if (name == "vanilla_gp") return Strategy::vanilla_gp;
  if (name == "syrem_r") return Strategy::syrem_r;
  if (name == "syrem") return Strategy::syrem;
  if (name == "jotr") return Strategy::jotr;
  throw ConfigError("harness: unknown strategy '" + name + "'");
}

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::vanilla: return "vanilla";
    case Strategy::vanilla_gp: return "vanilla_gp";
    case Strategy::syrem_r: return "syrem_r";
    case Strategy::syrem: return "syrem";
    case Strategy::jotr: return "jotr";
  }
  throw ConfigError("harness: invalid strategy value");
}

void StrategyConfig::validate(std::int64_t declared_stream_length) const {
  if (batch_size < 1) throw ConfigError("harness: batch_size must be >= 1");
  if (buffer_capacity < 0) throw ConfigError("harness: buffer_capacity must be >= 0");
  if (m_candidates < 2 * batch_size) {
    throw ConfigError("harness: m_candidates must be >= 2 * batch_size");
  }
  if (learning_rate <= 0.0) throw ConfigError("harness: learning_rate must be > 0");
  if (eval_every < 0) throw ConfigError("harness: eval_every must be >= 0");
  if (!buffer_within_budget(buffer_capacity, declared_stream_length)) {
    std::cerr << "warning: buffer capacity " << buffer_capacity
              << " exceeds 5% of the declared stream length " << declared_stream_length
              << "\n";
  }
}

ResolvedExperiment resolve_experiment(const ExperimentConfig& config) {
  ResolvedExperiment rx;
  rx.stream = config.stream;

  if (config.source.kind == DataSource::Kind::synthetic) {
    rx.stream.validate();
    for (std::size_t ti = 0; ti < rx.stream.tasks.size(); ++ti) {
      TaskSpec effective = rx.stream.tasks[ti];
      // the run's data seed and the task's own seed both feed generation
      effective.seed = mix_seed(config.strategy.seeds.data, mix_seed(ti, effective.seed));
      rx.data.push_back(generate_task(effective, rx.stream.horizon));
    }
  } else {
    const int n_sur = config.source.n_surrounding;
    auto train_map = load_samples_csv(config.source.train_csv, rx.stream.horizon, n_sur);
    auto test_map = load_samples_csv(config.source.test_csv, rx.stream.horizon, n_sur);
    if (train_map.empty()) {
      throw DataError("csv: no training cases in " + config.source.train_csv.string());
    }
    rx.stream.tasks.clear();
    for (auto& [task_id, train] : train_map) {
      const auto test_it = test_map.find(task_id);
      if (test_it == test_map.end() || test_it->second.empty()) {
        throw DataError("csv: task " + std::to_string(task_id) + " has no test cases");
      }
      TaskSpec spec;
      spec.task_id = task_id;
      spec.n_surrounding = n_sur;
      spec.n_train = static_cast<int>(train.size());
      spec.n_test = static_cast<int>(test_it->second.size());
      rx.stream.tasks.push_back(spec);
      TaskData data;
      data.train = std::move(train);
      data.test = std::move(test_it->second);
      rx.data.push_back(std::move(data));
    }
    rx.stream.validate();
  }

  NetConfig net;
  net.input_dim = feature_dim(rx.stream.tasks.front().n_surrounding, rx.stream.horizon);
  net.hidden_dims = config.net.hidden_dims;
  net.n_heads = config.net.n_heads;
  net.activation = config.net.activation;
  net.validate();
  rx.net = net;

  for (const TaskData& data : rx.data) {
    rx.joint_test.insert(rx.joint_test.end(), data.test.begin(), data.test.end());
  }
  return rx;
}

TrainState TrainState::init(const NetConfig& net, const StrategyConfig& cfg) {
  TrainState state;
  state.params = init_network(net, cfg.seeds.init);
  state.opt = OptimizerState::init(state.params.layout.total);
  state.opt.lr = cfg.learning_rate;
  state.buffer = LongTermBuffer(cfg.buffer_capacity, cfg.seeds.buffer);
  state.candidate_rng.seed(mix_seed(cfg.seeds.selection, kCandidateStream));
  state.pick_rng.seed(mix_seed(cfg.seeds.selection, kPickStream));
  state.projection_rng.seed(mix_seed(cfg.seeds.selection, kProjectionStream));
  return state;
}

StepOutcome train_step(TrainState& state, std::span<const Sample> batch, int task_id,
                       const StrategyConfig& cfg) {
  if (batch.empty()) throw ConfigError("harness: empty training batch");
  StepOutcome out;
  out.log.step = state.step;
  out.log.task_id = task_id;

  const Strategy strat = cfg.strategy;
  const bool buffered = strat == Strategy::vanilla_gp || strat == Strategy::syrem ||
                        strat == Strategy::syrem_r;
  const bool rehearses = strat == Strategy::syrem || strat == Strategy::syrem_r;
  const int b = cfg.batch_size;

  RehearsalSet reh;
  if (rehearses && cfg.rehearsal_enabled && state.buffer.size() >= cfg.m_candidates &&
      !state.temporal.empty()) {
    const std::vector<Candidate> candidates =
        sample_candidates(state.buffer, cfg.m_candidates, state.candidate_rng);
    if (strat == Strategy::syrem) {
      reh = select_rehearsal(state.params, state.temporal, candidates, b, cfg.gc_mode);
    } else {
      // random pick; cosine scores still recorded for the similarity trace
      std::vector<Candidate> chosen;
      chosen.reserve(static_cast<std::size_t>(b));
      for (int idx : draw_without_replacement(cfg.m_candidates, b, state.pick_rng)) {
        chosen.push_back(candidates[static_cast<std::size_t>(idx)]);
      }
      const GradVector g_c = reference_gradient(state.params, state.temporal, cfg.gc_mode);
      reh = select_top(score_candidates(state.params, g_c, chosen), b);
    }
    for (int i = 0; i < reh.size(); ++i) {
      out.trace.push_back({state.step, i, reh.buffer_indices[static_cast<std::size_t>(i)],
                           reh.scores[static_cast<std::size_t>(i)]});
    }
  }

  auto [loss_current, grad] = loss_and_grad(state.params, batch);
  out.log.loss_current = loss_current;
  if (!reh.empty()) {
    auto [loss_reh, grad_reh] = loss_and_grad(state.params, reh.samples);
    out.log.loss_rehearsal = loss_reh;
    out.log.rehearsed = true;
    grad.values += grad_reh.values;  // unweighted sum of the two loss terms
  }

  const bool projecting =
      (strat == Strategy::vanilla_gp || (rehearses && cfg.projection_enabled)) &&
      state.buffer.size() > 0;
  if (projecting) {
    const int mem_b = std::min(b, state.buffer.size());
    const std::vector<Sample> mem_batch =
        sample_projection_batch(state.buffer, mem_b, state.projection_rng);
    const GradVector g_mem = loss_and_grad(state.params, mem_batch).second;
    ProjectionOutcome proj = project(grad, g_mem);
    out.log.projected = proj.projected;
    out.log.inner_product = proj.inner_product;
    out.log.lambda = proj.lambda;
    grad = std::move(proj.gradient);
  }

  adam_step(state.params, grad, state.opt);

  // buffer maintenance after the update so a sample never rehearses itself
  if (rehearses) set_temporal(state.temporal, batch);
  if (buffered) {
    for (const Sample& s : batch) state.buffer.insert(s);
  }
  state.step += 1;
  return out;
}

namespace {

StageMetrics make_stage_metrics(const ResultMatrix& matrix, int stage,
                                std::vector<Score> row, Score joint) {
  StageMetrics sm;
  sm.stage = stage;
  sm.per_task = std::move(row);
  sm.joint = joint;
  sm.ct = ct(matrix, stage);
  if (stage >= 1) sm.bwt = bwt(matrix, stage);
  if (stage < matrix.n_tasks() - 1) sm.fwt = fwt(matrix, stage);
  return sm;
}

void finalize_record(RunRecord& rec, const ExperimentConfig& config) {
  rec.strategy = to_string(config.strategy.strategy);
  rec.seeds = config.strategy.seeds;
  const ConfigDoc doc = doc_from_config(config);
  rec.config_kv = doc.values();
  rec.config_hash = config_hash(doc);
  double sum = 0.0;
  for (const SimTraceRow& row : rec.sim_trace) sum += row.score;
  rec.mean_similarity = rec.sim_trace.empty()
                            ? 0.0
                            : sum / static_cast<double>(rec.sim_trace.size());
  for (const StepLog& log : rec.step_logs) {
    if (log.projected) rec.projected_steps += 1;
  }
}

std::vector<Score> evaluate_all_tasks(const ParamVector& params,
                                      std::span<const TaskData> data) {
  std::vector<Score> row;
  row.reserve(data.size());
  for (const TaskData& task : data) row.push_back(evaluate_set(params, task.test));
  return row;
}

}  // namespace

RunRecord run_experiment(const ExperimentConfig& config, ParamVector* final_params) {
  if (config.strategy.strategy == Strategy::jotr) return run_jotr(config);
  const auto t0 = std::chrono::steady_clock::now();

  const ResolvedExperiment rx = resolve_experiment(config);
  const StrategyConfig& sc = config.strategy;
  if (sc.batch_size != rx.stream.batch_size) {
    throw ConfigError("harness: strategy and stream batch sizes disagree");
  }
  sc.validate(rx.stream.total_train());

  TrainState state = TrainState::init(rx.net, sc);
  Stream stream(rx.stream, rx.data, mix_seed(sc.seeds.data, kStreamShuffle));

  RunRecord rec;
  const int n_tasks = static_cast<int>(rx.stream.tasks.size());
  rec.matrix = ResultMatrix(n_tasks);

  int stage = 0;
  while (auto batch = stream.next()) {
    StepOutcome outcome = train_step(state, batch->samples, batch->task_id, sc);
    rec.step_logs.push_back(outcome.log);
    rec.sim_trace.insert(rec.sim_trace.end(), outcome.trace.begin(), outcome.trace.end());

    if (sc.eval_every > 0 && state.step % sc.eval_every == 0) {
      rec.diagnostics.push_back({state.step, evaluate_set(state.params, rx.joint_test)});
    }
    if (batch->last_in_task) {
      std::vector<Score> row = evaluate_all_tasks(state.params, rx.data);
      rec.matrix.fill_row(stage, row);
      rec.stages.push_back(make_stage_metrics(rec.matrix, stage, std::move(row),
                                              evaluate_set(state.params, rx.joint_test)));
      ++stage;
    }
  }

  rec.total_steps = state.step;
  finalize_record(rec, config);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (final_params != nullptr) *final_params = std::move(state.params);
  return rec;
}

RunRecord run_jotr(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();

  const ResolvedExperiment rx = resolve_experiment(config);
  const StrategyConfig& sc = config.strategy;
  if (sc.batch_size != rx.stream.batch_size) {
    throw ConfigError("harness: strategy and stream batch sizes disagree");
  }
  sc.validate(rx.stream.total_train());

  const int n_tasks = static_cast<int>(rx.stream.tasks.size());
  const int b = sc.batch_size;

  RunRecord rec;
  rec.matrix = ResultMatrix(n_tasks);

  // one-pass step budget of each prefix: sum of ceil(n_train / B)
  std::vector<std::int64_t> budget(static_cast<std::size_t>(n_tasks), 0);
  for (int i = 0; i < n_tasks; ++i) {
    const std::int64_t n = rx.stream.tasks[static_cast<std::size_t>(i)].n_train;
    budget[static_cast<std::size_t>(i)] = (i > 0 ? budget[static_cast<std::size_t>(i - 1)] : 0) + (n + b - 1) / b;
  }

  for (int prefix = 1; prefix <= n_tasks; ++prefix) {
    std::vector<Sample> pool;
    for (int i = 0; i < prefix; ++i) {
      const auto& train = rx.data[static_cast<std::size_t>(i)].train;
      pool.insert(pool.end(), train.begin(), train.end());
    }
    std::mt19937_64 rng(mix_seed(sc.seeds.data, mix_seed(kJotrShuffle, prefix)));

    ParamVector params = init_network(rx.net, sc.seeds.init);
    OptimizerState opt = OptimizerState::init(params.layout.total);
    opt.lr = sc.learning_rate;

    const std::int64_t steps = budget[static_cast<std::size_t>(prefix - 1)];
    std::int64_t done = 0;
    while (done < steps) {
      std::shuffle(pool.begin(), pool.end(), rng);
      for (std::size_t pos = 0; pos < pool.size() && done < steps; pos += static_cast<std::size_t>(b)) {
        const std::size_t end = std::min(pool.size(), pos + static_cast<std::size_t>(b));
        const std::span<const Sample> batch(pool.data() + pos, end - pos);
        auto [loss, grad] = loss_and_grad(params, batch);
        adam_step(params, grad, opt);
        StepLog log;
        log.step = rec.total_steps + done;
        log.task_id = prefix - 1;
        log.loss_current = loss;
        rec.step_logs.push_back(log);
        ++done;
      }
    }
    rec.total_steps += done;

    const int stage = prefix - 1;
    std::vector<Score> row = evaluate_all_tasks(params, rx.data);
    rec.matrix.fill_row(stage, row);
    rec.stages.push_back(make_stage_metrics(rec.matrix, stage, std::move(row),
                                            evaluate_set(params, rx.joint_test)));
  }

  finalize_record(rec, config);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

}  // namespace syrem
