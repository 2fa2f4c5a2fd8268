// Command-line front end: gen-data / run / suite / report.
//
// Exit codes: 0 success, 1 configuration error, 2 data error, 3 I/O error.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "syrem/config.hpp"
#include "syrem/errors.hpp"
#include "syrem/harness.hpp"
#include "syrem/rng.hpp"
#include "syrem/stream.hpp"

namespace {

using namespace syrem;

struct SeedOverrides {
  std::optional<std::uint64_t> data, init, buffer, selection;

  void apply(Seeds& seeds) const {
    if (data) seeds.data = *data;
    if (init) seeds.init = *init;
    if (buffer) seeds.buffer = *buffer;
    if (selection) seeds.selection = *selection;
  }
};

ExperimentConfig load_experiment(const std::string& config_path) {
  if (config_path.empty()) return default_experiment();
  return config_from_doc(ConfigDoc::parse_file(config_path));
}

void add_seed_flags(CLI::App* cmd, SeedOverrides& seeds) {
  cmd->add_option("--seed-data", seeds.data, "Override the data seed");
  cmd->add_option("--seed-init", seeds.init, "Override the weight-init seed");
  cmd->add_option("--seed-buffer", seeds.buffer, "Override the reservoir seed");
  cmd->add_option("--seed-selection", seeds.selection, "Override the selection seed");
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir,
                 const SeedOverrides& seeds) {
  ExperimentConfig config = load_experiment(config_path);
  seeds.apply(config.strategy.seeds);
  if (config.source.kind != DataSource::Kind::synthetic) {
    throw ConfigError("gen-data: config must use synthetic data");
  }
  config.stream.validate();

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir);

  std::vector<RawCase> train;
  std::vector<RawCase> test;
  for (std::size_t ti = 0; ti < config.stream.tasks.size(); ++ti) {
    TaskSpec spec = config.stream.tasks[ti];
    spec.seed = mix_seed(config.strategy.seeds.data, mix_seed(ti, spec.seed));
    RawTaskData raw = generate_raw_task(spec, config.stream.horizon);
    train.insert(train.end(), raw.train.begin(), raw.train.end());
    test.insert(test.end(), raw.test.begin(), raw.test.end());
  }
  const auto train_path = std::filesystem::path(out_dir) / "train.csv";
  const auto test_path = std::filesystem::path(out_dir) / "test.csv";
  write_cases_csv(train_path, train);
  write_cases_csv(test_path, test);
  std::cout << "wrote " << train.size() << " train cases to " << train_path.string()
            << "\nwrote " << test.size() << " test cases to " << test_path.string() << "\n";
  return 0;
}

RunRecord run_one(ExperimentConfig config, Strategy strategy,
                  const std::filesystem::path& out_dir) {
  config.strategy.strategy = strategy;
  RunRecord rec =
      strategy == Strategy::jotr ? run_jotr(config) : run_experiment(config);
  rec.save(out_dir);
  std::cout << to_string(strategy) << ": " << rec.total_steps << " steps, "
            << rec.wall_seconds << " s -> " << out_dir.string() << "\n";
  return rec;
}

int cmd_run(const std::string& config_path, const std::string& strategy_name,
            const std::string& out_dir, const SeedOverrides& seeds) {
  ExperimentConfig config = load_experiment(config_path);
  seeds.apply(config.strategy.seeds);
  const Strategy strategy = strategy_name.empty() ? config.strategy.strategy
                                                  : strategy_from_string(strategy_name);
  run_one(std::move(config), strategy, out_dir);
  return 0;
}

int cmd_suite(const std::string& config_path, const std::string& out_dir,
              const SeedOverrides& seeds) {
  ExperimentConfig config = load_experiment(config_path);
  seeds.apply(config.strategy.seeds);

  const Strategy all[] = {Strategy::vanilla, Strategy::vanilla_gp, Strategy::syrem_r,
                          Strategy::syrem, Strategy::jotr};
  std::vector<RunRecord> records;
  for (Strategy strategy : all) {
    records.push_back(
        run_one(config, strategy, std::filesystem::path(out_dir) / to_string(strategy)));
  }
  report(records, std::filesystem::path(out_dir) / "report");
  std::cout << "report -> " << (std::filesystem::path(out_dir) / "report").string() << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& record_paths, const std::string& out_dir) {
  std::vector<RunRecord> records;
  records.reserve(record_paths.size());
  for (const std::string& path : record_paths) {
    records.push_back(RunRecord::load(path));
  }
  report(records, out_dir);
  std::cout << "report -> " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online continual-learning benchmark for trajectory forecasting"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string strategy;
  std::vector<std::string> record_paths;
  SeedOverrides seeds;

  CLI::App* gen = app.add_subcommand("gen-data", "Write synthetic tasks to CSV");
  gen->add_option("--config", config_path, "Experiment config file");
  gen->add_option("--out", out_dir, "Output directory");
  add_seed_flags(gen, seeds);

  CLI::App* run = app.add_subcommand("run", "Run one strategy over the stream");
  run->add_option("--config", config_path, "Experiment config file");
  run->add_option("--strategy", strategy,
                  "vanilla | vanilla_gp | syrem_r | syrem | jotr");
  run->add_option("--out", out_dir, "Output directory");
  add_seed_flags(run, seeds);

  CLI::App* suite = app.add_subcommand("suite", "Run all five strategies and report");
  suite->add_option("--config", config_path, "Experiment config file");
  suite->add_option("--out", out_dir, "Output directory");
  add_seed_flags(suite, seeds);

  CLI::App* rep = app.add_subcommand("report", "Render tables from saved run records");
  rep->add_option("records", record_paths, "record.json files or run directories")
      ->required();
  rep->add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_gen_data(config_path, out_dir, seeds);
    if (run->parsed()) return cmd_run(config_path, strategy, out_dir, seeds);
    if (suite->parsed()) return cmd_suite(config_path, out_dir, seeds);
    if (rep->parsed()) return cmd_report(record_paths, out_dir);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const syrem::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const syrem::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const syrem::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
