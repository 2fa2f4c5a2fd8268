// Drives the installed CLI binary end to end: data generation, runs on
// synthetic and CSV data, reporting, and the exit-code contract.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "syrem/harness.hpp"

namespace {

namespace fs = std::filesystem;

int failures = 0;

void check(bool ok, const std::string& what) {
  if (!ok) {
    ++failures;
    std::cerr << "FAILED: " << what << "\n";
  }
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SYREM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status < 0) return -1;
  return WEXITSTATUS(status);
}

const char* kTinyConfig =
    "schema_version = 1\n"
    "batch_size = 8\n"
    "task_count = 2\n"
    "task.0.family = constant_velocity\n"
    "task.0.n_train = 48\n"
    "task.0.n_test = 16\n"
    "task.0.param.speed = 5\n"
    "task.1.family = merge_drift\n"
    "task.1.n_train = 48\n"
    "task.1.n_test = 16\n"
    "task.1.param.speed = 5\n"
    "task.1.param.lat_rate = 1\n"
    "n_surrounding = 1\n"
    "hidden_dims = 12\n"
    "n_heads = 3\n"
    "buffer_capacity = 24\n";

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "syrem_cli_test";
  fs::remove_all(work);
  fs::create_directories(work);
  const fs::path cfg = work / "exp.cfg";
  {
    std::ofstream os(cfg);
    os << kTinyConfig;
  }

  // gen-data writes the two CSV files
  check(run_cli("gen-data --config " + cfg.string() + " --out " + (work / "data").string()) == 0,
        "gen-data exits 0");
  check(fs::exists(work / "data" / "train.csv"), "train.csv written");
  check(fs::exists(work / "data" / "test.csv"), "test.csv written");

  // run on synthetic data
  const fs::path run_dir = work / "run_syrem";
  check(run_cli("run --config " + cfg.string() + " --strategy syrem --out " +
                run_dir.string()) == 0,
        "run exits 0");
  check(fs::exists(run_dir / "record.json"), "record.json written");
  check(fs::exists(run_dir / "loss.csv"), "loss.csv written");
  check(fs::exists(run_dir / "projection.csv"), "projection.csv written");
  check(fs::exists(run_dir / "sim_trace.csv"), "sim_trace.csv written");

  // seed overrides change the record
  check(run_cli("run --config " + cfg.string() + " --strategy vanilla --seed-data 7 --out " +
                (work / "run_v7").string()) == 0,
        "run with seed override exits 0");

  // run again on the exported CSVs
  {
    std::ofstream os(work / "csv.cfg");
    os << "schema_version = 1\n"
          "data = csv\n"
          "csv_train = " << (work / "data" / "train.csv").string() << "\n"
          "csv_test = " << (work / "data" / "test.csv").string() << "\n"
          "n_surrounding = 1\n"
          "hidden_dims = 12\n"
          "n_heads = 3\n"
          "buffer_capacity = 24\n";
  }
  check(run_cli("run --config " + (work / "csv.cfg").string() + " --strategy vanilla_gp --out " +
                (work / "run_csv").string()) == 0,
        "csv-mode run exits 0");

  // the csv export feeds back identically: same seeds, same result matrix
  check(run_cli("run --config " + cfg.string() + " --strategy vanilla_gp --out " +
                (work / "run_synth_gp").string()) == 0,
        "synthetic gp run exits 0");
  {
    const syrem::RunRecord from_csv = syrem::RunRecord::load(work / "run_csv");
    const syrem::RunRecord from_synth = syrem::RunRecord::load(work / "run_synth_gp");
    check(from_csv.matrix.fde() == from_synth.matrix.fde() &&
              from_csv.matrix.mr() == from_synth.matrix.mr(),
          "csv round-trip reproduces the synthetic run bit for bit");
  }

  // report over two records
  check(run_cli("report " + run_dir.string() + " " + (work / "run_v7").string() +
                " --out " + (work / "rep").string()) == 0,
        "report exits 0");
  check(fs::exists(work / "rep" / "bwt.csv"), "bwt.csv written");
  check(fs::exists(work / "rep" / "summary.txt"), "summary.txt written");

  // exit codes: 1 config, 2 data, 3 io
  check(run_cli("run --strategy warp --config " + cfg.string()) == 1,
        "unknown strategy exits 1");
  {
    std::ofstream os(work / "bad.cfg");
    os << "schema_version = 1\nbatch_size = fast\ntask_count = 1\n";
  }
  check(run_cli("run --config " + (work / "bad.cfg").string()) == 1, "bad config exits 1");

  {
    std::ofstream os(work / "bad.csv");
    os << "task_id,case_id,agent_id,t,x,y,vx,vy,is_target\n0,0,0,zero,0,0,0,0,1\n";
    std::ofstream cs(work / "badcsv.cfg");
    cs << "schema_version = 1\ndata = csv\ncsv_train = " << (work / "bad.csv").string()
       << "\ncsv_test = " << (work / "bad.csv").string() << "\n";
  }
  check(run_cli("run --config " + (work / "badcsv.cfg").string()) == 2,
        "malformed csv exits 2");

  {
    std::ofstream cs(work / "missing.cfg");
    cs << "schema_version = 1\ndata = csv\ncsv_train = /nonexistent/x.csv\n"
          "csv_test = /nonexistent/y.csv\n";
  }
  check(run_cli("run --config " + (work / "missing.cfg").string()) == 3,
        "missing csv exits 3");

  check(run_cli("report " + (work / "nonexistent_record").string()) == 3,
        "missing record exits 3");

  // the full five-strategy suite on the tiny config
  check(run_cli("suite --config " + cfg.string() + " --out " + (work / "suite").string()) == 0,
        "suite exits 0");
  for (const char* strategy : {"vanilla", "vanilla_gp", "syrem_r", "syrem", "jotr"}) {
    check(fs::exists(work / "suite" / strategy / "record.json"),
          std::string("suite record for ") + strategy);
  }
  check(fs::exists(work / "suite" / "report" / "summary.txt"), "suite report written");

  if (failures == 0) {
    std::cout << "cli tests passed\n";
    fs::remove_all(work);
    return 0;
  }
  std::cerr << failures << " cli checks failed (artifacts kept in " << work.string()
            << ")\n";
  return 1;
}
