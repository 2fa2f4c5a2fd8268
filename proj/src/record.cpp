#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

#include "syrem/errors.hpp"
#include "syrem/harness.hpp"

namespace syrem {

namespace {

using nlohmann::json;

json score_to_json(const Score& s) { return json{{"fde", s.fde}, {"mr", s.mr}}; }

Score score_from_json(const json& j) {
  return {j.at("fde").get<double>(), j.at("mr").get<double>()};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << text;
  if (!os) throw IoError("failed writing: " + path.string());
}

std::string csv_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void RunRecord::save(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory: " + dir.string());

  json j;
  j["schema_version"] = kSchemaVersion;
  j["strategy"] = strategy;
  j["seeds"] = {{"data", seeds.data},
                {"init", seeds.init},
                {"buffer", seeds.buffer},
                {"selection", seeds.selection}};
  j["config"] = config_kv;
  j["config_hash"] = config_hash;

  j["n_tasks"] = matrix.n_tasks();
  json fde_rows = json::array();
  json mr_rows = json::array();
  for (int i = 0; i < matrix.rows_filled(); ++i) {
    json fde_row = json::array();
    json mr_row = json::array();
    for (int t = 0; t < matrix.n_tasks(); ++t) {
      fde_row.push_back(matrix.fde()(i, t));
      mr_row.push_back(matrix.mr()(i, t));
    }
    fde_rows.push_back(std::move(fde_row));
    mr_rows.push_back(std::move(mr_row));
  }
  j["matrix"] = {{"fde", std::move(fde_rows)}, {"mr", std::move(mr_rows)}};

  json stages_json = json::array();
  for (const StageMetrics& sm : stages) {
    json s;
    s["stage"] = sm.stage;
    json per_task = json::array();
    for (const Score& score : sm.per_task) per_task.push_back(score_to_json(score));
    s["per_task"] = std::move(per_task);
    s["joint"] = score_to_json(sm.joint);
    s["ct"] = score_to_json(sm.ct);
    if (sm.bwt) s["bwt"] = score_to_json(*sm.bwt);
    if (sm.fwt) s["fwt"] = score_to_json(*sm.fwt);
    stages_json.push_back(std::move(s));
  }
  j["stages"] = std::move(stages_json);

  json diag = json::array();
  for (const DiagPoint& d : diagnostics) {
    diag.push_back({{"step", d.step}, {"joint", score_to_json(d.joint)}});
  }
  j["diagnostics"] = std::move(diag);

  j["mean_similarity"] = mean_similarity;
  j["total_steps"] = total_steps;
  j["projected_steps"] = projected_steps;
  j["wall_seconds"] = wall_seconds;

  write_file(dir / "record.json", j.dump(2) + "\n");

  std::string loss = "step,task_id,loss_current,loss_rehearsal,rehearsed\n";
  std::string proj = "step,inner_product,projected,lambda\n";
  for (const StepLog& log : step_logs) {
    loss += std::to_string(log.step) + ',' + std::to_string(log.task_id) + ',' +
            csv_double(log.loss_current) + ',' + csv_double(log.loss_rehearsal) + ',' +
            (log.rehearsed ? '1' : '0') + "\n";
    proj += std::to_string(log.step) + ',' + csv_double(log.inner_product) + ',' +
            (log.projected ? '1' : '0') + ',' + csv_double(log.lambda) + "\n";
  }
  write_file(dir / "loss.csv", loss);
  write_file(dir / "projection.csv", proj);

  std::string trace = "step,rank,buffer_index,score\n";
  for (const SimTraceRow& row : sim_trace) {
    trace += std::to_string(row.step) + ',' + std::to_string(row.rank) + ',' +
             std::to_string(row.buffer_index) + ',' + csv_double(row.score) + "\n";
  }
  write_file(dir / "sim_trace.csv", trace);
}

RunRecord RunRecord::load(const std::filesystem::path& path) {
  std::filesystem::path file = path;
  if (std::filesystem::is_directory(file)) file /= "record.json";
  std::ifstream is(file);
  if (!is) throw IoError("cannot open record: " + file.string());

  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw DataError("record " + file.string() + ": " + e.what());
  }

  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
      throw DataError("record " + file.string() + ": schema version " +
                      std::to_string(version) + " unsupported (expected " +
                      std::to_string(kSchemaVersion) + ")");
    }

    RunRecord rec;
    rec.strategy = j.at("strategy").get<std::string>();
    rec.seeds.data = j.at("seeds").at("data").get<std::uint64_t>();
    rec.seeds.init = j.at("seeds").at("init").get<std::uint64_t>();
    rec.seeds.buffer = j.at("seeds").at("buffer").get<std::uint64_t>();
    rec.seeds.selection = j.at("seeds").at("selection").get<std::uint64_t>();
    rec.config_kv = j.at("config").get<std::map<std::string, std::string>>();
    rec.config_hash = j.at("config_hash").get<std::string>();

    const int n_tasks = j.at("n_tasks").get<int>();
    rec.matrix = ResultMatrix(n_tasks);
    const json& fde_rows = j.at("matrix").at("fde");
    const json& mr_rows = j.at("matrix").at("mr");
    for (std::size_t i = 0; i < fde_rows.size(); ++i) {
      std::vector<Score> row;
      for (int t = 0; t < n_tasks; ++t) {
        row.push_back({fde_rows[i][static_cast<std::size_t>(t)].get<double>(),
                       mr_rows[i][static_cast<std::size_t>(t)].get<double>()});
      }
      rec.matrix.fill_row(static_cast<int>(i), row);
    }

    for (const json& s : j.at("stages")) {
      StageMetrics sm;
      sm.stage = s.at("stage").get<int>();
      for (const json& score : s.at("per_task")) sm.per_task.push_back(score_from_json(score));
      sm.joint = score_from_json(s.at("joint"));
      sm.ct = score_from_json(s.at("ct"));
      if (s.contains("bwt")) sm.bwt = score_from_json(s.at("bwt"));
      if (s.contains("fwt")) sm.fwt = score_from_json(s.at("fwt"));
      rec.stages.push_back(std::move(sm));
    }
    for (const json& d : j.at("diagnostics")) {
      rec.diagnostics.push_back({d.at("step").get<std::int64_t>(),
                                 score_from_json(d.at("joint"))});
    }

    rec.mean_similarity = j.at("mean_similarity").get<double>();
    rec.total_steps = j.at("total_steps").get<std::int64_t>();
    rec.projected_steps = j.at("projected_steps").get<std::int64_t>();
    rec.wall_seconds = j.at("wall_seconds").get<double>();
    return rec;
  } catch (const json::exception& e) {
    throw DataError("record " + file.string() + ": " + e.what());
  }
}

namespace {

std::string run_label(const RunRecord& rec) {
  return rec.strategy + "_sd" + std::to_string(rec.seeds.data);
}

}  // namespace

void report(std::span<const RunRecord> records, const std::filesystem::path& out_dir) {
  if (records.empty()) throw ConfigError("report: no records given");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create report directory: " + out_dir.string());

  // transfer metrics recomputed from the stored matrices; stages printed
  // 1-based as the number of learned tasks
  std::string bwt_csv = "stage,strategy,seed_data,fde_bwt,mr_bwt\n";
  std::string ct_csv = "stage,strategy,seed_data,fde_ct,mr_ct\n";
  std::string fwt_csv = "stage,strategy,seed_data,fde_fwt,mr_fwt\n";
  std::string joint_csv = "stage,strategy,seed_data,fde_jt,mr_jt\n";
  std::string sim_csv = "strategy,seed_data,mean_similarity\n";

  for (const RunRecord& rec : records) {
    const std::string tag = rec.strategy + ',' + std::to_string(rec.seeds.data);
    const int rows = rec.matrix.rows_filled();
    for (int stage = 0; stage < rows; ++stage) {
      const Score c = ct(rec.matrix, stage);
      ct_csv += std::to_string(stage + 1) + ',' + tag + ',' + csv_double(c.fde) + ',' +
                csv_double(c.mr) + "\n";
      if (stage >= 1) {
        const Score b = bwt(rec.matrix, stage);
        bwt_csv += std::to_string(stage + 1) + ',' + tag + ',' + csv_double(b.fde) + ',' +
                   csv_double(b.mr) + "\n";
      }
      if (stage < rec.matrix.n_tasks() - 1) {
        const Score f = fwt(rec.matrix, stage);
        fwt_csv += std::to_string(stage + 1) + ',' + tag + ',' + csv_double(f.fde) + ',' +
                   csv_double(f.mr) + "\n";
      }
    }
    for (const StageMetrics& sm : rec.stages) {
      joint_csv += std::to_string(sm.stage + 1) + ',' + tag + ',' +
                   csv_double(sm.joint.fde) + ',' + csv_double(sm.joint.mr) + "\n";
    }
    sim_csv += tag + ',' + csv_double(rec.mean_similarity) + "\n";

    std::string rm = "stage,task,fde,mr\n";
    for (int i = 0; i < rows; ++i) {
      for (int t = 0; t < rec.matrix.n_tasks(); ++t) {
        const Score s = rec.matrix.at(i, t);
        rm += std::to_string(i + 1) + ',' + std::to_string(t + 1) + ',' +
              csv_double(s.fde) + ',' + csv_double(s.mr) + "\n";
      }
    }
    write_file(out_dir / ("rmatrix_" + run_label(rec) + ".csv"), rm);
  }

  write_file(out_dir / "bwt.csv", bwt_csv);
  write_file(out_dir / "ct.csv", ct_csv);
  write_file(out_dir / "fwt.csv", fwt_csv);
  write_file(out_dir / "joint.csv", joint_csv);
  write_file(out_dir / "similarity.csv", sim_csv);

  std::ostringstream summary;
  summary << std::fixed << std::setprecision(3);
  summary << "runs: " << records.size() << "\n\n";
  summary << std::left << std::setw(22) << "run" << std::right << std::setw(7) << "stage"
          << std::setw(12) << "fde_bwt" << std::setw(12) << "mr_bwt" << std::setw(12)
          << "fde_ct" << std::setw(12) << "mr_ct" << std::setw(12) << "fde_jt"
          << std::setw(12) << "mr_jt" << "\n";
  for (const RunRecord& rec : records) {
    for (const StageMetrics& sm : rec.stages) {
      summary << std::left << std::setw(22) << run_label(rec) << std::right << std::setw(7)
              << (sm.stage + 1);
      if (sm.bwt) {
        summary << std::setw(12) << sm.bwt->fde << std::setw(12) << sm.bwt->mr;
      } else {
        summary << std::setw(12) << "-" << std::setw(12) << "-";
      }
      summary << std::setw(12) << sm.ct.fde << std::setw(12) << sm.ct.mr << std::setw(12)
              << sm.joint.fde << std::setw(12) << sm.joint.mr << "\n";
    }
  }
  summary << "\n";
  summary << std::left << std::setw(22) << "run" << std::right << std::setw(14)
          << "mean_sim" << std::setw(14) << "proj_steps" << std::setw(14) << "steps"
          << std::setw(12) << "wall_s" << "\n";
  for (const RunRecord& rec : records) {
    summary << std::left << std::setw(22) << run_label(rec) << std::right << std::setw(14)
            << rec.mean_similarity << std::setw(14) << rec.projected_steps << std::setw(14)
            << rec.total_steps << std::setw(12) << rec.wall_seconds << "\n";
  }
  write_file(out_dir / "summary.txt", summary.str());
}

}  // namespace syrem
