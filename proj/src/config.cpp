#include "syrem/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "syrem/errors.hpp"

namespace syrem {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* begin = value.data();
  const char* end = begin + value.size();
  const auto result = std::from_chars(begin, end, out);
  if (result.ec != std::errc{} || result.ptr != end) {
    throw ConfigError("config: key '" + key + "' has invalid value '" + value + "'");
  }
  return out;
}

}  // namespace

ConfigDoc ConfigDoc::parse(const std::string& text) {
  ConfigDoc doc;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    }
    if (doc.values_.count(key) != 0) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" +
                        key + "'");
    }
    doc.values_[key] = value;
  }
  return doc;
}

ConfigDoc ConfigDoc::parse_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse(buf.str());
}

void ConfigDoc::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

bool ConfigDoc::has(const std::string& key) const { return values_.count(key) != 0; }

std::string ConfigDoc::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string ConfigDoc::require_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("config: missing required key '" + key + "'");
  return it->second;
}

std::int64_t ConfigDoc::get_int(const std::string& key, std::int64_t fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_number<std::int64_t>(key, it->second);
}

double ConfigDoc::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_number<double>(key, it->second);
}

bool ConfigDoc::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError("config: key '" + key + "' must be true/false");
}

std::vector<int> ConfigDoc::get_int_list(const std::string& key,
                                         std::vector<int> fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<int> out;
  std::string field;
  std::istringstream is(it->second);
  while (std::getline(is, field, ',')) {
    field = trim(field);
    if (field.empty()) continue;
    out.push_back(static_cast<int>(parse_number<std::int64_t>(key, field)));
  }
  return out;
}

std::string ConfigDoc::serialize() const {
  std::string out;
  for (const auto& [key, value] : values_) {
    out += key + " = " + value + "\n";
  }
  return out;
}

std::string config_hash(const ConfigDoc& doc) {
  // FNV-1a 64
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : doc.serialize()) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

constexpr int kConfigSchemaVersion = 1;

GcMode gc_mode_from_string(const std::string& name) {
  if (name == "batch_mean") return GcMode::batch_mean;
  if (name == "last_sample") return GcMode::last_sample;
  throw ConfigError("config: gc_mode must be batch_mean or last_sample");
}

std::string to_string(GcMode mode) {
  return mode == GcMode::batch_mean ? "batch_mean" : "last_sample";
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  throw ConfigError("config: activation must be tanh or relu");
}

std::string to_string(Activation act) {
  return act == Activation::tanh ? "tanh" : "relu";
}

std::string format_param(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool known_key(const std::string& key) {
  static const char* kFixed[] = {
      "schema_version", "data",          "csv_train",       "csv_test",
      "batch_size",     "t_obs",         "t_pred",          "dt",
      "n_surrounding",  "task_count",    "hidden_dims",     "n_heads",
      "activation",     "strategy",      "buffer_capacity", "m_candidates",
      "gc_mode",        "learning_rate", "seed_data",       "seed_init",
      "seed_buffer",    "seed_selection", "rehearsal_enabled",
      "projection_enabled", "eval_every",
  };
  for (const char* k : kFixed) {
    if (key == k) return true;
  }
  if (!key.starts_with("task.")) return false;
  const auto second = key.find('.', 5);
  if (second == std::string::npos) return false;
  const std::string field = key.substr(second + 1);
  if (field == "task_id" || field == "family" || field == "n_train" ||
      field == "n_test" || field == "seed" || field.starts_with("param.")) {
    return true;
  }
  return false;
}

}  // namespace

ExperimentConfig config_from_doc(const ConfigDoc& doc) {
  const auto version = doc.get_int("schema_version", -1);
  if (version != kConfigSchemaVersion) {
    throw ConfigError("config: schema_version must be " +
                      std::to_string(kConfigSchemaVersion));
  }
  for (const auto& [key, value] : doc.values()) {
    if (!known_key(key)) throw ConfigError("config: unknown key '" + key + "'");
  }

  ExperimentConfig config;

  const std::string data = doc.get_string("data", "synthetic");
  if (data == "synthetic") {
    config.source.kind = DataSource::Kind::synthetic;
  } else if (data == "csv") {
    config.source.kind = DataSource::Kind::csv;
    config.source.train_csv = doc.require_string("csv_train");
    config.source.test_csv = doc.require_string("csv_test");
  } else {
    throw ConfigError("config: data must be synthetic or csv");
  }

  config.stream.batch_size = static_cast<int>(doc.get_int("batch_size", 8));
  config.stream.horizon.t_obs = doc.get_double("t_obs", 1.0);
  config.stream.horizon.t_pred = doc.get_double("t_pred", 3.0);
  config.stream.horizon.dt = doc.get_double("dt", 0.1);
  config.source.n_surrounding = static_cast<int>(doc.get_int("n_surrounding", 2));

  if (config.source.kind == DataSource::Kind::synthetic) {
    const int task_count = static_cast<int>(doc.get_int("task_count", 0));
    if (task_count < 1) {
      throw ConfigError("config: synthetic data needs task_count >= 1");
    }
    for (int i = 0; i < task_count; ++i) {
      const std::string prefix = "task." + std::to_string(i) + ".";
      TaskSpec spec;
      spec.task_id = static_cast<int>(doc.get_int(prefix + "task_id", i));
      spec.family = family_from_string(doc.get_string(prefix + "family", "constant_velocity"));
      spec.n_train = static_cast<int>(doc.get_int(prefix + "n_train", 2000));
      spec.n_test = static_cast<int>(doc.get_int(prefix + "n_test", 400));
      spec.seed = static_cast<std::uint64_t>(doc.get_int(prefix + "seed", i));
      spec.n_surrounding = config.source.n_surrounding;
      const std::string param_prefix = prefix + "param.";
      for (const auto& [key, value] : doc.values()) {
        if (key.starts_with(param_prefix)) {
          spec.family_params[key.substr(param_prefix.size())] =
              doc.get_double(key, 0.0);
        }
      }
      config.stream.tasks.push_back(std::move(spec));
    }
  }

  config.net.hidden_dims = doc.get_int_list("hidden_dims", {64, 64});
  config.net.n_heads = static_cast<int>(doc.get_int("n_heads", 6));
  config.net.activation = activation_from_string(doc.get_string("activation", "tanh"));

  config.strategy.strategy = strategy_from_string(doc.get_string("strategy", "syrem"));
  config.strategy.buffer_capacity = static_cast<int>(doc.get_int("buffer_capacity", 1000));
  config.strategy.m_candidates = static_cast<int>(doc.get_int("m_candidates", 16));
  config.strategy.batch_size = config.stream.batch_size;
  config.strategy.gc_mode = gc_mode_from_string(doc.get_string("gc_mode", "batch_mean"));
  config.strategy.learning_rate = doc.get_double("learning_rate", 1e-3);
  config.strategy.seeds.data = static_cast<std::uint64_t>(doc.get_int("seed_data", 1));
  config.strategy.seeds.init = static_cast<std::uint64_t>(doc.get_int("seed_init", 2));
  config.strategy.seeds.buffer = static_cast<std::uint64_t>(doc.get_int("seed_buffer", 3));
  config.strategy.seeds.selection =
      static_cast<std::uint64_t>(doc.get_int("seed_selection", 4));
  config.strategy.rehearsal_enabled = doc.get_bool("rehearsal_enabled", true);
  config.strategy.projection_enabled = doc.get_bool("projection_enabled", true);
  config.strategy.eval_every = static_cast<int>(doc.get_int("eval_every", 0));
  return config;
}

ConfigDoc doc_from_config(const ExperimentConfig& config) {
  ConfigDoc doc;
  doc.set("schema_version", std::to_string(kConfigSchemaVersion));
  const bool synthetic = config.source.kind == DataSource::Kind::synthetic;
  doc.set("data", synthetic ? "synthetic" : "csv");
  if (!synthetic) {
    doc.set("csv_train", config.source.train_csv.string());
    doc.set("csv_test", config.source.test_csv.string());
  }
  doc.set("batch_size", std::to_string(config.stream.batch_size));
  doc.set("t_obs", format_param(config.stream.horizon.t_obs));
  doc.set("t_pred", format_param(config.stream.horizon.t_pred));
  doc.set("dt", format_param(config.stream.horizon.dt));
  doc.set("n_surrounding", std::to_string(config.source.n_surrounding));

  if (synthetic) {
    doc.set("task_count", std::to_string(config.stream.tasks.size()));
    for (std::size_t i = 0; i < config.stream.tasks.size(); ++i) {
      const TaskSpec& spec = config.stream.tasks[i];
      const std::string prefix = "task." + std::to_string(i) + ".";
      doc.set(prefix + "task_id", std::to_string(spec.task_id));
      doc.set(prefix + "family", to_string(spec.family));
      doc.set(prefix + "n_train", std::to_string(spec.n_train));
      doc.set(prefix + "n_test", std::to_string(spec.n_test));
      doc.set(prefix + "seed", std::to_string(spec.seed));
      for (const auto& [name, value] : spec.family_params) {
        doc.set(prefix + "param." + name, format_param(value));
      }
    }
  }

  std::string hidden;
  for (std::size_t i = 0; i < config.net.hidden_dims.size(); ++i) {
    if (i > 0) hidden += ',';
    hidden += std::to_string(config.net.hidden_dims[i]);
  }
  doc.set("hidden_dims", hidden);
  doc.set("n_heads", std::to_string(config.net.n_heads));
  doc.set("activation", to_string(config.net.activation));

  doc.set("strategy", to_string(config.strategy.strategy));
  doc.set("buffer_capacity", std::to_string(config.strategy.buffer_capacity));
  doc.set("m_candidates", std::to_string(config.strategy.m_candidates));
  doc.set("gc_mode", to_string(config.strategy.gc_mode));
  doc.set("learning_rate", format_param(config.strategy.learning_rate));
  doc.set("seed_data", std::to_string(config.strategy.seeds.data));
  doc.set("seed_init", std::to_string(config.strategy.seeds.init));
  doc.set("seed_buffer", std::to_string(config.strategy.seeds.buffer));
  doc.set("seed_selection", std::to_string(config.strategy.seeds.selection));
  doc.set("rehearsal_enabled", config.strategy.rehearsal_enabled ? "true" : "false");
  doc.set("projection_enabled", config.strategy.projection_enabled ? "true" : "false");
  doc.set("eval_every", std::to_string(config.strategy.eval_every));
  return doc;
}

ExperimentConfig default_experiment() {
  ExperimentConfig config;
  config.stream.batch_size = 8;
  config.stream.horizon = {1.0, 3.0, 0.1};

  const auto add_task = [&](Family family, std::map<std::string, double> params) {
    TaskSpec spec;
    spec.task_id = static_cast<int>(config.stream.tasks.size());
    spec.family = family;
    spec.family_params = std::move(params);
    spec.n_surrounding = 2;
    spec.n_train = 2000;
    spec.n_test = 400;
    spec.seed = static_cast<std::uint64_t>(spec.task_id);
    config.stream.tasks.push_back(std::move(spec));
  };
  // distinct speed regimes and broad within-task spreads: the drift across
  // regimes drives forgetting for the unprotected baseline, while the
  // per-task diversity is where selective rehearsal earns its keep
  add_task(Family::constant_velocity,
           {{"speed", 9.0}, {"speed_jitter", 2.0}, {"noise_sigma", 0.05}});
  add_task(Family::constant_turn, {{"speed", 6.0},
                                   {"turn_rate", 0.35},
                                   {"turn_jitter", 0.1},
                                   {"speed_jitter", 1.5},
                                   {"noise_sigma", 0.05}});
  add_task(Family::sinusoidal_weave, {{"speed", 7.0},
                                      {"amplitude", 1.5},
                                      {"period", 4.0},
                                      {"speed_jitter", 1.5},
                                      {"noise_sigma", 0.05}});
  add_task(Family::stop_and_go,
           {{"speed", 4.0}, {"period", 6.0}, {"speed_jitter", 1.0}, {"noise_sigma", 0.05}});
  add_task(Family::merge_drift, {{"speed", 8.0},
                                 {"lat_rate", 1.2},
                                 {"speed_jitter", 1.5},
                                 {"noise_sigma", 0.05}});

  config.source.n_surrounding = 2;
  config.net.hidden_dims = {64, 64};
  config.net.n_heads = 6;
  config.net.activation = Activation::tanh;

  config.strategy.strategy = Strategy::syrem;
  config.strategy.buffer_capacity = 500;  // 5% of the 10,000-sample stream
  config.strategy.m_candidates = 16;
  config.strategy.batch_size = 8;
  return config;
}

}  // namespace syrem
