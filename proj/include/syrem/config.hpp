#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "syrem/harness.hpp"

namespace syrem {

// Plain-text key-value experiment configuration. One `key = value` pair per
// line, `#` starts a comment, keys are dotted paths. The document is
// schema-versioned via the mandatory `schema_version` key.

class ConfigDoc {
 public:
  static ConfigDoc parse(const std::string& text);
  static ConfigDoc parse_file(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  /// Canonical text form: sorted keys, one pair per line.
  std::string serialize() const;

 private:
  std::map<std::string, std::string> values_;
};

/// FNV-1a 64-bit hash of the canonical config text, as fixed-width hex.
std::string config_hash(const ConfigDoc& doc);

/// Builds the full experiment description from a parsed document, applying
/// defaults for absent keys. Throws ConfigError on invalid values.
ExperimentConfig config_from_doc(const ConfigDoc& doc);

/// Canonical document mirroring every field of the experiment config.
ConfigDoc doc_from_config(const ExperimentConfig& config);

/// The built-in 5-task synthetic suite with desk-scale defaults.
ExperimentConfig default_experiment();

}  // namespace syrem
