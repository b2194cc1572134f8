#pragma once

// Flat `key = value` run configuration. Lines starting with '#' are
// comments; lists are comma-separated. Secrets never live here: the judge's
// auth token is read from the environment variable named by judge.auth_env.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "xmrc/backend.hpp"
#include "xmrc/corpus.hpp"
#include "xmrc/error_ablation.hpp"
#include "xmrc/judge.hpp"
#include "xmrc/mechanism.hpp"
#include "xmrc/oracle.hpp"
#include "xmrc/prompting.hpp"

namespace xmrc {

class ConfigMap {
 public:
  static ConfigMap parse(std::string_view text);
  static ConfigMap load(const std::filesystem::path& path);

  void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }
  bool has(std::string_view key) const { return values_.count(std::string(key)) > 0; }
  std::string get(std::string_view key, std::string_view fallback = {}) const;
  double get_double(std::string_view key, double fallback) const;
  std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<std::string> get_list(std::string_view key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  /// Canonical text form (sorted keys), parseable by parse().
  std::string dump() const;

 private:
  std::map<std::string, std::string> values_;
};

enum class Stage { evaluate, errors, oracle, mrd, hidden_sim };

inline constexpr Stage kAllStages[] = {Stage::evaluate, Stage::errors, Stage::oracle, Stage::mrd, Stage::hidden_sim};

std::string_view stage_name(Stage s);
Stage parse_stage(std::string_view name);

struct JudgeConfig {
  std::string kind = "rules";  // rules | http | recorded | none
  HttpJudgeSettings http;
  JudgePolicy policy;
  std::size_t concurrency = 4;
};

struct RunConfig {
  std::filesystem::path corpus_path;  // <dir>/<name>
  std::vector<std::string> languages;  // empty: every language file found
  std::filesystem::path run_dir;
  std::vector<Direction> directions;  // empty: en-en, en-x, x-x over the corpus
  std::size_t shots = 2;
  std::string template_choice = "v2";  // v1 | v2 | auto
  std::size_t auto_slice = 50;
  std::uint64_t seed = 7;
  std::size_t max_samples = 0;  // 0: all test samples
  GenerationParams generation;

  std::string backend_kind = "mock";  // mock | http
  std::string backend_endpoint;
  std::string backend_name;  // cache namespace; defaults to the kind
  std::size_t mock_layers = 4;
  std::size_t mock_hidden_dim = 8;
  std::size_t mock_context_limit = 1u << 20;
  std::filesystem::path traces_dir;  // default <run_dir>/traces

  JudgeConfig judge;
  JudgeConfig judge2{"none", {}, {}, 4};

  double mrd_threshold = kDefaultMrdThreshold;
  double balanced_threshold = 0.5;
  double margin_threshold = 0.5;
  double correct_f1 = 0.5;
  Denominator denominator = Denominator::all;
  bool categorize_include_xx = false;

  Granularity oracle_granularity = Granularity::sentence;
  std::size_t oracle_span_window = 32;
  std::vector<OracleMode> oracle_modes = {OracleMode::step, OracleMode::sequence};
  bool oracle_include_xx = false;

  Pooling pooling = Pooling::mean;
  RelevanceNormalization relevance_norm = RelevanceNormalization::absolute;
  TargetMode relevance_target = TargetMode::first_token;
  CurveStatsOptions curve;
  std::vector<Part> mrd_parts = {Part::task_description, Part::demonstrations, Part::context, Part::question};
  std::vector<Part> sim_parts = {Part::question, Part::last_input_token, Part::context};
  std::string sim_category = "balanced";  // balanced | en_superior | all

  std::set<Stage> stages = {Stage::evaluate, Stage::errors, Stage::oracle, Stage::mrd, Stage::hidden_sim};

  ConfigMap raw;

  static RunConfig from_map(const ConfigMap& map);
  void validate() const;
};

}  // namespace xmrc
