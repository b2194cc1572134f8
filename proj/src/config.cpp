#include "xmrc/config.hpp"

#include <charconv>

#include "xmrc/error.hpp"
#include "xmrc/util.hpp"

namespace xmrc {

ConfigMap ConfigMap::parse(std::string_view text) {
  ConfigMap out;
  std::size_t line_no = 0;
  for (const auto& raw_line : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw_line);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    out.set(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

ConfigMap ConfigMap::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::string ConfigMap::get(std::string_view key, std::string_view fallback) const {
  auto it = values_.find(std::string(key));
  return it == values_.end() ? std::string(fallback) : it->second;
}

double ConfigMap::get_double(std::string_view key, double fallback) const {
  if (!has(key)) return fallback;
  auto v = get(key);
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key " + std::string(key) + ": '" + v + "' is not a number");
  }
}

std::uint64_t ConfigMap::get_uint(std::string_view key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  auto v = get(key);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key " + std::string(key) + ": '" + v + "' is not a non-negative integer");
  }
  return out;
}

bool ConfigMap::get_bool(std::string_view key, bool fallback) const {
  if (!has(key)) return fallback;
  auto v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key " + std::string(key) + ": '" + v + "' is not a boolean");
}

std::vector<std::string> ConfigMap::get_list(std::string_view key) const {
  std::vector<std::string> out;
  if (!has(key)) return out;
  for (const auto& item : split(get(key), ',')) {
    auto t = trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::string ConfigMap::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::evaluate: return "evaluate";
    case Stage::errors: return "errors";
    case Stage::oracle: return "oracle";
    case Stage::mrd: return "mrd";
    case Stage::hidden_sim: return "hidden_sim";
  }
  return "evaluate";
}

Stage parse_stage(std::string_view name) {
  for (auto s : kAllStages)
    if (stage_name(s) == name) return s;
  throw ConfigError("unknown stage '" + std::string(name) + "'");
}

namespace {

JudgeConfig judge_from(const ConfigMap& m, const std::string& prefix, const std::string& default_kind) {
  JudgeConfig j;
  j.kind = m.get(prefix + ".kind", default_kind);
  j.http.url = m.get(prefix + ".url");
  j.http.model = m.get(prefix + ".model");
  j.http.auth_env = m.get(prefix + ".auth_env", "XMRC_JUDGE_TOKEN");
  j.http.system_prompt = m.get(prefix + ".system_prompt");
  j.http.timeout = std::chrono::milliseconds(m.get_uint(prefix + ".timeout_ms", 60000));
  j.policy.parse_retries = m.get_uint(prefix + ".retries", 2);
  j.policy.transport_retries = m.get_uint(prefix + ".transport_retries", 3);
  j.policy.backoff = std::chrono::milliseconds(m.get_uint(prefix + ".backoff_ms", 200));
  j.concurrency = m.get_uint(prefix + ".concurrency", 4);
  return j;
}

}  // namespace

RunConfig RunConfig::from_map(const ConfigMap& m) {
  RunConfig c;
  c.raw = m;
  c.corpus_path = m.get("corpus.path");
  c.languages = m.get_list("corpus.languages");
  if (c.languages.size() == 1 && c.languages.front() == "auto") c.languages.clear();
  c.run_dir = m.get("run.dir", "runs/default");
  for (const auto& d : m.get_list("directions")) {
    if (d == "auto") {
      c.directions.clear();
      break;
    }
    c.directions.push_back(Direction::parse(d));
  }
  c.shots = m.get_uint("shots", 2);
  c.template_choice = m.get("template", "v2");
  c.auto_slice = m.get_uint("template.auto_slice", 50);
  c.seed = m.get_uint("seed", 7);
  c.max_samples = m.get_uint("max_samples", 0);
  c.generation.max_new_tokens = m.get_uint("generation.max_new_tokens", 64);

  c.backend_kind = m.get("backend.kind", "mock");
  c.backend_endpoint = m.get("backend.model_path_or_endpoint");
  c.backend_name = m.get("backend.name", c.backend_kind);
  c.mock_layers = m.get_uint("backend.mock.layers", 4);
  c.mock_hidden_dim = m.get_uint("backend.mock.hidden_dim", 8);
  c.mock_context_limit = m.get_uint("backend.mock.context_limit", 1u << 20);
  c.traces_dir = m.has("traces.dir") ? std::filesystem::path(m.get("traces.dir")) : c.run_dir / "traces";

  c.judge = judge_from(m, "judge", "rules");
  c.judge2 = judge_from(m, "judge2", "none");

  c.mrd_threshold = m.get_double("threshold.mrd", kDefaultMrdThreshold);
  c.balanced_threshold = m.get_double("threshold.balanced", 0.5);
  c.margin_threshold = m.get_double("threshold.margin", 0.5);
  c.correct_f1 = m.get_double("threshold.correct_f1", 0.5);
  auto denom = m.get("errors.denominator", "all");
  if (denom == "all") {
    c.denominator = Denominator::all;
  } else if (denom == "wrong" || denom == "wrong_only") {
    c.denominator = Denominator::wrong_only;
  } else {
    throw ConfigError("errors.denominator must be 'all' or 'wrong'");
  }
  c.categorize_include_xx = m.get_bool("categorize.include_xx", false);

  c.oracle_granularity = parse_granularity(m.get("oracle.granularity", "sentence"));
  c.oracle_span_window = m.get_uint("oracle.span_window", 32);
  if (m.has("oracle.mode")) {
    auto mode = m.get("oracle.mode");
    c.oracle_modes.clear();
    if (mode == "both") {
      c.oracle_modes = {OracleMode::step, OracleMode::sequence};
    } else {
      for (const auto& item : m.get_list("oracle.mode")) c.oracle_modes.push_back(parse_oracle_mode(item));
    }
  }
  c.oracle_include_xx = m.get_bool("oracle.include_xx", false);

  c.pooling = parse_pooling(m.get("mechanism.pooling", "mean"));
  c.relevance_norm = parse_relevance_normalization(m.get("mechanism.relevance_norm", "absolute"));
  c.relevance_target = parse_target_mode(m.get("mechanism.relevance_target", "first_token"));
  c.curve.tail_fraction = m.get_double("mechanism.curve_tail", 0.2);
  c.curve.plateau_band = m.get_double("mechanism.plateau_band", 0.05);
  if (m.has("mechanism.mrd_parts")) {
    c.mrd_parts.clear();
    for (const auto& p : m.get_list("mechanism.mrd_parts")) c.mrd_parts.push_back(parse_part(p));
  }
  if (m.has("mechanism.sim_parts")) {
    c.sim_parts.clear();
    for (const auto& p : m.get_list("mechanism.sim_parts")) c.sim_parts.push_back(parse_part(p));
  }
  c.sim_category = m.get("mechanism.sim_category", "balanced");

  if (m.has("stages")) {
    c.stages.clear();
    for (const auto& s : m.get_list("stages")) c.stages.insert(parse_stage(s));
  }
  c.validate();
  return c;
}

void RunConfig::validate() const {
  if (corpus_path.empty()) throw ConfigError("corpus.path is required");
  if (run_dir.empty()) throw ConfigError("run.dir is required");
  if (shots != 0 && shots != 2) throw ConfigError("shots must be 0 or 2");
  if (template_choice != "v1" && template_choice != "v2" && template_choice != "auto") {
    throw ConfigError("template must be v1, v2, or auto");
  }
  for (auto [name, v] : {std::pair{"threshold.mrd", mrd_threshold}, std::pair{"threshold.balanced", balanced_threshold},
                         std::pair{"threshold.margin", margin_threshold}, std::pair{"threshold.correct_f1", correct_f1},
                         std::pair{"mechanism.curve_tail", curve.tail_fraction},
                         std::pair{"mechanism.plateau_band", curve.plateau_band}}) {
    if (!(v > 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in (0, 1]");
  }
  if (backend_kind != "mock" && backend_kind != "http") throw ConfigError("backend.kind must be mock or http");
  if (backend_kind == "http" && backend_endpoint.empty()) {
    throw ConfigError("backend.model_path_or_endpoint is required for the http backend");
  }
  for (const auto* j : {&judge, &judge2}) {
    if (j->kind != "rules" && j->kind != "http" && j->kind != "recorded" && j->kind != "none") {
      throw ConfigError("judge kind must be rules, http, recorded, or none");
    }
  }
  if (judge.kind == "none" && stages.count(Stage::errors)) throw ConfigError("the errors stage needs a judge");
  if (sim_category != "balanced" && sim_category != "en_superior" && sim_category != "all") {
    throw ConfigError("mechanism.sim_category must be balanced, en_superior, or all");
  }
  if (oracle_modes.empty()) throw ConfigError("oracle.mode selects no mode");
  if (oracle_span_window == 0) throw ConfigError("oracle.span_window must be positive");
}

}  // namespace xmrc
