#pragma once

// End-to-end orchestration. A run directory holds:
//   config.txt                     canonical config snapshot
//   manifest.json                  RunManifest
//   scores.jsonl, summary.csv, ratios.csv, categories.csv   (evaluate)
//   errors.csv, errors/records.jsonl, judge/                 (errors)
//   oracle/<direction>.<mode>.jsonl, oracle/accuracy.csv     (oracle)
//   mechanism/mrd.csv, mechanism/mrd_samples.jsonl           (mrd)
//   mechanism/sim_<part>_<lang>.csv, mechanism/curve_stats.csv (hidden_sim)
//   traces/                        model-output cache (unless traces.dir moves it)

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xmrc/backend.hpp"
#include "xmrc/config.hpp"
#include "xmrc/judge.hpp"

namespace xmrc {

struct StageRecord {
  std::string name;
  std::string status;  // completed | failed | disabled
  bool reused = false;  // outputs from an earlier run were still valid
  std::string fingerprint;
  std::map<std::string, std::string> outputs;  // run-relative path -> sha256
  std::string message;
  std::string started_at;
  std::string finished_at;
};

struct RunManifest {
  std::map<std::string, std::string> config;
  std::string corpus_digest;
  BackendDescriptor backend;
  std::string template_used;
  std::vector<std::string> demo_ids;
  std::vector<StageRecord> stages;
  std::map<std::string, std::string> files;  // every run file except traces and the manifest
  std::size_t backend_calls = 0;  // calls that reached the model in this invocation
  std::size_t cache_hits = 0;
  std::string created_at;
  std::string updated_at;

  const StageRecord* stage(std::string_view name) const;
  std::string to_json() const;
  static RunManifest from_json(std::string_view text);
  static std::optional<RunManifest> load(const std::filesystem::path& run_dir);
};

/// Injection points for tests and embedding applications; null members are
/// built from the config.
struct RunHooks {
  Backend* backend = nullptr;
  JudgeClient* judge = nullptr;
  JudgeClient* judge2 = nullptr;
};

/// Runs the enabled stages in dependency order. A stage whose fingerprint
/// (config, corpus, template, upstream outputs) and outputs match the
/// previous manifest is reused without recomputation. A failed stage is
/// recorded and only its dependents are skipped.
RunManifest run(const RunConfig& config, const RunHooks& hooks = {});

}  // namespace xmrc
