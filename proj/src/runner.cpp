#include "xmrc/runner.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <iostream>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "xmrc/error.hpp"
#include "xmrc/error_ablation.hpp"
#include "xmrc/http_backend.hpp"
#include "xmrc/language.hpp"
#include "xmrc/mechanism.hpp"
#include "xmrc/mock_backend.hpp"
#include "xmrc/oracle.hpp"
#include "xmrc/scoring.hpp"
#include "xmrc/trace_cache.hpp"
#include "xmrc/util.hpp"

namespace xmrc {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

const StageRecord* RunManifest::stage(std::string_view name) const {
  for (const auto& s : stages)
    if (s.name == name) return &s;
  return nullptr;
}

std::string RunManifest::to_json() const {
  ordered_json j;
  j["format"] = "xmrc-run/1";
  j["created_at"] = created_at;
  j["updated_at"] = updated_at;
  j["corpus_digest"] = corpus_digest;
  j["backend"] = {{"name", backend.name},
                  {"num_layers", backend.num_layers},
                  {"hidden_dim", backend.hidden_dim},
                  {"supports_relevance", backend.supports_relevance},
                  {"supports_hidden", backend.supports_hidden},
                  {"max_concurrency", backend.max_concurrency}};
  j["template"] = template_used;
  j["demo_ids"] = demo_ids;
  j["backend_calls"] = backend_calls;
  j["cache_hits"] = cache_hits;
  j["config"] = config;
  j["stages"] = ordered_json::array();
  for (const auto& s : stages) {
    j["stages"].push_back({{"name", s.name},
                           {"status", s.status},
                           {"reused", s.reused},
                           {"fingerprint", s.fingerprint},
                           {"message", s.message},
                           {"started_at", s.started_at},
                           {"finished_at", s.finished_at},
                           {"outputs", s.outputs}});
  }
  j["files"] = files;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(std::string_view text) {
  auto j = json::parse(text);
  RunManifest m;
  m.created_at = j.value("created_at", "");
  m.updated_at = j.value("updated_at", "");
  m.corpus_digest = j.value("corpus_digest", "");
  const auto& b = j.at("backend");
  m.backend = {b.at("name"), b.at("num_layers"), b.at("hidden_dim"), b.at("supports_relevance"),
               b.at("supports_hidden"), b.at("max_concurrency")};
  m.template_used = j.value("template", "");
  m.demo_ids = j.value("demo_ids", std::vector<std::string>{});
  m.backend_calls = j.value("backend_calls", std::size_t{0});
  m.cache_hits = j.value("cache_hits", std::size_t{0});
  m.config = j.value("config", std::map<std::string, std::string>{});
  for (const auto& s : j.at("stages")) {
    StageRecord r;
    r.name = s.at("name");
    r.status = s.at("status");
    r.reused = s.value("reused", false);
    r.fingerprint = s.value("fingerprint", "");
    r.message = s.value("message", "");
    r.started_at = s.value("started_at", "");
    r.finished_at = s.value("finished_at", "");
    r.outputs = s.value("outputs", std::map<std::string, std::string>{});
    m.stages.push_back(std::move(r));
  }
  m.files = j.value("files", std::map<std::string, std::string>{});
  return m;
}

std::optional<RunManifest> RunManifest::load(const fs::path& run_dir) {
  auto path = run_dir / "manifest.json";
  if (!fs::exists(path)) return std::nullopt;
  try {
    return from_json(read_file(path));
  } catch (const std::exception& e) {
    std::cerr << "warning: ignoring unreadable manifest " << path << ": " << e.what() << "\n";
    return std::nullopt;
  }
}

namespace {

std::string utc_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt(double v) { return format_fixed(v, 6); }

struct ScoreRow {
  Direction direction;
  std::string sample_id;
  std::string raw;
  std::string answer;
  double f1 = 0.0;
  int em = 0;
};

/// Collects one stage's outputs and their digests.
class StageWriter {
 public:
  StageWriter(const fs::path& run_dir, StageRecord& record) : run_dir_(run_dir), record_(record) {}

  void write(const std::string& rel, std::string_view content) {
    write_file_atomic(run_dir_ / rel, content);
    record_.outputs[rel] = sha256_hex(content);
  }
  /// Records a file the stage produced through another channel.
  void adopt(const std::string& rel) { record_.outputs[rel] = file_sha256(run_dir_ / rel); }

 private:
  const fs::path& run_dir_;
  StageRecord& record_;
};

class Runner {
 public:
  Runner(const RunConfig& config, const RunHooks& hooks) : config_(config), hooks_(hooks) {}

  RunManifest execute();

 private:
  void setup();
  void resolve_template();
  std::string render(const ParallelSample& sample, const Direction& d) const;
  std::vector<Direction> analysis_directions(bool include_xx) const;
  std::string fingerprint(Stage stage) const;
  bool try_reuse(Stage stage, StageRecord& record) const;
  bool upstream_ok(Stage stage, std::string& why) const;
  void run_stage(Stage stage);
  void save_manifest();

  void stage_evaluate(StageWriter& out);
  void stage_errors(StageWriter& out);
  void stage_oracle(StageWriter& out);
  void stage_mrd(StageWriter& out);
  void stage_hidden_sim(StageWriter& out);

  std::vector<ScoreRow> load_scores() const;
  std::map<std::string, std::string> load_categories() const;
  const ParallelSample& sample(const std::string& id) const;
  std::unique_ptr<JudgeClient> make_judge(const JudgeConfig& jc, JudgeClient* injected) const;

  const RunConfig& config_;
  RunHooks hooks_;
  ParallelCorpus corpus_;
  std::vector<ParallelSample> demos_;
  std::vector<const ParallelSample*> tests_;
  std::vector<Direction> directions_;
  std::unique_ptr<Backend> owned_backend_;
  std::unique_ptr<TraceCache> cache_;
  std::unique_ptr<CachingBackend> backend_;
  ChatWrapper wrapper_;
  const PromptTemplate* template_ = nullptr;
  std::optional<RunManifest> previous_;
  RunManifest manifest_;
};

void Runner::setup() {
  fs::create_directories(config_.run_dir);
  corpus_ = load_corpus(config_.corpus_path, config_.languages);
  directions_ = config_.directions.empty() ? standard_directions(corpus_.languages) : config_.directions;
  for (const auto& d : directions_) corpus_.check_direction(d);
  demos_ = select_demonstrations(corpus_, config_.shots, config_.seed);
  std::set<std::string> demo_ids;
  for (const auto& d : demos_) demo_ids.insert(d.id);
  for (const auto& s : corpus_.samples) {
    if (demo_ids.count(s.id)) continue;
    if (config_.max_samples && tests_.size() == config_.max_samples) break;
    tests_.push_back(&s);
  }

  Backend* inner = hooks_.backend;
  if (!inner) {
    if (config_.backend_kind == "mock") {
      MockScript script;
      script.name = config_.backend_name;
      script.num_layers = config_.mock_layers;
      script.hidden_dim = config_.mock_hidden_dim;
      script.context_limit = config_.mock_context_limit;
      script.responder = MockBackend::extractive_reader;
      script.step_logprob = MockBackend::copy_step_logprob;
      owned_backend_ = std::make_unique<MockBackend>(std::move(script));
    } else {
      owned_backend_ = std::make_unique<HttpBackend>(config_.backend_endpoint);
    }
    inner = owned_backend_.get();
  }
  cache_ = std::make_unique<TraceCache>(config_.traces_dir);
  backend_ = std::make_unique<CachingBackend>(*inner, *cache_, config_.backend_name);
  wrapper_ = backend_->chat_wrapper();

  previous_ = RunManifest::load(config_.run_dir);
  manifest_.created_at = previous_ ? previous_->created_at : utc_now();
  manifest_.config = config_.raw.values();
  manifest_.corpus_digest = corpus_.digest();
  manifest_.backend = backend_->descriptor();
  for (const auto& d : demos_) manifest_.demo_ids.push_back(d.id);
  write_file_atomic(config_.run_dir / "config.txt", config_.raw.dump());
}

std::string Runner::render(const ParallelSample& s, const Direction& d) const {
  return wrap_prompt(render_prompt(*template_, demos_, s, d), wrapper_).text;
}

void Runner::resolve_template() {
  if (config_.template_choice != "auto") {
    template_ = &PromptTemplate::builtin(parse_template(config_.template_choice));
    manifest_.template_used = std::string(template_name(template_->id));
    return;
  }
  // Score both templates on a held-out en-en slice and keep the better one.
  // v2 is tried first, so a tie keeps the default.
  Direction en_en{std::string(kEnglish), std::string(kEnglish)};
  corpus_.check_direction(en_en);
  std::size_t n = std::min(config_.auto_slice, tests_.size());
  double best = -1.0;
  for (auto id : {TemplateId::v2, TemplateId::v1}) {
    template_ = &PromptTemplate::builtin(id);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = *tests_[i];
      std::string raw;
      try {
        raw = backend_->generate(render(s, en_en), config_.generation).text;
      } catch (const OverflowError&) {
        continue;
      }
      std::vector<std::string> refs;
      for (const auto& a : s.entry(kEnglish).answers) refs.push_back(a.text);
      total += score_answer(extract_answer(raw), refs).f1;
    }
    if (total > best) {
      best = total;
      manifest_.template_used = std::string(template_name(id));
    }
  }
  template_ = &PromptTemplate::builtin(parse_template(manifest_.template_used));
}

std::vector<Direction> Runner::analysis_directions(bool include_xx) const {
  std::vector<Direction> out;
  for (const auto& d : directions_)
    if (d.is_en_x() || (include_xx && d.is_monolingual())) out.push_back(d);
  return out;
}

std::string Runner::fingerprint(Stage stage) const {
  static const std::map<Stage, std::vector<std::string>> kPrefixes = {
      {Stage::evaluate, {"corpus.", "directions", "shots", "template", "seed", "max_samples", "generation.", "backend."}},
      {Stage::errors, {"judge.", "judge2.", "threshold.correct_f1", "errors."}},
      {Stage::oracle,
       {"corpus.", "directions", "shots", "template", "seed", "max_samples", "generation.", "backend.", "oracle."}},
      {Stage::mrd, {"mechanism.", "threshold.mrd", "threshold.balanced", "threshold.margin", "categorize."}},
      {Stage::hidden_sim, {"mechanism.", "threshold.balanced", "threshold.margin", "categorize."}},
  };
  static const std::map<Stage, std::vector<Stage>> kUpstream = {
      {Stage::evaluate, {}}, {Stage::errors, {Stage::evaluate}}, {Stage::oracle, {}},
      {Stage::mrd, {Stage::evaluate}}, {Stage::hidden_sim, {Stage::evaluate}}};
  json j;
  j["stage"] = stage_name(stage);
  j["corpus"] = manifest_.corpus_digest;
  j["template"] = manifest_.template_used;
  j["backend"] = config_.backend_name;
  j["demos"] = manifest_.demo_ids;
  json keys = json::object();
  for (const auto& [k, v] : config_.raw.values()) {
    for (const auto& p : kPrefixes.at(stage))
      if (k.rfind(p, 0) == 0) keys[k] = v;
  }
  j["config"] = keys;
  // Evaluate-stage keys matter to every downstream stage.
  for (auto up : kUpstream.at(stage)) {
    if (const auto* rec = manifest_.stage(stage_name(up))) j["upstream"][rec->name] = rec->outputs;
  }
  return sha256_hex(j.dump());
}

bool Runner::try_reuse(Stage stage, StageRecord& record) const {
  if (!previous_) return false;
  const auto* prev = previous_->stage(stage_name(stage));
  if (!prev || prev->status != "completed" || prev->fingerprint != record.fingerprint || prev->outputs.empty()) {
    return false;
  }
  for (const auto& [rel, digest] : prev->outputs) {
    auto path = config_.run_dir / rel;
    if (!fs::exists(path) || file_sha256(path) != digest) return false;
  }
  record.outputs = prev->outputs;
  record.reused = true;
  record.status = "completed";
  record.message = "outputs reused";
  return true;
}

bool Runner::upstream_ok(Stage stage, std::string& why) const {
  if (stage == Stage::evaluate || stage == Stage::oracle) return true;
  const auto* ev = manifest_.stage("evaluate");
  if (ev && ev->status == "completed") return true;
  why = ev ? "evaluate stage " + ev->status : "evaluate stage did not run";
  return false;
}

void Runner::run_stage(Stage stage) {
  StageRecord record;
  record.name = std::string(stage_name(stage));
  if (!config_.stages.count(stage)) {
    // Keep a disabled stage's earlier outputs visible to the report.
    if (previous_) {
      if (const auto* prev = previous_->stage(record.name); prev && prev->status == "completed") {
        record = *prev;
        record.reused = true;
        manifest_.stages.push_back(record);
        return;
      }
    }
    record.status = "disabled";
    manifest_.stages.push_back(record);
    return;
  }
  record.started_at = utc_now();
  std::string why;
  if (!upstream_ok(stage, why)) {
    record.status = "failed";
    record.message = "skipped: " + why;
    record.finished_at = utc_now();
    manifest_.stages.push_back(record);
    return;
  }
  record.fingerprint = fingerprint(stage);
  if (!try_reuse(stage, record)) {
    StageWriter out(config_.run_dir, record);
    try {
      switch (stage) {
        case Stage::evaluate: stage_evaluate(out); break;
        case Stage::errors: stage_errors(out); break;
        case Stage::oracle: stage_oracle(out); break;
        case Stage::mrd: stage_mrd(out); break;
        case Stage::hidden_sim: stage_hidden_sim(out); break;
      }
      record.status = "completed";
    } catch (const std::exception& e) {
      record.status = "failed";
      record.message = e.what();
      std::cerr << "stage " << record.name << " failed: " << e.what() << "\n";
    }
  }
  record.finished_at = utc_now();
  manifest_.stages.push_back(record);
  save_manifest();
}

void Runner::save_manifest() {
  manifest_.updated_at = utc_now();
  manifest_.backend_calls = backend_->inner_calls();
  manifest_.cache_hits = backend_->cache_hits();
  manifest_.files.clear();
  std::error_code ec;
  auto traces = fs::weakly_canonical(config_.traces_dir, ec);
  for (auto it = fs::recursive_directory_iterator(config_.run_dir); it != fs::recursive_directory_iterator(); ++it) {
    const auto& p = it->path();
    if (it->is_directory()) {
      auto name = p.filename().string();
      if (fs::weakly_canonical(p, ec) == traces || (p.parent_path() == config_.run_dir && name == "report")) {
        it.disable_recursion_pending();
      }
      continue;
    }
    auto rel = fs::relative(p, config_.run_dir).generic_string();
    if (rel == "manifest.json" || rel.find(".tmp.") != std::string::npos) continue;
    manifest_.files[rel] = file_sha256(p);
  }
  write_file_atomic(config_.run_dir / "manifest.json", manifest_.to_json());
}

RunManifest Runner::execute() {
  setup();
  resolve_template();
  for (auto stage : kAllStages) run_stage(stage);
  save_manifest();
  return manifest_;
}

const ParallelSample& Runner::sample(const std::string& id) const {
  auto it = std::lower_bound(corpus_.samples.begin(), corpus_.samples.end(), id,
                             [](const ParallelSample& s, const std::string& v) { return s.id < v; });
  if (it == corpus_.samples.end() || it->id != id) throw ValidationError("unknown sample id " + id);
  return *it;
}

// ---------------------------------------------------------------- evaluate

void Runner::stage_evaluate(StageWriter& out) {
  std::string scores_jsonl;
  std::string skipped = "direction,sample_id,reason\n";
  std::map<Direction, std::vector<AnswerScore>> by_direction;
  std::map<std::string, std::map<Direction, double>> per_sample;
  for (const auto& d : directions_) {
    for (const auto* s : tests_) {
      GenerationResult gen;
      try {
        gen = backend_->generate(render(*s, d), config_.generation);
      } catch (const OverflowError& e) {
        std::cerr << "warning: skipping " << s->id << " (" << d.str() << "): " << e.what() << "\n";
        skipped += d.str() + "," + s->id + ",overflow\n";
        continue;
      }
      auto answer = extract_answer(gen.text);
      std::vector<std::string> refs;
      for (const auto& a : s->entry(d.context_lang).answers) refs.push_back(a.text);
      auto score = score_answer(answer, refs);
      ordered_json line = {{"direction", d.str()},
                           {"sample_id", s->id},
                           {"raw", gen.text},
                           {"answer", answer},
                           {"f1", score.f1},
                           {"em", score.em},
                           {"best_reference", score.best_reference_index},
                           {"finish_reason", finish_reason_name(gen.finish_reason)}};
      scores_jsonl += line.dump() + "\n";
      by_direction[d].push_back(score);
      per_sample[s->id][d] = score.f1;
    }
  }
  out.write("scores.jsonl", scores_jsonl);
  out.write("evaluate/skipped.csv", skipped);

  std::string summary = "direction,context_lang,question_lang,n,mean_f1_x100,mean_em_x100\n";
  std::map<Direction, DirectionSummary> summaries;
  for (const auto& d : directions_) {
    auto it = by_direction.find(d);
    if (it == by_direction.end()) continue;
    auto s = aggregate_direction(d, it->second);
    summaries[d] = s;
    summary += d.str() + "," + d.context_lang + "," + d.question_lang + "," + std::to_string(s.n) + "," +
               fmt(s.mean_f1_x100) + "," + fmt(s.mean_em_x100) + "\n";
  }
  out.write("summary.csv", summary);

  std::string ratios = "en_x_over_en_en,x_x_over_en_en,en_x_directions,x_x_directions\n";
  try {
    auto r = cross_lingual_ratio(summaries);
    ratios += fmt(r.en_x_over_en_en) + "," + fmt(r.x_x_over_en_en) + "," + std::to_string(r.en_x_count) + "," +
              std::to_string(r.x_x_count) + "\n";
  } catch (const ValidationError& e) {
    std::cerr << "note: no cross-lingual ratios: " << e.what() << "\n";
  }
  out.write("ratios.csv", ratios);

  auto cat_dirs = analysis_directions(config_.categorize_include_xx);
  std::string header = "sample_id,category";
  for (const auto& d : cat_dirs) header += ",f1_" + d.str();
  std::string categories = header + "\n";
  CategoryThresholds thresholds{config_.balanced_threshold, config_.margin_threshold};
  for (const auto* s : tests_) {
    auto it = per_sample.find(s->id);
    if (it == per_sample.end()) continue;
    std::map<Direction, double> f1s;
    for (const auto& d : cat_dirs)
      if (auto f = it->second.find(d); f != it->second.end()) f1s[d] = f->second;
    std::string category = "uncategorized";
    if (f1s.size() == cat_dirs.size()) {
      try {
        category = std::string(category_name(categorize_sample(f1s, thresholds)));
      } catch (const ValidationError&) {
        // No en-en or no non-English direction under analysis.
      }
    }
    std::string row = s->id + "," + category;
    for (const auto& d : cat_dirs) row += "," + (f1s.count(d) ? fmt(f1s[d]) : std::string());
    categories += row + "\n";
  }
  out.write("categories.csv", categories);
}

std::vector<ScoreRow> Runner::load_scores() const {
  std::vector<ScoreRow> rows;
  std::istringstream in(read_file(config_.run_dir / "scores.jsonl"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line);
    rows.push_back({Direction::parse(j.at("direction").get<std::string>()), j.at("sample_id"), j.at("raw"),
                    j.at("answer"), j.at("f1"), j.at("em")});
  }
  return rows;
}

std::map<std::string, std::string> Runner::load_categories() const {
  std::map<std::string, std::string> out;
  std::istringstream in(read_file(config_.run_dir / "categories.csv"));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() >= 2) out[cells[0]] = cells[1];
  }
  return out;
}

// ------------------------------------------------------------------ errors

std::unique_ptr<JudgeClient> Runner::make_judge(const JudgeConfig& jc, JudgeClient* injected) const {
  if (injected) return nullptr;
  if (jc.kind == "rules") return std::make_unique<RuleJudgeClient>();
  if (jc.kind == "http") return std::make_unique<HttpJudgeClient>(jc.http);
  return nullptr;  // recorded: cache only
}

void Runner::stage_errors(StageWriter& out) {
  auto rows = load_scores();
  HeuristicLanguageDetector detector(corpus_.languages);
  JudgeCache cache(config_.run_dir / "judge");
  ErrorPolicy policy{config_.correct_f1, config_.denominator};

  struct JudgeRun {
    const JudgeConfig* cfg;
    JudgeClient* client;
    std::string model;
    std::vector<JudgeOutcome> outcomes;
  };
  std::vector<JudgeRun> judges;
  std::vector<std::unique_ptr<JudgeClient>> owned;
  auto add_judge = [&](const JudgeConfig& jc, JudgeClient* injected) {
    if (jc.kind == "none") return;
    owned.push_back(make_judge(jc, injected));
    JudgeClient* client = injected ? injected : owned.back().get();
    std::string model = client ? client->model_id() : jc.http.model;
    if (model.empty()) throw ConfigError("recorded judge needs judge.model to locate cached replies");
    judges.push_back({&jc, client, model, {}});
  };
  add_judge(config_.judge, hooks_.judge);
  add_judge(config_.judge2, hooks_.judge2);

  for (auto& j : judges) {
    j.outcomes.resize(rows.size());
    parallel_for(rows.size(), j.cfg->concurrency, [&](std::size_t i) {
      const auto& r = rows[i];
      const auto& q = sample(r.sample_id).entry(r.direction.question_lang).question;
      j.outcomes[i] = classify_generation(q, r.raw, j.client, &cache, j.cfg->policy, j.model);
    });
  }

  const auto& primary = judges.front().outcomes;
  std::size_t needed = 0;
  std::size_t unavailable = 0;
  for (const auto& o : primary) {
    if (o.short_circuit) continue;
    ++needed;
    if (o.unavailable()) ++unavailable;
  }
  if (needed > 0 && unavailable == needed) {
    throw TransportError("judge unavailable for all " + std::to_string(needed) + " answers that needed it");
  }

  auto report_rows = [&](const std::vector<JudgeOutcome>& outcomes, std::string& records_out) {
    std::string csv =
        "direction,n,language_rate,generation_rate,blank_rate,gibberish_rate,refusal_rate,content_rate,"
        "correct_rate,judge_unavailable,denominator\n";
    for (const auto& d : directions_) {
      std::vector<ErrorInput> inputs;
      std::vector<SampleF1> scores;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].direction != d) continue;
        const auto& s = sample(rows[i].sample_id);
        inputs.push_back({rows[i].sample_id, d, rows[i].answer, s.entry(d.context_lang).answers.front().text,
                          outcomes[i].category});
        scores.push_back({rows[i].sample_id, rows[i].f1});
      }
      if (inputs.empty()) continue;
      auto analysis = compute_error_report(inputs, scores, detector, policy);
      const auto& r = analysis.report;
      csv += d.str() + "," + std::to_string(r.n) + "," + fmt(r.language_rate) + "," + fmt(r.generation_rate) + "," +
             fmt(r.blank_rate) + "," + fmt(r.gibberish_rate) + "," + fmt(r.refusal_rate) + "," +
             fmt(r.content_rate) + "," + fmt(r.correct_rate) + "," + std::to_string(r.judge_unavailable) + "," +
             std::to_string(r.denominator) + "\n";
      for (const auto& rec : analysis.records) {
        ordered_json j = {{"direction", d.str()},
                          {"sample_id", rec.sample_id},
                          {"answer_lang", rec.detected_answer_lang},
                          {"reference_lang", rec.detected_reference_lang},
                          {"judge", rec.judge_category ? json(judge_category_name(*rec.judge_category)) : json()},
                          {"class", rec.final_class ? json(error_class_name(*rec.final_class)) : json()},
                          {"f1", rec.f1}};
        records_out += j.dump() + "\n";
      }
    }
    return csv;
  };

  std::string records;
  out.write("errors.csv", report_rows(primary, records));
  out.write("errors/records.jsonl", records);
  if (judges.size() > 1) {
    std::string records2;
    out.write("errors_judge2.csv", report_rows(judges[1].outcomes, records2));
    out.write("errors/records_judge2.jsonl", records2);
    std::vector<std::optional<JudgeCategory>> a, b;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (primary[i].short_circuit) continue;
      a.push_back(primary[i].category);
      b.push_back(judges[1].outcomes[i].category);
    }
    out.write("errors/judge_agreement.csv", "judge1,judge2,compared,agreement\n" + judges[0].model + "," +
                                                judges[1].model + "," + std::to_string(a.size()) + "," +
                                                fmt(judge_agreement(a, b)) + "\n");
  }
}

// ------------------------------------------------------------------ oracle

void Runner::stage_oracle(StageWriter& out) {
  auto dirs = analysis_directions(config_.oracle_include_xx);
  if (dirs.empty()) throw ValidationError("no en-en or en-x direction to estimate the oracle on");
  std::string accuracy = "direction,mode,n,accuracy\n";
  for (const auto& d : dirs) {
    for (auto mode : config_.oracle_modes) {
      std::vector<OracleResult> results;
      std::string lines;
      for (const auto* s : tests_) {
        const auto& entry = s->entry(d.context_lang);
        auto seg = segment_context(entry.context, entry.answers.front().byte_start, config_.oracle_granularity,
                                   config_.oracle_span_window);
        OracleResult r;
        try {
          r = estimate_oracle(*backend_, OracleInstance{*template_, demos_, *s, d}, seg, mode, config_.generation);
        } catch (const OverflowError& e) {
          std::cerr << "warning: oracle skips " << s->id << " (" << d.str() << "): " << e.what() << "\n";
          continue;
        }
        json segs = json::array();
        for (const auto& sp : seg.segments) segs.push_back({sp.begin, sp.end});
        ordered_json j = {{"sample_id", r.sample_id},
                          {"direction", d.str()},
                          {"mode", oracle_mode_name(mode)},
                          {"segments", segs},
                          {"gold_index", r.gold_index},
                          {"scores", r.scores},
                          {"correct", r.correct},
                          {"margin", std::isfinite(r.margin) ? json(r.margin) : json()},
                          {"target", r.target},
                          {"target_fallback", r.target_fallback}};
        lines += j.dump() + "\n";
        results.push_back(std::move(r));
      }
      out.write("oracle/" + d.str() + "." + std::string(oracle_mode_name(mode)) + ".jsonl", lines);
      if (!results.empty()) {
        accuracy += d.str() + "," + std::string(oracle_mode_name(mode)) + "," + std::to_string(results.size()) + "," +
                    fmt(oracle_accuracy(results)) + "\n";
      }
    }
  }
  out.write("oracle/accuracy.csv", accuracy);
}

// --------------------------------------------------------------------- mrd

void Runner::stage_mrd(StageWriter& out) {
  auto categories = load_categories();
  auto dirs = analysis_directions(false);
  if (dirs.empty()) throw ValidationError("no en-en or en-x direction for MRD");
  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
    std::size_t undefined = 0;
  };
  std::map<std::tuple<Direction, std::string, Part>, Acc> acc;
  std::string samples_jsonl;
  for (const auto& d : dirs) {
    for (const auto* s : tests_) {
      auto cat_it = categories.find(s->id);
      if (cat_it == categories.end()) continue;
      auto rendered = wrap_prompt(render_prompt(*template_, demos_, *s, d), wrapper_);
      RelevanceMatrix matrix;
      std::vector<TokenOffset> tokens;
      try {
        tokens = backend_->tokenize_with_offsets(rendered.text);
        matrix = backend_->layer_relevance(rendered.text, config_.relevance_target);
      } catch (const OverflowError& e) {
        std::cerr << "warning: MRD skips " << s->id << " (" << d.str() << "): " << e.what() << "\n";
        continue;
      }
      auto spans = align_part_spans(rendered, tokens);
      ordered_json parts = ordered_json::object();
      for (auto part : config_.mrd_parts) {
        if (spans.tokens(part).empty() && part != Part::last_input_token) continue;
        for (const auto& cat : {cat_it->second, std::string("all")}) {
          auto& a = acc[{d, cat, part}];
          try {
            auto r = part_mrd(matrix, spans, part, config_.mrd_threshold, config_.relevance_norm);
            a.sum += static_cast<double>(r.mrd);
            ++a.n;
            a.undefined += r.undefined_tokens;
            if (cat == "all") parts[std::string(part_name(part))] = r.mrd;
          } catch (const ValidationError&) {
            ++a.undefined;
          }
        }
      }
      samples_jsonl += ordered_json{{"sample_id", s->id}, {"direction", d.str()}, {"category", cat_it->second},
                                    {"part_mrd", parts}}
                           .dump() +
                       "\n";
    }
  }
  std::string csv = "direction,question_lang,category,part,mean_mrd,n,undefined_tokens,num_layers\n";
  auto layers = std::to_string(backend_->descriptor().num_layers);
  for (const auto& [key, a] : acc) {
    const auto& [d, cat, part] = key;
    if (a.n == 0 || cat == "uncategorized" || cat == "other") continue;
    csv += d.str() + "," + d.question_lang + "," + cat + "," + std::string(part_name(part)) + "," +
           fmt(a.sum / static_cast<double>(a.n)) + "," + std::to_string(a.n) + "," + std::to_string(a.undefined) +
           "," + layers + "\n";
  }
  out.write("mechanism/mrd.csv", csv);
  out.write("mechanism/mrd_samples.jsonl", samples_jsonl);
}

// -------------------------------------------------------------- hidden_sim

void Runner::stage_hidden_sim(StageWriter& out) {
  auto categories = load_categories();
  Direction en_en{std::string(kEnglish), std::string(kEnglish)};
  if (std::find(directions_.begin(), directions_.end(), en_en) == directions_.end()) {
    throw ValidationError("hidden-state similarity needs the en-en direction");
  }
  std::vector<const ParallelSample*> chosen;
  for (const auto* s : tests_) {
    auto it = categories.find(s->id);
    if (it == categories.end()) continue;
    if (config_.sim_category == "all" || it->second == config_.sim_category) chosen.push_back(s);
  }
  if (chosen.size() < 2) {
    throw ValidationError("only " + std::to_string(chosen.size()) + " sample(s) in category '" +
                          config_.sim_category + "'; the similarity ratio needs at least 2");
  }

  // pooled[direction][part][sample index]
  auto pool_direction = [&](const Direction& d) {
    std::map<Part, std::vector<LayerVectors>> pooled;
    for (const auto* s : chosen) {
      auto rendered = wrap_prompt(render_prompt(*template_, demos_, *s, d), wrapper_);
      auto tokens = backend_->tokenize_with_offsets(rendered.text);
      auto trace = backend_->hidden_states(rendered.text);
      auto spans = align_part_spans(rendered, tokens);
      for (auto part : config_.sim_parts) {
        if (part != Part::last_input_token && spans.tokens(part).empty()) continue;
        pooled[part].push_back(pool_part(trace, spans, part, config_.pooling).layers);
      }
    }
    return pooled;
  };

  auto en = pool_direction(en_en);
  std::string stats_csv = "part,lang,samples,peak_rel_depth,plateau_start_rel_depth,late_decline\n";
  for (const auto& d : directions_) {
    if (!d.is_en_x() || d.is_en_en()) continue;
    auto x = pool_direction(d);
    for (auto part : config_.sim_parts) {
      if (!en.count(part) || !x.count(part)) continue;
      auto series = similarity_series(en[part], x[part]);
      std::string csv = "layer,rel_depth,similarity\n";
      auto n = series.values.size();
      for (std::size_t l = 0; l < n; ++l) {
        csv += std::to_string(l) + "," + fmt(n > 1 ? static_cast<double>(l) / static_cast<double>(n - 1) : 0.0) +
               "," + fmt(series.values[l]) + "\n";
      }
      out.write("mechanism/sim_" + std::string(part_name(part)) + "_" + d.question_lang + ".csv", csv);
      std::string stats = std::string(part_name(part)) + "," + d.question_lang + "," + std::to_string(series.samples);
      if (n >= 5) {
        auto cs = curve_stats(series.values, config_.curve);
        stats += "," + fmt(cs.peak_rel_depth) + "," +
                 (cs.plateau_start_rel_depth ? fmt(*cs.plateau_start_rel_depth) : std::string("none")) + "," +
                 fmt(cs.late_decline);
      } else {
        stats += ",na,na,na";
      }
      stats_csv += stats + "\n";
    }
  }
  out.write("mechanism/curve_stats.csv", stats_csv);
}

}  // namespace

RunManifest run(const RunConfig& config, const RunHooks& hooks) {
  config.validate();
  Runner runner(config, hooks);
  return runner.execute();
}

}  // namespace xmrc
