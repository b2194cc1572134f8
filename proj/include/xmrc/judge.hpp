#pragma once

// LLM-as-judge typing of generation failures (blank / gibberish / refusal),
// with a persistent reply cache so reclassification never re-queries.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xmrc {

enum class JudgeCategory { reasonable = 0, blank = 1, gibberish = 2, refusal = 3 };

std::string_view judge_category_name(JudgeCategory c);

/// The judge instruction followed by the question and raw answer.
std::string judge_prompt(std::string_view question, std::string_view raw_answer);

/// Accepts a reply that is exactly one digit 0-3 (surrounding whitespace and
/// a trailing period allowed).
std::optional<JudgeCategory> parse_judge_reply(std::string_view reply);

class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  virtual std::string model_id() const = 0;
  /// Sends one user message, returns the raw reply. Throws TransportError.
  virtual std::string complete(const std::string& user_message) = 0;
};

struct HttpJudgeSettings {
  std::string url;  // base URL; requests go to <url>/chat/completions
  std::string model;
  std::string auth_env = "XMRC_JUDGE_TOKEN";
  std::string system_prompt;  // empty: let the server apply its default
  std::chrono::milliseconds timeout{60000};
};

/// Chat-completions client (OpenAI-compatible request/response bodies).
class HttpJudgeClient : public JudgeClient {
 public:
  explicit HttpJudgeClient(HttpJudgeSettings settings);
  std::string model_id() const override { return settings_.model; }
  std::string complete(const std::string& user_message) override;

 private:
  HttpJudgeSettings settings_;
};

/// Offline rule-based judge: empty -> blank, apologies and explicit
/// inability -> refusal, template placeholders and text without letters or
/// digits -> gibberish, anything else -> reasonable.
class RuleJudgeClient : public JudgeClient {
 public:
  std::string model_id() const override { return "rules-v1"; }
  std::string complete(const std::string& user_message) override;
  static JudgeCategory classify(std::string_view raw_answer);
};

/// Replies keyed by (question digest, answer digest, judge model id),
/// appended to `<dir>/replies.jsonl`; full transcripts go to
/// `<dir>/transcripts.jsonl`.
class JudgeCache {
 public:
  explicit JudgeCache(std::filesystem::path dir);

  std::optional<std::string> lookup(std::string_view question, std::string_view answer,
                                    std::string_view model) const;
  void store(std::string_view question, std::string_view answer, std::string_view model, std::string_view reply,
             const std::vector<std::string>& transcript);
  std::size_t size() const;

  static std::string key(std::string_view question, std::string_view answer, std::string_view model);

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::string> replies_;
};

struct JudgePolicy {
  std::size_t parse_retries = 2;       // extra queries after an unparsable reply
  std::size_t transport_retries = 3;   // extra attempts after a transport error
  std::chrono::milliseconds backoff{200};  // doubled after each transport error
};

struct JudgeOutcome {
  std::optional<JudgeCategory> category;  // empty: judge unavailable
  bool from_cache = false;
  bool short_circuit = false;  // blank answer, judge not consulted
  bool fell_back = false;      // no parsable reply; defaulted to reasonable
  std::size_t calls = 0;
  std::string reply;

  bool unavailable() const { return !category.has_value(); }
};

/// Blank answers (empty after extraction) short-circuit to `blank`. Otherwise
/// the cache is consulted, then the client; `client` may be null, in which
/// case a cache miss makes the judge unavailable.
JudgeOutcome classify_generation(std::string_view question, std::string_view raw_answer, JudgeClient* client,
                                 JudgeCache* cache, const JudgePolicy& policy = {},
                                 std::string_view model_id = {});

}  // namespace xmrc
