#include "xmrc/judge.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <json.hpp>

#include "xmrc/error.hpp"
#include "xmrc/http.hpp"
#include "xmrc/scoring.hpp"
#include "xmrc/util.hpp"

namespace xmrc {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view judge_category_name(JudgeCategory c) {
  switch (c) {
    case JudgeCategory::reasonable: return "reasonable";
    case JudgeCategory::blank: return "blank";
    case JudgeCategory::gibberish: return "gibberish";
    case JudgeCategory::refusal: return "refusal";
  }
  return "reasonable";
}

namespace {

constexpr std::string_view kJudgeInstruction =
    "You are tasked with identifying the type of a given raw answer. You will be provided with a question and a raw "
    "answer. Your job is to determine whether the raw answer falls into one of the following categories based on the "
    "given question:\n\n"
    "0. Reasonable Answer: The answer seems like some attempt to answer the question, regardless of whether it is "
    "correct or not.\n\n"
    "1. Blank Answer: No response is provided.\n\n"
    "2. Gibberish: Incoherent text with no clear meaning or cannot be seen as some kind of answer to the question, "
    "e.g. \"{Your Answer}\".\n\n"
    "3. Denial of Answer: A statement indicating inability to answer, such as \"I apologize, but I cannot answer this "
    "question because...\".\n\n"
    "You must provide your response as a SINGLE number representing the category (0, 1, 2, or 3) without extra "
    "output.";

}  // namespace

std::string judge_prompt(std::string_view question, std::string_view raw_answer) {
  std::string out(kJudgeInstruction);
  out += "\n\nQuestion: ";
  out += question;
  out += "\nRaw Answer: ";
  out += raw_answer;
  return out;
}

std::optional<JudgeCategory> parse_judge_reply(std::string_view reply) {
  auto t = trim(reply);
  if (!t.empty() && t.back() == '.') t.remove_suffix(1);
  if (t.size() != 1 || t[0] < '0' || t[0] > '3') return std::nullopt;
  return static_cast<JudgeCategory>(t[0] - '0');
}

HttpJudgeClient::HttpJudgeClient(HttpJudgeSettings settings) : settings_(std::move(settings)) {
  if (settings_.url.empty()) throw ConfigError("judge.url is required for the http judge");
  if (settings_.model.empty()) throw ConfigError("judge.model is required for the http judge");
}

std::string HttpJudgeClient::complete(const std::string& user_message) {
  json messages = json::array();
  if (!settings_.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", settings_.system_prompt}});
  messages.push_back({{"role", "user"}, {"content", user_message}});
  json body = {{"model", settings_.model}, {"messages", messages}, {"temperature", 0}, {"max_tokens", 8}};
  std::map<std::string, std::string> headers;
  if (!settings_.auth_env.empty()) {
    if (const char* token = std::getenv(settings_.auth_env.c_str()); token && *token) {
      headers["Authorization"] = std::string("Bearer ") + token;
    }
  }
  auto res = http_post_json(settings_.url, "/chat/completions", body.dump(), headers, settings_.timeout);
  if (res.status != 200) throw TransportError("judge returned HTTP " + std::to_string(res.status));
  try {
    return json::parse(res.body).at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed judge response: ") + e.what());
  }
}

JudgeCategory RuleJudgeClient::classify(std::string_view raw_answer) {
  auto answer = extract_answer(raw_answer);
  if (answer.empty()) return JudgeCategory::blank;
  std::string lower;
  for (char c : answer) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  for (std::string_view cue : {"i apologize", "i'm sorry", "i am sorry", "i cannot answer", "i can't answer",
                               "cannot be answered", "unable to answer", "not mentioned in the context",
                               "does not mention", "no information"}) {
    if (lower.find(cue) != std::string::npos) return JudgeCategory::refusal;
  }
  if (lower.find("{your answer}") != std::string::npos) return JudgeCategory::gibberish;
  bool has_content = false;
  for (std::size_t pos = 0; pos < answer.size();) {
    char32_t c = utf8::next(answer, pos);
    if (c >= 0x80 || std::isalnum(static_cast<int>(c))) has_content = true;
  }
  return has_content ? JudgeCategory::reasonable : JudgeCategory::gibberish;
}

std::string RuleJudgeClient::complete(const std::string& user_message) {
  constexpr std::string_view kMarker = "\nRaw Answer: ";
  auto pos = user_message.rfind(kMarker);
  auto raw = pos == std::string::npos ? std::string_view(user_message)
                                      : std::string_view(user_message).substr(pos + kMarker.size());
  return std::to_string(static_cast<int>(classify(raw)));
}

JudgeCache::JudgeCache(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
  auto path = dir_ / "replies.jsonl";
  if (!fs::exists(path)) return;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      replies_[j.at("key").get<std::string>()] = j.at("reply").get<std::string>();
    } catch (const json::exception&) {
      // A torn final line from an interrupted run; the entry is re-fetched.
    }
  }
}

std::string JudgeCache::key(std::string_view question, std::string_view answer, std::string_view model) {
  return sha256_hex(question).substr(0, 24) + ":" + sha256_hex(answer).substr(0, 24) + ":" + std::string(model);
}

std::optional<std::string> JudgeCache::lookup(std::string_view question, std::string_view answer,
                                              std::string_view model) const {
  std::lock_guard lock(mutex_);
  auto it = replies_.find(key(question, answer, model));
  if (it == replies_.end()) return std::nullopt;
  return it->second;
}

void JudgeCache::store(std::string_view question, std::string_view answer, std::string_view model,
                       std::string_view reply, const std::vector<std::string>& transcript) {
  std::lock_guard lock(mutex_);
  auto k = key(question, answer, model);
  if (!replies_.emplace(k, std::string(reply)).second) return;
  {
    std::ofstream out(dir_ / "replies.jsonl", std::ios::app);
    out << json{{"key", k}, {"model", model}, {"reply", reply}}.dump() << "\n";
  }
  std::ofstream out(dir_ / "transcripts.jsonl", std::ios::app);
  out << json{{"key", k}, {"model", model}, {"question", question}, {"answer", answer}, {"exchanges", transcript}}
             .dump()
      << "\n";
}

std::size_t JudgeCache::size() const {
  std::lock_guard lock(mutex_);
  return replies_.size();
}

JudgeOutcome classify_generation(std::string_view question, std::string_view raw_answer, JudgeClient* client,
                                 JudgeCache* cache, const JudgePolicy& policy, std::string_view model_id) {
  JudgeOutcome out;
  if (extract_answer(raw_answer).empty()) {
    out.category = JudgeCategory::blank;
    out.short_circuit = true;
    return out;
  }
  std::string model(model_id.empty() && client ? client->model_id() : std::string(model_id));
  if (cache) {
    if (auto cached = cache->lookup(question, raw_answer, model)) {
      out.from_cache = true;
      out.reply = *cached;
      out.category = parse_judge_reply(*cached);
      if (!out.category) {
        out.category = JudgeCategory::reasonable;
        out.fell_back = true;
      }
      return out;
    }
  }
  if (!client) return out;

  auto prompt = judge_prompt(question, raw_answer);
  std::vector<std::string> transcript;
  std::size_t parse_failures = 0;
  std::size_t transport_failures = 0;
  auto backoff = policy.backoff;
  while (true) {
    std::string reply;
    try {
      ++out.calls;
      reply = client->complete(prompt);
    } catch (const TransportError& e) {
      transcript.push_back(std::string("transport error: ") + e.what());
      if (transport_failures++ >= policy.transport_retries) {
        std::cerr << "warning: judge unavailable after " << transport_failures << " attempts: " << e.what() << "\n";
        return out;
      }
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
      continue;
    }
    transcript.push_back(reply);
    out.reply = reply;
    out.category = parse_judge_reply(reply);
    if (out.category) break;
    if (parse_failures++ >= policy.parse_retries) {
      std::cerr << "warning: unparsable judge reply '" << reply << "', defaulting to reasonable\n";
      out.category = JudgeCategory::reasonable;
      out.fell_back = true;
      break;
    }
  }
  if (cache) cache->store(question, raw_answer, model, out.reply, transcript);
  return out;
}

}  // namespace xmrc
