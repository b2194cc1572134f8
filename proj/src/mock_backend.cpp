#include "xmrc/mock_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "xmrc/error.hpp"
#include "xmrc/util.hpp"

namespace xmrc {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform in [0, 1).
double unit(std::uint64_t h) { return static_cast<double>(mix(h) >> 11) * 0x1.0p-53; }

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string strip_punct(std::string_view w) {
  std::string out;
  for (char c : w)
    if (!std::ispunct(static_cast<unsigned char>(c))) out.push_back(c);
  return out;
}

}  // namespace

MockBackend::MockBackend(MockScript script) : script_(std::move(script)) {
  if (script_.num_layers == 0 || script_.hidden_dim == 0) throw ValidationError("mock backend needs N >= 1 and d >= 1");
}

BackendDescriptor MockBackend::descriptor() const {
  return {script_.name,           script_.num_layers,     script_.hidden_dim,
          script_.supports_relevance, script_.supports_hidden, script_.max_concurrency};
}

std::vector<std::string> MockBackend::split_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    auto start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::vector<TokenOffset> MockBackend::offsets(std::string_view text) const {
  std::vector<TokenOffset> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    auto start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i == start) break;
    auto tok = text.substr(start, i - start);
    auto it = std::find(script_.vocab.begin(), script_.vocab.end(), tok);
    std::int64_t id = it != script_.vocab.end()
                          ? static_cast<std::int64_t>(it - script_.vocab.begin())
                          : static_cast<std::int64_t>(script_.vocab.size() + fnv1a(tok) % 1000003ULL);
    out.push_back({id, start, i});
  }
  return out;
}

void MockBackend::check_context(std::string_view prompt) const {
  auto n = split_tokens(prompt).size();
  if (n > script_.context_limit) {
    throw OverflowError("prompt has " + std::to_string(n) + " tokens, context limit is " +
                        std::to_string(script_.context_limit));
  }
}

std::vector<TokenOffset> MockBackend::do_tokenize(std::string_view text) {
  ++calls_;
  return offsets(text);
}

GenerationResult MockBackend::do_generate(std::string_view prompt, const GenerationParams& params) {
  ++calls_;
  check_context(prompt);
  GenerationResult result;
  result.prompt_token_count = split_tokens(prompt).size();
  std::string text;
  if (auto it = script_.generations.find(sha256_hex(prompt)); it != script_.generations.end()) {
    text = it->second;
  } else if (script_.responder) {
    text = script_.responder(prompt);
  }
  auto toks = offsets(text);
  if (params.max_new_tokens == 0) {
    result.finish_reason = FinishReason::length;
  } else if (toks.size() > params.max_new_tokens) {
    result.text = text.substr(0, toks[params.max_new_tokens - 1].char_end);
    result.finish_reason = FinishReason::length;
  } else {
    result.text = text;
    result.finish_reason = FinishReason::eos;
  }
  return result;
}

double MockBackend::step(std::string_view prompt, std::span<const std::string> prefix,
                         std::optional<std::string_view> next) const {
  if (script_.step_logprob) return script_.step_logprob(prompt, prefix, next);
  double uniform = -std::log(static_cast<double>(script_.uniform_vocab_size));
  if (!next && script_.eos_logprob) return *script_.eos_logprob;
  return uniform;
}

double MockBackend::do_target_logprob(std::string_view prompt, std::string_view target, TargetMode mode) {
  ++calls_;
  check_context(prompt);
  auto toks = split_tokens(target);
  if (toks.empty()) throw ValidationError("target has no tokens");
  std::span<const std::string> all(toks);
  if (mode == TargetMode::first_token) return step(prompt, all.first(0), toks.front());
  double total = 0.0;
  for (std::size_t i = 0; i < toks.size(); ++i) total += step(prompt, all.first(i), toks[i]);
  return total + step(prompt, all, std::nullopt);
}

RelevanceMatrix MockBackend::do_layer_relevance(std::string_view prompt, TargetMode target) {
  ++calls_;
  check_context(prompt);
  auto toks = offsets(prompt);
  RelevanceMatrix m{script_.num_layers, toks.size(), {}, target};
  if (auto it = script_.relevance.find(sha256_hex(prompt)); it != script_.relevance.end()) {
    const auto& rows = it->second;
    if (rows.size() != script_.num_layers) throw ValidationError("scripted relevance has the wrong layer count");
    m.tokens = rows.empty() ? 0 : rows.front().size();
    for (const auto& r : rows) {
      if (r.size() != m.tokens) throw ValidationError("scripted relevance rows differ in length");
      m.values.insert(m.values.end(), r.begin(), r.end());
    }
    return m;
  }
  // Synthetic: each token concentrates its mass around a token-specific depth.
  auto prompt_seed = fnv1a(prompt);
  auto mode_seed = static_cast<std::uint64_t>(target == TargetMode::first_token ? 1 : 2);
  m.values.resize(m.layers * m.tokens);
  for (std::size_t t = 0; t < m.tokens; ++t) {
    auto tok = prompt.substr(toks[t].char_start, toks[t].char_end - toks[t].char_start);
    double centre = unit(fnv1a(tok) ^ mode_seed) * static_cast<double>(m.layers);
    for (std::size_t l = 0; l < m.layers; ++l) {
      double dist = std::abs(static_cast<double>(l) + 0.5 - centre);
      double noise = unit(prompt_seed ^ mix(t * 7919 + l));
      m.values[l * m.tokens + t] = static_cast<float>(std::exp(-dist) + 0.05 * noise);
    }
  }
  return m;
}

HiddenTrace MockBackend::do_hidden_states(std::string_view prompt) {
  ++calls_;
  check_context(prompt);
  auto toks = offsets(prompt);
  HiddenTrace h{script_.num_layers + 1, toks.size(), script_.hidden_dim, {}};
  h.values.resize(h.layers * h.tokens * h.dim);
  for (std::size_t l = 0; l < h.layers; ++l) {
    for (std::size_t t = 0; t < h.tokens; ++t) {
      auto tok = prompt.substr(toks[t].char_start, toks[t].char_end - toks[t].char_start);
      auto tok_seed = fnv1a(tok);
      for (std::size_t k = 0; k < h.dim; ++k) {
        double own = 2.0 * unit(tok_seed ^ mix(l * 1000003 + k)) - 1.0;
        double shared = 2.0 * unit(mix(0xABCDEFULL + l * 131 + k)) - 1.0;
        // Deeper layers drift toward a shared direction.
        double w = static_cast<double>(l) / static_cast<double>(h.layers);
        h.values[(l * h.tokens + t) * h.dim + k] = static_cast<float>((1.0 - 0.5 * w) * own + (0.3 + w) * shared);
      }
    }
  }
  return h;
}

namespace {

struct TestSlots {
  std::string_view context;
  std::string_view question;
};

// Context and question of the test block, after the task separator.
std::optional<TestSlots> test_slots(std::string_view prompt) {
  constexpr std::string_view kTask = "Your task starts here:";
  auto task = prompt.rfind(kTask);
  if (task == std::string_view::npos) return std::nullopt;
  auto ctx_pos = prompt.find("Context: ", task);
  auto q_pos = prompt.find("\n\nQuestion: ", task);
  if (ctx_pos == std::string_view::npos || q_pos == std::string_view::npos || q_pos < ctx_pos) return std::nullopt;
  auto q_start = q_pos + 12;
  auto q_end = prompt.find("\n\n", q_start);
  return TestSlots{prompt.substr(ctx_pos + 9, q_pos - ctx_pos - 9),
                   prompt.substr(q_start, q_end == std::string_view::npos ? std::string_view::npos : q_end - q_start)};
}

bool looks_like_name_or_number(std::string_view w) {
  auto c = static_cast<unsigned char>(w.front());
  return std::isdigit(c) || std::isupper(c);
}

}  // namespace

std::string MockBackend::extractive_reader(std::string_view prompt) {
  auto slots = test_slots(prompt);
  if (!slots) return "Answer:";
  auto context = slots->context;

  std::set<std::string> q_words;
  for (const auto& w : split_tokens(slots->question)) q_words.insert(strip_punct(lower_ascii(w)));

  std::vector<std::string_view> sentences;
  std::size_t start = 0;
  for (std::size_t i = 0; i < context.size(); ++i) {
    if ((context[i] == '.' || context[i] == '?' || context[i] == '!') &&
        (i + 1 == context.size() || is_space(context[i + 1]))) {
      sentences.push_back(context.substr(start, i + 1 - start));
      start = i + 1;
    }
  }
  if (start < context.size()) sentences.push_back(context.substr(start));

  std::string_view best;
  std::size_t best_score = 0;
  bool found = false;
  for (auto s : sentences) {
    std::size_t score = 0;
    for (const auto& w : split_tokens(s))
      if (q_words.count(strip_punct(lower_ascii(w)))) ++score;
    if (!found || score > best_score) {
      best = s;
      best_score = score;
      found = true;
    }
  }
  // Prefer the first run of capitalized or numeric words absent from the
  // question (names, places, numbers); otherwise the first three new words.
  auto words = split_tokens(best);
  std::vector<std::string> run;
  for (std::size_t i = 1; i < words.size(); ++i) {
    bool new_word = !q_words.count(strip_punct(lower_ascii(words[i])));
    if (new_word && looks_like_name_or_number(words[i])) {
      run.push_back(words[i]);
    } else if (!run.empty()) {
      break;
    }
  }
  if (!run.empty()) {
    auto& last = run.back();
    while (!last.empty() && std::ispunct(static_cast<unsigned char>(last.back()))) last.pop_back();
    return "Answer: " + join(run, " ");
  }
  std::vector<std::string> picked;
  for (const auto& w : words) {
    if (q_words.count(strip_punct(lower_ascii(w)))) continue;
    picked.push_back(w);
    if (picked.size() == 3) break;
  }
  return "Answer: " + join(picked, " ");
}

double MockBackend::copy_step_logprob(std::string_view prompt, std::span<const std::string> prefix,
                                      std::optional<std::string_view> next) {
  // Copying from the test context is likely; anything else is not. Answers
  // end after a few tokens.
  if (!next) return std::log(prefix.size() >= 2 ? 0.5 : 0.05);
  auto slots = test_slots(prompt);
  if (slots) {
    for (const auto& w : split_tokens(slots->context))
      if (strip_punct(w) == strip_punct(*next)) return std::log(0.6);
  }
  return std::log(0.02);
}

}  // namespace xmrc
