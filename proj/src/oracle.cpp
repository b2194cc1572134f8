#include "xmrc/oracle.hpp"

#include <algorithm>
#include <iostream>
#include <limits>

#include "xmrc/error.hpp"
#include "xmrc/util.hpp"

namespace xmrc {

std::string_view granularity_name(Granularity g) { return g == Granularity::sentence ? "sentence" : "span"; }

Granularity parse_granularity(std::string_view name) {
  if (name == "sentence") return Granularity::sentence;
  if (name == "span") return Granularity::span;
  throw ConfigError("unknown oracle granularity '" + std::string(name) + "'");
}

std::string_view oracle_mode_name(OracleMode m) { return m == OracleMode::step ? "step" : "sequence"; }

OracleMode parse_oracle_mode(std::string_view name) {
  if (name == "step") return OracleMode::step;
  if (name == "sequence") return OracleMode::sequence;
  throw ConfigError("unknown oracle mode '" + std::string(name) + "'");
}

namespace {

bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return is_ascii_space(c); });
}

std::vector<std::size_t> sentence_cuts(std::string_view text) {
  std::vector<std::size_t> cuts;
  for (std::size_t pos = 0; pos < text.size();) {
    char32_t c = utf8::next(text, pos);
    bool cut = false;
    if (c == '.' || c == '?' || c == '!') {
      cut = pos == text.size() || is_ascii_space(text[pos]);
    } else if (c == U'。' || c == U'？' || c == U'！' || c == U'।' || c == U'؟') {
      cut = true;
    }
    if (cut && pos < text.size()) cuts.push_back(pos);
  }
  return cuts;
}

std::vector<std::size_t> window_cuts(std::string_view text, std::size_t window) {
  std::vector<std::size_t> cuts;
  std::size_t tokens = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ascii_space(text[i])) ++i;
    if (i == text.size()) break;
    if (tokens > 0 && tokens % window == 0) cuts.push_back(i);
    while (i < text.size() && !is_ascii_space(text[i])) ++i;
    ++tokens;
  }
  return cuts;
}

}  // namespace

Segmentation segment_context(std::string_view context, std::size_t answer_start, Granularity granularity,
                             std::size_t window) {
  if (answer_start >= context.size()) throw ValidationError("answer_start lies outside the context");
  if (granularity == Granularity::span && window == 0) throw ConfigError("span window must be positive");
  auto cuts = granularity == Granularity::sentence ? sentence_cuts(context) : window_cuts(context, window);

  Segmentation seg;
  seg.granularity = granularity;
  std::size_t begin = 0;
  cuts.push_back(context.size());
  for (auto cut : cuts) {
    if (cut <= begin) continue;
    CharSpan s{begin, cut};
    if (!seg.segments.empty() && is_blank(context.substr(s.begin, s.size()))) {
      seg.segments.back().end = cut;
    } else {
      seg.segments.push_back(s);
    }
    begin = cut;
  }
  for (std::size_t i = 0; i < seg.segments.size(); ++i) {
    if (seg.segments[i].begin <= answer_start && answer_start < seg.segments[i].end) seg.gold_index = i;
  }
  return seg;
}

OracleResult estimate_oracle(Backend& backend, const OracleInstance& instance, const Segmentation& segmentation,
                             OracleMode mode, const GenerationParams& params) {
  const auto& entry = instance.sample.entry(instance.direction.context_lang);
  const auto& context = entry.context;
  if (segmentation.segments.empty() || segmentation.segments.back().end != context.size()) {
    throw ValidationError("segmentation does not cover the context of sample " + instance.sample.id);
  }
  auto wrapper = backend.chat_wrapper();
  auto build = [&](std::string_view ctx) {
    return wrap_prompt(render_prompt_with_context(instance.tmpl, instance.demos, instance.sample, instance.direction,
                                                  ctx),
                       wrapper)
        .text;
  };

  OracleResult out;
  out.sample_id = instance.sample.id;
  out.direction = instance.direction;
  out.mode = mode;
  out.gold_index = segmentation.gold_index;
  const auto& gold = entry.answers.front().text;
  auto original = build(context);

  TargetMode target_mode = TargetMode::first_token;
  if (mode == OracleMode::step) {
    out.target = gold;
  } else {
    target_mode = TargetMode::full_sequence;
    out.target = std::string(trim(backend.generate(original, params).text));
    if (out.target.empty()) {
      std::cerr << "warning: empty generation for " << instance.sample.id << " (" << instance.direction.str()
                << "), scoring the gold answer instead\n";
      out.target = gold;
      out.target_fallback = true;
    }
  }

  double base = backend.target_logprob(original, out.target, target_mode);
  out.scores.assign(segmentation.segments.size(), 0.0);
  parallel_for(segmentation.segments.size(), backend.descriptor().max_concurrency, [&](std::size_t i) {
    const auto& s = segmentation.segments[i];
    if (s.size() == 0) return;
    std::string ablated = context.substr(0, s.begin) + context.substr(s.end);
    out.scores[i] = base - backend.target_logprob(build(ablated), out.target, target_mode);
  });

  if (out.scores.size() == 1) {
    out.margin = std::numeric_limits<double>::infinity();
    out.correct = true;
    return out;
  }
  double best_other = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.scores.size(); ++i)
    if (i != out.gold_index) best_other = std::max(best_other, out.scores[i]);
  out.margin = out.scores[out.gold_index] - best_other;
  out.correct = out.margin > 0.0;
  return out;
}

double oracle_accuracy(std::span<const OracleResult> results) {
  if (results.empty()) throw ValidationError("oracle accuracy of an empty result set");
  auto correct = std::count_if(results.begin(), results.end(), [](const OracleResult& r) { return r.correct; });
  return 100.0 * static_cast<double>(correct) / static_cast<double>(results.size());
}

}  // namespace xmrc
