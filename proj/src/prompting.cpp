#include "xmrc/prompting.hpp"

#include <algorithm>
#include <limits>
#include <optional>

#include "xmrc/error.hpp"

namespace xmrc {

std::string_view part_name(Part part) {
  switch (part) {
    case Part::task_description: return "task_description";
    case Part::demonstrations: return "demonstrations";
    case Part::context: return "context";
    case Part::question: return "question";
    case Part::last_input_token: return "last_input_token";
  }
  return "unknown";
}

Part parse_part(std::string_view name) {
  for (auto p : kAllParts)
    if (part_name(p) == name) return p;
  throw ConfigError("unknown prompt part '" + std::string(name) + "'");
}

std::string_view template_name(TemplateId id) { return id == TemplateId::v1 ? "v1" : "v2"; }

TemplateId parse_template(std::string_view name) {
  if (name == "v1") return TemplateId::v1;
  if (name == "v2") return TemplateId::v2;
  throw ConfigError("unknown template '" + std::string(name) + "'");
}

namespace {

constexpr std::string_view kReadingTask =
    "Below is a reading comprehension task. There will be paragraphs of context, each followed by a question "
    "related to its content. ";
constexpr std::string_view kAnswerRules =
    "You should only present your answer to the last question by strictly copying the corresponding part of the "
    "context. Please provide a direct answer in English without extra output. Your answer should be in the form of "
    "\"Answer: {Your Answer}\"";
constexpr std::string_view kSeparator = "Your task starts here:";
constexpr std::string_view kBreak = "\n\n";

class Builder {
 public:
  void glue(std::string_view s) { text_ += s; }
  void part(Part p, std::string_view s) {
    auto begin = text_.size();
    text_ += s;
    spans_[p].push_back({begin, text_.size()});
  }
  std::size_t mark() const { return text_.size(); }
  void add_span(Part p, std::size_t begin) { spans_[p].push_back({begin, text_.size()}); }

  RenderedPrompt finish(const Direction& d, const std::string& id) {
    for (auto p : kCharParts) spans_[p];
    return RenderedPrompt{std::move(text_), std::move(spans_), d, id};
  }

 private:
  std::string text_;
  std::map<Part, std::vector<CharSpan>> spans_;
};

}  // namespace

const PromptTemplate& PromptTemplate::builtin(TemplateId id) {
  static const PromptTemplate v1{TemplateId::v1, "v1.0", std::string(kReadingTask) + std::string(kAnswerRules),
                                 std::string(kSeparator)};
  static const PromptTemplate v2{TemplateId::v2, "v2.0", std::string(kAnswerRules), std::string(kSeparator)};
  return id == TemplateId::v1 ? v1 : v2;
}

const std::vector<CharSpan>& RenderedPrompt::spans(Part part) const {
  static const std::vector<CharSpan> kEmpty;
  auto it = part_char_spans.find(part);
  return it == part_char_spans.end() ? kEmpty : it->second;
}

RenderedPrompt render_prompt_with_context(const PromptTemplate& tmpl, std::span<const ParallelSample> demos,
                                          const ParallelSample& sample, const Direction& direction,
                                          std::string_view test_context) {
  for (const auto& d : demos) {
    if (d.id == sample.id) throw ValidationError("demonstrations include the test sample " + sample.id);
  }
  const auto& question = sample.entry(direction.question_lang).question;
  sample.entry(direction.context_lang);

  Builder b;
  if (tmpl.id == TemplateId::v1) {
    b.part(Part::task_description, tmpl.instruction);
    b.glue(kBreak);
  }
  for (const auto& demo : demos) {
    const auto& ctx = demo.entry(direction.context_lang);
    const auto& q = demo.entry(direction.question_lang);
    auto begin = b.mark();
    b.glue("Context: ");
    b.glue(ctx.context);
    b.glue(kBreak);
    b.glue("Question: ");
    b.glue(q.question);
    b.glue(kBreak);
    b.glue("Answer: ");
    b.glue(ctx.answers.front().text);
    b.add_span(Part::demonstrations, begin);
    b.glue(kBreak);
  }
  b.glue(tmpl.task_separator);
  b.glue(kBreak);
  b.glue("Context: ");
  b.part(Part::context, test_context);
  b.glue(kBreak);
  b.glue("Question: ");
  b.part(Part::question, question);
  if (tmpl.id == TemplateId::v2) {
    b.glue(kBreak);
    b.part(Part::task_description, tmpl.instruction);
  }
  return b.finish(direction, sample.id);
}

RenderedPrompt render_prompt(const PromptTemplate& tmpl, std::span<const ParallelSample> demos,
                             const ParallelSample& sample, const Direction& direction) {
  return render_prompt_with_context(tmpl, demos, sample, direction, sample.entry(direction.context_lang).context);
}

RenderedPrompt wrap_prompt(const RenderedPrompt& prompt, const ChatWrapper& wrapper) {
  RenderedPrompt out = prompt;
  out.text = wrapper.prefix + prompt.text + wrapper.suffix;
  for (auto& [part, spans] : out.part_char_spans) {
    for (auto& s : spans) {
      s.begin += wrapper.prefix.size();
      s.end += wrapper.prefix.size();
    }
  }
  return out;
}

std::vector<std::size_t> PartTokenSpans::tokens(Part part) const {
  std::vector<std::size_t> out;
  auto it = ranges.find(part);
  if (it == ranges.end()) return out;
  for (const auto& r : it->second)
    for (auto t = r.begin; t < r.end; ++t) out.push_back(t);
  return out;
}

PartTokenSpans align_part_spans(const RenderedPrompt& prompt, std::span<const TokenOffset> offsets) {
  if (offsets.empty()) throw ValidationError("prompt has no tokens");
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const auto& o = offsets[i];
    if (o.char_end < o.char_start || o.char_end > prompt.text.size()) {
      throw ValidationError("token " + std::to_string(i) + " has an invalid character range");
    }
    if (i > 0 && (o.char_start < offsets[i - 1].char_start || o.char_end < offsets[i - 1].char_end)) {
      throw ValidationError("token offsets are not monotonic at token " + std::to_string(i));
    }
  }

  struct Owned {
    CharSpan span;
    Part part;
  };
  std::vector<Owned> spans;
  for (auto p : kCharParts)
    for (const auto& s : prompt.spans(p))
      if (s.size() > 0) spans.push_back({s, p});
  std::sort(spans.begin(), spans.end(), [](const Owned& a, const Owned& b) { return a.span.begin < b.span.begin; });

  auto owner = [&](const TokenOffset& t) -> std::optional<Part> {
    for (const auto& o : spans) {
      bool hit = t.char_start == t.char_end ? (o.span.begin <= t.char_start && t.char_start < o.span.end)
                                            : (t.char_start < o.span.end && o.span.begin < t.char_end);
      if (hit) return o.part;
    }
    return std::nullopt;
  };

  PartTokenSpans out;
  out.token_count = offsets.size();
  out.last_input_token_index = offsets.size() - 1;
  for (auto p : kCharParts) out.ranges[p];
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    auto p = owner(offsets[i]);
    if (!p) continue;
    auto& list = out.ranges[*p];
    if (!list.empty() && list.back().end == i) {
      list.back().end = i + 1;
    } else {
      list.push_back({i, i + 1});
    }
  }
  out.ranges[Part::last_input_token] = {{offsets.size() - 1, offsets.size()}};
  return out;
}

}  // namespace xmrc
