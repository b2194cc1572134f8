#pragma once

// Few-shot xMRC prompt rendering with exact character spans per prompt part,
// and the mapping of those spans onto tokens.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xmrc/corpus.hpp"

namespace xmrc {

/// Named prompt regions shared by the prompting and mechanism modules.
enum class Part { task_description, demonstrations, context, question, last_input_token };

inline constexpr std::array<Part, 4> kCharParts = {Part::task_description, Part::demonstrations, Part::context,
                                                   Part::question};
inline constexpr std::array<Part, 5> kAllParts = {Part::task_description, Part::demonstrations, Part::context,
                                                  Part::question, Part::last_input_token};

std::string_view part_name(Part part);
Part parse_part(std::string_view name);

enum class TemplateId { v1, v2 };

std::string_view template_name(TemplateId id);
TemplateId parse_template(std::string_view name);

struct PromptTemplate {
  TemplateId id = TemplateId::v2;
  std::string version;
  std::string instruction;
  std::string task_separator;

  /// The v1 / v2 layouts: v1 puts the full instruction first, v2 puts a
  /// shortened instruction after the test question.
  static const PromptTemplate& builtin(TemplateId id);
};

/// Half-open byte range [begin, end) into a prompt string.
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const CharSpan&) const = default;
};

struct RenderedPrompt {
  std::string text;
  std::map<Part, std::vector<CharSpan>> part_char_spans;
  Direction direction;
  std::string sample_id;

  const std::vector<CharSpan>& spans(Part part) const;
};

/// Chat/system wrapping applied by a backend around the user message.
struct ChatWrapper {
  std::string prefix;
  std::string suffix;
};

RenderedPrompt render_prompt(const PromptTemplate& tmpl, std::span<const ParallelSample> demos,
                             const ParallelSample& sample, const Direction& direction);

/// As render_prompt, with the test context text replaced (used for context
/// ablations). Spans are computed for the replacement text.
RenderedPrompt render_prompt_with_context(const PromptTemplate& tmpl, std::span<const ParallelSample> demos,
                                          const ParallelSample& sample, const Direction& direction,
                                          std::string_view test_context);

/// Surrounds the prompt with the wrapper and shifts every span accordingly.
RenderedPrompt wrap_prompt(const RenderedPrompt& prompt, const ChatWrapper& wrapper);

struct TokenOffset {
  std::int64_t token_id = 0;
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  bool operator==(const TokenOffset&) const = default;
};

struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const TokenRange&) const = default;
};

struct PartTokenSpans {
  std::map<Part, std::vector<TokenRange>> ranges;
  std::size_t token_count = 0;
  std::size_t last_input_token_index = 0;

  /// Token indices of the part in ascending order.
  std::vector<std::size_t> tokens(Part part) const;
};

/// A token belongs to the earliest-starting part whose character range it
/// overlaps; tokens overlapping no part are glue. Zero-width tokens belong to
/// the part containing their position.
PartTokenSpans align_part_spans(const RenderedPrompt& prompt, std::span<const TokenOffset> offsets);

}  // namespace xmrc
