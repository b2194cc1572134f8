#pragma once

// Oracle retrieval estimate: delete each context segment in turn and measure
// how much the target's log-probability drops. A sample is oracle-correct
// when the segment holding the gold answer causes the strictly largest drop.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xmrc/backend.hpp"
#include "xmrc/corpus.hpp"
#include "xmrc/prompting.hpp"

namespace xmrc {

enum class Granularity { sentence, span };

std::string_view granularity_name(Granularity g);
Granularity parse_granularity(std::string_view name);

struct Segmentation {
  std::vector<CharSpan> segments;  // partition of the context, byte offsets
  std::size_t gold_index = 0;
  Granularity granularity = Granularity::sentence;
};

/// Sentence mode splits after ". ? !" when followed by whitespace or the end
/// of text, and after "。 ？ ！ । ؟" unconditionally; delimiters stay with the
/// preceding segment and whitespace-only pieces merge into their
/// predecessor. Span mode cuts fixed windows of `window` whitespace tokens.
/// `answer_start` is a byte offset into `context`.
Segmentation segment_context(std::string_view context, std::size_t answer_start,
                             Granularity granularity = Granularity::sentence, std::size_t window = 32);

enum class OracleMode { step, sequence };

std::string_view oracle_mode_name(OracleMode m);
OracleMode parse_oracle_mode(std::string_view name);

struct OracleInstance {
  const PromptTemplate& tmpl;
  std::span<const ParallelSample> demos;
  const ParallelSample& sample;
  Direction direction;
};

struct OracleResult {
  std::string sample_id;
  Direction direction;
  OracleMode mode = OracleMode::step;
  std::vector<double> scores;  // per segment: logp(original) - logp(segment deleted)
  std::size_t gold_index = 0;
  bool correct = false;
  double margin = 0.0;  // +inf for a single segment
  std::string target;
  bool target_fallback = false;  // sequence mode fell back to the gold answer
};

/// Step mode scores the first token of the gold answer; sequence mode scores
/// the model's own greedy generation (falling back to the gold answer when
/// the generation is empty).
OracleResult estimate_oracle(Backend& backend, const OracleInstance& instance, const Segmentation& segmentation,
                             OracleMode mode, const GenerationParams& params = {});

/// 100 x correct / total.
double oracle_accuracy(std::span<const OracleResult> results);

}  // namespace xmrc
