#pragma once

// SQuAD-style answer scoring and the aggregate statistics built on it.

#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xmrc/corpus.hpp"

namespace xmrc {

/// Text after the last "Answer:" (case-insensitive), trimmed; the whole text
/// trimmed when the marker is absent.
std::string extract_answer(std::string_view raw);

/// SQuAD normalization: lowercase, drop ASCII punctuation, drop the articles
/// a/an/the, split on whitespace.
std::vector<std::string> normalize_answer(std::string_view text);

/// Hook for language-specific normalization; defaults to normalize_answer.
using Normalizer = std::function<std::vector<std::string>(std::string_view)>;

struct AnswerScore {
  double f1 = 0.0;
  int em = 0;
  std::vector<std::string> pred_normalized;
  std::size_t best_reference_index = 0;
};

/// Bag-of-tokens F1 and exact match, each maximized over the references.
/// Two empty normalizations score F1 = 1; exactly one empty scores 0.
AnswerScore score_answer(std::string_view pred, std::span<const std::string> references,
                         const Normalizer& normalizer = {});

/// Single-reference token F1 on already normalized tokens.
double token_f1(std::span<const std::string> pred, std::span<const std::string> ref);

struct DirectionSummary {
  Direction direction;
  double mean_f1 = 0.0;  // raw means in [0, 1]
  double mean_em = 0.0;
  double mean_f1_x100 = 0.0;
  double mean_em_x100 = 0.0;
  std::size_t n = 0;
};

DirectionSummary aggregate_direction(const Direction& direction, std::span<const AnswerScore> scores);

struct CrossLingualRatios {
  double en_x_over_en_en = 0.0;
  double x_x_over_en_en = 0.0;
  std::size_t en_x_count = 0;
  std::size_t x_x_count = 0;
};

/// Mean over the non-English en-x (resp. x-x) direction means, divided by the
/// en-en mean. A ratio with no contributing directions is reported as 0 with
/// count 0.
CrossLingualRatios cross_lingual_ratio(const std::map<Direction, DirectionSummary>& summaries);

enum class SampleCategory { balanced, en_superior, other };

std::string_view category_name(SampleCategory c);

struct CategoryThresholds {
  double balanced = 0.5;
  double margin = 0.5;
};

/// balanced: F1 strictly above the threshold in every given direction.
/// en_superior: F1(en-en) minus the mean F1 over the other directions (en-x
/// with x != en) strictly exceeds the margin. Balanced takes precedence.
SampleCategory categorize_sample(const std::map<Direction, double>& per_direction_f1,
                                 const CategoryThresholds& thresholds = {});

}  // namespace xmrc
