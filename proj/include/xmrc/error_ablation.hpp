#pragma once

// Splits evaluation outcomes into language, generation (blank, gibberish,
// refusal), content, and correct classes and reports per-direction rates.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xmrc/corpus.hpp"
#include "xmrc/judge.hpp"
#include "xmrc/language.hpp"

namespace xmrc {

enum class ErrorClass { language, blank, gibberish, refusal, content, correct };

std::string_view error_class_name(ErrorClass c);

/// One evaluated answer awaiting classification.
struct ErrorInput {
  std::string sample_id;
  Direction direction;
  std::string extracted_answer;
  std::string reference;  // first gold answer, used for language detection
  std::optional<JudgeCategory> judge_category;  // empty: judge unavailable
};

struct SampleF1 {
  std::string sample_id;
  double f1 = 0.0;
};

struct ErrorRecord {
  std::string sample_id;
  Direction direction;
  std::string detected_answer_lang;
  std::string detected_reference_lang;
  std::optional<JudgeCategory> judge_category;
  std::optional<ErrorClass> final_class;  // empty when the judge was unavailable
  double f1 = 0.0;
};

/// How the rate denominator |W| is chosen: every classified record, or only
/// the records that are not correct.
enum class Denominator { all, wrong_only };

struct ErrorPolicy {
  double correct_f1 = 0.5;
  Denominator denominator = Denominator::all;
};

struct ErrorReport {
  Direction direction;
  double language_rate = 0.0;
  double generation_rate = 0.0;
  double blank_rate = 0.0;
  double gibberish_rate = 0.0;
  double refusal_rate = 0.0;
  double content_rate = 0.0;
  double correct_rate = 0.0;  // always over all classified records
  std::size_t n = 0;          // classified records
  std::size_t denominator = 0;
  std::size_t judge_unavailable = 0;
  std::size_t counts[6] = {};  // indexed by ErrorClass
};

/// Precedence: blank, then judge gibberish/refusal, then language error
/// (reference in the context language, answer in the question language, the
/// two differing), then correct when F1 > policy.correct_f1, else content.
ErrorClass classify_error(std::string_view extracted_answer, JudgeCategory judge, std::string_view reference_lang,
                          std::string_view answer_lang, const Direction& direction, double f1,
                          double correct_f1 = 0.5);

struct ErrorAnalysis {
  ErrorReport report;
  std::vector<ErrorRecord> records;
};

/// `inputs` and `scores` must list the same sample ids in the same order, all
/// from one direction.
ErrorAnalysis compute_error_report(std::span<const ErrorInput> inputs, std::span<const SampleF1> scores,
                                   const LanguageDetector& detector, const ErrorPolicy& policy = {});

/// Percentage of records where both judges answered and agreed.
double judge_agreement(std::span<const std::optional<JudgeCategory>> a,
                       std::span<const std::optional<JudgeCategory>> b);

}  // namespace xmrc
