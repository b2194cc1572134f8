#include "xmrc/error_ablation.hpp"

#include "xmrc/error.hpp"
#include "xmrc/util.hpp"

namespace xmrc {

std::string_view error_class_name(ErrorClass c) {
  switch (c) {
    case ErrorClass::language: return "language";
    case ErrorClass::blank: return "blank";
    case ErrorClass::gibberish: return "gibberish";
    case ErrorClass::refusal: return "refusal";
    case ErrorClass::content: return "content";
    case ErrorClass::correct: return "correct";
  }
  return "content";
}

ErrorClass classify_error(std::string_view extracted_answer, JudgeCategory judge, std::string_view reference_lang,
                          std::string_view answer_lang, const Direction& direction, double f1, double correct_f1) {
  if (trim(extracted_answer).empty() || judge == JudgeCategory::blank) return ErrorClass::blank;
  if (judge == JudgeCategory::gibberish) return ErrorClass::gibberish;
  if (judge == JudgeCategory::refusal) return ErrorClass::refusal;
  if (direction.question_lang != direction.context_lang && reference_lang == direction.context_lang &&
      answer_lang == direction.question_lang) {
    return ErrorClass::language;
  }
  return f1 > correct_f1 ? ErrorClass::correct : ErrorClass::content;
}

ErrorAnalysis compute_error_report(std::span<const ErrorInput> inputs, std::span<const SampleF1> scores,
                                   const LanguageDetector& detector, const ErrorPolicy& policy) {
  if (inputs.size() != scores.size()) throw ValidationError("error records and scores differ in length");
  ErrorAnalysis out;
  if (!inputs.empty()) out.report.direction = inputs.front().direction;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& in = inputs[i];
    if (in.sample_id != scores[i].sample_id) {
      throw ValidationError("error record " + in.sample_id + " is not aligned with score " + scores[i].sample_id);
    }
    if (in.direction != out.report.direction) throw ValidationError("error records span several directions");
    ErrorRecord rec;
    rec.sample_id = in.sample_id;
    rec.direction = in.direction;
    rec.f1 = scores[i].f1;
    rec.judge_category = in.judge_category;
    rec.detected_answer_lang = detector.detect(in.extracted_answer);
    rec.detected_reference_lang = detector.detect(in.reference);
    bool blank = trim(in.extracted_answer).empty();
    if (blank || in.judge_category) {
      rec.final_class = classify_error(in.extracted_answer, blank ? JudgeCategory::blank : *in.judge_category,
                                       rec.detected_reference_lang, rec.detected_answer_lang, in.direction, rec.f1,
                                       policy.correct_f1);
      ++out.report.counts[static_cast<int>(*rec.final_class)];
      ++out.report.n;
    } else {
      ++out.report.judge_unavailable;
    }
    out.records.push_back(std::move(rec));
  }

  auto& r = out.report;
  auto count = [&](ErrorClass c) { return static_cast<double>(r.counts[static_cast<int>(c)]); };
  r.denominator = policy.denominator == Denominator::all
                      ? r.n
                      : r.n - r.counts[static_cast<int>(ErrorClass::correct)];
  auto rate = [&](ErrorClass c) { return r.denominator ? 100.0 * count(c) / static_cast<double>(r.denominator) : 0.0; };
  r.language_rate = rate(ErrorClass::language);
  r.blank_rate = rate(ErrorClass::blank);
  r.gibberish_rate = rate(ErrorClass::gibberish);
  r.refusal_rate = rate(ErrorClass::refusal);
  r.content_rate = rate(ErrorClass::content);
  r.generation_rate = r.blank_rate + r.gibberish_rate + r.refusal_rate;
  r.correct_rate = r.n ? 100.0 * count(ErrorClass::correct) / static_cast<double>(r.n) : 0.0;
  return out;
}

double judge_agreement(std::span<const std::optional<JudgeCategory>> a,
                       std::span<const std::optional<JudgeCategory>> b) {
  if (a.size() != b.size()) throw ValidationError("judge outcome lists differ in length");
  std::size_t both = 0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i] || !b[i]) continue;
    ++both;
    if (*a[i] == *b[i]) ++agree;
  }
  return both ? 100.0 * static_cast<double>(agree) / static_cast<double>(both) : 0.0;
}

}  // namespace xmrc
