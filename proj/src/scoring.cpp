#include "xmrc/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "xmrc/error.hpp"
#include "xmrc/util.hpp"

namespace xmrc {

std::string extract_answer(std::string_view raw) {
  constexpr std::string_view kMarker = "answer:";
  std::size_t found = std::string_view::npos;
  for (std::size_t i = 0; i + kMarker.size() <= raw.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < kMarker.size() && match; ++j) {
      match = std::tolower(static_cast<unsigned char>(raw[i + j])) == kMarker[j];
    }
    if (match) found = i;
  }
  if (found == std::string_view::npos) return std::string(trim(raw));
  return std::string(trim(raw.substr(found + kMarker.size())));
}

namespace {

// Lowercasing for the scripts in the corpus that have case.
char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if ((c >= 0xC0 && c <= 0xDE && c != 0xD7)) return c + 32;                 // Latin-1
  if (c >= 0x100 && c <= 0x17F && c != 0x130 && c != 0x138 && c != 0x149 && c != 0x178) {
    // Latin Extended-A pairs; the parity of the upper-case member flips at
    // the 0x139..0x148 and 0x179..0x17E runs.
    bool odd_upper = (c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E);
    bool is_upper = odd_upper ? (c % 2 == 1) : (c % 2 == 0);
    return is_upper ? c + 1 : c;
  }
  if (c == 0x130) return 'i';
  if (c == 0x178) return 0xFF;
  if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 32;               // Greek
  if (c == 0x386) return 0x3AC;
  if (c >= 0x388 && c <= 0x38A) return c + 37;
  if (c == 0x38C) return 0x3CC;
  if (c == 0x38E || c == 0x38F) return c + 63;
  if (c >= 0x410 && c <= 0x42F) return c + 32;                             // Cyrillic
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  if (c >= 0x1EA0 && c <= 0x1EFF && c % 2 == 0) return c + 1;              // Vietnamese
  return c;
}

bool is_ascii_punct(char32_t c) { return c < 0x80 && std::ispunct(static_cast<int>(c)); }

// Unicode whitespace as recognized by Python's str.split().
bool is_space(char32_t c) {
  return c == ' ' || (c >= 0x09 && c <= 0x0D) || (c >= 0x1C && c <= 0x1F) || c == 0x85 || c == 0xA0 ||
         c == 0x1680 || (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
         c == 0x205F || c == 0x3000;
}

// Approximates Python's Unicode \w, which decides where the article regex
// sees word boundaries.
bool is_word(char32_t c) {
  if (c < 0x80) return std::isalnum(static_cast<int>(c)) || c == '_';
  if (is_space(c)) return false;
  if (c <= 0xBF) return c == 0xAA || c == 0xB2 || c == 0xB3 || c == 0xB5 || c == 0xB9 || c == 0xBA || c >= 0xBC;
  if (c == 0xD7 || c == 0xF7) return false;
  if (c >= 0x300 && c <= 0x36F) return false;   // combining diacritics
  if (c == 0x37E || c == 0x387) return false;   // Greek question mark, ano teleia
  if (c == 0x60C || c == 0x61B || c == 0x61F || (c >= 0x66A && c <= 0x66D)) return false;
  if (c == 0x964 || c == 0x965) return false;   // danda
  if (c >= 0x2000 && c <= 0x206F) return false; // general punctuation
  if (c >= 0x20A0 && c <= 0x20CF) return false; // currency
  if (c >= 0x3000 && c <= 0x303F) return c == 0x3005 || c == 0x3006 || c == 0x3007;
  if (c >= 0xFF00 && c <= 0xFF0F) return false;
  if (c >= 0xFF1A && c <= 0xFF20) return false;
  if (c >= 0xFF3B && c <= 0xFF40) return c == 0xFF3F;
  if (c >= 0xFF5B && c <= 0xFF65) return false;
  return true;
}

bool is_article(const std::u32string& run) { return run == U"a" || run == U"an" || run == U"the"; }

}  // namespace

std::vector<std::string> normalize_answer(std::string_view text) {
  std::u32string cleaned;
  cleaned.reserve(text.size());
  for (std::size_t pos = 0; pos < text.size();) {
    char32_t c = utf8::next(text, pos);
    if (is_ascii_punct(c)) continue;
    cleaned.push_back(to_lower(c));
  }
  // Drop articles delimited by word boundaries, then split on whitespace.
  std::vector<std::string> tokens;
  std::string current;
  std::u32string run;
  auto flush_run = [&] {
    if (!is_article(run))
      for (char32_t c : run) utf8::append(current, c);
    run.clear();
  };
  auto flush_token = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char32_t c : cleaned) {
    if (is_word(c)) {
      run.push_back(c);
      continue;
    }
    flush_run();
    if (is_space(c)) {
      flush_token();
    } else {
      utf8::append(current, c);
    }
  }
  flush_run();
  flush_token();
  return tokens;
}

double token_f1(std::span<const std::string> pred, std::span<const std::string> ref) {
  if (pred.empty() || ref.empty()) return pred.empty() && ref.empty() ? 1.0 : 0.0;
  std::unordered_map<std::string_view, int> counts;
  for (const auto& t : ref) ++counts[t];
  std::size_t common = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  // Same operation order as the SQuAD script so results agree bit for bit.
  double precision = static_cast<double>(common) / static_cast<double>(pred.size());
  double recall = static_cast<double>(common) / static_cast<double>(ref.size());
  return 2 * precision * recall / (precision + recall);
}

AnswerScore score_answer(std::string_view pred, std::span<const std::string> references, const Normalizer& normalizer) {
  if (references.empty()) throw ValidationError("score_answer needs at least one reference");
  auto norm = [&](std::string_view s) { return normalizer ? normalizer(s) : normalize_answer(s); };
  AnswerScore out;
  out.pred_normalized = norm(pred);
  out.f1 = -1.0;
  for (std::size_t i = 0; i < references.size(); ++i) {
    auto ref = norm(references[i]);
    double f1 = token_f1(out.pred_normalized, ref);
    if (f1 > out.f1) {
      out.f1 = f1;
      out.best_reference_index = i;
    }
    if (ref == out.pred_normalized) out.em = 1;
  }
  return out;
}

DirectionSummary aggregate_direction(const Direction& direction, std::span<const AnswerScore> scores) {
  if (scores.empty()) throw ValidationError("no scores to aggregate for " + direction.str());
  double f1 = 0.0;
  double em = 0.0;
  for (const auto& s : scores) {
    f1 += s.f1;
    em += s.em;
  }
  DirectionSummary out;
  out.direction = direction;
  out.n = scores.size();
  out.mean_f1 = f1 / static_cast<double>(out.n);
  out.mean_em = em / static_cast<double>(out.n);
  out.mean_f1_x100 = 100.0 * out.mean_f1;
  out.mean_em_x100 = 100.0 * out.mean_em;
  return out;
}

CrossLingualRatios cross_lingual_ratio(const std::map<Direction, DirectionSummary>& summaries) {
  std::string en(kEnglish);
  auto it = summaries.find(Direction{en, en});
  if (it == summaries.end()) throw ValidationError("cross-lingual ratio needs an en-en summary");
  double base = it->second.mean_f1_x100;
  if (!(base > 0.0)) throw ValidationError("en-en mean F1 is zero; ratios are undefined");
  double en_x = 0.0;
  double x_x = 0.0;
  CrossLingualRatios out;
  for (const auto& [d, s] : summaries) {
    if (d.is_en_en()) continue;
    if (d.is_en_x()) {
      en_x += s.mean_f1_x100;
      ++out.en_x_count;
    } else if (d.is_monolingual()) {
      x_x += s.mean_f1_x100;
      ++out.x_x_count;
    }
  }
  if (out.en_x_count) out.en_x_over_en_en = en_x / static_cast<double>(out.en_x_count) / base;
  if (out.x_x_count) out.x_x_over_en_en = x_x / static_cast<double>(out.x_x_count) / base;
  return out;
}

std::string_view category_name(SampleCategory c) {
  switch (c) {
    case SampleCategory::balanced: return "balanced";
    case SampleCategory::en_superior: return "en_superior";
    case SampleCategory::other: return "other";
  }
  return "other";
}

SampleCategory categorize_sample(const std::map<Direction, double>& per_direction_f1,
                                 const CategoryThresholds& thresholds) {
  std::string en(kEnglish);
  auto it = per_direction_f1.find(Direction{en, en});
  if (it == per_direction_f1.end()) throw ValidationError("categorization needs the en-en score");
  bool balanced = true;
  double others = 0.0;
  std::size_t n_others = 0;
  for (const auto& [d, f1] : per_direction_f1) {
    if (!(f1 > thresholds.balanced)) balanced = false;
    if (!d.is_en_en()) {
      others += f1;
      ++n_others;
    }
  }
  if (n_others == 0) throw ValidationError("categorization needs at least one non-English direction");
  if (balanced) return SampleCategory::balanced;
  if (it->second - others / static_cast<double>(n_others) > thresholds.margin) return SampleCategory::en_superior;
  return SampleCategory::other;
}

}  // namespace xmrc
