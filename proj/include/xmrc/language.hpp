#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xmrc {

inline constexpr std::string_view kUnknownLanguage = "unknown";

/// Returns an ISO 639-1 code from the detector's language set, or "unknown".
class LanguageDetector {
 public:
  virtual ~LanguageDetector() = default;
  virtual std::string detect(std::string_view text) const = 0;
};

/// Script detection for non-Latin scripts; function words, numerals,
/// diacritics, and suffixes for Latin-script languages. Restricted to the
/// given candidate languages (default: the twelve XQuAD languages).
class HeuristicLanguageDetector : public LanguageDetector {
 public:
  HeuristicLanguageDetector();
  explicit HeuristicLanguageDetector(std::span<const std::string> languages);

  std::string detect(std::string_view text) const override;

 private:
  bool allowed(std::string_view lang) const;
  std::vector<std::string> languages_;
};

}  // namespace xmrc
