#include "xmrc/language.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>

#include "xmrc/util.hpp"

namespace xmrc {

namespace {

const std::array<std::string, 12> kXquadLanguages = {"en", "de", "es", "vi", "zh", "hi",
                                                     "ar", "el", "ro", "ru", "th", "tr"};

const std::map<std::string, std::set<std::string>>& function_words() {
  static const std::map<std::string, std::set<std::string>> words = {
      {"en", {"the", "of", "and", "to", "in", "is", "was", "for", "on", "with", "by", "at", "from", "that", "it",
              "as", "are", "were", "his", "her", "their", "this", "one", "two", "three", "four", "five", "six",
              "seven", "eight", "nine", "ten", "years", "year", "million", "percent", "century", "people", "after",
              "before", "about", "which", "who", "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen",
              "seventeen", "eighteen", "nineteen", "twenty", "thirty", "forty", "fifty", "hundred", "thousand",
              "billion", "first", "second", "third", "often", "children", "women", "men", "been", "when", "then",
              "than", "even", "between"}},
      {"de", {"der", "die", "das", "und", "ist", "war", "ein", "eine", "einen", "nicht", "mit", "von", "zu", "den",
              "dem", "des", "im", "auf", "für", "als", "auch", "wurde", "sind", "zwei", "drei", "vier", "fünf",
              "sechs", "sieben", "acht", "neun", "zehn", "jahre", "jahr", "jahrhundert", "prozent", "millionen",
              "nach", "über", "bei", "aus"}},
      {"es", {"el", "la", "los", "las", "de", "del", "y", "en", "es", "fue", "un", "una", "por", "para", "con", "que",
              "se", "su", "sus", "como", "al", "dos", "tres", "cuatro", "cinco", "seis", "siete", "ocho", "nueve",
              "diez", "años", "año", "siglo", "millones", "por ciento", "más", "entre"}},
      {"vi", {"của", "và", "là", "có", "những", "các", "được", "trong", "một", "người", "năm", "với", "cho", "này",
              "không", "hai", "ba", "bốn", "năm", "sáu", "bảy", "tám", "chín", "mười", "triệu", "thế", "kỷ"}},
      {"ro", {"și", "şi", "în", "este", "a", "fost", "de", "la", "cu", "pe", "un", "o", "al", "ale", "care", "din",
              "pentru", "doi", "două", "trei", "patru", "cinci", "șase", "şase", "șapte", "opt", "nouă", "zece",
              "ani", "milioane", "secolul", "procente"}},
      {"tr", {"ve", "bir", "bu", "da", "de", "için", "ile", "olarak", "olan", "iki", "üç", "dört", "beş", "altı",
              "yedi", "sekiz", "dokuz", "on", "yıl", "yılında", "milyon", "yüzyıl", "yüzde", "çok", "gibi"}},
  };
  return words;
}

const std::map<std::string, std::vector<std::string>>& suffixes() {
  static const std::map<std::string, std::vector<std::string>> s = {
      {"en", {"tion", "ing", "ness", "ship", "ed"}},
      {"de", {"ung", "heit", "keit", "lich", "chen", "schaft", "ungen", "en"}},
      {"es", {"ción", "mente", "dad", "ores", "ados", "idas"}},
      {"ro", {"ului", "ilor", "ția", "ţia", "ul", "ește"}},
      {"tr", {"ler", "lar", "leri", "ları", "dır", "dir", "sı", "si"}},
      {"vi", {}},
  };
  return s;
}

// Diacritics that mostly identify one language within the Latin set.
std::string latin_letter_language(char32_t c) {
  switch (c) {
    case U'ä': case U'ö': case U'ü': case U'ß': case U'Ä': case U'Ö': case U'Ü': return "de";
    case U'ñ': case U'Ñ': case U'¿': case U'¡': case U'á': case U'í': case U'ó': case U'ú': return "es";
    case U'ș': case U'ț': case U'Ș': case U'Ț': case U'ţ': case U'Ţ': case U'î': case U'Î': return "ro";
    case U'ş': case U'Ş': case U'ğ': case U'Ğ': case U'ı': case U'İ': return "tr";
    case U'ơ': case U'ư': case U'đ': case U'Ơ': case U'Ư': case U'Đ': return "vi";
    default: break;
  }
  if (c >= 0x1EA0 && c <= 0x1EFF) return "vi";
  return {};
}

enum class Script { latin, han, devanagari, arabic, greek, thai, cyrillic, other };

Script script_of(char32_t c) {
  if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= 0xC0 && c <= 0x24F && c != 0xD7 && c != 0xF7) ||
      (c >= 0x1E00 && c <= 0x1EFF))
    return Script::latin;
  if ((c >= 0x4E00 && c <= 0x9FFF) || (c >= 0x3400 && c <= 0x4DBF) || (c >= 0xF900 && c <= 0xFAFF)) return Script::han;
  if (c >= 0x900 && c <= 0x97F) return Script::devanagari;
  if ((c >= 0x600 && c <= 0x6FF) || (c >= 0x750 && c <= 0x77F) || (c >= 0xFB50 && c <= 0xFEFF)) return Script::arabic;
  if ((c >= 0x370 && c <= 0x3FF) || (c >= 0x1F00 && c <= 0x1FFF)) return Script::greek;
  if (c >= 0xE00 && c <= 0xE7F) return Script::thai;
  if (c >= 0x400 && c <= 0x4FF) return Script::cyrillic;
  return Script::other;
}

std::string lower_word(std::string_view w) {
  std::string out;
  for (std::size_t pos = 0; pos < w.size();) {
    char32_t c = utf8::next(w, pos);
    if (c >= 'A' && c <= 'Z') c += 32;
    else if (c >= 0xC0 && c <= 0xDE && c != 0xD7) c += 32;
    else if (c == 0x130) c = 'i';
    else if (c == 0x218 || c == 0x21A || c == 0x15E || c == 0x162) c += 1;
    utf8::append(out, c);
  }
  return out;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() > suffix.size() + 1 && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

HeuristicLanguageDetector::HeuristicLanguageDetector()
    : languages_(kXquadLanguages.begin(), kXquadLanguages.end()) {}

HeuristicLanguageDetector::HeuristicLanguageDetector(std::span<const std::string> languages)
    : languages_(languages.begin(), languages.end()) {}

bool HeuristicLanguageDetector::allowed(std::string_view lang) const {
  return std::find(languages_.begin(), languages_.end(), lang) != languages_.end();
}

std::string HeuristicLanguageDetector::detect(std::string_view text) const {
  std::map<Script, std::size_t> script_counts;
  std::map<std::string, double> latin_scores;
  std::vector<std::string> words;
  std::string current;
  for (std::size_t pos = 0; pos < text.size();) {
    char32_t c = utf8::next(text, pos);
    auto script = script_of(c);
    if (script != Script::other) ++script_counts[script];
    if (script == Script::latin) {
      if (auto lang = latin_letter_language(c); !lang.empty()) latin_scores[lang] += 1.0;
      utf8::append(current, c);
    } else if (!current.empty()) {
      words.push_back(lower_word(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(lower_word(current));
  if (script_counts.empty()) return std::string(kUnknownLanguage);

  auto dominant = std::max_element(script_counts.begin(), script_counts.end(),
                                   [](auto& a, auto& b) { return a.second < b.second; })
                      ->first;
  auto pick = [&](const char* lang) { return allowed(lang) ? std::string(lang) : std::string(kUnknownLanguage); };
  switch (dominant) {
    case Script::han: return pick("zh");
    case Script::devanagari: return pick("hi");
    case Script::arabic: return pick("ar");
    case Script::greek: return pick("el");
    case Script::thai: return pick("th");
    case Script::cyrillic: return pick("ru");
    case Script::other: return std::string(kUnknownLanguage);
    case Script::latin: break;
  }

  for (const auto& w : words) {
    for (const auto& [lang, list] : function_words())
      if (list.count(w)) latin_scores[lang] += 3.0;
    for (const auto& [lang, list] : suffixes())
      for (const auto& s : list)
        if (ends_with(w, s)) {
          latin_scores[lang] += 0.5;
          break;
        }
  }
  std::string best;
  double best_score = 0.0;
  for (const auto& [lang, score] : latin_scores) {
    if (!allowed(lang)) continue;
    if (score > best_score) {
      best = lang;
      best_score = score;
    }
  }
  if (!best.empty()) return best;
  // Latin text with no lexical cue: English is by far the most common case
  // for extracted answers (names, numbers with units, titles).
  return allowed("en") ? std::string("en") : std::string(kUnknownLanguage);
}

}  // namespace xmrc
