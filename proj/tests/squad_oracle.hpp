#pragma once

// Reference scorer for ASCII inputs, transcribed step by step from the
// SQuAD evaluation script: lower, strip string.punctuation, regex-remove
// \b(a|an|the)\b, collapse whitespace. Token F1 uses multiset overlap found
// by exhaustive pairing; empty token lists follow the v2 convention.

#include <algorithm>
#include <cctype>
#include <regex>
#include <string>
#include <vector>

namespace xmrc::test {

inline std::string oracle_normalize(const std::string& s) {
  std::string lower;
  for (char c : s) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const std::string punctuation = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";
  std::string nopunct;
  for (char c : lower)
    if (punctuation.find(c) == std::string::npos) nopunct += c;
  static const std::regex articles(R"(\b(a|an|the)\b)");
  std::string noart = std::regex_replace(nopunct, articles, " ");
  std::string out;
  std::string word;
  for (char c : noart + " ") {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!word.empty()) out += (out.empty() ? "" : " ") + word;
      word.clear();
    } else {
      word += c;
    }
  }
  return out;
}

inline std::vector<std::string> oracle_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string norm = oracle_normalize(s);
  std::size_t start = 0;
  while (start < norm.size()) {
    auto end = norm.find(' ', start);
    if (end == std::string::npos) end = norm.size();
    out.push_back(norm.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

inline double oracle_f1_single(const std::string& pred, const std::string& ref) {
  auto p = oracle_tokens(pred);
  auto r = oracle_tokens(ref);
  if (p.empty() || r.empty()) return p.empty() && r.empty() ? 1.0 : 0.0;
  std::vector<bool> used(r.size(), false);
  int same = 0;
  for (const auto& tok : p) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (!used[j] && r[j] == tok) {
        used[j] = true;
        ++same;
        break;
      }
    }
  }
  if (same == 0) return 0.0;
  double precision = static_cast<double>(same) / static_cast<double>(p.size());
  double recall = static_cast<double>(same) / static_cast<double>(r.size());
  return 2 * precision * recall / (precision + recall);
}

inline double oracle_f1(const std::string& pred, const std::vector<std::string>& refs) {
  double best = 0.0;
  for (const auto& r : refs) best = std::max(best, oracle_f1_single(pred, r));
  return best;
}

inline int oracle_em(const std::string& pred, const std::vector<std::string>& refs) {
  for (const auto& r : refs)
    if (oracle_normalize(pred) == oracle_normalize(r)) return 1;
  return 0;
}

}  // namespace xmrc::test
