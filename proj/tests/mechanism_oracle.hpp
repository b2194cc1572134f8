#pragma once

// Direct, unoptimized versions of the layer-wise statistics.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace xmrc::test {

/// Scans n = 1..N and recomputes each prefix sum from scratch.
inline std::optional<std::size_t> brute_mrd(const std::vector<double>& profile, double threshold) {
  long double total = 0;
  for (double v : profile) total += std::fabs(v);
  if (total == 0) return std::nullopt;
  for (std::size_t n = 1; n <= profile.size(); ++n) {
    long double prefix = 0;
    for (std::size_t i = 0; i < n; ++i) prefix += std::fabs(profile[i]);
    if (prefix >= threshold * total * (1 - 1e-12L)) return n;
  }
  return profile.size();
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

/// Mean cross-lingual cosine over mean same-language cosine, one layer.
inline double two_mean_ratio(const std::vector<std::vector<double>>& en, const std::vector<std::vector<double>>& x) {
  double cross = 0;
  for (std::size_t k = 0; k < en.size(); ++k) cross += cosine(en[k], x[k]);
  cross /= static_cast<double>(en.size());
  double intra = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j)
      if (i != j) {
        intra += cosine(x[i], x[j]);
        ++pairs;
      }
  intra /= static_cast<double>(pairs);
  return cross / intra;
}

}  // namespace xmrc::test
