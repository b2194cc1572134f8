#include "xmrc/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "xmrc/error.hpp"

namespace xmrc {

RelevanceNormalization parse_relevance_normalization(std::string_view name) {
  if (name == "absolute" || name == "token") return RelevanceNormalization::absolute;
  if (name == "per_layer" || name == "layer") return RelevanceNormalization::per_layer;
  throw ConfigError("unknown relevance normalization '" + std::string(name) + "'");
}

std::string_view relevance_normalization_name(RelevanceNormalization n) {
  return n == RelevanceNormalization::absolute ? "absolute" : "per_layer";
}

std::size_t token_mrd(std::span<const double> profile, double threshold) {
  if (profile.empty()) throw ValidationError("MRD of an empty profile");
  double total = 0.0;
  for (double v : profile) total += std::abs(v);
  if (!(total > 0.0)) throw ValidationError("MRD undefined: all-zero relevance profile");
  double goal = threshold * total * (1.0 - 1e-12);
  double cum = 0.0;
  for (std::size_t n = 0; n < profile.size(); ++n) {
    cum += std::abs(profile[n]);
    if (cum >= goal) return n + 1;
  }
  return profile.size();
}

std::vector<std::vector<double>> normalized_profiles(const RelevanceMatrix& matrix, RelevanceNormalization norm) {
  std::vector<double> layer_totals(matrix.layers, 1.0);
  if (norm == RelevanceNormalization::per_layer) {
    for (std::size_t l = 0; l < matrix.layers; ++l) {
      double s = 0.0;
      for (std::size_t t = 0; t < matrix.tokens; ++t) s += std::abs(static_cast<double>(matrix.at(l, t)));
      layer_totals[l] = s;
    }
  }
  std::vector<std::vector<double>> out(matrix.tokens, std::vector<double>(matrix.layers));
  for (std::size_t t = 0; t < matrix.tokens; ++t) {
    for (std::size_t l = 0; l < matrix.layers; ++l) {
      double v = std::abs(static_cast<double>(matrix.at(l, t)));
      out[t][l] = layer_totals[l] > 0.0 ? v / layer_totals[l] : 0.0;
    }
  }
  return out;
}

PartMrd part_mrd(const RelevanceMatrix& matrix, const PartTokenSpans& spans, Part part, double threshold,
                 RelevanceNormalization norm) {
  auto tokens = spans.tokens(part);
  if (tokens.empty()) throw ValidationError("part " + std::string(part_name(part)) + " has no tokens");
  if (spans.token_count != matrix.tokens) throw ValidationError("token spans and relevance matrix disagree on length");
  auto profiles = normalized_profiles(matrix, norm);
  PartMrd out;
  out.tokens = tokens.size();
  bool any = false;
  for (auto t : tokens) {
    const auto& p = profiles[t];
    if (std::all_of(p.begin(), p.end(), [](double v) { return v == 0.0; })) {
      ++out.undefined_tokens;
      continue;
    }
    out.mrd = std::max(out.mrd, token_mrd(p, threshold));
    any = true;
  }
  if (!any) throw ValidationError("part " + std::string(part_name(part)) + " has no token with a defined MRD");
  return out;
}

Pooling parse_pooling(std::string_view name) {
  if (name == "mean") return Pooling::mean;
  if (name == "max") return Pooling::max;
  if (name == "first_token" || name == "first") return Pooling::first_token;
  throw ConfigError("unknown pooling '" + std::string(name) + "'");
}

std::string_view pooling_name(Pooling p) {
  switch (p) {
    case Pooling::mean: return "mean";
    case Pooling::max: return "max";
    case Pooling::first_token: return "first_token";
  }
  return "mean";
}

PooledPart pool_part(const HiddenTrace& trace, const PartTokenSpans& spans, Part part, Pooling pooling) {
  std::vector<std::size_t> tokens;
  if (part == Part::last_input_token) {
    tokens = {spans.last_input_token_index};
  } else {
    tokens = spans.tokens(part);
    if (pooling == Pooling::first_token && !tokens.empty()) tokens.resize(1);
  }
  if (tokens.empty()) throw ValidationError("cannot pool empty part " + std::string(part_name(part)));
  if (spans.token_count != trace.tokens) throw ValidationError("token spans and hidden trace disagree on length");

  PooledPart out;
  out.layers.assign(trace.layers, std::vector<double>(trace.dim, 0.0));
  for (std::size_t l = 0; l < trace.layers; ++l) {
    auto& acc = out.layers[l];
    if (pooling == Pooling::max) std::fill(acc.begin(), acc.end(), -INFINITY);
    for (auto t : tokens) {
      auto v = trace.vec(l, t);
      for (std::size_t k = 0; k < trace.dim; ++k) {
        if (pooling == Pooling::max) {
          acc[k] = std::max(acc[k], static_cast<double>(v[k]));
        } else {
          acc[k] += v[k];
        }
      }
    }
    if (pooling != Pooling::max)
      for (auto& a : acc) a /= static_cast<double>(tokens.size());
    if (std::all_of(acc.begin(), acc.end(), [](double a) { return a == 0.0; })) ++out.zero_norm_layers;
  }
  if (out.zero_norm_layers) {
    std::cerr << "warning: pooled " << part_name(part) << " vector has zero norm at " << out.zero_norm_layers
              << " layer(s); excluded from similarity\n";
  }
  return out;
}

namespace {

double norm(const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

}  // namespace

SimilaritySeries similarity_series(std::span<const LayerVectors> en, std::span<const LayerVectors> x) {
  if (en.size() != x.size()) throw ValidationError("English and non-English sample counts differ");
  const std::size_t k = x.size();
  if (k < 2) throw ValidationError("similarity ratio needs at least 2 parallel samples");
  const std::size_t layers = x.front().size();
  for (std::size_t i = 0; i < k; ++i) {
    if (en[i].size() != layers || x[i].size() != layers) throw ValidationError("samples differ in layer count");
  }

  SimilaritySeries out;
  out.samples = k;
  out.values.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    std::vector<double> en_norm(k), x_norm(k);
    for (std::size_t i = 0; i < k; ++i) {
      en_norm[i] = norm(en[i][l]);
      x_norm[i] = norm(x[i][l]);
      out.excluded_vectors += (en_norm[i] == 0.0) + (x_norm[i] == 0.0);
    }
    auto cosine = [](const std::vector<double>& a, double na, const std::vector<double>& b, double nb) {
      return std::inner_product(a.begin(), a.end(), b.begin(), 0.0) / (na * nb);
    };
    double cross = 0.0;
    std::size_t n_cross = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (en_norm[i] == 0.0 || x_norm[i] == 0.0) continue;
      cross += cosine(en[i][l], en_norm[i], x[i][l], x_norm[i]);
      ++n_cross;
    }
    double intra = 0.0;
    std::size_t n_intra = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (x_norm[i] == 0.0) continue;
      for (std::size_t j = i + 1; j < k; ++j) {
        if (x_norm[j] == 0.0) continue;
        intra += cosine(x[i][l], x_norm[i], x[j][l], x_norm[j]);
        ++n_intra;
      }
    }
    if (n_cross == 0 || n_intra == 0) {
      throw ValidationError("layer " + std::to_string(l) + ": too many zero-norm vectors for a similarity ratio");
    }
    if (intra == 0.0) throw ValidationError("layer " + std::to_string(l) + ": mean intra-language similarity is zero");
    // With nothing excluded, n_intra = K(K-1)/2 and n_cross = K, so this is
    // (K-1) * cross / (2 * intra).
    out.values[l] = (cross * static_cast<double>(n_intra)) / (intra * static_cast<double>(n_cross));
  }
  if (out.excluded_vectors) {
    std::cerr << "warning: " << out.excluded_vectors << " zero-norm vector(s) excluded from the similarity ratio\n";
  }
  return out;
}

CurveStats curve_stats(std::span<const double> series, const CurveStatsOptions& options) {
  const std::size_t len = series.size();
  if (len < 5) throw ValidationError("curve statistics need at least 5 points");
  CurveStats out;
  auto max_it = std::max_element(series.begin(), series.end());
  auto min_it = std::min_element(series.begin(), series.end());
  auto rel = [len](std::size_t i) { return static_cast<double>(i) / static_cast<double>(len - 1); };
  out.peak_rel_depth = rel(static_cast<std::size_t>(max_it - series.begin()));

  auto tail = static_cast<std::size_t>(std::ceil(options.tail_fraction * static_cast<double>(len) - 1e-9));
  tail = std::clamp<std::size_t>(tail, 1, len);
  double tail_max = *std::max_element(series.end() - static_cast<std::ptrdiff_t>(tail), series.end());
  out.late_decline = std::max(0.0, tail_max - series.back());

  double band = options.plateau_band * (*max_it - *min_it);
  std::size_t start = len - 1;
  while (start > 0 && std::abs(series[start - 1] - series.back()) <= band) --start;
  if (start < len - 1) out.plateau_start_rel_depth = rel(start);
  return out;
}

}  // namespace xmrc
