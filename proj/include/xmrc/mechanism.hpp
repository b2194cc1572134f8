#pragma once

// Layer-wise statistics over cached traces: Major Relevance Depth from
// relevance matrices, pooled part representations, the cross-lingual
// hidden-state similarity ratio, and summary statistics of per-layer curves.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "xmrc/backend.hpp"
#include "xmrc/prompting.hpp"

namespace xmrc {

inline constexpr double kDefaultMrdThreshold = 0.95;

/// How relevance is made non-negative before the cumulative percentile.
/// `absolute`: |r| per token. `per_layer`: |r| divided by the layer's total
/// |r| over all prompt tokens.
enum class RelevanceNormalization { absolute, per_layer };

RelevanceNormalization parse_relevance_normalization(std::string_view name);
std::string_view relevance_normalization_name(RelevanceNormalization n);

/// Smallest 1-based layer n with sum_{i<=n} |r_i| >= threshold * sum |r_i|
/// (compared with a 1e-12 relative slack for rounding). Throws
/// ValidationError for an all-zero profile.
std::size_t token_mrd(std::span<const double> profile, double threshold = kDefaultMrdThreshold);

struct PartMrd {
  std::size_t mrd = 0;               // max token MRD in the part
  std::size_t tokens = 0;            // tokens in the part
  std::size_t undefined_tokens = 0;  // all-zero profiles, excluded
};

/// Per-token profiles after normalization, indexed [token][layer].
std::vector<std::vector<double>> normalized_profiles(const RelevanceMatrix& matrix, RelevanceNormalization norm);

/// Throws ValidationError when the part is empty or no token has a defined
/// MRD.
PartMrd part_mrd(const RelevanceMatrix& matrix, const PartTokenSpans& spans, Part part,
                 double threshold = kDefaultMrdThreshold,
                 RelevanceNormalization norm = RelevanceNormalization::absolute);

enum class Pooling { mean, max, first_token };

Pooling parse_pooling(std::string_view name);
std::string_view pooling_name(Pooling p);

/// Per-layer vectors, indexed [layer][dim].
using LayerVectors = std::vector<std::vector<double>>;

struct PooledPart {
  LayerVectors layers;
  std::size_t zero_norm_layers = 0;
};

/// Pools the part's token vectors at every layer (the last input token uses
/// its single position). Zero-norm results are counted and reported.
PooledPart pool_part(const HiddenTrace& trace, const PartTokenSpans& spans, Part part, Pooling pooling = Pooling::mean);

struct SimilaritySeries {
  std::vector<double> values;  // one per layer, embedding layer first
  std::size_t samples = 0;
  std::size_t excluded_vectors = 0;  // zero-norm vectors skipped over all layers
};

/// Per layer: mean cosine over parallel (e_k, x_k) pairs divided by mean
/// cosine over distinct (x_i, x_j) pairs, i.e. (K-1) sum Sim(e_k, x_k) /
/// (2 sum_{i<j} Sim(x_i, x_j)) when no vector is excluded. `en[k]` and
/// `x[k]` are the k-th parallel sample.
SimilaritySeries similarity_series(std::span<const LayerVectors> en, std::span<const LayerVectors> x);

struct CurveStats {
  double peak_rel_depth = 0.0;
  std::optional<double> plateau_start_rel_depth;
  double late_decline = 0.0;
};

struct CurveStatsOptions {
  double tail_fraction = 0.2;
  double plateau_band = 0.05;
};

/// Needs at least 5 points. Peak: first argmax / (len - 1). Late decline:
/// max over the last ceil(tail_fraction * len) points minus the final value,
/// floored at 0. Plateau start: smallest index from which every point stays
/// within plateau_band * (max - min) of the final value; none if only the
/// final point qualifies.
CurveStats curve_stats(std::span<const double> series, const CurveStatsOptions& options = {});

}  // namespace xmrc
