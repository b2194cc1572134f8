#pragma once

// The narrow model contract every analysis is written against. Concrete
// models (local or remote) implement the protected do_* hooks; the public
// entry points validate arguments and results.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xmrc/prompting.hpp"

namespace xmrc {

struct BackendDescriptor {
  std::string name;
  std::size_t num_layers = 1;  // transformer blocks, excluding the embedding layer
  std::size_t hidden_dim = 1;
  bool supports_relevance = false;
  bool supports_hidden = false;
  std::size_t max_concurrency = 1;
};

enum class FinishReason { eos, length };

std::string_view finish_reason_name(FinishReason r);

struct GenerationParams {
  std::size_t max_new_tokens = 64;
  double temperature = 0.0;
};

struct GenerationResult {
  std::string text;  // excludes the prompt
  FinishReason finish_reason = FinishReason::eos;
  std::size_t prompt_token_count = 0;

  bool operator==(const GenerationResult&) const = default;
};

/// What a log-probability or relevance is computed toward: the first answer
/// token, or the whole answer sequence including end-of-sequence.
enum class TargetMode { first_token, full_sequence };

std::string_view target_mode_name(TargetMode m);
TargetMode parse_target_mode(std::string_view name);

/// Layer x prompt-token relevance toward a target, row-major.
struct RelevanceMatrix {
  std::size_t layers = 0;
  std::size_t tokens = 0;
  std::vector<float> values;
  TargetMode target = TargetMode::first_token;

  float at(std::size_t layer, std::size_t token) const { return values[layer * tokens + token]; }
  /// Per-layer relevance of one token (layers 1..N in order).
  std::vector<double> profile(std::size_t token) const;
  void validate() const;
  bool operator==(const RelevanceMatrix&) const = default;
};

/// (N+1) x T x d hidden states; layer 0 is the embedding output.
struct HiddenTrace {
  std::size_t layers = 0;
  std::size_t tokens = 0;
  std::size_t dim = 0;
  std::vector<float> values;

  std::span<const float> vec(std::size_t layer, std::size_t token) const {
    return {values.data() + (layer * tokens + token) * dim, dim};
  }
  void validate() const;
  bool operator==(const HiddenTrace&) const = default;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual BackendDescriptor descriptor() const = 0;
  /// Chat template applied around rendered prompts before any model call.
  virtual ChatWrapper chat_wrapper() const { return {}; }

  /// Greedy decoding. Throws OverflowError when the prompt exceeds the
  /// context window.
  GenerationResult generate(std::string_view prompt, const GenerationParams& params);
  /// log p(t1 | prompt) in first_token mode; sum of per-step log-probs of the
  /// target tokens plus end-of-sequence in full_sequence mode.
  double target_logprob(std::string_view prompt, std::string_view target, TargetMode mode);
  RelevanceMatrix layer_relevance(std::string_view prompt, TargetMode target);
  HiddenTrace hidden_states(std::string_view prompt);
  std::vector<TokenOffset> tokenize_with_offsets(std::string_view text);

 protected:
  virtual GenerationResult do_generate(std::string_view prompt, const GenerationParams& params) = 0;
  virtual double do_target_logprob(std::string_view prompt, std::string_view target, TargetMode mode) = 0;
  virtual RelevanceMatrix do_layer_relevance(std::string_view prompt, TargetMode target) = 0;
  virtual HiddenTrace do_hidden_states(std::string_view prompt) = 0;
  virtual std::vector<TokenOffset> do_tokenize(std::string_view text) = 0;
};

/// Generic N-d float32 array used by the trace cache.
struct Tensor {
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  std::size_t element_count() const;
  bool operator==(const Tensor&) const = default;
};

/// Trace file layout: 32-byte header then little-endian float32 row-major
/// data. Header: magic "XMRCTRC1" (8 bytes), u32 rank, u32 dtype (0 = f32),
/// four u32 dims (unused dims are 0).
std::string encode_trace(const Tensor& t);
Tensor decode_trace(std::string_view bytes);

Tensor to_tensor(const RelevanceMatrix& m);
RelevanceMatrix relevance_from_tensor(const Tensor& t, TargetMode target);
Tensor to_tensor(const HiddenTrace& h);
HiddenTrace hidden_from_tensor(const Tensor& t);

}  // namespace xmrc
