#include "xmrc/backend.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "xmrc/error.hpp"

namespace xmrc {

std::string_view finish_reason_name(FinishReason r) { return r == FinishReason::eos ? "eos" : "length"; }

std::string_view target_mode_name(TargetMode m) {
  return m == TargetMode::first_token ? "first_token" : "full_sequence";
}

TargetMode parse_target_mode(std::string_view name) {
  if (name == "first_token" || name == "first_answer_token") return TargetMode::first_token;
  if (name == "full_sequence") return TargetMode::full_sequence;
  throw ConfigError("unknown target mode '" + std::string(name) + "'");
}

std::vector<double> RelevanceMatrix::profile(std::size_t token) const {
  std::vector<double> out(layers);
  for (std::size_t l = 0; l < layers; ++l) out[l] = at(l, token);
  return out;
}

void RelevanceMatrix::validate() const {
  if (layers == 0) throw ValidationError("relevance matrix has no layers");
  if (values.size() != layers * tokens) throw ValidationError("relevance matrix shape does not match its data");
  for (float v : values)
    if (!std::isfinite(v)) throw ValidationError("relevance matrix contains a non-finite value");
}

void HiddenTrace::validate() const {
  if (layers < 2 || dim == 0) throw ValidationError("hidden trace needs >= 2 layers and a positive width");
  if (values.size() != layers * tokens * dim) throw ValidationError("hidden trace shape does not match its data");
  for (float v : values)
    if (!std::isfinite(v)) throw ValidationError("hidden trace contains a non-finite value");
}

GenerationResult Backend::generate(std::string_view prompt, const GenerationParams& params) {
  if (prompt.empty()) throw ValidationError("generate: empty prompt");
  if (params.temperature != 0.0) throw CapabilityError("only greedy decoding (temperature 0) is supported");
  return do_generate(prompt, params);
}

double Backend::target_logprob(std::string_view prompt, std::string_view target, TargetMode mode) {
  if (target.empty()) throw ValidationError("target_logprob: empty target");
  double v = do_target_logprob(prompt, target, mode);
  if (std::isnan(v) || v > 0.0) throw ValidationError("target_logprob: backend returned an invalid log-probability");
  return v;
}

RelevanceMatrix Backend::layer_relevance(std::string_view prompt, TargetMode target) {
  auto d = descriptor();
  if (!d.supports_relevance) throw CapabilityError("backend " + d.name + " does not support layer relevance");
  auto m = do_layer_relevance(prompt, target);
  m.validate();
  if (m.layers != d.num_layers) throw ValidationError("relevance matrix layer count differs from the backend's");
  return m;
}

HiddenTrace Backend::hidden_states(std::string_view prompt) {
  auto d = descriptor();
  if (!d.supports_hidden) throw CapabilityError("backend " + d.name + " does not support hidden states");
  auto h = do_hidden_states(prompt);
  h.validate();
  if (h.layers != d.num_layers + 1 || h.dim != d.hidden_dim) {
    throw ValidationError("hidden trace shape differs from the backend descriptor");
  }
  return h;
}

std::vector<TokenOffset> Backend::tokenize_with_offsets(std::string_view text) {
  auto toks = do_tokenize(text);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& t = toks[i];
    if (t.char_end < t.char_start || t.char_end > text.size() ||
        (i > 0 && (t.char_start < toks[i - 1].char_start || t.char_end < toks[i - 1].char_end))) {
      throw ValidationError("tokenizer produced non-monotonic offsets");
    }
  }
  return toks;
}

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

namespace {

constexpr char kMagic[8] = {'X', 'M', 'R', 'C', 'T', 'R', 'C', '1'};
constexpr std::size_t kHeaderBytes = 32;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace

std::string encode_trace(const Tensor& t) {
  if (t.shape.empty() || t.shape.size() > 4) throw ValidationError("trace tensors must have rank 1..4");
  if (t.data.size() != t.element_count()) throw ValidationError("trace tensor shape does not match its data");
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
  put_u32(out, 0);
  for (std::size_t i = 0; i < 4; ++i) put_u32(out, i < t.shape.size() ? t.shape[i] : 0);
  out.reserve(kHeaderBytes + 4 * t.data.size());
  for (float f : t.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Tensor decode_trace(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw LoadError("not a trace file (bad magic)");
  }
  auto rank = get_u32(bytes, 8);
  if (rank == 0 || rank > 4 || get_u32(bytes, 12) != 0) throw LoadError("unsupported trace header");
  Tensor t;
  for (std::uint32_t i = 0; i < rank; ++i) t.shape.push_back(get_u32(bytes, 16 + 4 * i));
  auto n = t.element_count();
  if (bytes.size() != kHeaderBytes + 4 * n) throw LoadError("trace file size does not match its header");
  t.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) t.data[i] = std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * i));
  return t;
}

Tensor to_tensor(const RelevanceMatrix& m) {
  return {{static_cast<std::uint32_t>(m.layers), static_cast<std::uint32_t>(m.tokens)}, m.values};
}

RelevanceMatrix relevance_from_tensor(const Tensor& t, TargetMode target) {
  if (t.shape.size() != 2) throw LoadError("relevance trace must be rank 2");
  return {t.shape[0], t.shape[1], t.data, target};
}

Tensor to_tensor(const HiddenTrace& h) {
  return {{static_cast<std::uint32_t>(h.layers), static_cast<std::uint32_t>(h.tokens), static_cast<std::uint32_t>(h.dim)},
          h.values};
}

HiddenTrace hidden_from_tensor(const Tensor& t) {
  if (t.shape.size() != 3) throw LoadError("hidden trace must be rank 3");
  return {t.shape[0], t.shape[1], t.shape[2], t.data};
}

}  // namespace xmrc
