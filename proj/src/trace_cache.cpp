#include "xmrc/trace_cache.hpp"

#include <json.hpp>

#include "xmrc/error.hpp"
#include "xmrc/util.hpp"

namespace xmrc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string sanitize(std::string_view s) {
  std::string out;
  for (char c : s) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' || c == '_' ||
              c == '-';
    out.push_back(ok ? c : '_');
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

}  // namespace

TraceCache::TraceCache(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

fs::path TraceCache::entry_path(std::string_view backend, std::string_view key, std::string_view artifact,
                                std::string_view ext) const {
  return root_ / sanitize(backend) / sanitize(key) / (sanitize(artifact) + std::string(ext));
}

std::optional<Tensor> TraceCache::get_tensor(std::string_view backend, std::string_view key,
                                             std::string_view artifact) const {
  auto path = entry_path(backend, key, artifact, ".bin");
  if (!fs::exists(path)) return std::nullopt;
  return decode_trace(read_file(path));
}

bool TraceCache::put_tensor(std::string_view backend, std::string_view key, std::string_view artifact,
                            const Tensor& t) {
  return put_bytes(entry_path(backend, key, artifact, ".bin"), encode_trace(t));
}

std::optional<std::string> TraceCache::get_text(std::string_view backend, std::string_view key,
                                                std::string_view artifact) const {
  auto path = entry_path(backend, key, artifact, ".json");
  if (!fs::exists(path)) return std::nullopt;
  return read_file(path);
}

bool TraceCache::put_text(std::string_view backend, std::string_view key, std::string_view artifact,
                          std::string_view text) {
  return put_bytes(entry_path(backend, key, artifact, ".json"), text);
}

bool TraceCache::evict(std::string_view backend, std::string_view key, std::string_view artifact) {
  bool removed = false;
  for (auto ext : {".bin", ".json"}) {
    auto path = entry_path(backend, key, artifact, ext);
    if (fs::remove(path)) {
      removed = true;
      std::lock_guard lock(manifest_mutex_);
      auto mpath = root_ / "manifest.json";
      if (fs::exists(mpath)) {
        auto m = json::parse(read_file(mpath));
        m["entries"].erase(fs::relative(path, root_).generic_string());
        write_file_atomic(mpath, m.dump(1) + "\n");
      }
    }
  }
  return removed;
}

bool TraceCache::put_bytes(const fs::path& path, std::string_view bytes) {
  if (fs::exists(path)) return false;
  write_file_atomic(path, bytes);
  update_manifest(path, sha256_hex(bytes));
  return true;
}

void TraceCache::update_manifest(const fs::path& path, const std::string& digest) {
  std::lock_guard lock(manifest_mutex_);
  auto mpath = root_ / "manifest.json";
  json m = {{"format", "xmrc-trace-cache/1"}, {"entries", json::object()}};
  if (fs::exists(mpath)) {
    try {
      m = json::parse(read_file(mpath));
    } catch (const json::exception&) {
      // A corrupt index is rebuilt from new entries; the trace files
      // themselves stay authoritative.
    }
  }
  m["entries"][fs::relative(path, root_).generic_string()] = digest;
  write_file_atomic(mpath, m.dump(1) + "\n");
}

CachingBackend::CachingBackend(Backend& inner, TraceCache& cache, std::string cache_name)
    : inner_(inner), cache_(cache), name_(std::move(cache_name)) {}

std::string CachingBackend::key(std::string_view text) const { return sha256_hex(text).substr(0, 32); }

BackendDescriptor CachingBackend::descriptor() const {
  if (auto cached = cache_.get_text(name_, "_backend", "descriptor")) {
    auto j = json::parse(*cached);
    return {j.at("name"), j.at("num_layers"), j.at("hidden_dim"), j.at("supports_relevance"),
            j.at("supports_hidden"), j.at("max_concurrency")};
  }
  auto d = inner_.descriptor();
  json j = {{"name", d.name},
            {"num_layers", d.num_layers},
            {"hidden_dim", d.hidden_dim},
            {"supports_relevance", d.supports_relevance},
            {"supports_hidden", d.supports_hidden},
            {"max_concurrency", d.max_concurrency}};
  cache_.put_text(name_, "_backend", "descriptor", j.dump());
  return d;
}

ChatWrapper CachingBackend::chat_wrapper() const {
  if (auto cached = cache_.get_text(name_, "_backend", "chat_wrapper")) {
    auto j = json::parse(*cached);
    return {j.at("prefix"), j.at("suffix")};
  }
  auto w = inner_.chat_wrapper();
  cache_.put_text(name_, "_backend", "chat_wrapper", json{{"prefix", w.prefix}, {"suffix", w.suffix}}.dump());
  return w;
}

GenerationResult CachingBackend::do_generate(std::string_view prompt, const GenerationParams& params) {
  auto k = key(prompt);
  auto artifact = "generation.m" + std::to_string(params.max_new_tokens);
  if (auto cached = cache_.get_text(name_, k, artifact)) {
    ++hits_;
    auto j = json::parse(*cached);
    return {j.at("text"), j.at("finish_reason") == "eos" ? FinishReason::eos : FinishReason::length,
            j.at("prompt_token_count")};
  }
  ++inner_calls_;
  auto r = inner_.generate(prompt, params);
  json j = {{"text", r.text},
            {"finish_reason", std::string(finish_reason_name(r.finish_reason))},
            {"prompt_token_count", r.prompt_token_count}};
  cache_.put_text(name_, k, artifact, j.dump());
  return r;
}

double CachingBackend::do_target_logprob(std::string_view prompt, std::string_view target, TargetMode mode) {
  auto k = key(prompt);
  auto artifact = "logprob." + std::string(target_mode_name(mode)) + "." + sha256_hex(target).substr(0, 16);
  if (auto cached = cache_.get_text(name_, k, artifact)) {
    ++hits_;
    return json::parse(*cached).at("value").get<double>();
  }
  ++inner_calls_;
  double v = inner_.target_logprob(prompt, target, mode);
  cache_.put_text(name_, k, artifact, json{{"value", v}, {"target", target}}.dump());
  return v;
}

RelevanceMatrix CachingBackend::do_layer_relevance(std::string_view prompt, TargetMode target) {
  auto k = key(prompt);
  auto artifact = "relevance." + std::string(target_mode_name(target));
  if (auto cached = cache_.get_tensor(name_, k, artifact)) {
    ++hits_;
    return relevance_from_tensor(*cached, target);
  }
  ++inner_calls_;
  auto m = inner_.layer_relevance(prompt, target);
  cache_.put_tensor(name_, k, artifact, to_tensor(m));
  return m;
}

HiddenTrace CachingBackend::do_hidden_states(std::string_view prompt) {
  auto k = key(prompt);
  if (auto cached = cache_.get_tensor(name_, k, "hidden")) {
    ++hits_;
    return hidden_from_tensor(*cached);
  }
  ++inner_calls_;
  auto h = inner_.hidden_states(prompt);
  cache_.put_tensor(name_, k, "hidden", to_tensor(h));
  return h;
}

std::vector<TokenOffset> CachingBackend::do_tokenize(std::string_view text) {
  auto k = key(text);
  if (auto cached = cache_.get_text(name_, k, "tokens")) {
    ++hits_;
    std::vector<TokenOffset> out;
    for (const auto& t : json::parse(*cached)) out.push_back({t[0], t[1], t[2]});
    return out;
  }
  ++inner_calls_;
  auto toks = inner_.tokenize_with_offsets(text);
  json j = json::array();
  for (const auto& t : toks) j.push_back({t.token_id, t.char_start, t.char_end});
  cache_.put_text(name_, k, "tokens", j.dump());
  return toks;
}

}  // namespace xmrc
