#pragma once

// On-disk cache of model outputs. Layout:
//   <root>/<backend>/<key>/<artifact>.bin   float32 trace files
//   <root>/<backend>/<key>/<artifact>.json  small JSON results
//   <root>/manifest.json                    index: relative path -> sha256
// Entries are write-once; every file is written to a temp name and renamed.

#include <atomic>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "xmrc/backend.hpp"

namespace xmrc {

class TraceCache {
 public:
  explicit TraceCache(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  std::optional<Tensor> get_tensor(std::string_view backend, std::string_view key, std::string_view artifact) const;
  /// Returns false (and leaves the existing file) when the entry exists.
  bool put_tensor(std::string_view backend, std::string_view key, std::string_view artifact, const Tensor& t);

  std::optional<std::string> get_text(std::string_view backend, std::string_view key, std::string_view artifact) const;
  bool put_text(std::string_view backend, std::string_view key, std::string_view artifact, std::string_view text);

  /// Removes an entry; returns whether it existed.
  bool evict(std::string_view backend, std::string_view key, std::string_view artifact);

 private:
  std::filesystem::path entry_path(std::string_view backend, std::string_view key, std::string_view artifact,
                                   std::string_view ext) const;
  bool put_bytes(const std::filesystem::path& path, std::string_view bytes);
  void update_manifest(const std::filesystem::path& path, const std::string& digest);

  std::filesystem::path root_;
  mutable std::mutex manifest_mutex_;
};

/// Serves every model call from the trace cache when possible and records
/// misses. `inner_calls()` counts the calls that reached the wrapped backend.
class CachingBackend : public Backend {
 public:
  CachingBackend(Backend& inner, TraceCache& cache, std::string cache_name);

  BackendDescriptor descriptor() const override;
  ChatWrapper chat_wrapper() const override;

  std::size_t inner_calls() const { return inner_calls_.load(); }
  std::size_t cache_hits() const { return hits_.load(); }

 protected:
  GenerationResult do_generate(std::string_view prompt, const GenerationParams& params) override;
  double do_target_logprob(std::string_view prompt, std::string_view target, TargetMode mode) override;
  RelevanceMatrix do_layer_relevance(std::string_view prompt, TargetMode target) override;
  HiddenTrace do_hidden_states(std::string_view prompt) override;
  std::vector<TokenOffset> do_tokenize(std::string_view text) override;

 private:
  std::string key(std::string_view text) const;

  Backend& inner_;
  TraceCache& cache_;
  std::string name_;
  std::atomic<std::size_t> inner_calls_{0};
  std::atomic<std::size_t> hits_{0};
};

}  // namespace xmrc
