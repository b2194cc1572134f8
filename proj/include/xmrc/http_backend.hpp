#pragma once

// Remote backend speaking the xmrc backend protocol (JSON over HTTP):
//   GET  /v1/describe       -> {name, num_layers, hidden_dim, supports_relevance,
//                               supports_hidden, max_concurrency, chat_prefix, chat_suffix}
//   POST /v1/generate       {prompt, max_new_tokens, temperature}
//                           -> {text, finish_reason, prompt_token_count}
//   POST /v1/target_logprob {prompt, target, mode} -> {logprob}
//   POST /v1/relevance      {prompt, target} -> {layers, tokens, values}
//   POST /v1/hidden_states  {prompt} -> {layers, tokens, dim, values}
//   POST /v1/tokenize       {text} -> {tokens: [[id, char_start, char_end], ...]}
// Status 413 means context overflow, 501 an unsupported capability. Character
// offsets are UTF-8 byte offsets. Relevance and hidden values are row-major.

#include <memory>
#include <optional>
#include <string>

#include "xmrc/backend.hpp"

namespace httplib {
class Server;
}

namespace xmrc {

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(std::string endpoint);

  BackendDescriptor descriptor() const override;
  ChatWrapper chat_wrapper() const override;

 protected:
  GenerationResult do_generate(std::string_view prompt, const GenerationParams& params) override;
  double do_target_logprob(std::string_view prompt, std::string_view target, TargetMode mode) override;
  RelevanceMatrix do_layer_relevance(std::string_view prompt, TargetMode target) override;
  HiddenTrace do_hidden_states(std::string_view prompt) override;
  std::vector<TokenOffset> do_tokenize(std::string_view text) override;

 private:
  void describe() const;
  std::string post(const std::string& path, const std::string& body) const;

  std::string endpoint_;
  mutable std::optional<BackendDescriptor> descriptor_;
  mutable ChatWrapper wrapper_;
};

/// Registers the protocol's handlers on `server`, forwarding to `backend`.
/// `backend` must outlive the server.
void mount_backend_routes(httplib::Server& server, Backend& backend);

}  // namespace xmrc
