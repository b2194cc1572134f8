#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xmrc/backend.hpp"

namespace xmrc {

/// Everything the mock does is driven by this table, so its behavior is a
/// pure function of (script, arguments).
struct MockScript {
  std::string name = "mock";
  std::size_t num_layers = 2;
  std::size_t hidden_dim = 4;
  std::size_t context_limit = std::size_t{1} << 20;  // in tokens
  bool supports_relevance = true;
  bool supports_hidden = true;
  std::size_t max_concurrency = 1;
  ChatWrapper wrapper;

  /// Tokens listed here get ids 0..n-1; other tokens get hashed ids >= n.
  std::vector<std::string> vocab;

  /// Replies keyed by sha256 of the prompt; consulted before `responder`.
  std::map<std::string, std::string> generations;
  std::function<std::string(std::string_view prompt)> responder;

  /// Scripted relevance (layer rows x token columns) keyed by prompt sha256.
  std::map<std::string, std::vector<std::vector<float>>> relevance;

  /// log p(next | prompt, prefix); `next == nullopt` asks for end-of-sequence.
  /// Without a step function the next-token distribution is uniform over
  /// `uniform_vocab_size` symbols, and end-of-sequence uses `eos_logprob`
  /// when set.
  std::function<double(std::string_view prompt, std::span<const std::string> prefix,
                       std::optional<std::string_view> next)>
      step_logprob;
  std::size_t uniform_vocab_size = 4;
  std::optional<double> eos_logprob;
};

/// Whitespace-tokenizing, deterministic stand-in for a causal LM.
class MockBackend : public Backend {
 public:
  explicit MockBackend(MockScript script);

  BackendDescriptor descriptor() const override;
  ChatWrapper chat_wrapper() const override { return script_.wrapper; }

  /// Model calls served so far (tokenization included).
  std::size_t call_count() const { return calls_.load(); }

  /// Whitespace tokens of `text` as strings.
  static std::vector<std::string> split_tokens(std::string_view text);

  /// Responder that picks the test-context sentence sharing the most words
  /// with the question and answers with its first run of capitalized or
  /// numeric words not in the question.
  static std::string extractive_reader(std::string_view prompt);

  /// Step function favoring tokens that occur in the test context.
  static double copy_step_logprob(std::string_view prompt, std::span<const std::string> prefix,
                                  std::optional<std::string_view> next);

 protected:
  GenerationResult do_generate(std::string_view prompt, const GenerationParams& params) override;
  double do_target_logprob(std::string_view prompt, std::string_view target, TargetMode mode) override;
  RelevanceMatrix do_layer_relevance(std::string_view prompt, TargetMode target) override;
  HiddenTrace do_hidden_states(std::string_view prompt) override;
  std::vector<TokenOffset> do_tokenize(std::string_view text) override;

 private:
  std::vector<TokenOffset> offsets(std::string_view text) const;
  void check_context(std::string_view prompt) const;
  double step(std::string_view prompt, std::span<const std::string> prefix, std::optional<std::string_view> next) const;

  MockScript script_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace xmrc
