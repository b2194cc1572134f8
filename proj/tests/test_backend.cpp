#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <httplib.h>
#include <limits>
#include <thread>

#include "test_support.hpp"
#include "xmrc/error.hpp"
#include "xmrc/http_backend.hpp"
#include "xmrc/mock_backend.hpp"
#include "xmrc/trace_cache.hpp"
#include "xmrc/util.hpp"

using namespace xmrc;

namespace {

// Returns whatever it is told to, so the contract checks can be exercised.
class RogueBackend : public Backend {
 public:
  BackendDescriptor desc{"rogue", 2, 3, true, true, 1};
  double logprob = -1.0;
  RelevanceMatrix relevance{2, 1, {0.5f, 0.5f}, TargetMode::first_token};
  HiddenTrace hidden{3, 1, 3, std::vector<float>(9, 1.0f)};
  std::vector<TokenOffset> tokens{{1, 0, 1}};

  BackendDescriptor descriptor() const override { return desc; }

 protected:
  GenerationResult do_generate(std::string_view, const GenerationParams&) override { return {"x", {}, 1}; }
  double do_target_logprob(std::string_view, std::string_view, TargetMode) override { return logprob; }
  RelevanceMatrix do_layer_relevance(std::string_view, TargetMode) override { return relevance; }
  HiddenTrace do_hidden_states(std::string_view) override { return hidden; }
  std::vector<TokenOffset> do_tokenize(std::string_view) override { return tokens; }
};

MockScript small_script() {
  MockScript s;
  s.name = "m";
  s.num_layers = 3;
  s.hidden_dim = 5;
  s.vocab = {"a", "b"};
  return s;
}

}  // namespace

TEST_CASE("mock tokenizer and generation") {
  auto script = small_script();
  script.generations[sha256_hex("hello world")] = "Answer: one two three";
  script.context_limit = 4;
  MockBackend m(script);
  auto toks = m.tokenize_with_offsets("a  b\nzz");
  REQUIRE(toks.size() == 3);
  CHECK(toks[0] == TokenOffset{0, 0, 1});
  CHECK(toks[1] == TokenOffset{1, 3, 4});
  CHECK(toks[2].token_id >= 2);
  CHECK(toks[2].char_start == 5);

  auto g = m.generate("hello world", {});
  CHECK(g.text == "Answer: one two three");
  CHECK(g.finish_reason == FinishReason::eos);
  CHECK(g.prompt_token_count == 2);
  auto cut = m.generate("hello world", {2, 0.0});
  CHECK(cut.text == "Answer: one");
  CHECK(cut.finish_reason == FinishReason::length);
  auto none = m.generate("hello world", {0, 0.0});
  CHECK(none.text.empty());
  CHECK(none.finish_reason == FinishReason::length);
  CHECK(m.generate("unscripted", {}).text.empty());
  CHECK_THROWS_AS(m.generate("a b c d e", {}), OverflowError);
  CHECK_THROWS_AS(m.generate("hello", {8, 0.7}), CapabilityError);
  CHECK_THROWS_AS(m.generate("", {}), ValidationError);
}

TEST_CASE("mock log-probabilities") {
  auto script = small_script();
  MockBackend uniform(script);
  CHECK(uniform.target_logprob("p", "x y", TargetMode::first_token) == doctest::Approx(-std::log(4.0)));
  CHECK(uniform.target_logprob("p", "x y", TargetMode::full_sequence) == doctest::Approx(-3 * std::log(4.0)));
  CHECK_THROWS_AS(uniform.target_logprob("p", "", TargetMode::first_token), ValidationError);

  script.step_logprob = [](std::string_view, std::span<const std::string> prefix,
                           std::optional<std::string_view> next) {
    if (!next) return -0.1;
    return -1.0 - static_cast<double>(prefix.size());
  };
  MockBackend stepped(script);
  // -1 + -2 + -3 + eos
  CHECK(stepped.target_logprob("p", "u v w", TargetMode::full_sequence) == doctest::Approx(-6.1));
  CHECK(stepped.target_logprob("p", "u v w", TargetMode::first_token) == doctest::Approx(-1.0));
}

TEST_CASE("mock traces are deterministic and well shaped") {
  MockBackend m(small_script());
  auto r1 = m.layer_relevance("a b c d", TargetMode::first_token);
  auto r2 = m.layer_relevance("a b c d", TargetMode::first_token);
  CHECK(r1 == r2);
  CHECK(r1.layers == 3);
  CHECK(r1.tokens == 4);
  CHECK(r1.profile(2).size() == 3);
  auto h = m.hidden_states("a b c");
  CHECK(h.layers == 4);
  CHECK(h.tokens == 3);
  CHECK(h.dim == 5);
  CHECK(h == m.hidden_states("a b c"));
  auto before = m.call_count();
  m.tokenize_with_offsets("z");
  CHECK(m.call_count() == before + 1);

  auto script = small_script();
  script.relevance[sha256_hex("a b")] = {{1, 0}, {0, 1}, {1, 1}};
  MockBackend scripted(script);
  auto r = scripted.layer_relevance("a b", TargetMode::first_token);
  CHECK(r.at(1, 1) == 1.0f);
  CHECK(r.at(1, 0) == 0.0f);
  CHECK(r.profile(0) == std::vector<double>{1, 0, 1});
}

TEST_CASE("contract checks on backend results") {
  RogueBackend b;
  CHECK(b.target_logprob("p", "t", TargetMode::first_token) == -1.0);
  b.logprob = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(b.target_logprob("p", "t", TargetMode::first_token), ValidationError);
  b.logprob = 0.5;
  CHECK_THROWS_AS(b.target_logprob("p", "t", TargetMode::first_token), ValidationError);

  CHECK_NOTHROW(b.layer_relevance("p", TargetMode::first_token));
  b.relevance.values[0] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(b.layer_relevance("p", TargetMode::first_token), ValidationError);
  b.relevance = {3, 1, {1, 1, 1}, TargetMode::first_token};
  CHECK_THROWS_AS(b.layer_relevance("p", TargetMode::first_token), ValidationError);

  CHECK_NOTHROW(b.hidden_states("p"));
  b.hidden.dim = 2;
  b.hidden.values.resize(6);
  CHECK_THROWS_AS(b.hidden_states("p"), ValidationError);

  b.tokens = {{1, 2, 3}, {2, 0, 1}};
  CHECK_THROWS_AS(b.tokenize_with_offsets("abc"), ValidationError);

  b.desc.supports_relevance = false;
  b.desc.supports_hidden = false;
  CHECK_THROWS_AS(b.layer_relevance("p", TargetMode::first_token), CapabilityError);
  CHECK_THROWS_AS(b.hidden_states("p"), CapabilityError);
}

TEST_CASE("trace encoding") {
  Tensor t{{2, 3}, {1, 2, 3, 4, 5, 6.5f}};
  auto bytes = encode_trace(t);
  CHECK(bytes.size() == 32 + 24);
  CHECK(bytes.substr(0, 8) == "XMRCTRC1");
  CHECK(decode_trace(bytes) == t);
  CHECK_THROWS_AS(decode_trace("garbage"), LoadError);
  auto truncated = bytes.substr(0, bytes.size() - 4);
  CHECK_THROWS_AS(decode_trace(truncated), LoadError);

  RelevanceMatrix m{2, 3, {1, 2, 3, 4, 5, 6}, TargetMode::full_sequence};
  CHECK(relevance_from_tensor(to_tensor(m), TargetMode::full_sequence) == m);
  HiddenTrace h{2, 1, 2, {1, 2, 3, 4}};
  CHECK(hidden_from_tensor(to_tensor(h)) == h);
}

TEST_CASE("trace cache is write-once and indexed") {
  test::TempDir dir;
  TraceCache cache(dir.path());
  Tensor t{{1}, {3.0f}};
  CHECK_FALSE(cache.get_tensor("b", "k", "a").has_value());
  CHECK(cache.put_tensor("b", "k", "a", t));
  CHECK_FALSE(cache.put_tensor("b", "k", "a", Tensor{{1}, {4.0f}}));
  CHECK(*cache.get_tensor("b", "k", "a") == t);
  CHECK(cache.put_text("b", "k", "note", "{}"));
  CHECK(*cache.get_text("b", "k", "note") == "{}");
  auto manifest = read_file(dir / "manifest.json");
  CHECK(manifest.find("b/k/a.bin") != std::string::npos);
  CHECK(manifest.find(file_sha256(dir / "b/k/a.bin")) != std::string::npos);
  CHECK(cache.evict("b", "k", "a"));
  CHECK_FALSE(cache.get_tensor("b", "k", "a").has_value());
  CHECK_FALSE(cache.evict("b", "k", "a"));
}

TEST_CASE("caching backend serves repeats from disk") {
  test::TempDir dir;
  auto script = small_script();
  script.responder = [](std::string_view p) { return "Answer: " + std::string(p.substr(0, 1)); };
  script.wrapper = {"<u>", "</u>"};
  MockBackend mock(script);
  {
    TraceCache cache(dir.path());
    CachingBackend cb(mock, cache, "m");
    auto g = cb.generate("a b", {});
    cb.target_logprob("a b", "x", TargetMode::first_token);
    cb.layer_relevance("a b", TargetMode::first_token);
    cb.hidden_states("a b");
    cb.tokenize_with_offsets("a b");
    CHECK(cb.inner_calls() == 5);
    cb.generate("a b", {});
    CHECK(cb.inner_calls() == 5);
    CHECK(cb.cache_hits() == 1);
    // A different max_new_tokens is a different request.
    cb.generate("a b", {1, 0.0});
    CHECK(cb.inner_calls() == 6);
    CHECK(g.text == "Answer: a");
  }
  auto calls = mock.call_count();
  TraceCache cache(dir.path());
  CachingBackend again(mock, cache, "m");
  CHECK(again.generate("a b", {}).text == "Answer: a");
  CHECK(again.target_logprob("a b", "x", TargetMode::first_token) == doctest::Approx(-std::log(4.0)));
  CHECK(again.layer_relevance("a b", TargetMode::first_token) == mock.layer_relevance("a b", TargetMode::first_token));
  CHECK(again.hidden_states("a b").values.size() == 4 * 2 * 5);
  CHECK(again.tokenize_with_offsets("a b").size() == 2);
  CHECK(again.chat_wrapper().prefix == "<u>");
  CHECK(again.descriptor().num_layers == 3);
  CHECK(again.inner_calls() == 0);
  CHECK(mock.call_count() == calls + 1);  // only the direct comparison call above
}

TEST_CASE("http backend round trip") {
  auto script = small_script();
  script.responder = MockBackend::extractive_reader;
  script.context_limit = 50;
  script.wrapper = {"[", "]"};
  MockBackend mock(script);
  httplib::Server server;
  mount_backend_routes(server, mock);
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpBackend remote("http://127.0.0.1:" + std::to_string(port));
  auto d = remote.descriptor();
  CHECK(d.name == "m");
  CHECK(d.num_layers == 3);
  CHECK(remote.chat_wrapper().suffix == "]");
  std::string prompt = "Your task starts here:\n\nContext: The Foo is in Bar.\n\nQuestion: Where is the Foo?";
  CHECK(remote.generate(prompt, {}) == mock.generate(prompt, {}));
  CHECK(remote.target_logprob(prompt, "Bar", TargetMode::full_sequence) ==
        doctest::Approx(mock.target_logprob(prompt, "Bar", TargetMode::full_sequence)));
  CHECK(remote.layer_relevance(prompt, TargetMode::first_token) == mock.layer_relevance(prompt, TargetMode::first_token));
  CHECK(remote.hidden_states(prompt) == mock.hidden_states(prompt));
  CHECK(remote.tokenize_with_offsets("a é b") == mock.tokenize_with_offsets("a é b"));
  std::string long_prompt(200, 'x');
  for (std::size_t i = 1; i < long_prompt.size(); i += 2) long_prompt[i] = ' ';
  CHECK_THROWS_AS(remote.generate(long_prompt, {}), OverflowError);

  server.stop();
  th.join();
  HttpBackend dead("http://127.0.0.1:" + std::to_string(port));
  CHECK_THROWS_AS(dead.descriptor(), TransportError);
}

TEST_CASE("http backend maps missing capabilities") {
  auto script = small_script();
  script.supports_relevance = false;
  MockBackend mock(script);
  httplib::Server server;
  mount_backend_routes(server, mock);
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  HttpBackend remote("http://127.0.0.1:" + std::to_string(port));
  CHECK_THROWS_AS(remote.layer_relevance("a", TargetMode::first_token), CapabilityError);
  server.stop();
  th.join();
}
