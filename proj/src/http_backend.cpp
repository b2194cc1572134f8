#include "xmrc/http_backend.hpp"

#include <httplib.h>

#include <json.hpp>

#include "xmrc/error.hpp"
#include "xmrc/http.hpp"

namespace xmrc {

using nlohmann::json;

HttpBackend::HttpBackend(std::string endpoint) : endpoint_(std::move(endpoint)) {
  if (endpoint_.empty()) throw ConfigError("http backend needs an endpoint");
}

void HttpBackend::describe() const {
  if (descriptor_) return;
  auto res = http_get(endpoint_, "/v1/describe");
  if (res.status != 200) throw TransportError("describe returned HTTP " + std::to_string(res.status));
  auto j = json::parse(res.body);
  BackendDescriptor d;
  d.name = j.at("name");
  d.num_layers = j.at("num_layers");
  d.hidden_dim = j.at("hidden_dim");
  d.supports_relevance = j.value("supports_relevance", false);
  d.supports_hidden = j.value("supports_hidden", false);
  d.max_concurrency = j.value("max_concurrency", std::size_t{1});
  if (d.num_layers == 0) throw ValidationError("remote backend reports zero layers");
  wrapper_ = {j.value("chat_prefix", std::string()), j.value("chat_suffix", std::string())};
  descriptor_ = d;
}

BackendDescriptor HttpBackend::descriptor() const {
  describe();
  return *descriptor_;
}

ChatWrapper HttpBackend::chat_wrapper() const {
  describe();
  return wrapper_;
}

std::string HttpBackend::post(const std::string& path, const std::string& body) const {
  auto res = http_post_json(endpoint_, path, body);
  if (res.status == 413) throw OverflowError("remote backend: context overflow (" + res.body + ")");
  if (res.status == 501) throw CapabilityError("remote backend: unsupported (" + path + ")");
  if (res.status != 200) throw TransportError(path + " returned HTTP " + std::to_string(res.status) + ": " + res.body);
  return res.body;
}

GenerationResult HttpBackend::do_generate(std::string_view prompt, const GenerationParams& params) {
  json req = {{"prompt", prompt}, {"max_new_tokens", params.max_new_tokens}, {"temperature", params.temperature}};
  auto j = json::parse(post("/v1/generate", req.dump()));
  return {j.at("text"), j.at("finish_reason") == "eos" ? FinishReason::eos : FinishReason::length,
          j.value("prompt_token_count", std::size_t{0})};
}

double HttpBackend::do_target_logprob(std::string_view prompt, std::string_view target, TargetMode mode) {
  json req = {{"prompt", prompt}, {"target", target}, {"mode", target_mode_name(mode)}};
  return json::parse(post("/v1/target_logprob", req.dump())).at("logprob").get<double>();
}

RelevanceMatrix HttpBackend::do_layer_relevance(std::string_view prompt, TargetMode target) {
  json req = {{"prompt", prompt}, {"target", target_mode_name(target)}};
  auto j = json::parse(post("/v1/relevance", req.dump()));
  return {j.at("layers"), j.at("tokens"), j.at("values").get<std::vector<float>>(), target};
}

HiddenTrace HttpBackend::do_hidden_states(std::string_view prompt) {
  auto j = json::parse(post("/v1/hidden_states", json{{"prompt", prompt}}.dump()));
  return {j.at("layers"), j.at("tokens"), j.at("dim"), j.at("values").get<std::vector<float>>()};
}

std::vector<TokenOffset> HttpBackend::do_tokenize(std::string_view text) {
  auto j = json::parse(post("/v1/tokenize", json{{"text", text}}.dump()));
  std::vector<TokenOffset> out;
  for (const auto& t : j.at("tokens")) out.push_back({t.at(0), t.at(1), t.at(2)});
  return out;
}

void mount_backend_routes(httplib::Server& server, Backend& backend) {
  auto guarded = [&backend](auto body_fn) {
    return [&backend, body_fn](const httplib::Request& req, httplib::Response& res) {
      try {
        json in = req.body.empty() ? json::object() : json::parse(req.body);
        res.set_content(body_fn(backend, in).dump(), "application/json");
      } catch (const OverflowError& e) {
        res.status = 413;
        res.set_content(e.what(), "text/plain");
      } catch (const CapabilityError& e) {
        res.status = 501;
        res.set_content(e.what(), "text/plain");
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(e.what(), "text/plain");
      }
    };
  };
  server.Get("/v1/describe", guarded([](Backend& b, const json&) {
    auto d = b.descriptor();
    auto w = b.chat_wrapper();
    return json{{"name", d.name},
                {"num_layers", d.num_layers},
                {"hidden_dim", d.hidden_dim},
                {"supports_relevance", d.supports_relevance},
                {"supports_hidden", d.supports_hidden},
                {"max_concurrency", d.max_concurrency},
                {"chat_prefix", w.prefix},
                {"chat_suffix", w.suffix}};
  }));
  server.Post("/v1/generate", guarded([](Backend& b, const json& in) {
    auto r = b.generate(in.at("prompt").get<std::string>(),
                        {in.value("max_new_tokens", std::size_t{64}), in.value("temperature", 0.0)});
    return json{{"text", r.text},
                {"finish_reason", finish_reason_name(r.finish_reason)},
                {"prompt_token_count", r.prompt_token_count}};
  }));
  server.Post("/v1/target_logprob", guarded([](Backend& b, const json& in) {
    auto v = b.target_logprob(in.at("prompt").get<std::string>(), in.at("target").get<std::string>(),
                              parse_target_mode(in.at("mode").get<std::string>()));
    return json{{"logprob", v}};
  }));
  server.Post("/v1/relevance", guarded([](Backend& b, const json& in) {
    auto m = b.layer_relevance(in.at("prompt").get<std::string>(),
                               parse_target_mode(in.value("target", std::string("first_token"))));
    return json{{"layers", m.layers}, {"tokens", m.tokens}, {"values", m.values}};
  }));
  server.Post("/v1/hidden_states", guarded([](Backend& b, const json& in) {
    auto h = b.hidden_states(in.at("prompt").get<std::string>());
    return json{{"layers", h.layers}, {"tokens", h.tokens}, {"dim", h.dim}, {"values", h.values}};
  }));
  server.Post("/v1/tokenize", guarded([](Backend& b, const json& in) {
    json toks = json::array();
    for (const auto& t : b.tokenize_with_offsets(in.at("text").get<std::string>()))
      toks.push_back({t.token_id, t.char_start, t.char_end});
    return json{{"tokens", toks}};
  }));
}

}  // namespace xmrc
