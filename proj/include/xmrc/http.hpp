#pragma once

// Minimal JSON-over-HTTP client shared by the remote backend and the judge.

#include <chrono>
#include <map>
#include <string>

namespace xmrc {

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// POSTs `body` as application/json to `base_url` + `path`. `base_url` is
/// "http[s]://host[:port][/prefix]". Throws TransportError when no response
/// arrives.
HttpResponse http_post_json(const std::string& base_url, const std::string& path, const std::string& body,
                            const std::map<std::string, std::string>& headers = {},
                            std::chrono::milliseconds timeout = std::chrono::seconds(60));

HttpResponse http_get(const std::string& base_url, const std::string& path,
                      std::chrono::milliseconds timeout = std::chrono::seconds(60));

}  // namespace xmrc
