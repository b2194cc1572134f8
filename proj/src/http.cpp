#include "xmrc/http.hpp"

#include <httplib.h>

#include "xmrc/error.hpp"

namespace xmrc {

namespace {

struct Target {
  std::string origin;
  std::string prefix;
};

Target split_url(const std::string& url) {
  auto scheme = url.find("://");
  auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
  auto slash = url.find('/', host_start);
  if (slash == std::string::npos) return {url, ""};
  auto prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, slash), prefix};
}

httplib::Client make_client(const std::string& origin, std::chrono::milliseconds timeout) {
  httplib::Client cli(origin);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  return cli;
}

}  // namespace

HttpResponse http_post_json(const std::string& base_url, const std::string& path, const std::string& body,
                            const std::map<std::string, std::string>& headers, std::chrono::milliseconds timeout) {
  auto target = split_url(base_url);
  auto cli = make_client(target.origin, timeout);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = cli.Post(target.prefix + path, h, body, "application/json");
  if (!res) throw TransportError("POST " + base_url + path + " failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

HttpResponse http_get(const std::string& base_url, const std::string& path, std::chrono::milliseconds timeout) {
  auto target = split_url(base_url);
  auto cli = make_client(target.origin, timeout);
  auto res = cli.Get(target.prefix + path);
  if (!res) throw TransportError("GET " + base_url + path + " failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

}  // namespace xmrc
