#include "httplib.h"

#include "stockrag/http.hpp"

#include <fmt/format.h>

#include "stockrag/common.hpp"

namespace stockrag::http {

std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(fmt::format("URL without scheme: {}", url));
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool is_retryable_status(int status) noexcept { return status == 408 || status == 429 || status >= 500; }

Response post_json(const std::string& url, const std::string& body, const std::string& bearer_token,
                   std::chrono::seconds timeout) {
  auto [origin, path] = split_url(url);
  httplib::Client client(origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
  auto res = client.Post(path, headers, body, "application/json");
  if (!res) {
    throw TransportError(fmt::format("POST {} failed: {}", url, httplib::to_string(res.error())), true);
  }
  return {res->status, res->body};
}

}  // namespace stockrag::http
