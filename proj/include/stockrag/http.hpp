#pragma once

#include <chrono>
#include <string>

namespace stockrag::http {

struct Response {
  int status = 0;
  std::string body;
};

/// POSTs a JSON body to an http:// or https:// URL. Connection-level
/// failures throw a retryable TransportError; HTTP status codes are
/// returned to the caller.
Response post_json(const std::string& url, const std::string& body, const std::string& bearer_token,
                   std::chrono::seconds timeout);

/// 408, 429 and 5xx.
bool is_retryable_status(int status) noexcept;

/// Splits "https://host:8443/v1/chat" into ("https://host:8443", "/v1/chat").
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace stockrag::http
