#pragma once

#include <string>

namespace stockrag {

struct ChatRequest {
  /// Identifies the prompt for scripted clients; remote clients ignore it.
  std::string bundle_id;
  int run_index = 0;
  std::string prompt;
};

/// A single-turn chat completion. Implementations throw TransportError on
/// failure.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

}  // namespace stockrag
