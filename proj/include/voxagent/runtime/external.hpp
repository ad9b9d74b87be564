#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "voxagent/digest.hpp"
#include "voxagent/runtime/agent.hpp"

namespace voxagent::runtime {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string text;
  std::vector<Bytes> images_png;
};

/// Anything that maps a conversation to one reply. Throws Error(EndpointError).
class ChatEndpoint {
 public:
  virtual ~ChatEndpoint() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

/// Shared limiter for all external-agent requests of one process.
class TokenBucket {
 public:
  TokenBucket(double per_second, double burst);
  /// Blocks until a token is available.
  void acquire();

 private:
  std::mutex mu_;
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

/// JSON config file:
///   {"url": "https://host/v1/chat/completions", "model": "...",
///    "api_key_env": "OPENAI_API_KEY", "timeout_s": 120,
///    "temperature": 0, "max_tokens": 1024, "requests_per_minute": 0}
struct EndpointConfig {
  std::string url;
  std::string model;
  std::string api_key_env;  // empty: no Authorization header
  int timeout_s = 120;
  double temperature = 0.0;
  int max_tokens = 1024;
  double requests_per_minute = 0;  // 0: unlimited

  static EndpointConfig from_json(const nlohmann::json& j);
  /// Errors: MissingFile, SchemaViolation.
  static EndpointConfig load(const std::filesystem::path& path);
};

/// OpenAI-compatible chat/completions client (text + PNG data URLs).
class HttpChatEndpoint final : public ChatEndpoint {
 public:
  explicit HttpChatEndpoint(EndpointConfig config, std::shared_ptr<TokenBucket> limiter = nullptr);
  std::string complete(const std::vector<ChatMessage>& messages) override;

  /// Request body for the given conversation (exposed for tests).
  nlohmann::json request_body(const std::vector<ChatMessage>& messages) const;

 private:
  EndpointConfig config_;
  std::shared_ptr<TokenBucket> limiter_;
};

/// LLM-backed agent: prompt rendered from the episode context, replies read
/// with parse_reply(); an unparseable reply gets one repair re-prompt before
/// the turn is reported as malformed.
std::unique_ptr<Agent> external_agent(std::shared_ptr<ChatEndpoint> endpoint, std::string agent_id);

}  // namespace voxagent::runtime
