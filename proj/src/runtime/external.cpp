#include "voxagent/runtime/external.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "voxagent/error.hpp"
#include "voxagent/runtime/prompt.hpp"

namespace voxagent::runtime {

using nlohmann::json;

TokenBucket::TokenBucket(double per_second, double burst)
    : rate_(per_second), burst_(std::max(1.0, burst)), tokens_(burst_), last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
  for (;;) {
    std::chrono::duration<double> wait{};
    {
      std::lock_guard lock(mu_);
      const auto now = std::chrono::steady_clock::now();
      tokens_ = std::min(burst_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    }
    std::this_thread::sleep_for(wait);
  }
}

EndpointConfig EndpointConfig::from_json(const json& j) {
  try {
    EndpointConfig c;
    c.url = j.at("url").get<std::string>();
    c.model = j.at("model").get<std::string>();
    c.api_key_env = j.value("api_key_env", "");
    c.timeout_s = j.value("timeout_s", 120);
    c.temperature = j.value("temperature", 0.0);
    c.max_tokens = j.value("max_tokens", 1024);
    c.requests_per_minute = j.value("requests_per_minute", 0.0);
    if (c.timeout_s <= 0 || c.max_tokens <= 0 || c.requests_per_minute < 0) {
      throw Error(Errc::SchemaViolation, "endpoint config: timeout_s, max_tokens must be > 0");
    }
    return c;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("endpoint config: ") + e.what());
  }
}

EndpointConfig EndpointConfig::load(const std::filesystem::path& path) {
  const Bytes bytes = read_file_bytes(path.string());
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, path.string() + ": " + e.what());
  }
  return from_json(j);
}

HttpChatEndpoint::HttpChatEndpoint(EndpointConfig config, std::shared_ptr<TokenBucket> limiter)
    : config_(std::move(config)), limiter_(std::move(limiter)) {}

json HttpChatEndpoint::request_body(const std::vector<ChatMessage>& messages) const {
  json msgs = json::array();
  for (const auto& m : messages) {
    if (m.images_png.empty()) {
      msgs.push_back({{"role", m.role}, {"content", m.text}});
      continue;
    }
    json parts = json::array({{{"type", "text"}, {"text", m.text}}});
    for (const auto& png : m.images_png) {
      parts.push_back({{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}});
    }
    msgs.push_back({{"role", m.role}, {"content", parts}});
  }
  return {{"model", config_.model},
          {"messages", msgs},
          {"temperature", config_.temperature},
          {"max_tokens", config_.max_tokens}};
}

std::string HttpChatEndpoint::complete(const std::vector<ChatMessage>& messages) {
  // split "scheme://host[:port]/path"
  const std::size_t scheme_end = config_.url.find("://");
  const std::size_t path_start = config_.url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string origin = path_start == std::string::npos ? config_.url : config_.url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : config_.url.substr(path_start);

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) throw Error(Errc::EndpointError, "environment variable " + config_.api_key_env + " is not set");
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  if (limiter_) limiter_->acquire();

  httplib::Client cli(origin);
  if (!cli.is_valid()) throw Error(Errc::EndpointError, "unsupported endpoint url " + config_.url);
  cli.set_connection_timeout(std::min(config_.timeout_s, 30), 0);
  cli.set_read_timeout(config_.timeout_s, 0);
  cli.set_write_timeout(config_.timeout_s, 0);
  const auto res = cli.Post(path, headers, request_body(messages).dump(), "application/json");
  if (!res) throw Error(Errc::EndpointError, "request to " + origin + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw Error(Errc::EndpointError, "endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300));
  }
  try {
    const json j = json::parse(res->body);
    const json& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    std::string text;
    for (const auto& part : content) {
      if (part.value("type", "") == "text") text += part.value("text", "");
    }
    return text;
  } catch (const json::exception& e) {
    throw Error(Errc::EndpointError, std::string("unexpected endpoint response: ") + e.what());
  }
}

namespace {

class ExternalAgent final : public Agent {
 public:
  ExternalAgent(std::shared_ptr<ChatEndpoint> endpoint, std::string id) : endpoint_(std::move(endpoint)), id_(std::move(id)) {}

  std::string id() const override { return id_; }

  void begin(const EpisodeContext&) override { history_.clear(); }

  AgentTurn next(const Observation& obs) override {
    ChatMessage msg{"user", render_observation(obs), {}};
    if (obs.result && obs.result->image_png) msg.images_png.push_back(*obs.result->image_png);
    history_.push_back(std::move(msg));

    std::string problem;
    for (int attempt = 0; attempt < 2; ++attempt) {
      const std::string reply = endpoint_->complete(history_);
      history_.push_back({"assistant", reply, {}});
      try {
        return parse_reply(reply);
      } catch (const Error& e) {
        if (e.code() != Errc::ParseFailure) throw;
        problem = e.message();
      }
      if (attempt == 0) history_.push_back({"user", render_repair(problem), {}});
    }
    return MalformedTurn{"ParseFailure: " + problem};
  }

 private:
  std::shared_ptr<ChatEndpoint> endpoint_;
  std::string id_;
  std::vector<ChatMessage> history_;
};

}  // namespace

std::unique_ptr<Agent> external_agent(std::shared_ptr<ChatEndpoint> endpoint, std::string agent_id) {
  return std::make_unique<ExternalAgent>(std::move(endpoint), std::move(agent_id));
}

}  // namespace voxagent::runtime
