#pragma once

#include <memory>
#include <string>

#include "voxagent/bridge/backend.hpp"
#include "voxagent/bridge/protocol.hpp"

namespace voxagent::bridge {

/// Runtime-side view of a bridge. Implementations are safe to share across
/// episode workers.
class BridgeClient {
 public:
  virtual ~BridgeClient() = default;

  /// Throws UnknownStudy / BadArgs, or BridgeUnreachable on transport failure.
  virtual std::string open_session(const std::string& study_id, Track track, int budget) = 0;
  /// Protocol failures come back as results; transport failure throws BridgeUnreachable.
  virtual ToolResult invoke(const ToolCall& call) = 0;
  virtual nlohmann::json state(const std::string& session_id) = 0;
  /// Throws BadSession when the session is not open.
  virtual void close_session(const std::string& session_id) = 0;
};

/// In-process client (the embedded viewer).
class LocalBridgeClient final : public BridgeClient {
 public:
  explicit LocalBridgeClient(ViewerBackend& backend) : backend_(backend) {}

  std::string open_session(const std::string& study_id, Track track, int budget) override;
  ToolResult invoke(const ToolCall& call) override;
  nlohmann::json state(const std::string& session_id) override;
  void close_session(const std::string& session_id) override;

 private:
  ViewerBackend& backend_;
};

/// HTTP/1.1 client for a running bridge server.
class HttpBridgeClient final : public BridgeClient {
 public:
  HttpBridgeClient(std::string host, int port, int timeout_s = 30);
  /// Parses "http://host:port" or "host:port".
  static std::unique_ptr<HttpBridgeClient> from_url(const std::string& url);

  std::string open_session(const std::string& study_id, Track track, int budget) override;
  ToolResult invoke(const ToolCall& call) override;
  nlohmann::json state(const std::string& session_id) override;
  void close_session(const std::string& session_id) override;

 private:
  nlohmann::json request(const std::string& method, const std::string& path, const nlohmann::json* body);

  std::string host_;
  int port_;
  int timeout_s_;
};

/// Serves the bridge endpoints over HTTP:
///   POST   /session                 {"study_id","track","budget"}
///   POST   /session/{id}/invoke     {"call_id","tool","args"}
///   GET    /session/{id}/state
///   DELETE /session/{id}
///   GET    /catalog/{track}
class BridgeServer {
 public:
  explicit BridgeServer(ViewerBackend& backend);
  ~BridgeServer();
  BridgeServer(const BridgeServer&) = delete;
  BridgeServer& operator=(const BridgeServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port (throws Io).
  int bind(const std::string& host, int port);
  /// Serves on a background thread.
  void start();
  /// Serves on the calling thread until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace voxagent::bridge
