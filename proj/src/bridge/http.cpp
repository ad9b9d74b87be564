#include <regex>
#include <thread>

#include "httplib.h"
#include "voxagent/bridge/client.hpp"
#include "voxagent/error.hpp"

namespace voxagent::bridge {

using nlohmann::json;

// ---- local client ----------------------------------------------------------

std::string LocalBridgeClient::open_session(const std::string& study_id, Track track, int budget) {
  return backend_.open_session(study_id, TrackPolicy::for_track(track, budget));
}

ToolResult LocalBridgeClient::invoke(const ToolCall& call) { return backend_.invoke(call); }

json LocalBridgeClient::state(const std::string& session_id) { return backend_.state(session_id); }

void LocalBridgeClient::close_session(const std::string& session_id) { backend_.close_session(session_id); }

// ---- server ----------------------------------------------------------------

namespace {

json envelope(std::string_view status) { return {{"protocol", kProtocolVersion}, {"status", status}}; }

void reply(httplib::Response& res, const json& body, int http_status = 200) {
  res.status = http_status;
  res.set_content(canonical(body), "application/json");
}

void reply_error(httplib::Response& res, Status status, const std::string& reason, const std::string& message,
                 int http_status) {
  json body = envelope(status_tag(status));
  body["error"] = {{"reason", reason}, {"message", message}};
  reply(res, body, http_status);
}

int http_status_for(Status s) {
  switch (s) {
    case Status::BadSession: return 404;
    case Status::BadArgs: return 400;
    default: return 500;
  }
}

}  // namespace

struct BridgeServer::Impl {
  explicit Impl(ViewerBackend& b) : backend(b) {}

  ViewerBackend& backend;
  httplib::Server server;
  std::thread thread;
};

BridgeServer::BridgeServer(ViewerBackend& backend) : impl_(std::make_unique<Impl>(backend)) {
  auto& srv = impl_->server;
  ViewerBackend& be = backend;

  srv.Post("/session", [&be](const httplib::Request& req, httplib::Response& res) {
    try {
      const json body = json::parse(req.body);
      const auto track = parse_track(body.at("track").get<std::string>());
      const int budget = body.value("budget", kDefaultToolBudget);
      const std::string id = be.open_session(body.at("study_id").get<std::string>(), TrackPolicy::for_track(track, budget));
      json out = envelope("OK");
      out["session_id"] = id;
      reply(res, out);
    } catch (const json::exception& e) {
      reply_error(res, Status::BadArgs, "BadArgs", e.what(), 400);
    } catch (const Error& e) {
      const Status s = status_for(e.code());
      reply_error(res, s, std::string(to_string(e.code())), e.message(), http_status_for(s));
    }
  });

  srv.Post(R"(/session/([^/]+)/invoke)", [&be](const httplib::Request& req, httplib::Response& res) {
    ToolCall call;
    call.session_id = req.matches[1];
    try {
      const json body = json::parse(req.body);
      call.call_id = body.at("call_id").get<std::int64_t>();
      call.tool = body.at("tool").get<std::string>();
      call.args = body.value("args", json::object());
    } catch (const json::exception& e) {
      reply_error(res, Status::BadArgs, "BadArgs", std::string("malformed invoke body: ") + e.what(), 400);
      return;
    }
    reply(res, result_to_wire(be.invoke(call)));
  });

  srv.Get(R"(/session/([^/]+)/state)", [&be](const httplib::Request& req, httplib::Response& res) {
    try {
      json out = envelope("OK");
      const json st = be.state(req.matches[1]);
      out["state"] = st["state"];
      out["state_digest"] = st["state_digest"];
      reply(res, out);
    } catch (const Error& e) {
      reply_error(res, status_for(e.code()), std::string(to_string(e.code())), e.message(), 404);
    }
  });

  srv.Delete(R"(/session/([^/]+))", [&be](const httplib::Request& req, httplib::Response& res) {
    try {
      be.close_session(req.matches[1]);
      reply(res, envelope("OK"));
    } catch (const Error& e) {
      reply_error(res, status_for(e.code()), std::string(to_string(e.code())), e.message(), 404);
    }
  });

  srv.Get(R"(/catalog/([AB]))", [](const httplib::Request& req, httplib::Response& res) {
    json tools = json::array();
    for (const auto& t : catalog(TrackPolicy::for_track(parse_track(req.matches[1].str())))) tools.push_back(t.to_json());
    json out = envelope("OK");
    out["tools"] = tools;
    reply(res, out);
  });
}

BridgeServer::~BridgeServer() { stop(); }

int BridgeServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw Error(Errc::Io, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void BridgeServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void BridgeServer::run() { impl_->server.listen_after_bind(); }

void BridgeServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

// ---- HTTP client -----------------------------------------------------------

HttpBridgeClient::HttpBridgeClient(std::string host, int port, int timeout_s)
    : host_(std::move(host)), port_(port), timeout_s_(timeout_s) {}

std::unique_ptr<HttpBridgeClient> HttpBridgeClient::from_url(const std::string& url) {
  static const std::regex re(R"(^(?:http://)?([^:/]+):(\d+)/?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw Error(Errc::BadArgs, "bridge url must look like http://host:port");
  return std::make_unique<HttpBridgeClient>(m[1].str(), std::stoi(m[2].str()));
}

json HttpBridgeClient::request(const std::string& method, const std::string& path, const json* body) {
  httplib::Client cli(host_, port_);
  cli.set_connection_timeout(timeout_s_, 0);
  cli.set_read_timeout(timeout_s_, 0);
  cli.set_write_timeout(timeout_s_, 0);
  httplib::Result res;
  if (method == "POST") {
    res = cli.Post(path, body ? canonical(*body) : std::string("{}"), "application/json");
  } else if (method == "GET") {
    res = cli.Get(path);
  } else {
    res = cli.Delete(path);
  }
  if (!res) {
    throw Error(Errc::BridgeUnreachable,
                "bridge at " + host_ + ":" + std::to_string(port_) + " unreachable: " + httplib::to_string(res.error()));
  }
  json out;
  try {
    out = json::parse(res->body);
  } catch (const json::exception&) {
    throw Error(Errc::BridgeUnreachable, "bridge returned a non-JSON body (HTTP " + std::to_string(res->status) + ")");
  }
  if (out.value("protocol", "") != kProtocolVersion) {
    throw Error(Errc::BridgeUnreachable, "bridge speaks an unexpected protocol version");
  }
  return out;
}

namespace {

[[noreturn]] void raise_from(const json& body) {
  const Status s = parse_status(body.at("status").get<std::string>());
  const json err = body.value("error", json::object());
  const std::string reason = err.value("reason", "");
  const std::string message = err.value("message", "");
  if (reason == "UnknownStudy") throw Error(Errc::UnknownStudy, message);
  switch (s) {
    case Status::BadSession: throw Error(Errc::BadSession, message);
    case Status::BadArgs: throw Error(Errc::BadArgs, message);
    default: throw Error(Errc::BridgeUnreachable, message);
  }
}

}  // namespace

std::string HttpBridgeClient::open_session(const std::string& study_id, Track track, int budget) {
  const json body{{"study_id", study_id}, {"track", track_tag(track)}, {"budget", budget}};
  const json out = request("POST", "/session", &body);
  if (out.value("status", "") != "OK") raise_from(out);
  return out.at("session_id").get<std::string>();
}

ToolResult HttpBridgeClient::invoke(const ToolCall& call) {
  const json body = call_to_wire(call);
  return result_from_wire(request("POST", "/session/" + call.session_id + "/invoke", &body));
}

json HttpBridgeClient::state(const std::string& session_id) {
  const json out = request("GET", "/session/" + session_id + "/state", nullptr);
  if (out.value("status", "") != "OK") raise_from(out);
  return {{"state", out.at("state")}, {"state_digest", out.at("state_digest")}};
}

void HttpBridgeClient::close_session(const std::string& session_id) {
  const json out = request("DELETE", "/session/" + session_id, nullptr);
  if (out.value("status", "") != "OK") raise_from(out);
}

}  // namespace voxagent::bridge
