#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "proc3d/service.hpp"

namespace proc3d {

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// REST routing without any transport:
///   POST /sessions, GET /sessions, GET /sessions/{id}, PATCH /sessions/{id}/params,
///   POST /sessions/{id}/edits, GET /sessions/{id}/mesh.obj, GET /health.
HttpReply route_request(EditService& service, std::string_view method, std::string_view target, std::string_view body);

/// HTTP and WebSocket on one port. `/sessions/{id}/stream` upgrades to a WebSocket that sends,
/// per revision, a JSON text message {"type":"revision","revision","params"} followed by a
/// binary mesh frame. When `token` is non-empty every request except OPTIONS and /health must
/// carry `Authorization: Bearer <token>`.
class HttpServer {
 public:
  HttpServer(EditService& service, const std::string& address, unsigned short port, std::string token = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Bound port (useful when constructed with port 0).
  unsigned short port() const;
  /// Serves on `threads` background threads.
  void start(std::size_t threads = 2);
  /// Serves on the calling thread until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace proc3d
