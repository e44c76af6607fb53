#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctxrec/engine.hpp"

namespace ctxrec {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

// Machine-readable error: HTTP status in {400, 404, 422, 500}.
struct ApiError {
  int status = 500;
  std::string code;
  std::string message;

  nlohmann::json to_json() const;
};

struct RouteSpec {
  std::string method;
  std::string path;  // OpenAPI-style template, e.g. /documents/{id}
  std::string summary;
  std::vector<std::string> query_params;
  std::vector<int> errors;
};

// Transport-independent JSON API over an Engine. Every response body is
// the serialised result of the matching library call.
class Api {
 public:
  explicit Api(std::shared_ptr<const Engine> engine) : engine_(std::move(engine)) {}

  ApiResponse handle(std::string_view method, std::string_view path,
                     const std::map<std::string, std::string>& params, std::string_view body) const;

  static const std::vector<RouteSpec>& routes();
  static nlohmann::json openapi_describe();

  const Engine& engine() const { return *engine_; }

 private:
  ApiResponse dispatch(std::string_view method, std::string_view path,
                       const std::map<std::string, std::string>& params, std::string_view body) const;

  std::shared_ptr<const Engine> engine_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  bool cors = true;
};

// HTTP front end on a background thread. The engine stays shared and
// read-only for the server's lifetime.
class HttpServer {
 public:
  HttpServer(std::shared_ptr<const Engine> engine, ServerOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and starts serving; returns the bound port.
  int start();
  // Binds and serves on the calling thread until stop().
  void run();
  void stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace ctxrec
