#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>

namespace iadet {

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

using HttpHandler =
    std::function<HttpResponse(std::string_view method, std::string_view path,
                               std::string_view body)>;

/// {"error": {"code": ..., "message": ...}} with the given status.
HttpResponse error_response(int status, std::string_view code, std::string_view message);

/// Maps an Error code onto its HTTP status and error body.
HttpResponse error_response(const std::exception& error);

/// Thin httplib wrapper routing every request to one handler.
class HttpServer {
 public:
  explicit HttpServer(HttpHandler handler);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds now, so a port already in use fails here with kUnavailable. Port 0
  /// picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);

  /// Serves on a background thread until stop().
  void start();
  /// Serves on the calling thread until stop() from elsewhere.
  void serve();
  void stop();

  int port() const noexcept { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace iadet
