#include "iadet/http.hpp"

#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "iadet/error.hpp"

namespace iadet {

HttpResponse error_response(int status, std::string_view code, std::string_view message) {
  nlohmann::ordered_json j;
  j["error"] = {{"code", code}, {"message", message}};
  return {status, "application/json", j.dump()};
}

HttpResponse error_response(const std::exception& error) {
  const auto* e = dynamic_cast<const Error*>(&error);
  if (e == nullptr) return error_response(500, "internal", error.what());
  int status = 500;
  switch (e->code()) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidBox:
    case ErrorCode::kParse:
    case ErrorCode::kUnknownClass:
      status = 400;
      break;
    case ErrorCode::kNotFound:
      status = 404;
      break;
    case ErrorCode::kNonMonotoneVersion:
    case ErrorCode::kAlreadyLabeled:
    case ErrorCode::kAnnotationComplete:
      status = 409;
      break;
    case ErrorCode::kMissingGroundTruth:
    case ErrorCode::kNoPositives:
    case ErrorCode::kUndefinedRatio:
    case ErrorCode::kEmptyEvalSplit:
    case ErrorCode::kWindowTooLarge:
      status = 422;
      break;
    case ErrorCode::kUnavailable:
      status = 503;
      break;
    case ErrorCode::kIo:
      status = 500;
      break;
  }
  return error_response(status, to_string(e->code()), e->what());
}

struct HttpServer::Impl {
  httplib::Server server;
  std::thread thread;
};

HttpServer::HttpServer(HttpHandler handler) : impl_(std::make_unique<Impl>()) {
  auto route = [handler = std::move(handler)](const httplib::Request& req, httplib::Response& res) {
    HttpResponse out;
    try {
      out = handler(req.method, req.path, req.body);
    } catch (const std::exception& e) {
      out = error_response(e);
    }
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  impl_->server.Get(".*", route);
  impl_->server.Put(".*", route);
  impl_->server.Post(".*", route);
  impl_->server.Delete(".*", route);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
  } else {
    port_ = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) {
    throw Error(ErrorCode::kUnavailable,
                "cannot bind " + host + ":" + std::to_string(port) + " (port in use?)");
  }
  return port_;
}

void HttpServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace iadet
