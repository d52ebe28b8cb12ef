#include <mutex>

#include <httplib.h>

#include "iadet/error.hpp"
#include "iadet/protocol.hpp"

namespace iadet {

struct WorkerClient::Impl {
  explicit Impl(const WorkerEndpoint& endpoint) : client(endpoint.base_url) {
    const auto ms = endpoint.timeout.count();
    const time_t sec = static_cast<time_t>(ms / 1000);
    const time_t usec = static_cast<time_t>((ms % 1000) * 1000);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
  }

  std::mutex mutex;
  httplib::Client client;
};

WorkerClient::WorkerClient(WorkerEndpoint endpoint)
    : endpoint_(std::move(endpoint)), impl_(std::make_unique<Impl>(endpoint_)) {}

WorkerClient::~WorkerClient() = default;

namespace {

std::string checked_body(const httplib::Result& res, std::string_view what) {
  if (!res) {
    throw Error(ErrorCode::kUnavailable,
                std::string(what) + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kUnavailable,
                std::string(what) + ": HTTP " + std::to_string(res->status));
  }
  return res->body;
}

}  // namespace

PredictResponse WorkerClient::predict(const PredictRequest& request) {
  std::lock_guard lock(impl_->mutex);
  auto res = impl_->client.Post("/predict", to_wire(request), "application/json");
  try {
    return parse_predict_response(checked_body(res, "worker /predict"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kUnavailable) throw;
    throw Error(ErrorCode::kUnavailable, e.what());
  }
}

WorkerStatus WorkerClient::status() {
  std::lock_guard lock(impl_->mutex);
  auto res = impl_->client.Get("/status");
  try {
    return parse_worker_status(checked_body(res, "worker /status"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kUnavailable) throw;
    throw Error(ErrorCode::kUnavailable, e.what());
  }
}

}  // namespace iadet
