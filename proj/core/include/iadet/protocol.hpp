#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iadet/geometry.hpp"

namespace iadet {

// Trainer-worker wire protocol (HTTP, compact JSON bodies):
//   POST {worker}/predict        PredictRequest  -> PredictResponse
//   GET  {worker}/status                         -> WorkerStatus
//   POST {core}/model-versions   WorkerStatus    -> {"model_version": n}
//   GET  {core}/snapshot                         -> annotation file

struct PredictRequest {
  std::string image_path;
  std::string image_id;

  friend bool operator==(const PredictRequest&, const PredictRequest&) = default;
};

struct PredictResponse {
  std::uint64_t model_version = 0;
  std::vector<ScoredBox> boxes;

  friend bool operator==(const PredictResponse&, const PredictResponse&) = default;
};

struct WorkerStatus {
  std::uint64_t model_version = 0;
  std::uint64_t epochs = 0;
  std::optional<double> last_loss;

  friend bool operator==(const WorkerStatus&, const WorkerStatus&) = default;
};

std::string to_wire(const PredictRequest& request);
std::string to_wire(const PredictResponse& response);
std::string to_wire(const WorkerStatus& status);

// All parsers throw kParse on malformed bodies.
PredictRequest parse_predict_request(std::string_view body);
PredictResponse parse_predict_response(std::string_view body);
WorkerStatus parse_worker_status(std::string_view body);

struct WorkerEndpoint {
  std::string base_url;  // e.g. "http://127.0.0.1:8090"
  std::chrono::milliseconds timeout{2000};
};

/// Blocking client for one worker. Requests on one client are serialized.
/// Transport failures throw kUnavailable.
class WorkerClient {
 public:
  explicit WorkerClient(WorkerEndpoint endpoint);
  ~WorkerClient();

  WorkerClient(const WorkerClient&) = delete;
  WorkerClient& operator=(const WorkerClient&) = delete;

  PredictResponse predict(const PredictRequest& request);
  WorkerStatus status();

  const WorkerEndpoint& endpoint() const noexcept { return endpoint_; }

 private:
  struct Impl;
  WorkerEndpoint endpoint_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace iadet
