#include "iadet/worker.hpp"

#include <filesystem>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "iadet/error.hpp"

namespace iadet {

SyntheticWorker::SyntheticWorker(std::vector<ImageRecord> records, SyntheticWorkerConfig config)
    : config_(std::move(config)) {
  config_.detector.validate();
  for (ImageRecord& r : records) {
    if (!r.gt_boxes) {
      throw Error(ErrorCode::kMissingGroundTruth, "worker needs ground truth for " + r.id);
    }
    std::string id = r.id;
    records_.emplace(std::move(id), std::move(r));
  }
}

PredictResponse SyntheticWorker::predict(const PredictRequest& request) const {
  auto it = records_.find(request.image_id);
  if (it == records_.end()) {
    it = records_.find(std::filesystem::path(request.image_path).stem().string());
  }
  if (it == records_.end()) {
    throw Error(ErrorCode::kNotFound, "worker knows no image '" + request.image_id + "'");
  }
  std::uint64_t version = 0;
  std::uint64_t labeled = 0;
  {
    std::lock_guard lock(mutex_);
    version = status_.model_version;
    labeled = labeled_count_;
  }
  PredictResponse out;
  out.model_version = version;
  if (config_.mode == WorkerMode::kEcho) {
    for (const Box& b : *it->second.gt_boxes) out.boxes.emplace_back(b, 1.0);
  } else {
    out.boxes = synthetic_predict(it->second, labeled, config_.detector, version).raw_boxes;
  }
  return out;
}

WorkerStatus SyntheticWorker::status() const {
  std::lock_guard lock(mutex_);
  return status_;
}

WorkerStatus SyntheticWorker::train_on(const AnnotationSnapshot& snapshot) {
  std::lock_guard lock(mutex_);
  ++status_.epochs;
  const std::uint64_t labeled = snapshot.records.size();
  if (labeled != labeled_count_) {
    labeled_count_ = labeled;
    ++status_.model_version;
  }
  status_.last_loss = config_.mode == WorkerMode::kEcho
                          ? 0.0
                          : 1.0 - expected_recall(labeled_count_, config_.detector);
  return status_;
}

WorkerStatus SyntheticWorker::train_once() {
  if (config_.core_url.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "worker has no core url to pull from");
  }
  httplib::Client client(config_.core_url);
  client.set_connection_timeout(2, 0);
  client.set_read_timeout(5, 0);
  auto res = client.Get("/snapshot");
  if (!res || res->status != 200) {
    throw Error(ErrorCode::kUnavailable, "cannot pull snapshot from " + config_.core_url);
  }
  const WorkerStatus before = status();
  const WorkerStatus after = train_on(parse_annotation_file(res->body));
  if (config_.publish && after.model_version != before.model_version) {
    auto posted = client.Post("/model-versions", to_wire(after), "application/json");
    if (!posted || posted->status != 200) {
      spdlog::warn("publishing version {} to {} failed", after.model_version, config_.core_url);
    }
  }
  return after;
}

HttpResponse SyntheticWorker::handle(std::string_view method, std::string_view path,
                                     std::string_view body) {
  try {
    if (method == "POST" && path == "/predict") {
      return {200, "application/json", to_wire(predict(parse_predict_request(body)))};
    }
    if (method == "GET" && path == "/status") {
      return {200, "application/json", to_wire(status())};
    }
    return error_response(404, "not_found", std::string(path) + " is not a worker endpoint");
  } catch (const std::exception& e) {
    return error_response(e);
  }
}

}  // namespace iadet
