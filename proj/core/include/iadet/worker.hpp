#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "iadet/detectors.hpp"
#include "iadet/http.hpp"
#include "iadet/protocol.hpp"
#include "iadet/store.hpp"

namespace iadet {

enum class WorkerMode {
  kEcho,           // returns ground truth, score 1
  kLearningCurve,  // synthetic detector keyed to the labeled images it has pulled
};

struct SyntheticWorkerConfig {
  WorkerMode mode = WorkerMode::kLearningCurve;
  SyntheticDetectorConfig detector;
  std::string core_url;  // where /snapshot is pulled from; empty disables training
  bool publish = true;   // POST /model-versions after each new version
};

/// Reference trainer worker speaking the wire protocol. It knows the ground
/// truth of every image it may be asked about and "trains" by pulling the
/// core's snapshot.
class SyntheticWorker {
 public:
  SyntheticWorker(std::vector<ImageRecord> records, SyntheticWorkerConfig config);

  /// Throws kNotFound for unknown images.
  PredictResponse predict(const PredictRequest& request) const;
  WorkerStatus status() const;

  /// One epoch on a snapshot. A new version appears when the labeled count
  /// changed.
  WorkerStatus train_on(const AnnotationSnapshot& snapshot);

  /// Pulls {core}/snapshot and trains on it; publishes when configured.
  /// Throws kUnavailable when the core cannot be reached.
  WorkerStatus train_once();

  HttpResponse handle(std::string_view method, std::string_view path, std::string_view body);

 private:
  std::unordered_map<std::string, ImageRecord> records_;
  SyntheticWorkerConfig config_;
  mutable std::mutex mutex_;
  WorkerStatus status_;
  std::uint64_t labeled_count_ = 0;
};

}  // namespace iadet
