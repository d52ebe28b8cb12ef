#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iadet/clock.hpp"
#include "iadet/detectors.hpp"
#include "iadet/http.hpp"
#include "iadet/orchestrator.hpp"
#include "iadet/selection.hpp"
#include "iadet/store.hpp"

namespace iadet {

struct StatusView {
  std::uint64_t model_version = 0;
  std::optional<std::uint64_t> epochs;
  std::optional<double> last_loss;
  std::size_t labeled = 0;
  std::size_t total = 0;
  StrategyKind strategy = StrategyKind::kRandom;
  double elapsed = 0.0;
};

std::string to_json(const StatusView& status);

/// Endpoints, all JSON unless noted:
///   GET  /images                      [{id, path, width, height, labeled}]
///   GET  /images/{id}/file            image bytes
///   GET  /images/{id}/predictions     kept boxes of the latest model, or the
///                                     user's boxes with user_precedence=true
///   GET  /images/{id}/annotations     {image_id, labeled, boxes}
///   PUT  /images/{id}/annotations     body {"boxes": [[x0, y0, x1, y1], ...]}
///   GET  /status                      StatusView
///   GET  /snapshot                    annotation file of labeled images
///   POST /model-versions              worker status body
///   GET  /next                        {image_id} or {image_id: null, done: true}
///
/// PUT replaces the image's boxes, so a retried request leaves the same state
/// (last write wins). Ground truth never leaves the store through this API.
class AnnotationService {
 public:
  /// The detector may be null, in which case predictions come back degraded.
  AnnotationService(AnnotationStore& store, std::filesystem::path image_directory,
                    Detector* detector, ModelRegistry& registry, StrategyKind strategy,
                    std::uint64_t seed, const Clock& clock);

  HttpResponse handle(std::string_view method, std::string_view path, std::string_view body);

  StatusView status() const;

  /// Called after every committed PUT, e.g. to wake a background trainer.
  void on_commit(std::function<void()> callback) { on_commit_ = std::move(callback); }

 private:
  HttpResponse list_images() const;
  HttpResponse image_file(std::string_view id) const;
  HttpResponse predictions(std::string_view id);
  HttpResponse get_annotations(std::string_view id) const;
  HttpResponse put_annotations(std::string_view id, std::string_view body);
  HttpResponse snapshot() const;
  HttpResponse publish_model(std::string_view body);
  HttpResponse next() const;

  ImageRecord require(std::string_view id) const;

  AnnotationStore& store_;
  std::filesystem::path image_directory_;
  Detector* detector_;
  ModelRegistry& registry_;
  StrategyKind strategy_;
  std::vector<std::string> order_;
  const Clock& clock_;
  std::function<void()> on_commit_;
};

}  // namespace iadet
