#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iadet/geometry.hpp"
#include "iadet/store.hpp"

namespace iadet {

class WorkerClient;

enum class ModelSource { kBuiltIn, kExternal };

struct TrainingMeta {
  std::uint64_t epochs = 0;
  std::uint64_t snapshot_version = 0;
  std::uint64_t labeled_count = 0;
  std::optional<double> last_loss;

  friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

struct ModelVersion {
  std::uint64_t version = 0;
  double created_at = 0.0;
  ModelSource source = ModelSource::kBuiltIn;
  std::optional<TrainingMeta> training_meta;

  std::uint64_t labeled_count() const noexcept {
    return training_meta ? training_meta->labeled_count : 0;
  }

  friend bool operator==(const ModelVersion&, const ModelVersion&) = default;
};

struct Prediction {
  std::string image_id;
  std::uint64_t model_version = 0;
  std::vector<ScoredBox> raw_boxes;
  std::vector<ScoredBox> kept_boxes;
  bool degraded = false;  // no assistance could be produced
};

/// Highest score a box may need to be kept; lower when nothing reaches it.
inline constexpr double kKeepScoreCap = 0.7;

/// Keeps boxes scoring at least min(0.7, best score), in input order. Never
/// empties a non-empty list.
std::vector<ScoredBox> postprocess(std::span<const ScoredBox> raw_boxes);

/// Learning-curve stand-in for a trained detector. Recall saturates as
/// p_max * (1 - exp(-labeled / tau)); spurious boxes per image are Poisson with
/// mean fp_rate * exp(-labeled / tau).
struct SyntheticDetectorConfig {
  double p_max = 0.95;
  double tau = 40.0;
  double jitter_sigma = 0.2;   // corner noise, fraction of the box side
  double fp_rate = 1.0;
  double score_gap = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

double expected_recall(std::uint64_t labeled_count, const SyntheticDetectorConfig& config);
double expected_spurious(std::uint64_t labeled_count, const SyntheticDetectorConfig& config);

/// Deterministic in (config.seed, model_version, record.id, labeled_count).
/// Throws kMissingGroundTruth when the record carries no ground truth.
Prediction synthetic_predict(const ImageRecord& record, std::uint64_t labeled_count,
                             const SyntheticDetectorConfig& config,
                             std::uint64_t model_version);

/// Asks a trainer worker for boxes and post-processes them. Any transport or
/// protocol failure yields a degraded, empty prediction instead of throwing.
Prediction external_predict(const ImageRecord& record, WorkerClient& worker);

class Detector {
 public:
  virtual ~Detector() = default;
  virtual Prediction predict(const ImageRecord& record, const ModelVersion& model) = 0;
};

class SyntheticDetector final : public Detector {
 public:
  explicit SyntheticDetector(SyntheticDetectorConfig config);
  Prediction predict(const ImageRecord& record, const ModelVersion& model) override;
  const SyntheticDetectorConfig& config() const noexcept { return config_; }

 private:
  SyntheticDetectorConfig config_;
};

enum class OracleMode {
  kPerfect,   // ground truth, score 1
  kSpurious,  // one tiny box matching nothing
  kSilent,    // no boxes at all
};

/// Fixed-quality detectors with closed-form costs, used for calibration runs.
class OracleDetector final : public Detector {
 public:
  explicit OracleDetector(OracleMode mode, double iou_threshold = kDefaultIouThreshold)
      : mode_(mode), iou_threshold_(iou_threshold) {}
  Prediction predict(const ImageRecord& record, const ModelVersion& model) override;

 private:
  OracleMode mode_;
  double iou_threshold_;
};

class ExternalDetector final : public Detector {
 public:
  explicit ExternalDetector(std::shared_ptr<WorkerClient> worker) : worker_(std::move(worker)) {}
  Prediction predict(const ImageRecord& record, const ModelVersion& model) override;

 private:
  std::shared_ptr<WorkerClient> worker_;
};

}  // namespace iadet
