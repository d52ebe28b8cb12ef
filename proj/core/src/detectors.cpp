#include "iadet/detectors.hpp"

#include <algorithm>
#include <cmath>

#include "iadet/error.hpp"
#include "iadet/protocol.hpp"
#include "iadet/random.hpp"

namespace iadet {
namespace {

// True boxes score uniformly in [0.7, 1); spurious boxes score_gap lower.
constexpr double kTrueScoreLow = 0.7;
constexpr double kTrueScoreHigh = 1.0;

double draw_true_score(DeterministicStream& rng) {
  return rng.uniform(kTrueScoreLow, kTrueScoreHigh);
}

Box jittered(const Box& gt, double sigma, double width, double height,
             DeterministicStream& rng) {
  const double sx = sigma * gt.width();
  const double sy = sigma * gt.height();
  double x0 = gt.x_min() + rng.normal(0.0, sx);
  double y0 = gt.y_min() + rng.normal(0.0, sy);
  double x1 = gt.x_max() + rng.normal(0.0, sx);
  double y1 = gt.y_max() + rng.normal(0.0, sy);
  if (x1 < x0) std::swap(x0, x1);
  if (y1 < y0) std::swap(y0, y1);
  if (width > 0 && height > 0) {
    x0 = std::clamp(x0, 0.0, width);
    x1 = std::clamp(x1, 0.0, width);
    y0 = std::clamp(y0, 0.0, height);
    y1 = std::clamp(y1, 0.0, height);
  }
  if (!(x1 > x0) || !(y1 > y0)) return gt;
  return Box(x0, y0, x1, y1);
}

}  // namespace

std::vector<ScoredBox> postprocess(std::span<const ScoredBox> raw_boxes) {
  if (raw_boxes.empty()) return {};
  double best = 0.0;
  for (const ScoredBox& b : raw_boxes) best = std::max(best, b.score);
  const double threshold = std::min(kKeepScoreCap, best);
  std::vector<ScoredBox> kept;
  std::copy_if(raw_boxes.begin(), raw_boxes.end(), std::back_inserter(kept),
               [&](const ScoredBox& b) { return b.score >= threshold; });
  return kept;
}

void SyntheticDetectorConfig::validate() const {
  if (!(p_max >= 0.0 && p_max <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "p_max must lie in [0, 1]");
  }
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tau must be positive");
  if (!(jitter_sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "jitter_sigma must be non-negative");
  }
  if (!(fp_rate >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "fp_rate must be non-negative");
  if (!(score_gap >= 0.0 && score_gap <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "score_gap must lie in [0, 1]");
  }
}

double expected_recall(std::uint64_t labeled_count, const SyntheticDetectorConfig& config) {
  return config.p_max * (1.0 - std::exp(-static_cast<double>(labeled_count) / config.tau));
}

double expected_spurious(std::uint64_t labeled_count, const SyntheticDetectorConfig& config) {
  return config.fp_rate * std::exp(-static_cast<double>(labeled_count) / config.tau);
}

Prediction synthetic_predict(const ImageRecord& record, std::uint64_t labeled_count,
                             const SyntheticDetectorConfig& config,
                             std::uint64_t model_version) {
  if (!record.gt_boxes) {
    throw Error(ErrorCode::kMissingGroundTruth,
                "oracle detector needs ground truth for image " + record.id);
  }
  DeterministicStream rng(stream_key(config.seed, model_version, record.id));
  const double recall = expected_recall(labeled_count, config);
  const double w = record.width;
  const double h = record.height;

  Prediction pred;
  pred.image_id = record.id;
  pred.model_version = model_version;
  for (const Box& gt : *record.gt_boxes) {
    const bool found = rng.uniform() < recall;
    const Box box = jittered(gt, config.jitter_sigma, w, h, rng);
    const double score = draw_true_score(rng);
    if (found) pred.raw_boxes.emplace_back(box, score);
  }

  const std::uint64_t spurious = rng.poisson(expected_spurious(labeled_count, config));
  for (std::uint64_t i = 0; i < spurious && w > 0 && h > 0; ++i) {
    const double bw = rng.uniform(0.1, 0.4) * w;
    const double bh = rng.uniform(0.1, 0.4) * h;
    const double x0 = rng.uniform(0.0, w - bw);
    const double y0 = rng.uniform(0.0, h - bh);
    const double score = std::clamp(draw_true_score(rng) - config.score_gap, 0.0, 1.0);
    pred.raw_boxes.emplace_back(Box(x0, y0, x0 + bw, y0 + bh), score);
  }
  pred.kept_boxes = postprocess(pred.raw_boxes);
  return pred;
}

Prediction external_predict(const ImageRecord& record, WorkerClient& worker) {
  Prediction pred;
  pred.image_id = record.id;
  try {
    PredictResponse response = worker.predict({record.path, record.id});
    pred.model_version = response.model_version;
    pred.raw_boxes = std::move(response.boxes);
    pred.kept_boxes = postprocess(pred.raw_boxes);
  } catch (const Error&) {
    pred.raw_boxes.clear();
    pred.kept_boxes.clear();
    pred.degraded = true;
  }
  return pred;
}

SyntheticDetector::SyntheticDetector(SyntheticDetectorConfig config) : config_(config) {
  config_.validate();
}

Prediction SyntheticDetector::predict(const ImageRecord& record, const ModelVersion& model) {
  return synthetic_predict(record, model.labeled_count(), config_, model.version);
}

Prediction OracleDetector::predict(const ImageRecord& record, const ModelVersion& model) {
  if (!record.gt_boxes) {
    throw Error(ErrorCode::kMissingGroundTruth,
                "oracle detector needs ground truth for image " + record.id);
  }
  Prediction pred;
  pred.image_id = record.id;
  pred.model_version = model.version;
  switch (mode_) {
    case OracleMode::kPerfect:
      for (const Box& gt : *record.gt_boxes) pred.raw_boxes.emplace_back(gt, 1.0);
      break;
    case OracleMode::kSpurious: {
      // A unit box in whichever corner overlaps the ground truth least.
      const double w = std::max(record.width, 2);
      const double h = std::max(record.height, 2);
      const Box corners[] = {Box(0, 0, 1, 1), Box(w - 1, 0, w, 1), Box(0, h - 1, 1, h),
                             Box(w - 1, h - 1, w, h)};
      for (const Box& candidate : corners) {
        const bool clear = std::none_of(
            record.gt_boxes->begin(), record.gt_boxes->end(),
            [&](const Box& gt) { return iou(candidate, gt) >= iou_threshold_; });
        if (clear) {
          pred.raw_boxes.emplace_back(candidate, 0.5);
          break;
        }
      }
      if (pred.raw_boxes.empty()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "cannot place a spurious box on image " + record.id);
      }
      break;
    }
    case OracleMode::kSilent:
      break;
  }
  pred.kept_boxes = postprocess(pred.raw_boxes);
  return pred;
}

Prediction ExternalDetector::predict(const ImageRecord& record, const ModelVersion&) {
  return external_predict(record, *worker_);
}

}  // namespace iadet
