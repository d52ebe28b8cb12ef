#include "iadet/metrics.hpp"

#include <algorithm>
#include <unordered_set>

#include "iadet/error.hpp"

namespace iadet {
namespace {

struct RankedDetection {
  double score;
  bool true_positive;
};

}  // namespace

PrCurve precision_recall_curve(std::span<const EvalSample> samples,
                               double iou_threshold) {
  PrCurve curve;
  std::unordered_set<std::string> ids;
  std::vector<RankedDetection> ranked;
  for (const EvalSample& sample : samples) {
    if (!ids.insert(sample.image_id).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate image id in evaluation set: " + sample.image_id);
    }
    curve.positives += sample.ground_truths.size();
    const MatchResult match =
        match_detections(sample.predictions, sample.ground_truths, iou_threshold);
    std::vector<bool> hit(sample.predictions.size(), false);
    for (const MatchPair& pair : match.pairs) hit[pair.prediction] = true;
    for (std::size_t i = 0; i < sample.predictions.size(); ++i) {
      ranked.push_back({sample.predictions[i].score, hit[i]});
    }
  }
  if (curve.positives == 0) {
    throw Error(ErrorCode::kNoPositives, "no positives: evaluation set has no ground truth");
  }

  std::sort(ranked.begin(), ranked.end(),
            [](const RankedDetection& a, const RankedDetection& b) { return a.score > b.score; });

  std::size_t tp = 0;
  std::size_t seen = 0;
  const double positives = static_cast<double>(curve.positives);
  for (std::size_t i = 0; i < ranked.size();) {
    const double score = ranked[i].score;
    for (; i < ranked.size() && ranked[i].score == score; ++i) {
      ++seen;
      if (ranked[i].true_positive) ++tp;
    }
    curve.points.push_back({static_cast<double>(tp) / positives,
                            static_cast<double>(tp) / static_cast<double>(seen), score});
  }
  return curve;
}

double average_precision(const PrCurve& curve) {
  // Walk backwards keeping the running precision maximum (the envelope), then
  // integrate the step function over recall.
  const auto& pts = curve.points;
  std::vector<double> envelope(pts.size());
  double best = 0.0;
  for (std::size_t i = pts.size(); i-- > 0;) {
    best = std::max(best, pts[i].precision);
    envelope[i] = best;
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    ap += (pts[i].recall - prev_recall) * envelope[i];
    prev_recall = pts[i].recall;
  }
  return std::clamp(ap, 0.0, 1.0);
}

double average_precision(std::span<const EvalSample> samples, double iou_threshold) {
  return average_precision(precision_recall_curve(samples, iou_threshold));
}

double performance_ratio(double ap_during, double ap_reference) {
  if (!(ap_reference > 0.0)) {
    throw Error(ErrorCode::kUndefinedRatio, "undefined ratio: reference AP must be positive");
  }
  return ap_during / ap_reference;
}

}  // namespace iadet
