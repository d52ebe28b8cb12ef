#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "iadet/geometry.hpp"

namespace iadet {

struct EvalSample {
  std::string image_id;
  std::vector<ScoredBox> predictions;
  std::vector<Box> ground_truths;
};

struct PrPoint {
  double recall;
  double precision;
  double score;  // lowest score admitted at this operating point
};

/// One point per distinct score, ordered by descending score, so recall is
/// non-decreasing along the list.
struct PrCurve {
  std::vector<PrPoint> points;
  std::size_t positives = 0;
};

PrCurve precision_recall_curve(std::span<const EvalSample> samples,
                               double iou_threshold = kDefaultIouThreshold);

/// All-points interpolated AP: area under the precision envelope.
double average_precision(const PrCurve& curve);

/// Pools predictions across images into one ranked list. Equal scores form a
/// single operating point. Throws kNoPositives when there is no ground truth
/// and kInvalidArgument on duplicate image ids.
double average_precision(std::span<const EvalSample> samples,
                         double iou_threshold = kDefaultIouThreshold);

/// ap_during / ap_reference. Throws kUndefinedRatio when the reference is not
/// positive.
double performance_ratio(double ap_during, double ap_reference);

}  // namespace iadet
