#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace iadet {

inline constexpr double kDefaultIouThreshold = 0.5;

/// Axis-aligned rectangle in continuous pixel coordinates (corner convention,
/// no +1 correction). Construction rejects non-finite or zero-area input.
class Box {
 public:
  Box(double x_min, double y_min, double x_max, double y_max);

  double x_min() const noexcept { return x_min_; }
  double y_min() const noexcept { return y_min_; }
  double x_max() const noexcept { return x_max_; }
  double y_max() const noexcept { return y_max_; }

  double width() const noexcept { return x_max_ - x_min_; }
  double height() const noexcept { return y_max_ - y_min_; }
  double area() const noexcept { return width() * height(); }

  Box translated(double dx, double dy) const;

  /// Intersection with [0,width]x[0,height]. Throws if nothing with positive
  /// area is left.
  Box clamped(double image_width, double image_height) const;

  friend bool operator==(const Box&, const Box&) = default;

 private:
  double x_min_;
  double y_min_;
  double x_max_;
  double y_max_;
};

struct ScoredBox {
  ScoredBox(Box b, double s);

  Box box;
  double score;

  friend bool operator==(const ScoredBox&, const ScoredBox&) = default;
};

double iou(const Box& a, const Box& b) noexcept;

struct MatchPair {
  std::size_t prediction;
  std::size_t ground_truth;
  double iou;
};

struct MatchResult {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<MatchPair> pairs;
};

/// Greedy matching: predictions are visited by descending score (ties by
/// lower index) and each takes the unmatched ground truth with the highest
/// IoU (ties by lower index) when that IoU reaches the threshold.
MatchResult match_detections(std::span<const ScoredBox> predictions,
                             std::span<const Box> ground_truths,
                             double iou_threshold = kDefaultIouThreshold);

}  // namespace iadet
