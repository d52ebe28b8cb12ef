#include "iadet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "iadet/error.hpp"

namespace iadet {

Box::Box(double x_min, double y_min, double x_max, double y_max)
    : x_min_(x_min), y_min_(y_min), x_max_(x_max), y_max_(y_max) {
  const bool finite = std::isfinite(x_min) && std::isfinite(y_min) &&
                      std::isfinite(x_max) && std::isfinite(y_max);
  if (!finite || !(x_max > x_min) || !(y_max > y_min)) {
    std::ostringstream msg;
    msg << "box must have finite corners and positive area, got (" << x_min
        << ", " << y_min << ", " << x_max << ", " << y_max << ")";
    throw Error(ErrorCode::kInvalidBox, msg.str());
  }
}

Box Box::translated(double dx, double dy) const {
  return Box(x_min_ + dx, y_min_ + dy, x_max_ + dx, y_max_ + dy);
}

Box Box::clamped(double image_width, double image_height) const {
  return Box(std::clamp(x_min_, 0.0, image_width), std::clamp(y_min_, 0.0, image_height),
             std::clamp(x_max_, 0.0, image_width), std::clamp(y_max_, 0.0, image_height));
}

ScoredBox::ScoredBox(Box b, double s) : box(b), score(s) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "score must lie in [0, 1]");
  }
}

double iou(const Box& a, const Box& b) noexcept {
  const double iw = std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min());
  const double ih = std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

MatchResult match_detections(std::span<const ScoredBox> predictions,
                             std::span<const Box> ground_truths,
                             double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "iou threshold must lie in (0, 1]");
  }
  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].score > predictions[b].score;
  });

  MatchResult result;
  std::vector<bool> taken(ground_truths.size(), false);
  for (std::size_t p : order) {
    double best = -1.0;
    std::size_t best_gt = 0;
    for (std::size_t g = 0; g < ground_truths.size(); ++g) {
      if (taken[g]) continue;
      const double overlap = iou(predictions[p].box, ground_truths[g]);
      if (overlap > best) {
        best = overlap;
        best_gt = g;
      }
    }
    if (best >= iou_threshold) {
      taken[best_gt] = true;
      result.pairs.push_back({p, best_gt, best});
    }
  }
  result.tp = result.pairs.size();
  result.fp = predictions.size() - result.tp;
  result.fn = ground_truths.size() - result.tp;
  return result;
}

}  // namespace iadet
