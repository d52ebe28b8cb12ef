#include "iadet/cost_model.hpp"

#include <algorithm>
#include <cmath>

#include "iadet/error.hpp"

namespace iadet {

void CostModelConfig::validate() const {
  if (clicks_per_box_create == 0 || clicks_per_box_remove == 0 ||
      keypress_navigate == 0 || keypress_clear_all == 0) {
    throw Error(ErrorCode::kInvalidArgument, "interaction counts must be positive");
  }
}

AnnotatorRate::AnnotatorRate(double per_second) : per_second_(per_second) {
  if (!(per_second > 0.0) || !std::isfinite(per_second)) {
    throw Error(ErrorCode::kInvalidArgument, "annotator rate must be positive and finite");
  }
}

AssistedCost assisted_cost(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn,
                           const CostModelConfig& config) {
  const std::uint64_t clear_all =
      config.keypress_clear_all + (tp + fn) * config.clicks_per_box_create;
  const std::uint64_t correct =
      fp * config.clicks_per_box_remove + fn * config.clicks_per_box_create;
  if (correct <= clear_all) {
    return {config.keypress_navigate + correct, CorrectionStrategy::kCorrect};
  }
  return {config.keypress_navigate + clear_all, CorrectionStrategy::kClearAll};
}

std::uint64_t assisted_interactions(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn,
                                    const CostModelConfig& config) {
  return assisted_cost(tp, fp, fn, config).interactions;
}

std::uint64_t unassisted_interactions(std::uint64_t gt_count, const CostModelConfig& config) {
  const std::uint64_t draw = gt_count * config.clicks_per_box_create;
  return config.include_navigation_in_unassisted ? config.keypress_navigate + draw : draw;
}

double interactions_to_time(std::uint64_t interactions, AnnotatorRate rate) noexcept {
  return static_cast<double>(interactions) / rate.per_second();
}

bool strictly_worse_when_cleared(std::uint64_t gt_count, std::uint64_t fp,
                                 const CostModelConfig& config) {
  return assisted_interactions(0, fp, gt_count, config) >
         unassisted_interactions(gt_count, config);
}

}  // namespace iadet
