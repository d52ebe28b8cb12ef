#pragma once

#include <cstdint>

namespace iadet {

/// Interaction counts charged by the robot annotator. The defaults are the
/// click model of the assisted-annotation tool.
struct CostModelConfig {
  std::uint64_t clicks_per_box_create = 2;
  std::uint64_t clicks_per_box_remove = 1;
  std::uint64_t keypress_navigate = 1;
  std::uint64_t keypress_clear_all = 1;
  bool include_navigation_in_unassisted = true;

  void validate() const;

  friend bool operator==(const CostModelConfig&, const CostModelConfig&) = default;
};

/// Interactions per second. Must be positive and finite.
class AnnotatorRate {
 public:
  explicit AnnotatorRate(double per_second);

  double per_second() const noexcept { return per_second_; }

 private:
  double per_second_;
};

enum class CorrectionStrategy {
  kCorrect,   // remove each false positive, draw each miss
  kClearAll,  // wipe the predictions, draw every box
};

struct AssistedCost {
  std::uint64_t interactions;
  CorrectionStrategy strategy;
};

/// Cheapest way to turn a prediction into the ground truth, plus navigation.
/// Ties go to kCorrect.
AssistedCost assisted_cost(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn,
                           const CostModelConfig& config = {});

/// 1 + min(1 + 2(tp+fn), fp + 2fn) at default constants.
std::uint64_t assisted_interactions(std::uint64_t tp, std::uint64_t fp,
                                    std::uint64_t fn,
                                    const CostModelConfig& config = {});

std::uint64_t unassisted_interactions(std::uint64_t gt_count,
                                      const CostModelConfig& config = {});

double interactions_to_time(std::uint64_t interactions, AnnotatorRate rate) noexcept;

/// True when an image whose predictions are all useless (tp = 0, the given
/// number of false positives, every ground truth missed) costs strictly more
/// with assistance than without it.
bool strictly_worse_when_cleared(std::uint64_t gt_count, std::uint64_t fp = 1,
                                 const CostModelConfig& config = {});

}  // namespace iadet
