#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iadet/detectors.hpp"

namespace iadet {

enum class StrategyKind { kRandom, kSequential };

std::string_view to_string(StrategyKind kind) noexcept;
/// Accepts "random" and "sequential"; throws kInvalidArgument otherwise.
StrategyKind parse_strategy(std::string_view name);

/// Seed-fixed Fisher-Yates shuffle of the ids in lexicographic order, so the
/// result depends only on the seed and the set of ids.
std::vector<std::string> random_permutation(std::span<const std::string> ids,
                                            std::uint64_t seed);

/// Unlabeled/labeled partition of a dataset plus the visiting order of the
/// configured strategy.
class SelectionState {
 public:
  SelectionState(std::vector<std::string> dataset_ids, StrategyKind strategy,
                 std::uint64_t seed);

  /// Next image to annotate. Predictions are accepted for strategies that rank
  /// by model output; random and sequential ignore them. Throws
  /// kAnnotationComplete on an empty pool.
  std::string next_image(std::span<const Prediction> latest_predictions = {}) const;

  /// Throws kNotFound for ids outside the dataset and kAlreadyLabeled for a
  /// second mark.
  void mark_labeled(std::string_view image_id);

  bool done() const noexcept { return unlabeled_.empty(); }
  std::size_t remaining() const noexcept { return unlabeled_.size(); }

  const std::set<std::string, std::less<>>& unlabeled() const noexcept { return unlabeled_; }
  const std::set<std::string, std::less<>>& labeled() const noexcept { return labeled_; }
  const std::vector<std::string>& order() const noexcept { return order_; }
  StrategyKind strategy() const noexcept { return strategy_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  StrategyKind strategy_;
  std::uint64_t seed_;
  std::vector<std::string> order_;
  std::set<std::string, std::less<>> unlabeled_;
  std::set<std::string, std::less<>> labeled_;
  std::size_t cursor_ = 0;  // order_[0, cursor_) is labeled
};

/// Value-returning form of SelectionState::mark_labeled.
SelectionState mark_labeled(SelectionState state, std::string_view image_id);

}  // namespace iadet
