#include "iadet/selection.hpp"

#include <algorithm>

#include "iadet/error.hpp"
#include "iadet/random.hpp"

namespace iadet {

std::string_view to_string(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::kRandom: return "random";
    case StrategyKind::kSequential: return "sequential";
  }
  return "random";
}

StrategyKind parse_strategy(std::string_view name) {
  if (name == "random") return StrategyKind::kRandom;
  if (name == "sequential") return StrategyKind::kSequential;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown strategy '" + std::string(name) + "' (expected random or sequential)");
}

std::vector<std::string> random_permutation(std::span<const std::string> ids,
                                            std::uint64_t seed) {
  std::vector<std::string> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end());
  DeterministicStream rng(stream_key(seed, 0, "selection"));
  for (std::size_t i = out.size(); i > 1; --i) {
    std::swap(out[i - 1], out[rng.uniform_index(i)]);
  }
  return out;
}

SelectionState::SelectionState(std::vector<std::string> dataset_ids, StrategyKind strategy,
                               std::uint64_t seed)
    : strategy_(strategy), seed_(seed) {
  unlabeled_.insert(dataset_ids.begin(), dataset_ids.end());
  if (unlabeled_.size() != dataset_ids.size()) {
    throw Error(ErrorCode::kInvalidArgument, "dataset ids must be unique");
  }
  if (strategy == StrategyKind::kRandom) {
    order_ = random_permutation(dataset_ids, seed);
  } else {
    order_.assign(unlabeled_.begin(), unlabeled_.end());
  }
}

std::string SelectionState::next_image(std::span<const Prediction>) const {
  for (std::size_t i = cursor_; i < order_.size(); ++i) {
    if (unlabeled_.contains(order_[i])) return order_[i];
  }
  throw Error(ErrorCode::kAnnotationComplete, "annotation complete: no unlabeled images left");
}

void SelectionState::mark_labeled(std::string_view image_id) {
  auto it = unlabeled_.find(image_id);
  if (it == unlabeled_.end()) {
    if (labeled_.contains(image_id)) {
      throw Error(ErrorCode::kAlreadyLabeled,
                  "image already labeled: " + std::string(image_id));
    }
    throw Error(ErrorCode::kNotFound, "unknown image id: " + std::string(image_id));
  }
  labeled_.insert(unlabeled_.extract(it));
  while (cursor_ < order_.size() && labeled_.contains(order_[cursor_])) ++cursor_;
}

SelectionState mark_labeled(SelectionState state, std::string_view image_id) {
  state.mark_labeled(image_id);
  return state;
}

}  // namespace iadet
