#include "oracles.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace iadet::oracle {

std::size_t optimal_tp(std::span<const ScoredBox> predictions, std::span<const Box> ground_truths,
                       double threshold) {
  std::vector<bool> used(ground_truths.size(), false);
  std::function<std::size_t(std::size_t)> best = [&](std::size_t p) -> std::size_t {
    if (p == predictions.size()) return 0;
    std::size_t result = best(p + 1);
    for (std::size_t g = 0; g < ground_truths.size(); ++g) {
      if (used[g] || iou(predictions[p].box, ground_truths[g]) < threshold) continue;
      used[g] = true;
      result = std::max(result, 1 + best(p + 1));
      used[g] = false;
    }
    return result;
  };
  return best(0);
}

std::size_t greedy_tp(std::span<const ScoredBox> predictions, std::span<const Box> ground_truths,
                      double threshold) {
  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (predictions[a].score != predictions[b].score) {
      return predictions[a].score > predictions[b].score;
    }
    return a < b;
  });
  std::vector<bool> used(ground_truths.size(), false);
  std::size_t tp = 0;
  for (std::size_t p : order) {
    double best = -1.0;
    std::size_t pick = ground_truths.size();
    for (std::size_t g = 0; g < ground_truths.size(); ++g) {
      if (used[g]) continue;
      const double v = iou(predictions[p].box, ground_truths[g]);
      if (v > best) {
        best = v;
        pick = g;
      }
    }
    if (pick < ground_truths.size() && best >= threshold) {
      used[pick] = true;
      ++tp;
    }
  }
  return tp;
}

double brute_force_ap(std::span<const EvalSample> samples, double threshold) {
  std::size_t positives = 0;
  std::set<double, std::greater<>> cutoffs;
  for (const EvalSample& s : samples) {
    positives += s.ground_truths.size();
    for (const ScoredBox& p : s.predictions) cutoffs.insert(p.score);
  }
  // recall -> best precision reached at exactly that recall
  std::map<double, double> best_at_recall;
  for (double cut : cutoffs) {
    std::size_t admitted = 0;
    std::size_t tp = 0;
    for (const EvalSample& s : samples) {
      std::vector<ScoredBox> kept;
      for (const ScoredBox& p : s.predictions) {
        if (p.score >= cut) kept.push_back(p);
      }
      admitted += kept.size();
      tp += greedy_tp(kept, s.ground_truths, threshold);
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(admitted);
    auto [it, inserted] = best_at_recall.emplace(recall, precision);
    if (!inserted) it->second = std::max(it->second, precision);
  }
  double area = 0.0;
  double previous = 0.0;
  for (auto it = best_at_recall.begin(); it != best_at_recall.end(); ++it) {
    double envelope = 0.0;
    for (auto jt = it; jt != best_at_recall.end(); ++jt) envelope = std::max(envelope, jt->second);
    area += (it->first - previous) * envelope;
    previous = it->first;
  }
  return area;
}

std::uint64_t cheapest_interactions(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  constexpr std::uint64_t kNavigate = 1;
  constexpr std::uint64_t kRemove = 1;
  constexpr std::uint64_t kDraw = 2;
  constexpr std::uint64_t kClear = 1;
  std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
  for (std::uint64_t kept = 0; kept <= tp; ++kept) {
    const std::uint64_t redrawn = tp - kept;
    const std::uint64_t clicks = fp * kRemove + redrawn * (kRemove + kDraw) + fn * kDraw;
    best = std::min(best, clicks);
  }
  best = std::min(best, kClear + (tp + fn) * kDraw);
  return kNavigate + best;
}

}  // namespace iadet::oracle
