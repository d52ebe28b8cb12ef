#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "iadet/error.hpp"
#include "iadet/geometry.hpp"
#include "oracles.hpp"

namespace iadet {
namespace {

TEST(Box, RejectsEmptyOrInvertedArea) {
  EXPECT_THROW(Box(0, 0, 0, 10), Error);
  EXPECT_THROW(Box(5, 0, 1, 10), Error);
  EXPECT_THROW(Box(0, 4, 10, 4), Error);
  try {
    Box(0, 0, -1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidBox);
  }
}

TEST(Box, RejectsNonFiniteCoordinates) {
  const double inf = std::numeric_limits<double>::infinity();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(Box(0, 0, inf, 1), Error);
  EXPECT_THROW(Box(nan, 0, 1, 1), Error);
}

TEST(Box, AreaUsesCornerConvention) {
  const Box b(2, 3, 12, 8);
  EXPECT_DOUBLE_EQ(b.width(), 10);
  EXPECT_DOUBLE_EQ(b.height(), 5);
  EXPECT_DOUBLE_EQ(b.area(), 50);
}

TEST(Box, ClampedToImage) {
  const Box b = Box(-5, -5, 20, 600).clamped(100, 500);
  EXPECT_EQ(b, Box(0, 0, 20, 500));
  EXPECT_THROW(Box(200, 0, 300, 10).clamped(100, 100), Error);
}

TEST(ScoredBox, ScoreMustBeAProbability) {
  EXPECT_NO_THROW(ScoredBox(Box(0, 0, 1, 1), 0.0));
  EXPECT_NO_THROW(ScoredBox(Box(0, 0, 1, 1), 1.0));
  EXPECT_THROW(ScoredBox(Box(0, 0, 1, 1), 1.01), Error);
  EXPECT_THROW(ScoredBox(Box(0, 0, 1, 1), -0.1), Error);
}

TEST(Iou, Examples) {
  const Box b(3, 4, 17, 29);
  EXPECT_DOUBLE_EQ(iou(b, b), 1.0);
  EXPECT_DOUBLE_EQ(iou(Box(0, 0, 10, 10), Box(20, 20, 30, 30)), 0.0);
  EXPECT_DOUBLE_EQ(iou(Box(0, 0, 10, 10), Box(5, 0, 15, 10)), 1.0 / 3.0);
}

TEST(Iou, TouchingEdgesDoNotOverlap) {
  EXPECT_DOUBLE_EQ(iou(Box(0, 0, 10, 10), Box(10, 0, 20, 10)), 0.0);
}

TEST(Iou, SymmetricBoundedAndTranslationInvariant) {
  DeterministicStream rng(11);
  for (int i = 0; i < 2000; ++i) {
    const Box a = testing::random_box(rng);
    const Box b = testing::random_box(rng);
    const double v = iou(a, b);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_DOUBLE_EQ(v, iou(b, a));
    const double dx = rng.uniform(-50, 50);
    const double dy = rng.uniform(-50, 50);
    EXPECT_NEAR(v, iou(a.translated(dx, dy), b.translated(dx, dy)), 1e-12);
    if (!(a == b)) EXPECT_LT(v, 1.0);
  }
}

TEST(Match, SinglePredictionAboveThreshold) {
  // IoU 0.6: overlap 60 of union 100.
  const std::vector<ScoredBox> preds{{Box(0, 0, 8, 10), 0.9}};
  const std::vector<Box> gts{Box(2, 0, 10, 10)};
  ASSERT_NEAR(iou(preds[0].box, gts[0]), 0.6, 1e-12);
  const MatchResult m = match_detections(preds, gts, 0.5);
  EXPECT_EQ(m.tp, 1u);
  EXPECT_EQ(m.fp, 0u);
  EXPECT_EQ(m.fn, 0u);
}

TEST(Match, HigherScoreConsumesTheOnlyGroundTruth) {
  const std::vector<ScoredBox> preds{{Box(0, 0, 10, 10), 0.8}, {Box(0, 0, 10, 9), 0.9}};
  const std::vector<Box> gts{Box(0, 0, 10, 10)};
  const MatchResult m = match_detections(preds, gts);
  EXPECT_EQ(m.tp, 1u);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.fn, 0u);
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.pairs[0].prediction, 1u);
}

TEST(Match, EqualScoresBreakTiesByLowerIndex) {
  const std::vector<ScoredBox> preds{{Box(0, 0, 10, 9), 0.5}, {Box(0, 0, 10, 10), 0.5}};
  const std::vector<Box> gts{Box(0, 0, 10, 10)};
  const MatchResult m = match_detections(preds, gts);
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.pairs[0].prediction, 0u);
}

TEST(Match, PredictionTakesItsBestGroundTruth) {
  const std::vector<ScoredBox> preds{{Box(0, 0, 10, 10), 0.9}};
  const std::vector<Box> gts{Box(1, 0, 11, 10), Box(0, 0, 10, 10)};
  const MatchResult m = match_detections(preds, gts);
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.pairs[0].ground_truth, 1u);
  EXPECT_DOUBLE_EQ(m.pairs[0].iou, 1.0);
}

TEST(Match, EmptySides) {
  const std::vector<Box> gts{Box(0, 0, 1, 1), Box(2, 2, 3, 3)};
  MatchResult m = match_detections({}, gts);
  EXPECT_EQ(m.fn, 2u);
  const std::vector<ScoredBox> preds{{Box(0, 0, 1, 1), 0.3}};
  m = match_detections(preds, {});
  EXPECT_EQ(m.fp, 1u);
}

TEST(Match, RejectsThresholdOutsideUnitInterval) {
  const std::vector<Box> gts{Box(0, 0, 1, 1)};
  EXPECT_THROW(match_detections({}, gts, 0.0), Error);
  EXPECT_THROW(match_detections({}, gts, 1.5), Error);
  EXPECT_NO_THROW(match_detections({}, gts, 1.0));
}

TEST(Match, GreedyAgreesWithDirectOracleAndNeverBeatsOptimal) {
  DeterministicStream rng(2024);
  int greedy_suboptimal = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto [preds, gts] = testing::random_match_instance(rng);
    const MatchResult m = match_detections(preds, gts);
    EXPECT_EQ(m.tp + m.fp, preds.size());
    EXPECT_EQ(m.tp + m.fn, gts.size());
    EXPECT_EQ(m.tp, m.pairs.size());
    EXPECT_EQ(m.tp, oracle::greedy_tp(preds, gts, 0.5));
    const std::size_t best = oracle::optimal_tp(preds, gts, 0.5);
    EXPECT_LE(m.tp, best);
    if (m.tp < best) ++greedy_suboptimal;
    std::vector<bool> p_seen(preds.size()), g_seen(gts.size());
    for (const MatchPair& pair : m.pairs) {
      EXPECT_GE(pair.iou, 0.5);
      EXPECT_FALSE(p_seen[pair.prediction]);
      EXPECT_FALSE(g_seen[pair.ground_truth]);
      p_seen[pair.prediction] = g_seen[pair.ground_truth] = true;
    }
  }
  RecordProperty("greedy_suboptimal_instances", greedy_suboptimal);
}

}  // namespace
}  // namespace iadet
