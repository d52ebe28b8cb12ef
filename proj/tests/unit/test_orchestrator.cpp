#include <atomic>
#include <functional>
#include <thread>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "iadet/error.hpp"
#include "iadet/orchestrator.hpp"

namespace iadet {
namespace {

// Copies ground truth, charging a fixed time per image.
class FixedAnnotator final : public Annotator {
 public:
  explicit FixedAnnotator(double seconds) : seconds_(seconds) {}
  AnnotationOutcome annotate(const ImageRecord& record, const Prediction& prediction) override {
    seen_versions.push_back(prediction.model_version);
    AnnotationOutcome out;
    out.boxes = *record.gt_boxes;
    out.interactions = 1;
    out.duration = seconds_;
    if (after) after();
    return out;
  }
  std::vector<std::uint64_t> seen_versions;
  std::function<void()> after;

 private:
  double seconds_;
};

ModelVersion version(std::uint64_t v) {
  ModelVersion m;
  m.version = v;
  return m;
}

TEST(ModelRegistry, StartsUntrainedAndRejectsNonMonotone) {
  ModelRegistry r;
  EXPECT_EQ(r.latest()->version, 0u);
  EXPECT_EQ(r.latest()->labeled_count(), 0u);
  EXPECT_EQ(r.next_version(), 1u);
  r.publish(version(1));
  r.publish(version(5));
  for (std::uint64_t bad : {5u, 3u, 0u}) {
    try {
      r.publish(version(bad));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kNonMonotoneVersion);
    }
  }
  EXPECT_EQ(r.latest()->version, 5u);
  EXPECT_EQ(r.history().size(), 3u);
}

TEST(ModelRegistry, ConcurrentReadersSeeMonotoneVersions) {
  ModelRegistry r;
  std::atomic<bool> done{false};
  std::atomic<int> reads{0};
  std::vector<std::jthread> readers;
  for (int i = 0; i < 3; ++i) {
    readers.emplace_back([&] {
      std::uint64_t last = 0;
      while (!done) {
        const auto m = r.latest();
        EXPECT_GE(m->version, last);
        EXPECT_EQ(m->created_at, static_cast<double>(m->version));
        last = m->version;
        ++reads;
      }
    });
  }
  while (reads == 0) std::this_thread::yield();
  for (std::uint64_t v = 1; v <= 300; ++v) {
    ModelVersion m = version(v);
    m.created_at = static_cast<double>(v);
    r.publish(m);
    if (v % 30 == 0) std::this_thread::yield();
  }
  done = true;
}

TEST(EventLog, LineRoundTrip) {
  Event annotate{.t = 12.5,
                 .kind = "annotate",
                 .image_id = "im7",
                 .model_version = 3,
                 .interactions = 9,
                 .boxes = std::vector<Box>{Box(1, 2, 3, 4.25)},
                 .degraded = true};
  EXPECT_EQ(parse_event_line(to_json_line(annotate)), annotate);
  Event publish{.t = 0.1, .kind = "publish", .model_version = 4};
  EXPECT_EQ(parse_event_line(to_json_line(publish)), publish);
  EventLog log;
  log.append(annotate);
  log.append(publish);
  EXPECT_EQ(EventLog::parse_jsonl(log.to_jsonl()), log.events());
  EXPECT_THROW(parse_event_line("{\"t\": 1}"), Error);
  EXPECT_THROW(parse_event_line("not json"), Error);
}

TEST(Cadence, EpochDuration) {
  TrainerCadence c;
  c.training_speed = 0.1;
  c.batch_size = 8;
  c.min_interval = 1.0;
  EXPECT_DOUBLE_EQ(c.epoch_duration(1), 80.0);
  EXPECT_DOUBLE_EQ(c.epoch_duration(8), 80.0);
  EXPECT_DOUBLE_EQ(c.epoch_duration(9), 160.0);
  c.training_speed = 1000;
  EXPECT_DOUBLE_EQ(c.epoch_duration(3), 1.0);
  c.training_speed = 0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_EQ(parse_cadence("per-commit"), CadenceMode::kPerCommit);
  EXPECT_EQ(parse_cadence(to_string(CadenceMode::kEpoch)), CadenceMode::kEpoch);
}

TEST(BuiltInTrainer, IdenticalSnapshotStillAdvancesVersion) {
  BuiltInTrainer trainer;
  ModelRegistry registry;
  AnnotationStore store(testing::grid_dataset(2, 1));
  store.put_annotations("im1000", {Box(0, 0, 5, 5)}, 1.0);
  const auto snap = store.snapshot();
  const auto a = trainer.tick(*snap, 1.0, registry);
  const auto b = trainer.tick(*snap, 2.0, registry);
  ASSERT_TRUE(a && b);
  EXPECT_LT(a->version, b->version);
  EXPECT_EQ(b->labeled_count(), 1u);
  EXPECT_EQ(trainer.epochs(), 2u);
  EXPECT_THROW(trainer.tick(AnnotationSnapshot{}, 0.0, registry), Error);
}

struct LoopHarness {
  explicit LoopHarness(std::size_t images, CadenceMode mode = CadenceMode::kPerCommit)
      : store(testing::grid_dataset(images, 2)) {
    config.cadence.mode = mode;
    config.cadence.training_speed = 1.0;
    config.cadence.batch_size = 1;
    config.cadence.min_interval = 1.0;
  }
  LoopResult run(Annotator& annotator, std::stop_token stop = {}) {
    AnnotationLoop loop(store, detector, trainer, registry,
                        SelectionState(store.ids(), StrategyKind::kSequential, 0), config, log);
    return loop.run(annotator, stop);
  }
  AnnotationStore store;
  OracleDetector detector{OracleMode::kPerfect};
  BuiltInTrainer trainer;
  ModelRegistry registry;
  LoopConfig config;
  EventLog log;
};

TEST(AnnotationLoop, SequentialPerfectRunLogsEveryCommit) {
  LoopHarness h(3);
  FixedAnnotator robot(10.0);
  const auto result = h.run(robot);
  ASSERT_EQ(result.rows.size(), 3u);
  EXPECT_FALSE(result.stopped);
  EXPECT_EQ(result.rows[0].image_id, "im1000");
  EXPECT_EQ(result.rows[2].image_id, "im1002");
  EXPECT_DOUBLE_EQ(result.rows[2].t_commit, 30.0);
  EXPECT_DOUBLE_EQ(result.elapsed, 30.0);
  EXPECT_EQ(h.store.labeled_count(), 3u);
  std::size_t annotates = 0;
  for (const auto& e : h.log.events()) annotates += e.kind == "annotate";
  EXPECT_EQ(annotates, 3u);
  EXPECT_EQ(robot.seen_versions, (std::vector<std::uint64_t>{0, 1, 2}));
}

TEST(AnnotationLoop, LogReplayRebuildsTheStore) {
  LoopHarness h(4);
  FixedAnnotator robot(3.0);
  h.run(robot);
  const auto replayed = replay_annotations(testing::grid_dataset(4, 2), h.log.events());
  const auto actual = h.store.records();
  ASSERT_EQ(replayed.size(), actual.size());
  for (std::size_t i = 0; i < actual.size(); ++i) {
    EXPECT_EQ(replayed[i].user_boxes, actual[i].user_boxes);
    EXPECT_EQ(replayed[i].labeled, actual[i].labeled);
    EXPECT_EQ(replayed[i].labeled_at, actual[i].labeled_at);
  }
}

TEST(AnnotationLoop, EpochCadenceModelNeverChangesMidImage) {
  // Epoch over n images lasts n seconds; each image takes 10.
  LoopHarness h(5, CadenceMode::kEpoch);
  FixedAnnotator robot(10.0);
  const auto result = h.run(robot);
  EXPECT_EQ(robot.seen_versions, (std::vector<std::uint64_t>{0, 0, 1, 2, 3}));
  const auto history = h.registry.history();
  ASSERT_GE(history.size(), 2u);
  EXPECT_DOUBLE_EQ(history[1].created_at, 11.0);
  EXPECT_EQ(history[1].labeled_count(), 1u);
  for (const auto& row : result.rows) {
    for (const auto& m : history) {
      EXPECT_FALSE(m.created_at > row.t_open && m.created_at < row.t_commit && m.version <= row.model_version);
    }
  }
}

TEST(AnnotationLoop, SlowTrainerLagsSeveralImages) {
  LoopHarness h(6, CadenceMode::kEpoch);
  h.config.cadence.training_speed = 0.1;  // epoch over n images: 10n seconds
  FixedAnnotator robot(4.0);
  h.run(robot);
  // Epoch 1 (1 image) ends at 14; epoch 2 starts then over 3 images, ends 44.
  EXPECT_EQ(robot.seen_versions, (std::vector<std::uint64_t>{0, 0, 0, 0, 1, 1}));
}

TEST(AnnotationLoop, StopRequestEndsRunWithStopEvent) {
  LoopHarness h(5);
  std::stop_source source;
  FixedAnnotator robot(1.0);
  robot.after = [&] {
    if (robot.seen_versions.size() == 2) source.request_stop();
  };
  const auto result = h.run(robot, source.get_token());
  EXPECT_TRUE(result.stopped);
  EXPECT_EQ(result.rows.size(), 2u);
  EXPECT_EQ(h.log.events().back().kind, "stop");
  EXPECT_EQ(h.store.labeled_count(), 2u);
}

TEST(AnnotationLoop, RealClockBackgroundTrainerPublishes) {
  LoopHarness h(3, CadenceMode::kEpoch);
  h.config.clock = ClockMode::kReal;
  h.config.cadence.training_speed = 1000.0;
  h.config.cadence.min_interval = 0.01;
  FixedAnnotator robot(0.05);
  const auto result = h.run(robot);
  EXPECT_EQ(result.rows.size(), 3u);
  EXPECT_GT(h.registry.latest()->version, 0u);
  for (std::size_t i = 1; i < result.rows.size(); ++i) {
    EXPECT_GE(result.rows[i].t_commit, result.rows[i - 1].t_commit);
  }
}

}  // namespace
}  // namespace iadet
