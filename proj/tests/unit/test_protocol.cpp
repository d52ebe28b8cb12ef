#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "iadet/error.hpp"
#include "iadet/orchestrator.hpp"
#include "iadet/protocol.hpp"
#include "iadet/store.hpp"

namespace iadet {
namespace {

std::string golden(const std::string& name) {
  std::string text = testing::read_text(std::filesystem::path(IADET_TEST_DATA_DIR) / "golden" / name);
  return text;
}

std::string one_line(const std::string& name) {
  std::string text = golden(name);
  while (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

PredictResponse sample_response() {
  PredictResponse r;
  r.model_version = 7;
  r.boxes.emplace_back(Box(10, 20.5, 110, 220), 0.93);
  r.boxes.emplace_back(Box(0, 0, 1, 1), 0.1);
  return r;
}

TEST(Wire, PredictRequestGolden) {
  const PredictRequest req{"images/2008_000123.jpg", "2008_000123"};
  EXPECT_EQ(to_wire(req), one_line("predict_request.json"));
  EXPECT_EQ(parse_predict_request(one_line("predict_request.json")), req);
}

TEST(Wire, PredictResponseGolden) {
  EXPECT_EQ(to_wire(sample_response()), one_line("predict_response.json"));
  EXPECT_EQ(parse_predict_response(one_line("predict_response.json")), sample_response());
}

TEST(Wire, WorkerStatusGolden) {
  const WorkerStatus trained{7, 12, 0.25};
  EXPECT_EQ(to_wire(trained), one_line("worker_status.json"));
  EXPECT_EQ(parse_worker_status(one_line("worker_status.json")), trained);
  EXPECT_EQ(to_wire(WorkerStatus{}), one_line("worker_status_untrained.json"));
  EXPECT_EQ(parse_worker_status("{\"model_version\": 2}"), (WorkerStatus{2, 0, std::nullopt}));
}

TEST(Wire, MalformedBodiesAreParseErrors) {
  const std::vector<std::string> bad{
      "", "{", "[]", "{\"image_id\": \"a\"}", "{\"image_path\": 1, \"image_id\": \"a\"}"};
  for (const auto& body : bad) {
    try {
      parse_predict_request(body);
      FAIL() << body;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kParse) << body;
    }
  }
  const std::vector<std::string> bad_response{
      "{\"model_version\": 1}",
      "{\"model_version\": 1, \"boxes\": [{\"x_min\": 5, \"y_min\": 0, \"x_max\": 1, \"y_max\": 1, \"score\": 1}]}",
      "{\"model_version\": -1, \"boxes\": []}"};
  EXPECT_THROW(parse_worker_status("{\"model_version\": 1, \"epochs\": -2}"), Error);
  for (const auto& body : bad_response) {
    try {
      parse_predict_response(body);
      FAIL() << body;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kParse) << body;
    }
  }
  EXPECT_THROW(parse_worker_status("{}"), Error);
}

TEST(Wire, RandomResponsesRoundTrip) {
  DeterministicStream rng(21);
  for (int i = 0; i < 200; ++i) {
    PredictResponse r;
    r.model_version = rng.uniform_index(1000);
    for (std::uint64_t k = 0; k < rng.uniform_index(5); ++k) {
      r.boxes.emplace_back(testing::random_box(rng, 1000), rng.uniform());
    }
    EXPECT_EQ(parse_predict_response(to_wire(r)), r);
  }
}

TEST(AnnotationFile, GoldenAndNoGroundTruth) {
  ImageRecord a;
  a.id = "a";
  a.path = "a.png";
  a.width = 500;
  a.height = 375;
  a.user_boxes = {Box(1, 2, 30, 40.5)};
  a.labeled = true;
  a.labeled_at = 12.5;
  a.gt_boxes = std::vector<Box>{Box(0, 0, 5, 5)};
  ImageRecord b;
  b.id = "b";
  b.path = "b.jpg";
  b.width = 64;
  b.height = 48;
  const std::vector<ImageRecord> records{a, b};
  const auto text = serialize_annotation_file(3, 100.0, records);
  EXPECT_EQ(text, golden("annotations.json"));
  EXPECT_EQ(text.find("gt"), std::string::npos);
  const auto parsed = parse_annotation_file(text);
  EXPECT_EQ(parsed.snapshot_version, 3u);
  ASSERT_EQ(parsed.records.size(), 2u);
  EXPECT_FALSE(parsed.records[0].gt_boxes);
  EXPECT_EQ(parsed.records[0].user_boxes, a.user_boxes);
  EXPECT_EQ(parsed.records[1].labeled_at, std::nullopt);
}

TEST(EventLines, Golden) {
  const std::vector<Event> events{
      {.t = 12.5,
       .kind = "annotate",
       .image_id = "a",
       .model_version = 2,
       .interactions = 5,
       .boxes = std::vector<Box>{Box(1, 2, 30, 40.5)}},
      {.t = 13, .kind = "publish", .model_version = 3}};
  EventLog log;
  for (const auto& e : events) log.append(e);
  EXPECT_EQ(log.to_jsonl(), golden("events.jsonl"));
  EXPECT_EQ(EventLog::parse_jsonl(golden("events.jsonl")), events);
}

}  // namespace
}  // namespace iadet
