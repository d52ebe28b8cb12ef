#include <json.hpp>

#include <httplib.h>
#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "iadet/error.hpp"
#include "iadet/http.hpp"
#include "iadet/service.hpp"

namespace iadet {
namespace {

using nlohmann::json;

// Three 64x48 PNGs; ground truth uses coordinates that appear nowhere else.
struct ServiceHarness {
  explicit ServiceHarness(Detector* detector = nullptr) {
    std::filesystem::create_directories(images);
    for (const char* id : {"b", "a", "c"}) {
      testing::write_png_header(images / (std::string(id) + ".png"), 64, 48);
    }
    store = AnnotationStore::create(dir.path() / "store", scan_dataset(images));
    store->set_ground_truth({{"a", {Box(1.125, 2.375, 33.625, 44.875)}},
                             {"b", {Box(3.125, 4.375, 35.625, 46.875)}},
                             {"c", {Box(5.125, 6.375, 37.625, 40.875)}}});
    service = std::make_unique<AnnotationService>(*store, images, detector, registry,
                                                  StrategyKind::kSequential, 0, clock);
  }
  json get(const std::string& path, int expected = 200) {
    const auto r = service->handle("GET", path, "");
    EXPECT_EQ(r.status, expected) << path << " " << r.body;
    return json::parse(r.body);
  }
  HttpResponse put(const std::string& id, const std::string& body) {
    return service->handle("PUT", "/images/" + id + "/annotations", body);
  }

  testing::TempDir dir{"service"};
  std::filesystem::path images = dir.path() / "images";
  std::unique_ptr<AnnotationStore> store;
  ModelRegistry registry;
  VirtualClock clock;
  std::unique_ptr<AnnotationService> service;
};

TEST(Service, ListsImagesInIdOrder) {
  ServiceHarness h;
  const auto list = h.get("/images");
  ASSERT_EQ(list.size(), 3u);
  EXPECT_EQ(list[0]["id"], "a");
  EXPECT_EQ(list[0]["path"], "a.png");
  EXPECT_EQ(list[0]["width"], 64);
  EXPECT_EQ(list[0]["labeled"], false);
}

TEST(Service, ServesImageBytes) {
  ServiceHarness h;
  const auto r = h.service->handle("GET", "/images/a/file", "");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.content_type, "image/png");
  EXPECT_EQ(r.body, testing::read_text(h.images / "a.png"));
  EXPECT_EQ(h.service->handle("GET", "/images/zz/file", "").status, 404);
}

TEST(Service, NoDetectorMeansDegradedPredictions) {
  ServiceHarness h;
  const auto p = h.get("/images/a/predictions");
  EXPECT_EQ(p["degraded"], true);
  EXPECT_TRUE(p["boxes"].empty());
  EXPECT_EQ(p["user_precedence"], false);
}

TEST(Service, PredictionsThenUserPrecedence) {
  OracleDetector perfect(OracleMode::kPerfect);
  ServiceHarness h(&perfect);
  auto p = h.get("/images/b/predictions");
  EXPECT_EQ(p["degraded"], false);
  ASSERT_EQ(p["boxes"].size(), 1u);
  EXPECT_EQ(p["boxes"][0]["x_min"], 3.125);
  EXPECT_EQ(p["boxes"][0]["score"], 1.0);
  ASSERT_EQ(h.put("b", R"({"boxes": [[1, 1, 10, 10]]})").status, 200);
  p = h.get("/images/b/predictions");
  EXPECT_EQ(p["user_precedence"], true);
  EXPECT_TRUE(p["boxes"].empty());
  EXPECT_EQ(p["user_boxes"], json::parse("[[1.0, 1.0, 10.0, 10.0]]"));
}

TEST(Service, PutIsRepeatableAndClamps) {
  ServiceHarness h;
  int commits = 0;
  h.service->on_commit([&] { ++commits; });
  const std::string body = R"({"boxes": [[-5, 0, 20, 100], [1, 2, 3, 4]]})";
  const auto first = json::parse(h.put("a", body).body);
  const auto second = json::parse(h.put("a", body).body);
  EXPECT_EQ(first["boxes"], second["boxes"]);
  EXPECT_EQ(first["boxes"][0], json::parse("[0.0, 0.0, 20.0, 48.0]"));
  EXPECT_LT(first["version"].get<int>(), second["version"].get<int>());
  EXPECT_EQ(commits, 2);
  const auto stored = h.get("/images/a/annotations");
  EXPECT_EQ(stored["labeled"], true);
  EXPECT_EQ(stored["boxes"], second["boxes"]);
  EXPECT_EQ(h.put("a", R"({"boxes": []})").status, 200);
  EXPECT_TRUE(h.get("/images/a/annotations")["boxes"].empty());
}

TEST(Service, RejectsBadRequests) {
  ServiceHarness h;
  auto error_code = [](const HttpResponse& r) { return json::parse(r.body)["error"]["code"]; };
  auto r = h.put("a", "not json");
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(error_code(r), "parse_error");
  EXPECT_EQ(h.put("a", R"({"boxes": [[1, 2, 3]]})").status, 400);
  r = h.put("a", R"({"boxes": [[5, 5, 5, 9]]})");
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(error_code(r), "invalid_box");
  r = h.put("nope", R"({"boxes": []})");
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(error_code(r), "not_found");
  EXPECT_EQ(h.service->handle("DELETE", "/images/a/annotations", "").status, 404);
  EXPECT_EQ(h.service->handle("GET", "/nowhere", "").status, 404);
  EXPECT_FALSE(h.store->get("a")->labeled);
}

TEST(Service, NextFollowsStrategyUntilDone) {
  ServiceHarness h;
  std::vector<std::string> seen;
  for (;;) {
    const auto n = h.get("/next");
    if (n["done"] == true) {
      EXPECT_TRUE(n["image_id"].is_null());
      break;
    }
    seen.push_back(n["image_id"]);
    h.put(seen.back(), R"({"boxes": []})");
  }
  EXPECT_EQ(seen, (std::vector<std::string>{"a", "b", "c"}));
  const auto status = h.get("/status");
  EXPECT_EQ(status["labeled"], 3);
  EXPECT_EQ(status["total"], 3);
  EXPECT_EQ(status["strategy"], "sequential");
}

TEST(Service, ModelVersionsFromWorker) {
  ServiceHarness h;
  auto post = [&](const std::string& body) { return h.service->handle("POST", "/model-versions", body); };
  EXPECT_EQ(post(R"({"model_version": 3, "epochs": 5, "last_loss": 0.5})").status, 200);
  auto status = h.get("/status");
  EXPECT_EQ(status["model_version"], 3);
  EXPECT_EQ(status["epochs"], 5);
  EXPECT_EQ(status["last_loss"], 0.5);
  EXPECT_EQ(post(R"({"model_version": 3, "epochs": 5})").status, 200);
  const auto stale = post(R"({"model_version": 2})");
  EXPECT_EQ(stale.status, 409);
  EXPECT_EQ(json::parse(stale.body)["error"]["code"], "non_monotone_version");
  EXPECT_EQ(post("{}").status, 400);
  EXPECT_EQ(h.registry.latest()->version, 3u);
}

TEST(Service, GroundTruthNeverLeavesTheStore) {
  ServiceHarness h;
  h.put("a", R"({"boxes": [[1, 1, 2, 2]]})");
  std::vector<std::string> bodies;
  for (const char* path : {"/images", "/status", "/snapshot", "/next", "/images/a/annotations",
                           "/images/a/predictions", "/images/b/predictions",
                           "/images/b/annotations"}) {
    bodies.push_back(h.service->handle("GET", path, "").body);
  }
  for (const auto& body : bodies) {
    for (const char* marker : {"1.125", "3.125", "5.125", "gt_boxes", "ground_truth"}) {
      EXPECT_EQ(body.find(marker), std::string::npos) << body;
    }
  }
}

TEST(Service, SnapshotHoldsOnlyLabeledImages) {
  ServiceHarness h;
  h.put("c", R"({"boxes": [[1, 1, 2, 2]]})");
  const auto snap = parse_annotation_file(h.service->handle("GET", "/snapshot", "").body);
  ASSERT_EQ(snap.records.size(), 1u);
  EXPECT_EQ(snap.records[0].id, "c");
}

TEST(ErrorMapping, StatusCodes) {
  auto status_of = [](ErrorCode c) { return error_response(Error(c, "x")).status; };
  EXPECT_EQ(status_of(ErrorCode::kInvalidArgument), 400);
  EXPECT_EQ(status_of(ErrorCode::kNotFound), 404);
  EXPECT_EQ(status_of(ErrorCode::kAlreadyLabeled), 409);
  EXPECT_EQ(status_of(ErrorCode::kMissingGroundTruth), 422);
  EXPECT_EQ(status_of(ErrorCode::kUnavailable), 503);
  EXPECT_EQ(status_of(ErrorCode::kIo), 500);
  EXPECT_EQ(error_response(std::runtime_error("boom")).status, 500);
}

TEST(HttpEndToEnd, AnnotationSessionOverLoopback) {
  OracleDetector perfect(OracleMode::kPerfect);
  ServiceHarness h(&perfect);
  HttpServer server([&](std::string_view m, std::string_view p, std::string_view b) {
    return h.service->handle(m, p, b);
  });
  const int port = server.bind("127.0.0.1", 0);
  server.start();
  httplib::Client client("127.0.0.1", port);
  for (int i = 0; i < 3; ++i) {
    auto next = client.Get("/next");
    ASSERT_TRUE(next);
    const std::string id = json::parse(next->body)["image_id"];
    auto pred = client.Get("/images/" + id + "/predictions");
    ASSERT_TRUE(pred);
    EXPECT_EQ(pred->get_header_value("Content-Type"), "application/json");
    json accepted = json::object();
    accepted["boxes"] = json::array();
    const json predicted = json::parse(pred->body);
    for (const auto& b : predicted["boxes"]) {
      accepted["boxes"].push_back({b["x_min"], b["y_min"], b["x_max"], b["y_max"]});
    }
    auto put = client.Put("/images/" + id + "/annotations", accepted.dump(), "application/json");
    ASSERT_TRUE(put);
    EXPECT_EQ(put->status, 200);
    EXPECT_EQ(h.store->get(id)->user_boxes, *h.store->get(id)->gt_boxes);
  }
  auto status = client.Get("/status");
  ASSERT_TRUE(status);
  EXPECT_EQ(json::parse(status->body)["labeled"], 3);
  auto missing = client.Get("/images/zz/annotations");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  server.stop();
}

TEST(HttpEndToEnd, PortInUseIsReported) {
  auto handler = [](std::string_view, std::string_view, std::string_view) { return HttpResponse{}; };
  HttpServer first(handler);
  const int port = first.bind("127.0.0.1", 0);
  HttpServer second(handler);
  try {
    second.bind("127.0.0.1", port);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnavailable);
  }
}

}  // namespace
}  // namespace iadet
