#include "iadet/service.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "iadet/error.hpp"
#include "iadet/image_header.hpp"
#include "iadet/protocol.hpp"

namespace iadet {
namespace {

using ojson = nlohmann::ordered_json;

HttpResponse json_response(const ojson& j, int status = 200) {
  return {status, "application/json", j.dump()};
}

ojson boxes_json(std::span<const Box> boxes) {
  ojson out = ojson::array();
  for (const Box& b : boxes) out.push_back({b.x_min(), b.y_min(), b.x_max(), b.y_max()});
  return out;
}

std::vector<Box> parse_box_body(std::string_view body) {
  ojson j;
  try {
    j = ojson::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("request body is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("boxes") || !j["boxes"].is_array()) {
    throw Error(ErrorCode::kParse, "expected {\"boxes\": [[x_min, y_min, x_max, y_max], ...]}");
  }
  std::vector<Box> boxes;
  for (const auto& b : j["boxes"]) {
    if (!b.is_array() || b.size() != 4 || !b[0].is_number() || !b[1].is_number() ||
        !b[2].is_number() || !b[3].is_number()) {
      throw Error(ErrorCode::kParse, "each box must be four numbers");
    }
    boxes.emplace_back(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                       b[3].get<double>());
  }
  return boxes;
}

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> parts;
  while (!path.empty()) {
    if (path.front() == '/') {
      path.remove_prefix(1);
      continue;
    }
    const auto slash = path.find('/');
    parts.push_back(path.substr(0, slash));
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash);
  }
  return parts;
}

}  // namespace

std::string to_json(const StatusView& s) {
  ojson j;
  j["model_version"] = s.model_version;
  j["epochs"] = s.epochs ? ojson(*s.epochs) : ojson(nullptr);
  j["last_loss"] = s.last_loss ? ojson(*s.last_loss) : ojson(nullptr);
  j["labeled"] = s.labeled;
  j["total"] = s.total;
  j["strategy"] = to_string(s.strategy);
  j["elapsed"] = s.elapsed;
  return j.dump();
}

AnnotationService::AnnotationService(AnnotationStore& store, std::filesystem::path image_directory,
                                     Detector* detector, ModelRegistry& registry,
                                     StrategyKind strategy, std::uint64_t seed, const Clock& clock)
    : store_(store),
      image_directory_(std::move(image_directory)),
      detector_(detector),
      registry_(registry),
      strategy_(strategy),
      order_(SelectionState(store.ids(), strategy, seed).order()),
      clock_(clock) {}

HttpResponse AnnotationService::handle(std::string_view method, std::string_view path,
                                       std::string_view body) {
  try {
    const auto parts = split_path(path);
    if (parts.size() == 1) {
      if (method == "GET" && parts[0] == "images") return list_images();
      if (method == "GET" && parts[0] == "status") return {200, "application/json", to_json(status())};
      if (method == "GET" && parts[0] == "snapshot") return snapshot();
      if (method == "GET" && parts[0] == "next") return next();
      if (method == "POST" && parts[0] == "model-versions") return publish_model(body);
    } else if (parts.size() == 3 && parts[0] == "images") {
      const std::string_view id = parts[1];
      if (method == "GET" && parts[2] == "file") return image_file(id);
      if (method == "GET" && parts[2] == "predictions") return predictions(id);
      if (method == "GET" && parts[2] == "annotations") return get_annotations(id);
      if (method == "PUT" && parts[2] == "annotations") return put_annotations(id, body);
    }
    return error_response(404, "not_found",
                          std::string(method) + " " + std::string(path) + " is not an endpoint");
  } catch (const std::exception& e) {
    return error_response(e);
  }
}

StatusView AnnotationService::status() const {
  StatusView s;
  const auto model = registry_.latest();
  s.model_version = model->version;
  if (model->training_meta) {
    s.epochs = model->training_meta->epochs;
    s.last_loss = model->training_meta->last_loss;
  }
  const auto records = store_.records();
  s.total = records.size();
  for (const ImageRecord& r : records) s.labeled += r.labeled ? 1 : 0;
  s.strategy = strategy_;
  s.elapsed = clock_.now();
  return s;
}

ImageRecord AnnotationService::require(std::string_view id) const {
  auto record = store_.get(id);
  if (!record) throw Error(ErrorCode::kNotFound, "no image '" + std::string(id) + "'");
  return *record;
}

HttpResponse AnnotationService::list_images() const {
  ojson out = ojson::array();
  for (const ImageRecord& r : store_.records()) {
    out.push_back({{"id", r.id},
                   {"path", r.path},
                   {"width", r.width},
                   {"height", r.height},
                   {"labeled", r.labeled}});
  }
  return json_response(out);
}

HttpResponse AnnotationService::image_file(std::string_view id) const {
  const ImageRecord record = require(id);
  const auto file = image_directory_ / record.path;
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "image file missing for '" + record.id + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return {200, std::string(image_content_type(file)), std::move(bytes)};
}

HttpResponse AnnotationService::predictions(std::string_view id) {
  const ImageRecord record = require(id);
  const auto model = registry_.latest();
  ojson out;
  out["image_id"] = record.id;
  out["model_version"] = model->version;
  if (record.labeled) {
    out["user_precedence"] = true;
    out["degraded"] = false;
    out["boxes"] = ojson::array();
    out["user_boxes"] = boxes_json(record.user_boxes);
    return json_response(out);
  }
  Prediction pred;
  pred.image_id = record.id;
  pred.model_version = model->version;
  pred.degraded = true;
  if (detector_ != nullptr) {
    try {
      pred = detector_->predict(record, *model);
    } catch (const Error& e) {
      spdlog::warn("prediction for {} failed: {}", record.id, e.what());
      pred = Prediction{record.id, model->version, {}, {}, true};
    }
  }
  out["model_version"] = pred.model_version;
  out["user_precedence"] = false;
  out["degraded"] = pred.degraded;
  ojson boxes = ojson::array();
  for (const ScoredBox& b : pred.kept_boxes) {
    boxes.push_back({{"x_min", b.box.x_min()},
                     {"y_min", b.box.y_min()},
                     {"x_max", b.box.x_max()},
                     {"y_max", b.box.y_max()},
                     {"score", b.score}});
  }
  out["boxes"] = std::move(boxes);
  out["user_boxes"] = ojson::array();
  return json_response(out);
}

HttpResponse AnnotationService::get_annotations(std::string_view id) const {
  const ImageRecord record = require(id);
  return json_response(
      {{"image_id", record.id}, {"labeled", record.labeled}, {"boxes", boxes_json(record.user_boxes)}});
}

HttpResponse AnnotationService::put_annotations(std::string_view id, std::string_view body) {
  require(id);
  auto boxes = parse_box_body(body);
  const std::uint64_t version = store_.put_annotations(id, std::move(boxes), clock_.now());
  if (on_commit_) on_commit_();
  const ImageRecord record = require(id);
  return json_response({{"image_id", record.id},
                        {"version", version},
                        {"labeled", record.labeled},
                        {"boxes", boxes_json(record.user_boxes)}});
}

HttpResponse AnnotationService::snapshot() const {
  return {200, "application/json", serialize_snapshot(*store_.snapshot())};
}

HttpResponse AnnotationService::publish_model(std::string_view body) {
  const WorkerStatus reported = parse_worker_status(body);
  const auto current = registry_.latest();
  if (reported.model_version == current->version && current->source == ModelSource::kExternal) {
    return json_response({{"model_version", current->version}});
  }
  ModelVersion next;
  next.version = reported.model_version;
  next.created_at = clock_.now();
  next.source = ModelSource::kExternal;
  const auto snap = store_.snapshot();
  next.training_meta =
      TrainingMeta{reported.epochs, snap->snapshot_version, snap->records.size(), reported.last_loss};
  registry_.publish(next);
  return json_response({{"model_version", next.version}});
}

HttpResponse AnnotationService::next() const {
  const auto records = store_.records();
  std::set<std::string, std::less<>> labeled;
  for (const ImageRecord& r : records) {
    if (r.labeled) labeled.insert(r.id);
  }
  for (const std::string& id : order_) {
    if (!labeled.contains(id)) return json_response({{"image_id", id}, {"done", false}});
  }
  return json_response({{"image_id", nullptr}, {"done", true}});
}

}  // namespace iadet
