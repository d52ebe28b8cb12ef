#include "iadet/protocol.hpp"

#include <json.hpp>

#include "iadet/error.hpp"
#include "json_util.hpp"

namespace iadet {
namespace {

using ojson = nlohmann::ordered_json;

template <typename F>
auto parse_body(std::string_view what, std::string_view body, F&& read) {
  try {
    return read(ojson::parse(body));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, "malformed " + std::string(what) + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, "malformed " + std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string to_wire(const PredictRequest& request) {
  ojson j;
  j["image_path"] = request.image_path;
  j["image_id"] = request.image_id;
  return j.dump();
}

std::string to_wire(const PredictResponse& response) {
  ojson boxes = ojson::array();
  for (const ScoredBox& b : response.boxes) {
    ojson entry;
    entry["x_min"] = b.box.x_min();
    entry["y_min"] = b.box.y_min();
    entry["x_max"] = b.box.x_max();
    entry["y_max"] = b.box.y_max();
    entry["score"] = b.score;
    boxes.push_back(std::move(entry));
  }
  ojson j;
  j["model_version"] = response.model_version;
  j["boxes"] = std::move(boxes);
  return j.dump();
}

std::string to_wire(const WorkerStatus& status) {
  ojson j;
  j["model_version"] = status.model_version;
  j["epochs"] = status.epochs;
  j["last_loss"] = status.last_loss ? ojson(*status.last_loss) : ojson(nullptr);
  return j.dump();
}

PredictRequest parse_predict_request(std::string_view body) {
  return parse_body("predict request", body, [](const ojson& j) {
    return PredictRequest{j.at("image_path").get<std::string>(),
                          j.at("image_id").get<std::string>()};
  });
}

PredictResponse parse_predict_response(std::string_view body) {
  return parse_body("predict response", body, [](const ojson& j) {
    PredictResponse r;
    r.model_version = detail::as_unsigned(j.at("model_version"));
    for (const auto& b : j.at("boxes")) {
      r.boxes.emplace_back(Box(b.at("x_min").get<double>(), b.at("y_min").get<double>(),
                               b.at("x_max").get<double>(), b.at("y_max").get<double>()),
                           b.at("score").get<double>());
    }
    return r;
  });
}

WorkerStatus parse_worker_status(std::string_view body) {
  return parse_body("worker status", body, [](const ojson& j) {
    WorkerStatus s;
    s.model_version = detail::as_unsigned(j.at("model_version"));
    if (j.contains("epochs")) s.epochs = detail::as_unsigned(j.at("epochs"));
    if (j.contains("last_loss") && !j.at("last_loss").is_null()) {
      s.last_loss = j.at("last_loss").get<double>();
    }
    return s;
  });
}

}  // namespace iadet
