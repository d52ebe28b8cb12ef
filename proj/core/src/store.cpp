#include "iadet/store.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "iadet/error.hpp"
#include "json_util.hpp"
#include "iadet/image_header.hpp"
#include "iadet/voc.hpp"

namespace fs = std::filesystem;

namespace iadet {
namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kAnnotationFile = "annotations.json";
constexpr const char* kGroundTruthFile = "ground_truth.json";

ojson boxes_to_json(std::span<const Box> boxes) {
  ojson out = ojson::array();
  for (const Box& b : boxes) out.push_back({b.x_min(), b.y_min(), b.x_max(), b.y_max()});
  return out;
}

std::vector<Box> boxes_from_json(const ojson& j) {
  std::vector<Box> out;
  for (const auto& b : j) {
    if (!b.is_array() || b.size() != 4) {
      throw Error(ErrorCode::kParse, "box must be an array of four numbers");
    }
    out.emplace_back(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                     b[3].get<double>());
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomically(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot replace " + path.string());
  }
}

std::string serialize_ground_truth(std::span<const ImageRecord> records) {
  ojson images = ojson::array();
  for (const ImageRecord& r : records) {
    if (!r.gt_boxes) continue;
    images.push_back({{"id", r.id}, {"boxes", boxes_to_json(*r.gt_boxes)}});
  }
  ojson doc = {{"images", std::move(images)}};
  return doc.dump(2) + "\n";
}

std::vector<Box> clamp_boxes(const ImageRecord& record, std::vector<Box> boxes) {
  if (record.width <= 0 || record.height <= 0) return boxes;
  for (Box& b : boxes) b = b.clamped(record.width, record.height);
  return boxes;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::vector<ImageRecord> scan_dataset(const fs::path& directory) {
  std::error_code ec;
  fs::directory_iterator it(directory, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot read directory " + directory.string());

  std::vector<fs::path> files;
  for (const auto& entry : it) {
    if (entry.is_regular_file() && is_supported_image(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  std::vector<ImageRecord> records;
  std::set<std::string> ids;
  for (const fs::path& file : files) {
    const auto size = read_image_size(file);
    if (!size) {
      spdlog::warn("skipping {}: unreadable image header", file.string());
      continue;
    }
    std::string id = file.stem().string();
    if (!ids.insert(id).second) {
      spdlog::warn("skipping {}: duplicate image id '{}'", file.string(), id);
      continue;
    }
    ImageRecord record;
    record.id = std::move(id);
    record.path = file.filename().string();
    record.width = size->width;
    record.height = size->height;
    records.push_back(std::move(record));
  }
  return records;
}

std::string serialize_annotation_file(std::uint64_t version, double created_at,
                                      std::span<const ImageRecord> records) {
  ojson images = ojson::array();
  for (const ImageRecord& r : records) {
    ojson img;
    img["id"] = r.id;
    img["path"] = r.path;
    img["width"] = r.width;
    img["height"] = r.height;
    img["boxes"] = boxes_to_json(r.user_boxes);
    img["labeled"] = r.labeled;
    img["labeled_at"] = r.labeled_at ? ojson(*r.labeled_at) : ojson(nullptr);
    images.push_back(std::move(img));
  }
  ojson doc;
  doc["version"] = version;
  doc["created_at"] = created_at;
  doc["images"] = std::move(images);
  return doc.dump(2) + "\n";
}

std::string serialize_snapshot(const AnnotationSnapshot& snapshot) {
  return serialize_annotation_file(snapshot.snapshot_version, snapshot.created_at,
                                   snapshot.records);
}

AnnotationSnapshot parse_annotation_file(std::string_view json) {
  try {
    const ojson doc = ojson::parse(json);
    AnnotationSnapshot snap;
    snap.snapshot_version = detail::as_unsigned(doc.at("version"));
    snap.created_at = doc.at("created_at").get<double>();
    for (const auto& img : doc.at("images")) {
      ImageRecord r;
      r.id = img.at("id").get<std::string>();
      r.path = img.at("path").get<std::string>();
      r.width = img.at("width").get<int>();
      r.height = img.at("height").get<int>();
      r.user_boxes = boxes_from_json(img.at("boxes"));
      r.labeled = img.at("labeled").get<bool>();
      if (!img.at("labeled_at").is_null()) r.labeled_at = img.at("labeled_at").get<double>();
      if (r.labeled && !r.labeled_at) {
        throw Error(ErrorCode::kParse, "labeled image " + r.id + " lacks labeled_at");
      }
      snap.records.push_back(std::move(r));
    }
    return snap;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed annotation file: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) throw;
    throw Error(ErrorCode::kParse, std::string("malformed annotation file: ") + e.what());
  }
}

AnnotationStore::AnnotationStore(std::vector<ImageRecord> records) {
  auto state = std::make_shared<State>();
  state->records = std::move(records);
  state_ = std::move(state);
}

std::unique_ptr<AnnotationStore> AnnotationStore::create(const fs::path& directory,
                                                         std::vector<ImageRecord> records) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + directory.string());
  const bool has_gt = std::any_of(records.begin(), records.end(),
                                  [](const ImageRecord& r) { return r.gt_boxes.has_value(); });
  auto store = std::make_unique<AnnotationStore>(std::move(records));
  store->directory_ = directory;
  store->persist(*store->state_, has_gt);
  return store;
}

std::unique_ptr<AnnotationStore> AnnotationStore::open(const fs::path& directory) {
  const AnnotationSnapshot file = parse_annotation_file(read_file(directory / kAnnotationFile));
  auto state = std::make_shared<State>();
  state->version = file.snapshot_version;
  state->created_at = file.created_at;
  state->records = file.records;

  const fs::path gt_path = directory / kGroundTruthFile;
  if (fs::exists(gt_path)) {
    try {
      const ojson doc = ojson::parse(read_file(gt_path));
      std::map<std::string, std::vector<Box>> gt;
      for (const auto& img : doc.at("images")) {
        gt[img.at("id").get<std::string>()] = boxes_from_json(img.at("boxes"));
      }
      for (ImageRecord& r : state->records) {
        if (auto it = gt.find(r.id); it != gt.end()) r.gt_boxes = it->second;
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse, std::string("malformed ground truth file: ") + e.what());
    }
  }

  auto store = std::make_unique<AnnotationStore>(std::vector<ImageRecord>{});
  store->directory_ = directory;
  store->state_ = std::move(state);
  return store;
}

bool AnnotationStore::exists(const fs::path& directory) {
  return fs::exists(directory / kAnnotationFile);
}

std::shared_ptr<const AnnotationStore::State> AnnotationStore::current() const {
  std::shared_lock lock(mutex_);
  return state_;
}

void AnnotationStore::persist(const State& state, bool ground_truth_changed) const {
  if (!directory_) return;
  write_atomically(*directory_ / kAnnotationFile,
                   serialize_annotation_file(state.version, state.created_at, state.records));
  if (ground_truth_changed) {
    write_atomically(*directory_ / kGroundTruthFile, serialize_ground_truth(state.records));
  }
}

void AnnotationStore::commit(std::shared_ptr<const State> next, bool ground_truth_changed) {
  persist(*next, ground_truth_changed);
  std::unique_lock lock(mutex_);
  state_ = std::move(next);
}

std::uint64_t AnnotationStore::put_annotations(std::string_view image_id, std::vector<Box> boxes,
                                               double timestamp) {
  std::lock_guard writer(writer_);
  auto base = current();
  auto next = std::make_shared<State>(*base);
  auto it = std::find_if(next->records.begin(), next->records.end(),
                         [&](const ImageRecord& r) { return r.id == image_id; });
  if (it == next->records.end()) {
    throw Error(ErrorCode::kNotFound, "unknown image id: " + std::string(image_id));
  }
  it->user_boxes = clamp_boxes(*it, std::move(boxes));
  it->labeled = true;
  it->labeled_at = timestamp;
  next->version = base->version + 1;
  next->created_at = timestamp;
  const std::uint64_t version = next->version;
  commit(std::move(next), false);
  return version;
}

std::shared_ptr<const AnnotationSnapshot> AnnotationStore::snapshot() const {
  auto state = current();
  auto snap = std::make_shared<AnnotationSnapshot>();
  snap->snapshot_version = state->version;
  snap->created_at = state->created_at;
  for (const ImageRecord& r : state->records) {
    if (!r.labeled) continue;
    ImageRecord copy = r;
    copy.gt_boxes.reset();
    snap->records.push_back(std::move(copy));
  }
  return snap;
}

std::optional<ImageRecord> AnnotationStore::get(std::string_view image_id) const {
  auto state = current();
  for (const ImageRecord& r : state->records) {
    if (r.id == image_id) return r;
  }
  return std::nullopt;
}

std::vector<ImageRecord> AnnotationStore::records() const { return current()->records; }

std::vector<std::string> AnnotationStore::ids() const {
  auto state = current();
  std::vector<std::string> out;
  out.reserve(state->records.size());
  for (const ImageRecord& r : state->records) out.push_back(r.id);
  return out;
}

std::uint64_t AnnotationStore::version() const { return current()->version; }

std::size_t AnnotationStore::size() const { return current()->records.size(); }

std::size_t AnnotationStore::labeled_count() const {
  auto state = current();
  return static_cast<std::size_t>(std::count_if(state->records.begin(), state->records.end(),
                                                [](const ImageRecord& r) { return r.labeled; }));
}

bool AnnotationStore::has_ground_truth() const {
  auto state = current();
  return !state->records.empty() &&
         std::all_of(state->records.begin(), state->records.end(),
                     [](const ImageRecord& r) { return r.gt_boxes.has_value(); });
}

std::optional<fs::path> AnnotationStore::directory() const { return directory_; }

void AnnotationStore::set_ground_truth(
    std::vector<std::pair<std::string, std::vector<Box>>> ground_truth) {
  std::lock_guard writer(writer_);
  auto base = current();
  std::map<std::string, std::vector<Box>> by_id(ground_truth.begin(), ground_truth.end());
  auto next = std::make_shared<State>();
  next->version = base->version + 1;
  next->created_at = base->created_at;
  for (const ImageRecord& r : base->records) {
    auto it = by_id.find(r.id);
    if (it == by_id.end()) continue;
    ImageRecord copy = r;
    copy.gt_boxes = clamp_boxes(copy, it->second);
    next->records.push_back(std::move(copy));
  }
  commit(std::move(next), true);
}

VocImportSummary AnnotationStore::import_voc_ground_truth(const fs::path& annotation_directory,
                                                          std::string_view class_name) {
  std::error_code ec;
  fs::directory_iterator it(annotation_directory, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot read directory " + annotation_directory.string());
  std::vector<fs::path> files;
  for (const auto& entry : it) {
    if (entry.is_regular_file() && to_lower(entry.path().extension().string()) == ".xml") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  VocImportSummary summary;
  summary.files = files.size();
  std::set<std::string> classes;
  std::vector<ImageRecord> from_xml;
  for (const fs::path& file : files) {
    VocAnnotation ann;
    try {
      ann = parse_voc_annotation(file);
    } catch (const Error& e) {
      summary.errors.push_back(file.filename().string() + ": " + e.what());
      continue;
    }
    ImageRecord record;
    record.id = fs::path(ann.filename.empty() ? file.filename().string() : ann.filename)
                    .stem()
                    .string();
    record.path = ann.filename.empty() ? record.id + ".jpg" : ann.filename;
    record.width = ann.width;
    record.height = ann.height;
    std::vector<Box> boxes;
    for (const VocObject& obj : ann.objects) {
      classes.insert(obj.name);
      if (obj.name != class_name) continue;
      const VocBndBox& b = obj.bndbox;
      double x0 = b.xmin, y0 = b.ymin, x1 = b.xmax, y1 = b.ymax;
      if (record.width > 0 && record.height > 0) {
        x0 = std::clamp(x0, 0.0, double(record.width));
        x1 = std::clamp(x1, 0.0, double(record.width));
        y0 = std::clamp(y0, 0.0, double(record.height));
        y1 = std::clamp(y1, 0.0, double(record.height));
      }
      if (!(x1 > x0) || !(y1 > y0)) {
        spdlog::warn("{}: skipping degenerate '{}' box", file.filename().string(), obj.name);
        ++summary.skipped_boxes;
        continue;
      }
      boxes.emplace_back(x0, y0, x1, y1);
    }
    if (boxes.empty()) continue;
    record.gt_boxes = std::move(boxes);
    from_xml.push_back(std::move(record));
  }
  summary.available_classes.assign(classes.begin(), classes.end());

  if (!files.empty() && summary.errors.size() < files.size() &&
      !classes.contains(std::string(class_name))) {
    std::string listing;
    for (const std::string& c : summary.available_classes) {
      listing += listing.empty() ? c : ", " + c;
    }
    throw Error(ErrorCode::kUnknownClass,
                "unknown class '" + std::string(class_name) + "'; available: " + listing);
  }

  std::lock_guard writer(writer_);
  auto base = current();
  auto next = std::make_shared<State>();
  next->version = base->version + 1;
  next->created_at = base->created_at;
  if (base->records.empty()) {
    next->records = std::move(from_xml);
  } else {
    std::map<std::string, const ImageRecord*> by_id;
    for (const ImageRecord& r : from_xml) by_id[r.id] = &r;
    for (const ImageRecord& r : base->records) {
      auto found = by_id.find(r.id);
      if (found == by_id.end()) continue;
      ImageRecord copy = r;
      copy.gt_boxes = clamp_boxes(copy, *found->second->gt_boxes);
      next->records.push_back(std::move(copy));
    }
    if (next->records.size() < from_xml.size()) {
      spdlog::warn("{} annotated images are not part of the dataset",
                   from_xml.size() - next->records.size());
    }
  }
  summary.images = next->records.size();
  for (const ImageRecord& r : next->records) summary.boxes += r.gt_boxes->size();
  commit(std::move(next), true);
  return summary;
}

}  // namespace iadet
