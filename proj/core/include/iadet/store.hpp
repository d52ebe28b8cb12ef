#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iadet/geometry.hpp"

namespace iadet {

struct ImageRecord {
  std::string id;
  std::string path;  // relative to the image directory
  int width = 0;
  int height = 0;
  std::vector<Box> user_boxes;
  std::optional<std::vector<Box>> gt_boxes;  // simulation only
  bool labeled = false;
  std::optional<double> labeled_at;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/// Point-in-time view of every labeled record. Immutable once issued.
struct AnnotationSnapshot {
  std::uint64_t snapshot_version = 0;
  std::vector<ImageRecord> records;
  double created_at = 0.0;
};

/// One record per readable .png/.jpg/.jpeg/.bmp file directly inside the
/// directory, ordered by file name. The id is the file stem. Unreadable
/// headers are skipped with a warning.
std::vector<ImageRecord> scan_dataset(const std::filesystem::path& directory);

/// Canonical annotation-file JSON: {"version", "created_at", "images": [{"id",
/// "path", "width", "height", "boxes", "labeled", "labeled_at"}]}. Ground truth
/// is never written here.
std::string serialize_annotation_file(std::uint64_t version, double created_at,
                                      std::span<const ImageRecord> records);

std::string serialize_snapshot(const AnnotationSnapshot& snapshot);

/// Inverse of serialize_annotation_file. Throws kParse on malformed input.
AnnotationSnapshot parse_annotation_file(std::string_view json);

struct VocImportSummary {
  std::size_t images = 0;  // images holding at least one instance of the class
  std::size_t boxes = 0;
  std::size_t files = 0;
  std::size_t skipped_boxes = 0;  // degenerate after clamping
  std::vector<std::string> errors;  // one entry per unreadable file
  std::vector<std::string> available_classes;
};

/// Annotation state with a single-writer, multi-reader contract. Every
/// mutation builds a new immutable state, persists it (write to a temporary
/// file, then rename) and only then publishes it, so readers never observe a
/// torn state and a failed write leaves the previous state in place.
///
/// A persistent store lives in a directory holding annotations.json and, when
/// ground truth was imported, ground_truth.json.
class AnnotationStore {
 public:
  /// Store without persistence (simulation).
  explicit AnnotationStore(std::vector<ImageRecord> records);

  AnnotationStore(const AnnotationStore&) = delete;
  AnnotationStore& operator=(const AnnotationStore&) = delete;

  static std::unique_ptr<AnnotationStore> create(const std::filesystem::path& directory,
                                                 std::vector<ImageRecord> records);
  static std::unique_ptr<AnnotationStore> open(const std::filesystem::path& directory);
  static bool exists(const std::filesystem::path& directory);

  /// Replaces the image's boxes (clamped to the image), marks it labeled and
  /// persists. Returns the new snapshot version.
  std::uint64_t put_annotations(std::string_view image_id, std::vector<Box> boxes,
                                double timestamp);

  std::shared_ptr<const AnnotationSnapshot> snapshot() const;

  std::optional<ImageRecord> get(std::string_view image_id) const;
  std::vector<ImageRecord> records() const;
  std::vector<std::string> ids() const;
  std::uint64_t version() const;
  std::size_t size() const;
  std::size_t labeled_count() const;
  bool has_ground_truth() const;

  /// Reads every *.xml under the directory, keeps objects of the class and
  /// restricts the dataset to images with at least one instance. An empty
  /// store is populated from the XML files themselves. Parse failures are
  /// collected per file. Throws kUnknownClass when files were read but none
  /// mentions the class.
  VocImportSummary import_voc_ground_truth(const std::filesystem::path& annotation_directory,
                                           std::string_view class_name);

  /// Attaches ground truth by image id; images without an entry are dropped.
  void set_ground_truth(std::vector<std::pair<std::string, std::vector<Box>>> ground_truth);

  std::optional<std::filesystem::path> directory() const;

 private:
  struct State {
    std::uint64_t version = 0;
    double created_at = 0.0;
    std::vector<ImageRecord> records;
  };

  std::shared_ptr<const State> current() const;
  void commit(std::shared_ptr<const State> next, bool ground_truth_changed);
  void persist(const State& state, bool ground_truth_changed) const;

  std::optional<std::filesystem::path> directory_;
  mutable std::shared_mutex mutex_;
  std::mutex writer_;
  std::shared_ptr<const State> state_;
};

}  // namespace iadet
