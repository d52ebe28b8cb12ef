#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "iadet/geometry.hpp"
#include "iadet/metrics.hpp"
#include "iadet/random.hpp"
#include "iadet/store.hpp"

namespace iadet::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "iadet");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Minimal valid PNG header of the given size (IHDR only, no pixel data).
void write_png_header(const std::filesystem::path& file, int width, int height);

void write_text(const std::filesystem::path& file, const std::string& text);
std::string read_text(const std::filesystem::path& file);

/// Random box inside [0, extent]^2 with sides of at least 1.
Box random_box(DeterministicStream& rng, double extent = 100.0);

/// n images of 500x375 with `boxes_per_image` well separated ground-truth
/// boxes each.
std::vector<ImageRecord> grid_dataset(std::size_t images, std::size_t boxes_per_image);

/// VOC annotation XML for one image.
std::string voc_xml(const std::string& filename, int width, int height,
                    const std::vector<std::pair<std::string, Box>>& objects);

struct MatchInstance {
  std::vector<ScoredBox> predictions;
  std::vector<Box> ground_truths;
};

/// Up to 4 predictions and 4 ground truths in a 30x30 area, scores on a
/// quarter grid so ties occur.
MatchInstance random_match_instance(DeterministicStream& rng);

/// 1-3 images, at most 10 predictions and 5 ground truths in total, at least
/// one positive. About half the predictions sit on a ground truth.
std::vector<EvalSample> random_eval_set(DeterministicStream& rng);

}  // namespace iadet::testing
