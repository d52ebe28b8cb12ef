#include "fixtures.hpp"

#include <array>
#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace iadet::testing {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_png_header(const std::filesystem::path& file, int width, int height) {
  std::array<unsigned char, 33> bytes{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n',
                                      0,    0,   0,   13,  'I',  'H',  'D',  'R'};
  auto put32 = [&](std::size_t at, std::uint32_t v) {
    bytes[at] = static_cast<unsigned char>(v >> 24);
    bytes[at + 1] = static_cast<unsigned char>(v >> 16);
    bytes[at + 2] = static_cast<unsigned char>(v >> 8);
    bytes[at + 3] = static_cast<unsigned char>(v);
  };
  put32(16, static_cast<std::uint32_t>(width));
  put32(20, static_cast<std::uint32_t>(height));
  bytes[24] = 8;  // bit depth
  bytes[25] = 2;  // truecolour
  std::ofstream out(file, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  out << text;
}

std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Box random_box(DeterministicStream& rng, double extent) {
  const double x0 = rng.uniform(0.0, extent - 1.0);
  const double y0 = rng.uniform(0.0, extent - 1.0);
  const double x1 = rng.uniform(x0 + 1.0, extent);
  const double y1 = rng.uniform(y0 + 1.0, extent);
  return Box(x0, y0, x1, y1);
}

std::vector<ImageRecord> grid_dataset(std::size_t images, std::size_t boxes_per_image) {
  std::vector<ImageRecord> out;
  for (std::size_t i = 0; i < images; ++i) {
    ImageRecord r;
    r.id = "im" + std::to_string(1000 + i);
    r.path = r.id + ".png";
    r.width = 500;
    r.height = 375;
    std::vector<Box> boxes;
    for (std::size_t b = 0; b < boxes_per_image; ++b) {
      const double x = 10.0 + 120.0 * static_cast<double>(b % 4);
      const double y = 10.0 + 120.0 * static_cast<double>(b / 4 % 3);
      boxes.emplace_back(x, y, x + 100.0, y + 100.0);
    }
    r.gt_boxes = std::move(boxes);
    out.push_back(std::move(r));
  }
  return out;
}

std::string voc_xml(const std::string& filename, int width, int height,
                    const std::vector<std::pair<std::string, Box>>& objects) {
  std::ostringstream x;
  x << "<annotation>\n  <folder>VOC2012</folder>\n  <filename>" << filename << "</filename>\n"
    << "  <size><width>" << width << "</width><height>" << height
    << "</height><depth>3</depth></size>\n";
  for (const auto& [name, b] : objects) {
    x << "  <object>\n    <name>" << name << "</name>\n    <difficult>0</difficult>\n"
      << "    <bndbox><xmin>" << b.x_min() << "</xmin><ymin>" << b.y_min() << "</ymin><xmax>"
      << b.x_max() << "</xmax><ymax>" << b.y_max() << "</ymax></bndbox>\n  </object>\n";
  }
  x << "</annotation>\n";
  return x.str();
}

MatchInstance random_match_instance(DeterministicStream& rng) {
  MatchInstance m;
  const auto np = rng.uniform_index(5);
  const auto ng = rng.uniform_index(5);
  for (std::uint64_t i = 0; i < ng; ++i) m.ground_truths.push_back(random_box(rng, 30));
  for (std::uint64_t i = 0; i < np; ++i) {
    m.predictions.emplace_back(random_box(rng, 30), static_cast<double>(rng.uniform_index(4)) / 4);
  }
  return m;
}

std::vector<EvalSample> random_eval_set(DeterministicStream& rng) {
  std::vector<EvalSample> samples;
  const std::uint64_t images = 1 + rng.uniform_index(3);
  std::size_t predictions_left = 1 + rng.uniform_index(10);
  std::size_t positives = 0;
  for (std::uint64_t i = 0; i < images; ++i) {
    EvalSample s;
    s.image_id = "img" + std::to_string(i);
    const std::uint64_t ng = rng.uniform_index(3);
    for (std::uint64_t g = 0; g < ng && positives < 5; ++g, ++positives) {
      s.ground_truths.push_back(random_box(rng, 20));
    }
    const std::uint64_t np = i + 1 == images ? predictions_left : rng.uniform_index(predictions_left + 1);
    predictions_left -= np;
    for (std::uint64_t p = 0; p < np; ++p) {
      Box b = random_box(rng, 20);
      if (!s.ground_truths.empty() && rng.uniform() < 0.5) {
        b = s.ground_truths[rng.uniform_index(s.ground_truths.size())].translated(rng.uniform(-1, 1), 0);
      }
      s.predictions.emplace_back(b, static_cast<double>(rng.uniform_index(8)) / 8.0);
    }
    samples.push_back(std::move(s));
  }
  if (positives == 0) samples[0].ground_truths.push_back(Box(0, 0, 5, 5));
  return samples;
}

}  // namespace iadet::testing
