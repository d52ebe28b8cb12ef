#include "iadet/image_header.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace iadet {
namespace {

std::string lower_extension(const std::filesystem::path& file) {
  std::string ext = file.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::uint32_t be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

std::uint16_t be16(const unsigned char* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

std::int32_t le32(const unsigned char* p) {
  return static_cast<std::int32_t>(std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
                                   (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24));
}

std::optional<ImageSize> png_size(std::istream& in) {
  static constexpr std::array<unsigned char, 8> kSignature = {0x89, 'P', 'N', 'G',
                                                              '\r', '\n', 0x1a, '\n'};
  std::array<unsigned char, 24> head{};
  if (!in.read(reinterpret_cast<char*>(head.data()), head.size())) return std::nullopt;
  if (!std::equal(kSignature.begin(), kSignature.end(), head.begin())) return std::nullopt;
  if (std::string(head.begin() + 12, head.begin() + 16) != "IHDR") return std::nullopt;
  return ImageSize{static_cast<int>(be32(&head[16])), static_cast<int>(be32(&head[20]))};
}

std::optional<ImageSize> jpeg_size(std::istream& in) {
  unsigned char soi[2];
  if (!in.read(reinterpret_cast<char*>(soi), 2) || soi[0] != 0xff || soi[1] != 0xd8) {
    return std::nullopt;
  }
  for (;;) {
    int c = in.get();
    if (c == EOF) return std::nullopt;
    if (c != 0xff) continue;
    int marker;
    do {
      marker = in.get();
    } while (marker == 0xff);
    if (marker == EOF || marker == 0xd9 || marker == 0xda) return std::nullopt;
    if (marker == 0x01 || (marker >= 0xd0 && marker <= 0xd7)) continue;
    unsigned char len_bytes[2];
    if (!in.read(reinterpret_cast<char*>(len_bytes), 2)) return std::nullopt;
    const int length = be16(len_bytes);
    if (length < 2) return std::nullopt;
    // SOF0..SOF15 except DHT (c4), JPG (c8) and DAC (cc).
    const bool sof = marker >= 0xc0 && marker <= 0xcf && marker != 0xc4 && marker != 0xc8 &&
                     marker != 0xcc;
    if (sof) {
      unsigned char body[5];
      if (!in.read(reinterpret_cast<char*>(body), 5)) return std::nullopt;
      return ImageSize{be16(&body[3]), be16(&body[1])};
    }
    in.seekg(length - 2, std::ios::cur);
    if (!in) return std::nullopt;
  }
}

std::optional<ImageSize> bmp_size(std::istream& in) {
  std::array<unsigned char, 26> head{};
  if (!in.read(reinterpret_cast<char*>(head.data()), head.size())) return std::nullopt;
  if (head[0] != 'B' || head[1] != 'M') return std::nullopt;
  const std::int32_t h = le32(&head[22]);
  return ImageSize{le32(&head[18]), h < 0 ? -h : h};
}

}  // namespace

bool is_supported_image(const std::filesystem::path& file) {
  const std::string ext = lower_extension(file);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

std::string_view image_content_type(const std::filesystem::path& file) {
  const std::string ext = lower_extension(file);
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".bmp") return "image/bmp";
  return "application/octet-stream";
}

std::optional<ImageSize> read_image_size(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  const std::string ext = lower_extension(file);
  std::optional<ImageSize> size;
  if (ext == ".png") {
    size = png_size(in);
  } else if (ext == ".jpg" || ext == ".jpeg") {
    size = jpeg_size(in);
  } else if (ext == ".bmp") {
    size = bmp_size(in);
  }
  if (size && (size->width <= 0 || size->height <= 0)) return std::nullopt;
  return size;
}

}  // namespace iadet
