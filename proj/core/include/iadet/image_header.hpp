#pragma once

#include <filesystem>
#include <optional>
#include <string_view>

namespace iadet {

struct ImageSize {
  int width;
  int height;
};

/// Reads pixel dimensions from a PNG, JPEG or BMP header without decoding the
/// image. Returns nullopt for unknown or truncated files.
std::optional<ImageSize> read_image_size(const std::filesystem::path& file);

bool is_supported_image(const std::filesystem::path& file);

/// "image/png", "image/jpeg", "image/bmp" or "application/octet-stream".
std::string_view image_content_type(const std::filesystem::path& file);

}  // namespace iadet
