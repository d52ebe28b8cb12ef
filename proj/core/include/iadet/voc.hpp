#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace iadet {

/// Raw bndbox values. Not validated: degenerate VOC boxes exist.
struct VocBndBox {
  double xmin;
  double ymin;
  double xmax;
  double ymax;
};

struct VocObject {
  std::string name;
  VocBndBox bndbox;
  bool difficult = false;
};

struct VocAnnotation {
  std::string filename;
  int width = 0;
  int height = 0;
  std::vector<VocObject> objects;
};

/// Parses the subset of a PASCAL VOC annotation this project needs:
/// filename, size and object name/bndbox. Throws kParse.
VocAnnotation parse_voc_annotation(std::istream& xml);
VocAnnotation parse_voc_annotation(const std::filesystem::path& file);

}  // namespace iadet
