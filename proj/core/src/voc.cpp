#include "iadet/voc.hpp"

#include <fstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "iadet/error.hpp"

namespace pt = boost::property_tree;

namespace iadet {

VocAnnotation parse_voc_annotation(std::istream& xml) {
  try {
    pt::ptree tree;
    pt::read_xml(xml, tree, pt::xml_parser::trim_whitespace);
    const pt::ptree& root = tree.get_child("annotation");

    VocAnnotation ann;
    ann.filename = root.get<std::string>("filename", "");
    ann.width = root.get<int>("size.width", 0);
    ann.height = root.get<int>("size.height", 0);
    for (const auto& [key, node] : root) {
      if (key != "object") continue;
      VocObject obj;
      obj.name = node.get<std::string>("name");
      obj.difficult = node.get<int>("difficult", 0) != 0;
      const pt::ptree& bb = node.get_child("bndbox");
      obj.bndbox = {bb.get<double>("xmin"), bb.get<double>("ymin"), bb.get<double>("xmax"),
                    bb.get<double>("ymax")};
      ann.objects.push_back(std::move(obj));
    }
    return ann;
  } catch (const pt::ptree_error& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
}

VocAnnotation parse_voc_annotation(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + file.string());
  return parse_voc_annotation(in);
}

}  // namespace iadet
