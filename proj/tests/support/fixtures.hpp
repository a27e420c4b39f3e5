#pragma once

#include <fstream>
#include <string>

#include "hinembed/hin_graph.hpp"

namespace fixtures {

inline hinembed::Schema follows_schema() {
  hinembed::Schema s;
  s.add_entity_type("user");
  s.add_relation_type("follows", "user", "user", hinembed::Coverage::High);
  return s;
}

inline hinembed::Schema user_item_schema() {
  hinembed::Schema s;
  s.add_entity_type("user");
  s.add_entity_type("item");
  s.add_relation_type("follows", "user", "user", hinembed::Coverage::High);
  s.add_relation_type("engages", "user", "item", hinembed::Coverage::High);
  return s;
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  out << contents;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace fixtures
