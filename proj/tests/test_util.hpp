#pragma once

// Shared fixtures and helpers for the test suites.

#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "patsnd/kb.hpp"

namespace testutil {

// Unique temp file/dir under the build tree, removed on destruction.
class TempPath {
 public:
  explicit TempPath(const std::string& stem) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("patsnd_test_" + stem + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
  }
  ~TempPath() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

  void write(const std::string& content) const {
    std::ofstream out(path_);
    out << content;
  }

 private:
  std::filesystem::path path_;
};

inline patsnd::EntityRecord simple_entity(const std::string& id, const std::string& label,
                                          const std::string& type_value = "") {
  std::vector<patsnd::RawProperty> props;
  if (!type_value.empty()) {
    props.push_back({"P31", "instance of", {type_value}});
  }
  return patsnd::make_entity_record(id, label, "", props);
}

// Three-entity KB used by the contrastive-generation oracles.
inline patsnd::KnowledgeBase tiny_kb() {
  patsnd::KnowledgeBase kb;
  kb.add_entity(simple_entity("a", "Alpha"));
  kb.add_entity(simple_entity("b", "Beta"));
  kb.add_entity(simple_entity("c", "Gamma"));
  kb.set_relations({{"r", "related to", ""}});
  return kb;
}

}  // namespace testutil
