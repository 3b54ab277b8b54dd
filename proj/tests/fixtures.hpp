#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "harbor/driver.hpp"
#include "harbor/simulator.hpp"

namespace fixture {

using harbor::Json;

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string data(const std::string& name) { return std::string(HARBOR_TEST_DATA) + "/" + name; }

inline harbor::FlagSpace load_space(const std::string& name) {
  return harbor::parse_space(std::string_view(slurp(data(name))));
}

inline harbor::SimSpec load_sim(const std::string& name, const harbor::FlagSpace& space) {
  return harbor::parse_sim(Json::parse(slurp(data(name))), space);
}

/// F boolean flags named f0..f{F-1}, split into blocks of `per_block`.
inline Json boolean_space_doc(std::size_t flags, std::size_t per_block) {
  Json doc;
  doc["flags"] = Json::array();
  doc["blocks"] = Json::object();
  for (std::size_t i = 0; i < flags; ++i) {
    const auto name = "f" + std::to_string(i);
    doc["flags"].push_back({{"name", name}});
    doc["blocks"]["b" + std::to_string(i / per_block)].push_back(name);
  }
  return doc;
}

inline harbor::FlagSpace boolean_space(std::size_t flags, std::size_t per_block) {
  return harbor::parse_space(boolean_space_doc(flags, per_block));
}

/// Mixed space: booleans, a numeric threshold, a categorical preset.
inline harbor::FlagSpace mixed_space() {
  return harbor::parse_space(Json::parse(R"({
    "flags": [
      {"name": "cache", "warm_dependent": true, "counters": {"write": ["cache.put"], "consume": ["cache.hit"], "fire_turns": 2}},
      {"name": "compact", "counters": {"write": [], "consume": ["compact.ran"], "fire_turns": 5}},
      {"name": "threshold", "kind": "numeric", "candidates": [0.25, 0.5, 1.0], "default": 0.5},
      {"name": "router", "kind": "categorical", "levels": ["off", "fast", "careful"]},
      {"name": "retry"}
    ],
    "blocks": {"memory": ["cache", "compact"], "tools": ["threshold", "router", "retry"]}
  })"));
}

/// Fresh temporary path, removed on destruction.
struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& stem) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           (stem + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + ".jsonl");
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }
  std::string str() const { return path.string(); }
};

}  // namespace fixture
