#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "harbor/flagspace.hpp"
#include "harbor/record.hpp"

namespace harbor {

/// Self-contained JSON form of a record; the configuration is a name->value
/// map so the line can be read without the producing process.
Json record_to_json(const EvaluationRecord& record, const FlagSpace& space);

/// Inverse of record_to_json. Throws DomainError on values outside `space`.
EvaluationRecord record_from_json(const Json& j, const FlagSpace& space);

/// Append-only line-delimited JSON writer; each line is flushed.
class HistoryWriter {
 public:
  HistoryWriter() = default;
  explicit HistoryWriter(const std::string& path);

  bool active() const { return out_.is_open(); }
  void write(const Json& line);

 private:
  std::ofstream out_;
};

struct HistoryFile {
  std::optional<Json> header;  // the "run" line
  std::vector<Json> evals;
  std::vector<Json> events;    // "exclude", "freeze", ...
  std::optional<Json> result;
};

/// Parses a history file; unknown line types are kept as events.
HistoryFile read_history(const std::string& path);

}  // namespace harbor
