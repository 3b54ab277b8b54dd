#include "harbor/history.hpp"

#include <stdexcept>

namespace harbor {

Json record_to_json(const EvaluationRecord& r, const FlagSpace& space) {
  Json counters = Json::object();
  for (const auto& [k, v] : r.counters.counters) counters[k] = v;
  return {{"type", "eval"},
          {"index", r.index},
          {"phase", std::string(to_string(r.phase))},
          {"provenance", r.provenance},
          {"config", config_to_json(r.config, space)},
          {"fidelity", r.fidelity},
          {"tasks", r.tasks},
          {"outcomes", r.outcomes},
          {"task_costs", r.task_costs},
          {"timed_out", r.timed_out},
          {"passes", r.passes},
          {"raw_pass_rate", r.raw_pass_rate},
          {"total_cost", r.total_cost},
          {"session_index", r.session_index},
          {"seed", r.seed},
          {"counters", counters},
          {"turn_count", r.counters.turn_count},
          {"warm_fraction", r.warm_fraction},
          {"observation_variance", r.observation_variance},
          {"corrected_target", r.corrected_target},
          {"corrected_variance", r.corrected_variance},
          {"clipped", r.clipped},
          {"uninformative", r.uninformative}};
}

EvaluationRecord record_from_json(const Json& j, const FlagSpace& space) {
  EvaluationRecord r;
  r.index = j.at("index").get<std::size_t>();
  r.phase = phase_from_string(j.at("phase").get<std::string>());
  r.provenance = j.value("provenance", std::string("run"));
  r.config = config_from_json(j.at("config"), space);
  r.fidelity = j.at("fidelity").get<int>();
  r.tasks = j.at("tasks").get<std::vector<std::string>>();
  r.outcomes = j.at("outcomes").get<std::vector<std::uint8_t>>();
  r.task_costs = j.at("task_costs").get<std::vector<double>>();
  r.timed_out = j.value("timed_out", std::vector<std::uint8_t>(r.tasks.size(), 0));
  r.passes = j.at("passes").get<int>();
  r.raw_pass_rate = j.at("raw_pass_rate").get<double>();
  r.total_cost = j.at("total_cost").get<double>();
  r.session_index = j.at("session_index").get<std::int64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  for (auto it = j.at("counters").begin(); it != j.at("counters").end(); ++it)
    r.counters.counters[it.key()] = it.value().get<double>();
  r.counters.turn_count = j.value("turn_count", 0L);
  r.warm_fraction = j.at("warm_fraction").get<double>();
  r.observation_variance = j.at("observation_variance").get<double>();
  r.corrected_target = j.at("corrected_target").get<double>();
  r.corrected_variance = j.at("corrected_variance").get<double>();
  r.clipped = j.at("clipped").get<bool>();
  r.uninformative = j.at("uninformative").get<bool>();
  return r;
}

HistoryWriter::HistoryWriter(const std::string& path) : out_(path, std::ios::out | std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open history file '" + path + "'");
}

void HistoryWriter::write(const Json& line) {
  if (!out_.is_open()) return;
  out_ << line.dump() << '\n';
  out_.flush();
}

HistoryFile read_history(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open history file '" + path + "'");
  HistoryFile h;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const auto type = j.value("type", std::string());
    if (type == "run") {
      h.header = std::move(j);
    } else if (type == "eval") {
      h.evals.push_back(std::move(j));
    } else if (type == "result") {
      h.result = std::move(j);
    } else {
      h.events.push_back(std::move(j));
    }
  }
  return h;
}

}  // namespace harbor
