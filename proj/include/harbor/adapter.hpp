#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "harbor/flagspace.hpp"
#include "harbor/simulator.hpp"

namespace harbor {

struct TaskResult {
  std::string task_id;
  bool passed = false;
  double cost = 0.0;
  int turns = 0;
  bool timed_out = false;
  std::map<std::string, double> counters;
};

/// Transport-level failure talking to an adapter; the evaluation may be
/// retried after the adapter restarts.
class AdapterTransportError : public std::runtime_error {
 public:
  AdapterTransportError(const std::string& what, std::string task_id)
      : std::runtime_error(what), task_id_(std::move(task_id)) {}
  const std::string& task_id() const noexcept { return task_id_; }

 private:
  std::string task_id_;
};

/// Adapter sent something that is not a valid protocol message. Fatal.
class AdapterProtocolError : public std::runtime_error {
 public:
  AdapterProtocolError(const std::string& what, std::string payload)
      : std::runtime_error(what + ": " + payload), payload_(std::move(payload)) {}
  const std::string& payload() const noexcept { return payload_; }

 private:
  std::string payload_;
};

/// Runs single tasks for a configuration. Implementations must return results
/// in request order.
class Adapter {
 public:
  virtual ~Adapter() = default;

  /// Whether concurrent task requests are tolerated.
  virtual bool parallel() const = 0;

  virtual std::vector<TaskResult> run_tasks(const Configuration& config, const std::vector<std::string>& tasks,
                                            std::int64_t session_index, std::uint64_t seed,
                                            std::size_t parallelism) = 0;

  /// Re-establishes the transport after an AdapterTransportError.
  virtual void restart() {}
};

/// In-process simulator. Thread-safe; fans tasks out over `parallelism`
/// worker threads.
class SimAdapter final : public Adapter {
 public:
  SimAdapter(SimSpec spec, FlagSpace space) : spec_(std::move(spec)), space_(std::move(space)) {}

  bool parallel() const override { return true; }
  std::vector<TaskResult> run_tasks(const Configuration& config, const std::vector<std::string>& tasks,
                                    std::int64_t session_index, std::uint64_t seed,
                                    std::size_t parallelism) override;

  const SimSpec& spec() const { return spec_; }

 private:
  SimSpec spec_;
  FlagSpace space_;
};

struct ProcessAdapterOptions {
  /// Seconds to wait for one task's response; 0 waits forever.
  double task_timeout = 0.0;
  /// Cost charged for a timed-out task.
  double timeout_cost = 1.0;
};

/// Talks the line-delimited JSON protocol to a child process started with
/// `/bin/sh -c command`. Requests are pipelined up to the parallelism the
/// child declared in its hello message.
class ProcessAdapter final : public Adapter {
 public:
  ProcessAdapter(std::string command, FlagSpace space, ProcessAdapterOptions options = {});
  ~ProcessAdapter() override;
  ProcessAdapter(const ProcessAdapter&) = delete;
  ProcessAdapter& operator=(const ProcessAdapter&) = delete;

  bool parallel() const override { return parallel_; }
  std::vector<TaskResult> run_tasks(const Configuration& config, const std::vector<std::string>& tasks,
                                    std::int64_t session_index, std::uint64_t seed,
                                    std::size_t parallelism) override;
  void restart() override;

 private:
  void spawn();
  void shutdown();
  void send_line(const std::string& line, const std::string& task_id);
  /// Next complete line, or nullopt on timeout. Throws on EOF.
  std::optional<std::string> read_line(double timeout_seconds, const std::string& task_id);

  std::string command_;
  FlagSpace space_;
  ProcessAdapterOptions options_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  bool parallel_ = false;
};

namespace wire {

Json eval_request(const Json& config, const std::string& task_id, std::int64_t session_index, std::uint64_t seed);
Json result_message(const TaskResult& result);
Json hello_message(bool parallel);
/// Validates and decodes a result message; throws AdapterProtocolError.
TaskResult parse_result(const std::string& line);

}  // namespace wire

/// Serves the adapter protocol over a stream pair using the simulator:
/// writes hello, then answers one result line per eval line until EOF.
void serve_simulator(std::istream& in, std::ostream& out, const SimSpec& spec, const FlagSpace& space);

}  // namespace harbor
