#include "harbor/adapter.hpp"

#include <chrono>
#include <csignal>
#include <cstring>
#include <deque>
#include <iostream>
#include <set>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace harbor {

std::vector<TaskResult> SimAdapter::run_tasks(const Configuration& config, const std::vector<std::string>& tasks,
                                              std::int64_t session_index, std::uint64_t seed,
                                              std::size_t parallelism) {
  std::vector<std::size_t> indices;
  indices.reserve(tasks.size());
  for (const auto& id : tasks) indices.push_back(task_index(spec_, id));

  std::vector<TaskResult> out(tasks.size());
  auto work = [&](std::size_t start, std::size_t stride) {
    for (std::size_t k = start; k < tasks.size(); k += stride) {
      auto r = simulate_task(spec_, space_, config, indices[k], session_index, seed);
      out[k].task_id = tasks[k];
      out[k].passed = r.passed;
      out[k].cost = r.cost;
      out[k].turns = r.turns;
      out[k].counters = std::move(r.counters);
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(tasks.size(), 1));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& t : pool) t.join();
  }
  return out;
}

namespace wire {

Json eval_request(const Json& config, const std::string& task_id, std::int64_t session_index, std::uint64_t seed) {
  return {{"type", "eval"}, {"config", config}, {"task_id", task_id}, {"session_index", session_index}, {"seed", seed}};
}

Json result_message(const TaskResult& r) {
  Json counters = Json::object();
  for (const auto& [k, v] : r.counters) counters[k] = v;
  return {{"type", "result"},
          {"task_id", r.task_id},
          {"passed", r.passed ? 1 : 0},
          {"cost", r.cost},
          {"counters", counters},
          {"turns", r.turns}};
}

Json hello_message(bool parallel) { return {{"type", "hello"}, {"parallel", parallel}}; }

TaskResult parse_result(const std::string& line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error&) {
    throw AdapterProtocolError("adapter response is not JSON", line);
  }
  if (!j.is_object() || j.value("type", std::string()) != "result")
    throw AdapterProtocolError("adapter response is not a result message", line);
  if (!j.contains("task_id") || !j["task_id"].is_string())
    throw AdapterProtocolError("result without task_id", line);
  if (!j.contains("passed") || !j["passed"].is_number_integer())
    throw AdapterProtocolError("result 'passed' must be 0 or 1", line);
  const auto passed = j["passed"].get<long long>();
  if (passed != 0 && passed != 1) throw AdapterProtocolError("result 'passed' must be 0 or 1", line);
  if (!j.contains("cost") || !j["cost"].is_number() || j["cost"].get<double>() < 0.0)
    throw AdapterProtocolError("result 'cost' must be a nonnegative number", line);

  TaskResult r;
  r.task_id = j["task_id"].get<std::string>();
  r.passed = passed == 1;
  r.cost = j["cost"].get<double>();
  if (j.contains("counters")) {
    if (!j["counters"].is_object()) throw AdapterProtocolError("result 'counters' must be an object", line);
    for (auto it = j["counters"].begin(); it != j["counters"].end(); ++it) {
      if (!it.value().is_number() || it.value().get<double>() < 0.0)
        throw AdapterProtocolError("counter '" + it.key() + "' must be a nonnegative number", line);
      r.counters[it.key()] = it.value().get<double>();
    }
  }
  if (j.contains("turns") && j["turns"].is_number_integer()) r.turns = j["turns"].get<int>();
  return r;
}

}  // namespace wire

ProcessAdapter::ProcessAdapter(std::string command, FlagSpace space, ProcessAdapterOptions options)
    : command_(std::move(command)), space_(std::move(space)), options_(options) {
  spawn();
}

ProcessAdapter::~ProcessAdapter() { shutdown(); }

void ProcessAdapter::spawn() {
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
    throw AdapterTransportError(std::string("pipe failed: ") + std::strerror(errno), "");
  pid_ = fork();
  if (pid_ < 0) throw AdapterTransportError(std::string("fork failed: ") + std::strerror(errno), "");
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  fcntl(from_child_, F_SETFD, FD_CLOEXEC);
  buffer_.clear();

  auto line = read_line(options_.task_timeout > 0 ? std::max(options_.task_timeout, 5.0) : 0.0, "");
  if (!line) throw AdapterTransportError("adapter did not send hello", "");
  Json hello;
  try {
    hello = Json::parse(*line);
  } catch (const Json::parse_error&) {
    throw AdapterProtocolError("adapter hello is not JSON", *line);
  }
  if (hello.value("type", std::string()) != "hello" || !hello.contains("parallel") || !hello["parallel"].is_boolean())
    throw AdapterProtocolError("expected hello message", *line);
  parallel_ = hello["parallel"].get<bool>();
}

void ProcessAdapter::shutdown() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    // Closing stdin asks the child to exit; give it a moment, then kill.
    for (int i = 0; i < 50; ++i) {
      if (waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, &status, 0);
  }
  pid_ = -1;
}

void ProcessAdapter::restart() {
  shutdown();
  spawn();
}

void ProcessAdapter::send_line(const std::string& line, const std::string& task_id) {
  std::string data = line + "\n";
  std::size_t written = 0;
  while (written < data.size()) {
    auto n = write(to_child_, data.data() + written, data.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw AdapterTransportError(std::string("write to adapter failed: ") + std::strerror(errno), task_id);
    }
    written += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> ProcessAdapter::read_line(double timeout_seconds, const std::string& task_id) {
  using Clock = std::chrono::steady_clock;
  const auto deadline = Clock::now() + std::chrono::duration<double>(timeout_seconds);
  for (;;) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (line.empty()) continue;
      return line;
    }
    int wait_ms = -1;
    if (timeout_seconds > 0) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
      if (left <= 0) return std::nullopt;
      wait_ms = static_cast<int>(left);
    }
    pollfd pfd{from_child_, POLLIN, 0};
    int rc = poll(&pfd, 1, wait_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw AdapterTransportError(std::string("poll failed: ") + std::strerror(errno), task_id);
    }
    if (rc == 0) return std::nullopt;
    char chunk[4096];
    auto n = read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw AdapterTransportError(std::string("read from adapter failed: ") + std::strerror(errno), task_id);
    }
    if (n == 0) throw AdapterTransportError("adapter closed its output", task_id);
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::vector<TaskResult> ProcessAdapter::run_tasks(const Configuration& config, const std::vector<std::string>& tasks,
                                                  std::int64_t session_index, std::uint64_t seed,
                                                  std::size_t parallelism) {
  using Clock = std::chrono::steady_clock;
  const Json assignment = config_to_json(config, space_);
  const std::size_t window = parallel_ ? std::max<std::size_t>(parallelism, 1) : 1;

  std::map<std::string, std::size_t> slot;
  for (std::size_t k = 0; k < tasks.size(); ++k) slot[tasks[k]] = k;
  std::vector<TaskResult> out(tasks.size());
  std::vector<bool> done(tasks.size(), false);
  std::deque<std::pair<std::size_t, Clock::time_point>> inflight;
  std::set<std::string> abandoned;
  std::size_t next = 0, finished = 0;

  while (finished < tasks.size()) {
    while (next < tasks.size() && inflight.size() < window) {
      send_line(wire::eval_request(assignment, tasks[next], session_index, seed).dump(), tasks[next]);
      inflight.emplace_back(next, Clock::now());
      ++next;
    }
    double wait = 0.0;
    if (options_.task_timeout > 0) {
      const auto age = std::chrono::duration<double>(Clock::now() - inflight.front().second).count();
      wait = std::max(options_.task_timeout - age, 1e-3);
    }
    auto line = read_line(wait, tasks[inflight.front().first]);
    if (!line) {
      // Oldest request overran: recorded as a failure with its cost accrued.
      const auto k = inflight.front().first;
      inflight.pop_front();
      out[k].task_id = tasks[k];
      out[k].passed = false;
      out[k].cost = options_.timeout_cost;
      out[k].timed_out = true;
      done[k] = true;
      abandoned.insert(tasks[k]);
      ++finished;
      continue;
    }
    auto result = wire::parse_result(*line);
    auto it = slot.find(result.task_id);
    if (it == slot.end() || done[it->second]) {
      if (abandoned.count(result.task_id)) continue;
      throw AdapterProtocolError("result for a task that was not requested", *line);
    }
    const auto k = it->second;
    out[k] = std::move(result);
    done[k] = true;
    ++finished;
    for (auto q = inflight.begin(); q != inflight.end(); ++q) {
      if (q->first == k) {
        inflight.erase(q);
        break;
      }
    }
  }
  return out;
}

void serve_simulator(std::istream& in, std::ostream& out, const SimSpec& spec, const FlagSpace& space) {
  out << wire::hello_message(true).dump() << '\n' << std::flush;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json req = Json::parse(line);
    if (req.value("type", std::string()) != "eval") continue;
    const auto config = config_from_json(req.at("config"), space);
    const auto task_id = req.at("task_id").get<std::string>();
    const auto r = simulate_task(spec, space, config, task_index(spec, task_id),
                                 req.at("session_index").get<std::int64_t>(), req.at("seed").get<std::uint64_t>());
    TaskResult tr;
    tr.task_id = task_id;
    tr.passed = r.passed;
    tr.cost = r.cost;
    tr.turns = r.turns;
    tr.counters = r.counters;
    out << wire::result_message(tr).dump() << '\n' << std::flush;
  }
}

}  // namespace harbor
