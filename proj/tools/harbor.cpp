// Command-line front end: run, report, oracle, adapter.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "harbor/driver.hpp"
#include "harbor/simulator.hpp"

using namespace harbor;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<int> parse_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

TaskSuite suite_from_file(const std::string& path) {
  const auto j = Json::parse(slurp(path));
  TaskSuite suite;
  for (const auto& t : j.at("tasks")) {
    if (t.is_string()) {
      suite.tasks.push_back(t.get<std::string>());
      continue;
    }
    const auto id = t.at("id").get<std::string>();
    suite.tasks.push_back(id);
    if (t.contains("category")) suite.categories[id] = t.at("category").get<std::string>();
    if (t.value("smoke", false)) suite.smoke_task = id;
  }
  if (j.contains("smoke_task")) suite.smoke_task = j.at("smoke_task").get<std::string>();
  if (!suite.smoke_task && !suite.tasks.empty()) suite.smoke_task = suite.tasks.front();
  if (suite.categories.size() != suite.tasks.size()) suite.categories.clear();
  return suite;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained multi-fidelity Bayesian optimisation over flag-gated configurations"};
  app.require_subcommand(1);

  RunConfig rc;
  std::string space_path, sim_path, adapter_cmd, tasks_path, fidelities, history_path, format = "text", subset_mode;
  double task_timeout = 0.0, timeout_cost = 1.0;

  auto* run_cmd = app.add_subcommand("run", "Run the search loop");
  run_cmd->add_option("--space", space_path, "Space definition (JSON)")->required();
  auto* sim_opt = run_cmd->add_option("--sim", sim_path, "Simulator definition (JSON)");
  auto* adapter_opt = run_cmd->add_option("--adapter", adapter_cmd, "Adapter command speaking the wire protocol");
  sim_opt->excludes(adapter_opt);
  run_cmd->add_option("--tasks", tasks_path, "Task suite (JSON) for --adapter");
  run_cmd->add_option("--budget-search", rc.budget_search, "Search budget in full-suite baseline evaluations");
  run_cmd->add_option("--budget-deploy", rc.budget_deploy, "Per-task deployment cost ceiling");
  run_cmd->add_option("--delta", rc.delta, "Safety margin below R0");
  run_cmd->add_option("--eta", rc.eta, "Chance-constraint risk level");
  run_cmd->add_option("--fidelities", fidelities, "Comma-separated task-subset sizes");
  run_cmd->add_option("--batch", rc.batch, "Batch size q");
  run_cmd->add_option("--regions", rc.regions, "Trust regions M");
  run_cmd->add_option("--sobol", rc.sobol, "Initial design size");
  run_cmd->add_option("--seed", rc.seed, "Master seed");
  run_cmd->add_option("--parallel", rc.parallelism, "Concurrent tasks per evaluation");
  run_cmd->add_option("--history", rc.history_path, "History output (JSON lines)");
  run_cmd->add_option("--meta", rc.meta_paths, "Prior history files to warm-start from");
  run_cmd->add_option("--lambda-meta", rc.lambda_meta, "Variance inflation for imported records");
  run_cmd->add_option("--lambda-main", rc.penalties.main, "Ridge penalty on main-effect features");
  run_cmd->add_option("--lambda-cross", rc.penalties.cross, "Ridge penalty on cross-block features");
  run_cmd->add_option("--tau-succ", rc.trust.tau_succ, "Successes before a region grows");
  run_cmd->add_option("--tau-fail", rc.trust.tau_fail, "Failures before a region shrinks");
  run_cmd->add_option("--r0", rc.trust.r0, "Initial region radius");
  run_cmd->add_option("--n-min", rc.n_min, "Distinct projections required to freeze a block");
  run_cmd->add_option("--collapse-ratio", rc.collapse_ratio, "Block scale ratio that counts as collapsed");
  run_cmd->add_option("--ehvi-samples", rc.ehvi_samples, "Monte-Carlo samples per EHVI estimate");
  run_cmd->add_option("--subset-mode", subset_mode, "prefix-shuffle or stratified");
  run_cmd->add_option("--task-timeout", task_timeout, "Seconds per task for --adapter (0 waits)");
  run_cmd->add_option("--timeout-cost", timeout_cost, "Cost charged for a timed-out task");
  run_cmd->add_option("--format", format, "text or machine");

  auto* report_cmd = app.add_subcommand("report", "Report a finished or partial run from its history");
  report_cmd->add_option("--history", history_path, "History file")->required();
  report_cmd->add_option("--format", format, "text or machine");

  auto* oracle_cmd = app.add_subcommand("oracle", "Brute-force safe Pareto front of a small simulated space");
  oracle_cmd->add_option("--space", space_path)->required();
  oracle_cmd->add_option("--sim", sim_path)->required();
  oracle_cmd->add_option("--delta", rc.delta);
  oracle_cmd->add_option("--budget-deploy", rc.budget_deploy);

  auto* adapter_cmd_app = app.add_subcommand("adapter", "Serve the simulator over the adapter protocol on stdio");
  adapter_cmd_app->add_option("--space", space_path)->required();
  adapter_cmd_app->add_option("--sim", sim_path)->required();

  CLI11_PARSE(app, argc, argv);
  const auto fmt = format == "machine" ? ReportFormat::machine : ReportFormat::text;

  try {
    if (*report_cmd) {
      std::cout << report_history(history_path, fmt);
      return 0;
    }

    const auto space = parse_space(std::string_view(slurp(space_path)));

    if (*adapter_cmd_app) {
      serve_simulator(std::cin, std::cout, parse_sim(Json::parse(slurp(sim_path)), space), space);
      return 0;
    }

    if (*oracle_cmd) {
      const auto spec = parse_sim(Json::parse(slurp(sim_path)), space);
      const double r0 = sim_truth(spec, space, baseline_config(space), 0).mean;
      std::vector<FrontPoint> pts;
      for (const auto& c : enumerate_configurations(space)) {
        const auto t = sim_truth(spec, space, c, kFullyWarm);
        if (t.mean >= r0 - rc.delta && t.task_cost <= rc.budget_deploy) pts.push_back({t.mean, t.task_cost, c});
      }
      double top = 0.0;
      for (const auto& p : pts) top = std::max(top, p.cost);
      const auto front = non_dominated(pts);
      std::cout << "true R0 " << r0 << ", " << pts.size() << " safe affordable configurations\n";
      for (const auto& p : front)
        std::cout << "  mu " << p.mu << "  cost " << p.cost << "  " << config_label(p.config, space) << "\n";
      std::cout << "hypervolume (ref 0, " << 2.0 * top << ") " << hypervolume(front, 0.0, 2.0 * top) << "\n";
      return 0;
    }

    if (!fidelities.empty()) rc.fidelities = parse_list(fidelities);
    if (!subset_mode.empty()) rc.subset_mode = subset_mode_from_string(subset_mode);
    std::unique_ptr<Adapter> adapter;
    TaskSuite suite;
    if (!sim_path.empty()) {
      auto spec = parse_sim(Json::parse(slurp(sim_path)), space);
      suite = suite_of(spec);
      adapter = std::make_unique<SimAdapter>(std::move(spec), space);
    } else if (!adapter_cmd.empty()) {
      if (tasks_path.empty()) throw std::invalid_argument("--adapter needs --tasks");
      suite = suite_from_file(tasks_path);
      adapter = std::make_unique<ProcessAdapter>(adapter_cmd, space, ProcessAdapterOptions{task_timeout, timeout_cost});
    } else {
      throw std::invalid_argument("run needs --sim or --adapter");
    }
    const auto result = run(rc, space, suite, *adapter);
    std::cout << report(result, *result.space, fmt);
    return result.committed ? 0 : 3;
  } catch (const BudgetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
