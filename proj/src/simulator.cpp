#include "harbor/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "harbor/rng.hpp"

namespace harbor {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

constexpr double kDefaultKappa = 2.0;

std::uint64_t config_hash(const Configuration& c) {
  std::uint64_t h = 0x84222325cbf29ce4ULL;
  for (auto l : c.levels) h = splitmix64(h ^ l);
  return h;
}

// Activation of every latent coordinate, u = (x + 1) / 2.
Eigen::VectorXd activation(const Configuration& config, const FlagSpace& space) {
  return (encode(config, space).array() + 1.0) * 0.5;
}

std::vector<double> warm_factors(const SimSpec& spec, const FlagSpace& space, std::int64_t session_index) {
  std::vector<double> w(space.size(), 1.0);
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (space.flag(i).warm_dependent) w[i] = warm_curve(spec.warm_kappa[i], session_index);
  }
  return w;
}

double shift_logit(const SimSpec& spec, const FlagSpace& space, const Eigen::VectorXd& u,
                   const std::vector<double>& w) {
  double z = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto off = space.coordinate_offset(i);
    double contrib = 0.0;
    for (std::size_t k = 0; k < spec.linear[i].size(); ++k) contrib += spec.linear[i][k] * u[off + k];
    z += w[i] * contrib;
  }
  for (const auto& c : spec.couplings) {
    const double ua = w[c.flag_a] * u[space.coordinate_offset(c.flag_a) + c.coord_a];
    const double ub = w[c.flag_b] * u[space.coordinate_offset(c.flag_b) + c.coord_b];
    z += c.weight * ua * ub;
  }
  return z;
}

double mean_task_cost(const SimSpec& spec, const FlagSpace& space, const Eigen::VectorXd& u, std::size_t task) {
  double cost = spec.tasks[task].base_cost;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto off = space.coordinate_offset(i);
    // Overhead scales with how far the flag is from its first level.
    double act = 0.0;
    if (space.flag(i).kind == FlagKind::categorical) {
      act = 1.0 - u[off];
    } else {
      act = u[off];
    }
    cost += spec.cost_overhead[i] * act;
  }
  return cost;
}

std::size_t coordinate_for(const FlagSpace& space, std::size_t flag, const Json& j, const char* key) {
  const auto& f = space.flag(flag);
  if (!j.contains(key)) {
    if (f.kind == FlagKind::categorical)
      throw SimError(std::string("coupling on categorical flag '") + f.name + "' needs '" + key + "'");
    return 0;
  }
  auto level = f.level_of(j.at(key));
  if (!level || f.kind != FlagKind::categorical)
    throw SimError(std::string("coupling level '") + j.at(key).dump() + "' invalid for '" + f.name + "'");
  return *level;
}

std::size_t sim_flag(const FlagSpace& space, const std::string& name) {
  auto idx = space.index_of(name);
  if (!idx) throw SimError("simulator document names unknown flag '" + name + "'");
  return *idx;
}

}  // namespace

double warm_curve(double kappa, std::int64_t session_index) {
  if (session_index <= 0) return 0.0;
  if (session_index == kFullyWarm) return 1.0;
  return 1.0 - std::exp(-static_cast<double>(session_index) / kappa);
}

SimSpec parse_sim(const Json& doc, const FlagSpace& space) {
  SimSpec spec;
  spec.seed = doc.value("seed", std::uint64_t{0});
  spec.cost_noise = doc.value("cost_noise", 0.0);
  if (spec.cost_noise < 0.0) throw SimError("cost_noise must be nonnegative");

  if (doc.contains("tasks")) {
    for (const auto& t : doc.at("tasks")) {
      SimTask task;
      task.id = t.at("id").get<std::string>();
      task.base_logit = t.value("base_logit", 0.0);
      task.category = t.value("category", std::string());
      task.base_cost = t.value("base_cost", 1.0);
      task.turns = t.value("turns", 10);
      task.smoke = t.value("smoke", false);
      spec.tasks.push_back(std::move(task));
    }
  } else if (doc.contains("task_generator")) {
    // Deterministic synthetic suite: logits spread evenly around a centre,
    // costs and turn counts drawn from the document seed.
    const auto& g = doc.at("task_generator");
    const int count = g.at("count").get<int>();
    const double centre = g.value("base_logit", 0.0);
    const double spread = g.value("logit_spread", 0.0);
    const double cost = g.value("base_cost", 1.0);
    const double cost_spread = g.value("cost_spread", 0.0);
    const int min_turns = g.value("min_turns", 4);
    const int max_turns = g.value("max_turns", 30);
    std::vector<std::pair<std::string, int>> cats;
    if (g.contains("categories")) {
      for (auto it = g.at("categories").begin(); it != g.at("categories").end(); ++it)
        cats.emplace_back(it.key(), it.value().get<int>());
    }
    Rng rng(derive_seed(spec.seed, {0x7a5cULL}));
    for (int i = 0; i < count; ++i) {
      SimTask task;
      char id[32];
      std::snprintf(id, sizeof id, "task-%03d", i);
      task.id = id;
      const double pos = count > 1 ? static_cast<double>(i) / (count - 1) - 0.5 : 0.0;
      task.base_logit = centre + 2.0 * spread * pos;
      task.base_cost = cost * (1.0 + cost_spread * (uniform01(rng) - 0.5));
      task.turns = min_turns + static_cast<int>(uniform01(rng) * (max_turns - min_turns + 1));
      int acc = 0;
      for (const auto& [name, n] : cats) {
        acc += n;
        if (i < acc) {
          task.category = name;
          break;
        }
      }
      spec.tasks.push_back(std::move(task));
    }
  }
  if (spec.tasks.empty()) throw SimError("simulator document defines no tasks");
  for (const auto& t : spec.tasks) {
    if (t.base_cost < 0.0) throw SimError("task '" + t.id + "' has a negative base cost");
  }

  spec.linear.resize(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) spec.linear[i].assign(space.flag(i).encoded_width(), 0.0);
  if (doc.contains("effects")) {
    for (auto it = doc.at("effects").begin(); it != doc.at("effects").end(); ++it) {
      const auto fi = sim_flag(space, it.key());
      auto& coef = spec.linear[fi];
      if (it.value().is_number()) {
        if (coef.size() != 1) throw SimError("flag '" + it.key() + "' needs one effect per level");
        coef[0] = it.value().get<double>();
      } else {
        auto v = it.value().get<std::vector<double>>();
        if (v.size() != coef.size()) throw SimError("flag '" + it.key() + "' effect has the wrong width");
        coef = std::move(v);
      }
    }
  }

  if (doc.contains("couplings")) {
    for (const auto& c : doc.at("couplings")) {
      SimCoupling cp;
      cp.flag_a = sim_flag(space, c.at("a").get<std::string>());
      cp.flag_b = sim_flag(space, c.at("b").get<std::string>());
      cp.coord_a = coordinate_for(space, cp.flag_a, c, "a_level");
      cp.coord_b = coordinate_for(space, cp.flag_b, c, "b_level");
      cp.weight = c.at("weight").get<double>();
      spec.couplings.push_back(cp);
    }
  }

  const double default_kappa = doc.value("default_kappa", kDefaultKappa);
  spec.warm_kappa.assign(space.size(), default_kappa);
  if (doc.contains("warm_kappa")) {
    for (auto it = doc.at("warm_kappa").begin(); it != doc.at("warm_kappa").end(); ++it)
      spec.warm_kappa[sim_flag(space, it.key())] = it.value().get<double>();
  }
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (!(spec.warm_kappa[i] > 0.0)) throw SimError("warm_kappa must be positive for '" + space.flag(i).name + "'");
  }

  spec.cost_overhead.resize(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) spec.cost_overhead[i] = space.flag(i).cost_weight;
  if (doc.contains("cost_overhead")) {
    for (auto it = doc.at("cost_overhead").begin(); it != doc.at("cost_overhead").end(); ++it) {
      const double v = it.value().get<double>();
      if (v < 0.0) throw SimError("cost overhead for '" + it.key() + "' is negative");
      spec.cost_overhead[sim_flag(space, it.key())] = v;
    }
  }

  if (doc.contains("silent_gates")) {
    for (const auto& name : doc.at("silent_gates")) spec.silent_gates.insert(sim_flag(space, name.get<std::string>()));
  }
  return spec;
}

Json sim_to_json(const SimSpec& spec, const FlagSpace& space) {
  Json doc;
  doc["seed"] = spec.seed;
  doc["cost_noise"] = spec.cost_noise;
  doc["tasks"] = Json::array();
  for (const auto& t : spec.tasks) {
    doc["tasks"].push_back({{"id", t.id},
                            {"base_logit", t.base_logit},
                            {"category", t.category},
                            {"base_cost", t.base_cost},
                            {"turns", t.turns},
                            {"smoke", t.smoke}});
  }
  doc["effects"] = Json::object();
  doc["warm_kappa"] = Json::object();
  doc["cost_overhead"] = Json::object();
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& f = space.flag(i);
    if (spec.linear[i].size() == 1)
      doc["effects"][f.name] = spec.linear[i][0];
    else
      doc["effects"][f.name] = spec.linear[i];
    doc["warm_kappa"][f.name] = spec.warm_kappa[i];
    doc["cost_overhead"][f.name] = spec.cost_overhead[i];
  }
  doc["couplings"] = Json::array();
  for (const auto& c : spec.couplings) {
    Json j = {{"a", space.flag(c.flag_a).name}, {"b", space.flag(c.flag_b).name}, {"weight", c.weight}};
    if (space.flag(c.flag_a).kind == FlagKind::categorical) j["a_level"] = space.flag(c.flag_a).levels[c.coord_a];
    if (space.flag(c.flag_b).kind == FlagKind::categorical) j["b_level"] = space.flag(c.flag_b).levels[c.coord_b];
    doc["couplings"].push_back(std::move(j));
  }
  doc["silent_gates"] = Json::array();
  for (auto g : spec.silent_gates) doc["silent_gates"].push_back(space.flag(g).name);
  return doc;
}

SimTruth sim_truth(const SimSpec& spec, const FlagSpace& space, const Configuration& config,
                   std::int64_t session_index, const std::vector<std::size_t>& tasks) {
  const auto u = activation(config, space);
  const auto w = warm_factors(spec, space, session_index);
  const double shift = shift_logit(spec, space, u, w);
  SimTruth truth;
  auto accumulate = [&](std::size_t t) {
    truth.mean += logistic(spec.tasks[t].base_logit + shift);
    truth.task_cost += mean_task_cost(spec, space, u, t);
  };
  if (tasks.empty()) {
    for (std::size_t t = 0; t < spec.tasks.size(); ++t) accumulate(t);
    truth.mean /= static_cast<double>(spec.tasks.size());
    truth.task_cost /= static_cast<double>(spec.tasks.size());
  } else {
    for (auto t : tasks) accumulate(t);
    truth.mean /= static_cast<double>(tasks.size());
    truth.task_cost /= static_cast<double>(tasks.size());
  }
  return truth;
}

SimTaskResult simulate_task(const SimSpec& spec, const FlagSpace& space, const Configuration& config,
                            std::size_t task, std::int64_t session_index, std::uint64_t seed) {
  const auto& t = spec.tasks.at(task);
  const auto u = activation(config, space);
  const auto w = warm_factors(spec, space, session_index);
  Rng rng(derive_seed(seed ^ spec.seed, {hash_string(t.id), config_hash(config)}));

  SimTaskResult r;
  r.turns = t.turns;
  // Draw order is fixed: pass bit, cost, then counters. Counter draws can
  // never perturb outcomes.
  r.passed = uniform01(rng) < logistic(t.base_logit + shift_logit(spec, space, u, w));
  const double mean_cost = mean_task_cost(spec, space, u, task);
  if (spec.cost_noise > 0.0) {
    std::normal_distribution<double> z(0.0, 1.0);
    const double s = spec.cost_noise;
    r.cost = mean_cost * std::exp(s * z(rng) - 0.5 * s * s);
  } else {
    r.cost = mean_cost;
  }

  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& f = space.flag(i);
    if (f.counters.empty()) continue;
    const bool on = f.enabled(config.levels[i]);
    const int fire = std::max(1, f.counters.fire_turns);
    const int events = on && t.turns >= fire ? t.turns / fire : 0;
    for (const auto& name : f.counters.write) r.counters[name] += events;
    int consumed = events;
    if (spec.silent_gates.count(i)) {
      consumed = 0;
    } else if (f.warm_dependent && events > 0) {
      std::binomial_distribution<int> primed(events, std::clamp(w[i], 0.0, 1.0));
      consumed = primed(rng);
    }
    for (const auto& name : f.counters.consume) r.counters[name] += consumed;
  }
  return r;
}

TaskSuite suite_of(const SimSpec& spec) {
  TaskSuite suite;
  std::size_t cheapest = 0;
  for (std::size_t i = 0; i < spec.tasks.size(); ++i) {
    const auto& t = spec.tasks[i];
    suite.tasks.push_back(t.id);
    if (!t.category.empty()) suite.categories[t.id] = t.category;
    if (t.smoke) suite.smoke_task = t.id;
    if (t.base_cost < spec.tasks[cheapest].base_cost) cheapest = i;
  }
  if (!suite.smoke_task) suite.smoke_task = spec.tasks[cheapest].id;
  if (suite.categories.size() != suite.tasks.size()) suite.categories.clear();
  return suite;
}

std::size_t task_index(const SimSpec& spec, const std::string& id) {
  for (std::size_t i = 0; i < spec.tasks.size(); ++i) {
    if (spec.tasks[i].id == id) return i;
  }
  throw SimError("unknown task '" + id + "'");
}

Configuration baseline_config(const FlagSpace& space) {
  Configuration c = space.default_config();
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (space.flag(i).warm_dependent) c.levels[i] = 0;
  }
  return c;
}

void calibrate_baseline(SimSpec& spec, const FlagSpace& space, double target) {
  if (!(target > 0.0 && target < 1.0)) throw SimError("baseline target must lie in (0, 1)");
  const auto base = baseline_config(space);
  double lo = -30.0, hi = 30.0;
  const auto original = spec.tasks;
  auto mean_at = [&](double delta) {
    for (std::size_t i = 0; i < spec.tasks.size(); ++i) spec.tasks[i].base_logit = original[i].base_logit + delta;
    return sim_truth(spec, space, base, 0).mean;
  };
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_at(mid) < target ? lo : hi) = mid;
  }
  mean_at(0.5 * (lo + hi));
}

}  // namespace harbor
