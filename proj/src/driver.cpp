#include "harbor/driver.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "harbor/history.hpp"
#include "harbor/rng.hpp"
#include "harbor/simulator.hpp"
#include "harbor/sobol.hpp"
#include "harbor/warmstart.hpp"

namespace harbor {

namespace {

// Stream identifiers for derive_seed.
enum : std::uint64_t {
  kBaselineStream = 0xba5e,
  kSobolStream = 0x50b0,
  kSubsetStream = 0x5ab5,
  kEvalStream = 0xe7a1,
  kSelectStream = 0x5e1e,
  kPreflightStream = 0x9f11,
};

bool fit_usable(const EvaluationRecord& r) {
  return !r.uninformative && r.phase != Phase::preflight && r.phase != Phase::meta;
}

bool silent_consistent(const Configuration& c, const FlagSpace& space) {
  for (const auto& [f, ex] : space.excluded()) {
    if (ex.kind == ExclusionKind::silent && c.levels[f] != ex.pinned) return false;
  }
  return true;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

class Search {
 public:
  Search(const RunConfig& rc, const FlagSpace& space, const TaskSuite& suite, Adapter& adapter)
      : rc_(rc), space_(space), suite_(suite), adapter_(adapter), subsets_(suite), warm_(WarmupModel::defaults(space, rc.default_kappa)) {}

  RunResult execute();

 private:
  const std::vector<std::string>& tasks_for(int m) {
    if (static_cast<std::size_t>(m) == suite_.full_size()) return suite_.tasks;
    return subsets_.get(static_cast<std::size_t>(m), derive_seed(rc_.seed, {kSubsetStream}), rc_.subset_mode);
  }

  double leveled(const EvaluationRecord& r) const {
    if (r.phase == Phase::meta) return r.corrected_target;
    auto it = shifts_.find(r.fidelity);
    if (it == shifts_.end() || it->second == 0.0) return r.corrected_target;
    return std::clamp(r.corrected_target - it->second / std::max(r.warm_fraction, 0.1), 0.0, 1.0);
  }

  double weight_sum() const {
    double s = 0.0;
    for (const auto& f : space_.flags()) s += f.cost_weight;
    return s;
  }

  // Conservative per-task cost for budgeting one evaluation of `c`.
  double task_bound(const Configuration& c) const {
    const double loose = max_task_cost_ + weight_sum();
    if (!cost_) return loose;
    return cost_->predict(c, space_) + 3.0 * cost_->residual_sd();
  }

  double smoke_bound() const { return max_task_cost_ + weight_sum(); }
  double reserve() const { return static_cast<double>(rc_.preflight_candidates) * smoke_bound(); }
  double remaining() const { return budget_cost_ - spent_; }

  void append(EvaluationRecord rec, Phase phase, bool correct = true);
  EvaluationRecord evaluate_at(const Configuration& c, int m);
  void refit();
  std::map<int, ParetoFront> build_fronts() const;
  void check_silent(std::size_t after);
  void spawn_regions();
  void freeze();
  void event(std::size_t region, const char* kind, std::size_t radius) {
    result_.region_events.push_back({iteration_, region, kind, radius});
  }

  const RunConfig& rc_;
  FlagSpace space_;
  const TaskSuite& suite_;
  Adapter& adapter_;
  SubsetCache subsets_;
  HistoryWriter writer_;
  WarmupModel warm_;
  std::vector<int> fidelities_;

  std::vector<EvaluationRecord> history_;
  // history_ with targets moved onto the full-suite scale; what the
  // surrogate and the regions see.
  std::vector<EvaluationRecord> leveled_;
  std::map<int, double> shifts_;
  std::set<std::pair<Configuration, int>> evaluated_;
  std::optional<Surrogate> surrogate_;
  std::optional<CostModel> cost_;
  std::vector<TrustRegion> regions_;
  std::set<Configuration> retired_centers_;
  std::size_t next_region_id_ = 0;

  double r0_ = 0.0;
  double r0_var_ = 0.0;
  double unit_ = 0.0;
  double budget_cost_ = 0.0;
  double spent_ = 0.0;
  double max_task_cost_ = 0.0;
  double baseline_task_cost_ = 0.0;
  Configuration baseline_config_;
  std::int64_t sessions_ = 0;
  std::size_t iteration_ = 0;
  RunResult result_;
};

void Search::append(EvaluationRecord rec, Phase phase, bool correct) {
  rec.index = history_.size();
  rec.phase = phase;
  if (correct) apply_correction(rec, space_, warm_, r0_, r0_var_);
  if (phase != Phase::meta) {
    if (primes_session(rec.config, space_)) ++sessions_;
    spent_ += rec.total_cost;
    for (double c : rec.task_costs) max_task_cost_ = std::max(max_task_cost_, c);
    evaluated_.insert({rec.config, rec.fidelity});
    for (auto& a : detect_asymmetry(rec, space_))
      result_.anomalies.push_back({a.record, space_.flag(a.flag).name, a.description});
  }
  writer_.write(record_to_json(rec, space_));
  history_.push_back(std::move(rec));
  if (phase != Phase::meta) check_silent(history_.back().index);
}

void Search::check_silent(std::size_t after) {
  for (const auto& ev : detect_silent(history_, space_, rc_.silent_epsilon, rc_.n_silent)) {
    if (space_.is_excluded(ev.flag)) continue;
    space_ = space_.with_exclusion(ev.flag, {ExclusionKind::silent, 0});
    const auto& name = space_.flag(ev.flag).name;
    result_.silent.push_back({name, ev.on_records, ev.mean_consumer, after});
    writer_.write({{"type", "exclude"},
                   {"reason", "silent"},
                   {"flag", name},
                   {"after_record", after},
                   {"on_records", ev.on_records},
                   {"mean_consumer", ev.mean_consumer},
                   {"pinned", space_.flag(ev.flag).value_json(0)}});
  }
}

EvaluationRecord Search::evaluate_at(const Configuration& c, int m) {
  EvaluateOptions opt;
  opt.parallelism = rc_.parallelism;
  return evaluate(adapter_, space_, c, tasks_for(m), sessions_, derive_seed(rc_.seed, {kEvalStream, history_.size()}),
                  opt);
}

void Search::refit() {
  // A curve fitted from fewer than three sessions is mostly noise.
  auto logs = counter_logs(history_, space_);
  for (auto it = logs.begin(); it != logs.end();) it = it->second.size() < 3 ? logs.erase(it) : std::next(it);
  warm_ = fit_warm_curves(space_, logs, rc_.default_kappa);
  std::map<int, std::vector<std::string>> subsets;
  for (int m : fidelities_) subsets[m] = tasks_for(m);
  shifts_ = subset_shifts(history_, subsets, suite_.full_size());
  leveled_ = history_;
  for (auto& r : leveled_) r.corrected_target = leveled(r);
  surrogate_ = Surrogate::fit(leveled_, space_, r0_, rc_.penalties);
  cost_ = fit_cost_model(history_, space_);
}

std::map<int, ParetoFront> Search::build_fronts() const {
  double top = 0.0;
  for (const auto& r : history_) {
    if (r.phase != Phase::meta && r.phase != Phase::preflight) top = std::max(top, r.mean_task_cost());
  }
  const double cost_ref = top > 0.0 ? 2.0 * top : 1.0;
  std::map<int, ParetoFront> fronts;
  for (int m : fidelities_) {
    std::vector<FrontPoint> pts;
    // Incumbents valued by the posterior rather than their single noisy
    // measurement.
    for (const auto& r : history_) {
      if (fit_usable(r) && r.fidelity == m) pts.push_back({surrogate_->predict(r.config).mean, r.mean_task_cost(), r.config});
    }
    if (pts.empty()) pts.push_back({r0_, baseline_task_cost_, baseline_config_});
    fronts[m] = make_front(m, std::move(pts), 0.0, cost_ref);
  }
  return fronts;
}

void Search::spawn_regions() {
  std::size_t alive = 0;
  std::set<Configuration> centers;
  for (const auto& r : regions_) {
    if (r.alive) {
      ++alive;
      centers.insert(r.center);
    }
  }
  if (!regions_.empty() && alive >= 2) return;
  const auto ranked = rank_incumbents(history_, *surrogate_);
  for (const auto& c : ranked) {
    if (alive >= rc_.regions) break;
    const auto pinned = space_.pin(c);
    if (centers.count(pinned) || retired_centers_.count(pinned)) continue;
    TrustRegion r;
    r.id = next_region_id_++;
    r.center = pinned;
    r.radius = std::max<std::size_t>(rc_.trust.r0, 1);
    r.best_target = best_target_of(leveled_, c);
    centers.insert(pinned);
    regions_.push_back(r);
    event(r.id, "spawn", r.radius);
    ++alive;
  }
}

void Search::freeze() {
  const auto ranked = rank_incumbents(history_, *surrogate_);
  if (ranked.empty()) return;
  const auto incumbent = space_.pin(ranked.front());
  for (const auto& fb : freeze_blocks(*surrogate_, history_, space_, rc_.n_min, rc_.collapse_ratio, incumbent)) {
    Json pins = Json::object();
    for (const auto& [f, level] : fb.pins) {
      space_ = space_.with_exclusion(f, {ExclusionKind::frozen, level});
      pins[space_.flag(f).name] = space_.flag(f).value_json(level);
    }
    const auto& name = space_.blocks()[fb.block].name;
    result_.frozen.push_back({iteration_, name, pins});
    writer_.write({{"type", "freeze"}, {"block", name}, {"iteration", iteration_}, {"pins", pins}});
  }
}

RunResult Search::execute() {
  const auto n = suite_.full_size();
  suite_.validate();
  rc_.validate(n);
  fidelities_ = rc_.fidelities.empty() ? default_fidelities(n) : rc_.fidelities;
  const int m_min = fidelities_.front();
  if (!suite_.smoke_task) throw std::invalid_argument("task suite has no smoke task");

  if (!rc_.history_path.empty()) writer_ = HistoryWriter(rc_.history_path);
  Json suite_json = {{"tasks", suite_.tasks}, {"smoke_task", *suite_.smoke_task}};
  if (!suite_.categories.empty()) suite_json["categories"] = suite_.categories;
  result_.settings = run_config_to_json(rc_);
  result_.settings["fidelities"] = fidelities_;
  writer_.write({{"type", "run"}, {"space", space_.to_json()}, {"suite", suite_json}, {"settings", result_.settings}});

  for (auto& rec : load_meta_history(rc_.meta_paths, space_, rc_.lambda_meta)) append(std::move(rec), Phase::meta, false);

  const auto init_count = static_cast<double>(std::min<std::uint64_t>(rc_.sobol, space_.cardinality()));
  const double floor_units = 1.0 + init_count * m_min / static_cast<double>(n);
  if (rc_.budget_search < floor_units) {
    std::ostringstream msg;
    msg << "search budget " << rc_.budget_search << " cannot cover the baseline and initial design (at least "
        << floor_units << " full-suite evaluations)";
    throw BudgetError(msg.str(), floor_units);
  }

  // Baseline anchor at full fidelity.
  EvaluateOptions opt;
  opt.parallelism = rc_.parallelism;
  auto base = measure_baseline(adapter_, space_, suite_, derive_seed(rc_.seed, {kBaselineStream}), opt);
  r0_ = base.r0;
  r0_var_ = base.variance;
  unit_ = base.record.total_cost;
  if (!(unit_ > 0.0)) throw BudgetError("baseline evaluation reported zero cost; budget units undefined", 0.0);
  budget_cost_ = rc_.budget_search * unit_;
  baseline_task_cost_ = base.record.mean_task_cost();
  baseline_config_ = base.record.config;
  base.record.session_index = sessions_;
  append(std::move(base.record), Phase::baseline);

  // Space-filling initial design at the cheapest fidelity.
  const auto design = sobol_init(space_, rc_.sobol, derive_seed(rc_.seed, {kSobolStream}));
  std::set<Configuration> used;
  for (const auto& r : history_) {
    if (r.phase != Phase::meta && r.fidelity == m_min) used.insert(r.config);
  }
  for (const auto& raw : design.configs) {
    auto c = nearest_unused(space_.pin(raw), space_, used);
    if (!c) break;
    if (spent_ + m_min * task_bound(*c) > budget_cost_ - reserve()) {
      result_.stop_reason = "budget";
      break;
    }
    used.insert(*c);
    append(evaluate_at(*c, m_min), Phase::init);
  }

  refit();
  spawn_regions();

  while (result_.stop_reason.empty()) {
    if (iteration_ >= rc_.max_iterations) {
      result_.stop_reason = "max_iterations";
      break;
    }
    ++iteration_;
    bool exhausted = false;
    for (auto& region : regions_) {
      if (!region.alive) continue;
      region.center = space_.pin(region.center);
      BatchOptions bo;
      bo.q = rc_.batch;
      bo.pool_cap = rc_.pool_cap;
      bo.d_div = rc_.d_div;
      bo.ehvi_samples = rc_.ehvi_samples;
      bo.remaining_budget = remaining() - reserve();
      bo.skip = &evaluated_;
      const auto sel = select_batch(region, space_, *surrogate_, *cost_, build_fronts(), fidelities_,
                                    {r0_, rc_.delta, rc_.eta}, bo,
                                    derive_seed(rc_.seed, {kSelectStream, iteration_, region.id}));
      if (sel.status == BatchStatus::infeasible) {
        exhausted = true;
        break;
      }
      double best = -std::numeric_limits<double>::infinity();
      std::optional<Configuration> best_config;
      if (sel.status == BatchStatus::ok) {
        for (const auto& c : sel.configs) {
          if (spent_ + sel.fidelity * task_bound(c) > budget_cost_ - reserve()) {
            exhausted = true;
            break;
          }
          append(evaluate_at(c, sel.fidelity), Phase::search);
          const auto& rec = history_.back();
          if (!rec.uninformative && leveled(rec) > best) {
            best = leveled(rec);
            best_config = rec.config;
          }
        }
      }
      const bool improved = best_config && best > region.best_target;
      const auto before = region;
      region = update_region(region, improved, rc_.trust, space_.free_flags().size(),
                             improved ? &*best_config : nullptr, best);
      if (!region.alive) {
        retired_centers_.insert(before.center);
        event(region.id, "kill", region.radius);
      } else if (region.radius < before.radius) {
        event(region.id, "shrink", region.radius);
      } else if (region.radius > before.radius) {
        event(region.id, "grow", region.radius);
      }
      if (region.alive && region.center != before.center) event(region.id, "move", region.radius);
      if (exhausted) break;
    }
    if (exhausted) {
      result_.stop_reason = "budget";
      break;
    }
    refit();
    freeze();
    spawn_regions();
    if (std::none_of(regions_.begin(), regions_.end(), [](const auto& r) { return r.alive; })) {
      result_.stop_reason = "no_regions";
      break;
    }
  }
  if (result_.stop_reason.empty()) result_.stop_reason = "budget";

  refit();
  const SafetyParams safety{r0_, rc_.delta, rc_.eta};
  result_.front = pareto_front(history_, *surrogate_, *cost_, rc_.budget_deploy, safety, space_,
                               baseline_config_, rc_.wilson_level);
  // Commit: walk the front by descending posterior mean until one candidate
  // clears preflight.
  for (std::size_t i = 0; i < result_.front.size() && i < rc_.preflight_candidates; ++i) {
    PreflightOutcome po;
    po.front_index = i;
    if (spent_ + smoke_bound() > budget_cost_) {
      po.veto_reason = "search budget exhausted before preflight";
      result_.preflight.push_back(std::move(po));
      break;
    }
    auto pr = preflight_smoke(result_.front[i].config, adapter_, space_, *suite_.smoke_task, sessions_,
                              derive_seed(rc_.seed, {kPreflightStream, i}));
    if (pr.record) append(std::move(*pr.record), Phase::preflight);
    po.passed = pr.passed;
    po.veto_reason = pr.veto_reason;
    po.verdicts = std::move(pr.verdicts);
    result_.preflight.push_back(std::move(po));
    if (pr.passed) {
      result_.committed = i;
      break;
    }
  }

  result_.ledger = build_ledger(history_, unit_, rc_.budget_search);
  result_.anova = block_anova(*surrogate_);
  result_.r0 = r0_;
  result_.r0_variance = r0_var_;
  result_.baseline_task_cost = baseline_task_cost_;
  const auto fronts = build_fronts();
  result_.mu_ref = 0.0;
  result_.cost_ref = fronts.begin()->second.cost_ref;
  result_.iterations = iteration_;
  Json line = result_to_json(result_, space_);
  line["type"] = "result";
  writer_.write(line);
  result_.history = std::move(history_);
  result_.space = space_;
  return std::move(result_);
}

}  // namespace

void RunConfig::validate(std::size_t suite_size) const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("run config: " + what); };
  if (!(budget_search > 0.0)) fail("budget_search must be positive");
  if (!(budget_deploy > 0.0)) fail("budget_deploy must be positive");
  if (!(delta >= 0.0)) fail("delta must be nonnegative");
  if (!(eta > 0.0 && eta <= 0.5)) fail("eta must lie in (0, 0.5]");
  if (batch < 1) fail("batch must be at least 1");
  if (regions < 1) fail("regions must be at least 1");
  if (sobol < 1) fail("sobol must be at least 1");
  if (parallelism < 1) fail("parallelism must be at least 1");
  if (!(lambda_meta > 0.0)) fail("lambda_meta must be positive");
  if (n_silent < 1) fail("n_silent must be at least 1");
  if (!(silent_epsilon > 0.0)) fail("silent_epsilon must be positive");
  if (ehvi_samples < 1) fail("ehvi_samples must be at least 1");
  if (!fidelities.empty()) {
    for (std::size_t i = 0; i < fidelities.size(); ++i) {
      if (fidelities[i] < 1) fail("fidelities must be positive");
      if (i > 0 && fidelities[i] <= fidelities[i - 1]) fail("fidelities must be strictly ascending");
    }
    if (static_cast<std::size_t>(fidelities.back()) != suite_size)
      fail("largest fidelity must equal the suite size " + std::to_string(suite_size));
  }
}

std::vector<int> default_fidelities(std::size_t suite_size) {
  std::vector<int> out;
  for (int m : {8, 22, 44}) {
    if (static_cast<std::size_t>(m) < suite_size) out.push_back(m);
  }
  out.push_back(static_cast<int>(suite_size));
  return out;
}

Json run_config_to_json(const RunConfig& rc) {
  Json j;
  j["budget_search"] = rc.budget_search;
  j["budget_deploy"] = std::isfinite(rc.budget_deploy) ? Json(rc.budget_deploy) : Json(nullptr);
  j["delta"] = rc.delta;
  j["eta"] = rc.eta;
  j["fidelities"] = rc.fidelities;
  j["batch"] = rc.batch;
  j["regions"] = rc.regions;
  j["sobol"] = rc.sobol;
  j["seed"] = rc.seed;
  j["parallelism"] = rc.parallelism;
  j["meta"] = rc.meta_paths;
  j["lambda_meta"] = rc.lambda_meta;
  j["lambda_main"] = rc.penalties.main;
  j["lambda_cross"] = rc.penalties.cross;
  j["r0"] = rc.trust.r0;
  j["r_max"] = rc.trust.r_max;
  j["tau_succ"] = rc.trust.tau_succ;
  j["tau_fail"] = rc.trust.tau_fail;
  j["n_min"] = rc.n_min;
  j["collapse_ratio"] = rc.collapse_ratio;
  j["silent_epsilon"] = rc.silent_epsilon;
  j["n_silent"] = rc.n_silent;
  j["ehvi_samples"] = rc.ehvi_samples;
  j["pool_cap"] = rc.pool_cap;
  j["d_div"] = rc.d_div;
  j["preflight_candidates"] = rc.preflight_candidates;
  j["max_iterations"] = rc.max_iterations;
  j["subset_mode"] = std::string(to_string(rc.subset_mode));
  j["wilson_level"] = rc.wilson_level;
  j["default_kappa"] = rc.default_kappa;
  return j;
}

BudgetLedger build_ledger(const std::vector<EvaluationRecord>& history, double unit_cost, double budget_units) {
  BudgetLedger l;
  l.unit_cost = unit_cost;
  l.budget_units = budget_units;
  for (auto phase : {Phase::baseline, Phase::init, Phase::search, Phase::preflight}) {
    PhaseLedger p;
    p.phase = phase;
    std::set<int> fids;
    for (const auto& r : history) {
      if (r.phase != phase) continue;
      ++p.evaluations;
      fids.insert(r.fidelity);
      p.cost += r.total_cost;
    }
    p.fidelities.assign(fids.begin(), fids.end());
    p.units = unit_cost > 0.0 ? p.cost / unit_cost : 0.0;
    l.total_cost += p.cost;
    l.phases.push_back(std::move(p));
  }
  l.total_units = unit_cost > 0.0 ? l.total_cost / unit_cost : 0.0;
  return l;
}

std::vector<ResultPoint> pareto_front(const std::vector<EvaluationRecord>& history, const Surrogate& s,
                                      const CostModel& cost, double budget_deploy, const SafetyParams& safety,
                                      const FlagSpace& space, const Configuration& baseline, double wilson_level) {
  std::set<Configuration> distinct;
  for (const auto& r : history) {
    if (fit_usable(r) && silent_consistent(r.config, space)) distinct.insert(r.config);
  }
  std::vector<Configuration> configs(distinct.begin(), distinct.end());
  const auto pred = s.predict_many(configs);

  std::vector<FrontPoint> pts;
  std::map<Configuration, Prediction> by_config;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const double c = cost.predict(configs[i], space);
    if (c > budget_deploy || !is_safe(pred[i], safety)) continue;
    pts.push_back({pred[i].mean, c, configs[i]});
    by_config[configs[i]] = pred[i];
  }
  auto front = non_dominated(std::move(pts));
  if (front.empty()) {
    front.push_back({s.predict(baseline).mean, cost.predict(baseline, space), baseline});
    by_config[baseline] = s.predict(baseline);
  }
  std::stable_sort(front.begin(), front.end(), [](const auto& a, const auto& b) { return a.mu > b.mu; });

  std::vector<ResultPoint> out;
  for (const auto& fp : front) {
    ResultPoint p;
    p.config = fp.config;
    p.assignment = config_to_json(fp.config, space);
    p.label = config_label(fp.config, space);
    p.mu = by_config[fp.config].reported_mean();
    p.sigma = by_config[fp.config].stddev;
    p.cost = fp.cost;
    for (const auto& r : history) {
      if (r.config == fp.config && r.phase != Phase::preflight && r.phase != Phase::meta) {
        p.passes += r.passes;
        p.trials += r.fidelity;
      }
    }
    if (p.trials > 0) p.wilson = wilson_interval(p.passes, p.trials, wilson_level);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<EvaluationRecord> load_meta_history(const std::vector<std::string>& paths, const FlagSpace& space,
                                                double lambda_meta) {
  std::vector<EvaluationRecord> out;
  for (const auto& path : paths) {
    const auto h = read_history(path);
    std::vector<std::string> prior;
    if (h.header && h.header->contains("space")) {
      for (const auto& f : h.header->at("space").at("flags")) prior.push_back(f.at("name").get<std::string>());
    } else {
      std::set<std::string> names;
      for (const auto& e : h.evals) {
        for (auto it = e.at("config").begin(); it != e.at("config").end(); ++it) names.insert(it.key());
      }
      prior.assign(names.begin(), names.end());
    }
    std::vector<std::string> current;
    for (const auto& f : space.flags()) current.push_back(f.name);
    const bool overlap = std::any_of(prior.begin(), prior.end(), [&](const auto& n) { return space.index_of(n); });
    if (!overlap)
      throw MetaHistoryError("'" + path + "' shares no flags with the current space; prior flags: [" + join(prior) +
                             "], current flags: [" + join(current) + "]");

    for (const auto& e : h.evals) {
      const auto phase = e.value("phase", std::string());
      if (phase == "preflight" || phase == "meta") continue;
      Json projected = e;
      Json assignment = Json::object();
      for (auto it = e.at("config").begin(); it != e.at("config").end(); ++it) {
        auto idx = space.index_of(it.key());
        if (idx && space.flag(*idx).level_of(it.value())) assignment[it.key()] = it.value();
      }
      projected["config"] = assignment;
      auto r = record_from_json(projected, space);
      r.corrected_variance *= lambda_meta;
      r.observation_variance *= lambda_meta;
      r.phase = Phase::meta;
      r.provenance = "meta:" + path;
      out.push_back(std::move(r));
    }
  }
  return out;
}

Json result_to_json(const RunResult& rr, const FlagSpace& space) {
  (void)space;
  Json j;
  j["front"] = Json::array();
  for (const auto& p : rr.front) {
    j["front"].push_back({{"config", p.assignment},
                          {"label", p.label},
                          {"mu", p.mu},
                          {"sigma", p.sigma},
                          {"cost", p.cost},
                          {"passes", p.passes},
                          {"trials", p.trials},
                          {"wilson", {p.wilson.low, p.wilson.high}}});
  }
  j["committed"] = rr.committed ? Json(*rr.committed) : Json(nullptr);
  j["preflight"] = Json::array();
  for (const auto& po : rr.preflight) {
    Json v = Json::array();
    for (const auto& fv : po.verdicts)
      v.push_back({{"flag", space.flag(fv.flag).name}, {"status", std::string(to_string(fv.status))}, {"reason", fv.reason}});
    j["preflight"].push_back(
        {{"front_index", po.front_index}, {"passed", po.passed}, {"veto_reason", po.veto_reason}, {"verdicts", v}});
  }
  Json phases = Json::array();
  for (const auto& p : rr.ledger.phases) {
    phases.push_back({{"phase", std::string(to_string(p.phase))},
                      {"evaluations", p.evaluations},
                      {"fidelities", p.fidelities},
                      {"cost", p.cost},
                      {"units", p.units}});
  }
  j["ledger"] = {{"unit_cost", rr.ledger.unit_cost},
                 {"budget_units", rr.ledger.budget_units},
                 {"phases", phases},
                 {"total_cost", rr.ledger.total_cost},
                 {"total_units", rr.ledger.total_units}};
  j["anova"] = Json::array();
  for (const auto& a : rr.anova) j["anova"].push_back({{"name", a.name}, {"raw", a.raw}, {"normalized", a.normalized}});
  j["silent"] = Json::array();
  for (const auto& s : rr.silent) {
    j["silent"].push_back({{"flag", s.flag},
                           {"on_records", s.on_records},
                           {"mean_consumer", s.mean_consumer},
                           {"after_record", s.after_record}});
  }
  j["anomalies"] = Json::array();
  for (const auto& a : rr.anomalies)
    j["anomalies"].push_back({{"record", a.record}, {"flag", a.flag}, {"description", a.description}});
  j["frozen"] = Json::array();
  for (const auto& f : rr.frozen) j["frozen"].push_back({{"iteration", f.iteration}, {"block", f.block}, {"pins", f.pins}});
  j["region_events"] = Json::array();
  for (const auto& e : rr.region_events) {
    j["region_events"].push_back(
        {{"iteration", e.iteration}, {"region", e.region}, {"kind", e.kind}, {"radius", e.radius}});
  }
  j["r0"] = rr.r0;
  j["r0_variance"] = rr.r0_variance;
  j["baseline_task_cost"] = rr.baseline_task_cost;
  j["reference"] = {rr.mu_ref, rr.cost_ref};
  j["iterations"] = rr.iterations;
  j["stop_reason"] = rr.stop_reason;
  j["settings"] = rr.settings;
  return j;
}

RunResult result_from_json(const Json& j, const FlagSpace& space) {
  RunResult rr;
  for (const auto& p : j.at("front")) {
    ResultPoint rp;
    rp.assignment = p.at("config");
    rp.config = config_from_json(rp.assignment, space);
    rp.label = p.at("label").get<std::string>();
    rp.mu = p.at("mu").get<double>();
    rp.sigma = p.at("sigma").get<double>();
    rp.cost = p.at("cost").get<double>();
    rp.passes = p.at("passes").get<long>();
    rp.trials = p.at("trials").get<long>();
    rp.wilson = {p.at("wilson").at(0).get<double>(), p.at("wilson").at(1).get<double>()};
    rr.front.push_back(std::move(rp));
  }
  if (!j.at("committed").is_null()) rr.committed = j.at("committed").get<std::size_t>();
  for (const auto& po : j.at("preflight")) {
    PreflightOutcome o;
    o.front_index = po.at("front_index").get<std::size_t>();
    o.passed = po.at("passed").get<bool>();
    o.veto_reason = po.at("veto_reason").get<std::string>();
    for (const auto& v : po.at("verdicts")) {
      FlagVerdict fv;
      fv.flag = space.require_index(v.at("flag").get<std::string>());
      const auto st = v.at("status").get<std::string>();
      fv.status = st == "RED" ? Verdict::red : st == "YELLOW" ? Verdict::yellow : Verdict::green;
      fv.reason = v.at("reason").get<std::string>();
      o.verdicts.push_back(std::move(fv));
    }
    rr.preflight.push_back(std::move(o));
  }
  const auto& l = j.at("ledger");
  rr.ledger.unit_cost = l.at("unit_cost").get<double>();
  rr.ledger.budget_units = l.at("budget_units").get<double>();
  rr.ledger.total_cost = l.at("total_cost").get<double>();
  rr.ledger.total_units = l.at("total_units").get<double>();
  for (const auto& p : l.at("phases")) {
    PhaseLedger pl;
    pl.phase = phase_from_string(p.at("phase").get<std::string>());
    pl.evaluations = p.at("evaluations").get<std::size_t>();
    pl.fidelities = p.at("fidelities").get<std::vector<int>>();
    pl.cost = p.at("cost").get<double>();
    pl.units = p.at("units").get<double>();
    rr.ledger.phases.push_back(std::move(pl));
  }
  for (const auto& a : j.at("anova"))
    rr.anova.push_back({a.at("name").get<std::string>(), a.at("raw").get<double>(), a.at("normalized").get<double>()});
  for (const auto& s : j.at("silent")) {
    rr.silent.push_back({s.at("flag").get<std::string>(), s.at("on_records").get<std::size_t>(),
                         s.at("mean_consumer").get<double>(), s.at("after_record").get<std::size_t>()});
  }
  for (const auto& a : j.at("anomalies"))
    rr.anomalies.push_back({a.at("record").get<std::size_t>(), a.at("flag").get<std::string>(),
                            a.at("description").get<std::string>()});
  for (const auto& f : j.at("frozen"))
    rr.frozen.push_back({f.at("iteration").get<std::size_t>(), f.at("block").get<std::string>(), f.at("pins")});
  for (const auto& e : j.at("region_events")) {
    rr.region_events.push_back({e.at("iteration").get<std::size_t>(), e.at("region").get<std::size_t>(),
                                e.at("kind").get<std::string>(), e.at("radius").get<std::size_t>()});
  }
  rr.r0 = j.at("r0").get<double>();
  rr.r0_variance = j.at("r0_variance").get<double>();
  rr.baseline_task_cost = j.at("baseline_task_cost").get<double>();
  rr.mu_ref = j.at("reference").at(0).get<double>();
  rr.cost_ref = j.at("reference").at(1).get<double>();
  rr.iterations = j.at("iterations").get<std::size_t>();
  rr.stop_reason = j.at("stop_reason").get<std::string>();
  rr.settings = j.at("settings");
  return rr;
}

RunResult run(const RunConfig& rc, const FlagSpace& space, const TaskSuite& suite, Adapter& adapter) {
  return Search(rc, space, suite, adapter).execute();
}

}  // namespace harbor
