#include "harbor/flagspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace harbor {

std::string_view to_string(FlagKind kind) {
  switch (kind) {
    case FlagKind::boolean:
      return "boolean";
    case FlagKind::numeric:
      return "numeric";
    case FlagKind::categorical:
      return "categorical";
  }
  return "unknown";
}

std::size_t FlagDef::level_count() const {
  switch (kind) {
    case FlagKind::boolean:
      return 2;
    case FlagKind::numeric:
      return candidates.size();
    case FlagKind::categorical:
      return levels.size();
  }
  return 0;
}

std::size_t FlagDef::encoded_width() const {
  return kind == FlagKind::categorical ? levels.size() : 1;
}

Json FlagDef::value_json(Level level) const {
  switch (kind) {
    case FlagKind::boolean:
      return level != 0;
    case FlagKind::numeric:
      return candidates.at(level);
    case FlagKind::categorical:
      return levels.at(level);
  }
  return nullptr;
}

std::optional<Level> FlagDef::level_of(const Json& value) const {
  switch (kind) {
    case FlagKind::boolean:
      if (value.is_boolean()) return static_cast<Level>(value.get<bool>() ? 1 : 0);
      if (value.is_number_integer()) {
        auto v = value.get<long long>();
        if (v == 0 || v == 1) return static_cast<Level>(v);
      }
      return std::nullopt;
    case FlagKind::numeric: {
      if (!value.is_number()) return std::nullopt;
      double v = value.get<double>();
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        double tol = 1e-9 * std::max(1.0, std::abs(candidates[i]));
        if (std::abs(candidates[i] - v) <= tol) return static_cast<Level>(i);
      }
      return std::nullopt;
    }
    case FlagKind::categorical: {
      if (!value.is_string()) return std::nullopt;
      auto it = std::find(levels.begin(), levels.end(), value.get<std::string>());
      if (it == levels.end()) return std::nullopt;
      return static_cast<Level>(it - levels.begin());
    }
  }
  return std::nullopt;
}

FlagSpace::FlagSpace(std::vector<FlagDef> flags,
                     std::vector<std::pair<std::string, std::vector<std::string>>> blocks)
    : flags_(std::move(flags)) {
  std::map<std::string, std::size_t, std::less<>> by_name;
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    const auto& f = flags_[i];
    if (f.name.empty()) throw SpaceError("flag without a name at position " + std::to_string(i), "");
    if (!by_name.emplace(f.name, i).second) throw DuplicateFlagError("duplicate flag name '" + f.name + "'", f.name);
    switch (f.kind) {
      case FlagKind::boolean:
        break;
      case FlagKind::numeric: {
        if (f.candidates.empty()) throw EmptyDomainError("flag '" + f.name + "' has an empty candidate set", f.name);
        for (std::size_t k = 1; k < f.candidates.size(); ++k) {
          if (!(f.candidates[k - 1] < f.candidates[k]))
            throw SpaceError("flag '" + f.name + "' candidates must be sorted and duplicate-free", f.name);
        }
        break;
      }
      case FlagKind::categorical: {
        if (f.levels.empty()) throw EmptyDomainError("flag '" + f.name + "' has an empty level set", f.name);
        std::set<std::string> distinct(f.levels.begin(), f.levels.end());
        if (distinct.size() != f.levels.size() || distinct.size() < 2)
          throw SpaceError("flag '" + f.name + "' needs at least two distinct levels", f.name);
        break;
      }
    }
    if (f.default_level >= f.level_count())
      throw DomainError("flag '" + f.name + "' default outside its domain", f.name);
    if (!(f.cost_weight >= 0.0)) throw SpaceError("flag '" + f.name + "' has a negative cost_weight", f.name);
    if (f.warm_dependent && f.counters.consume.empty())
      throw SpaceError("warm-dependent flag '" + f.name + "' needs a consumer counter binding", f.name);
  }

  block_of_.assign(flags_.size(), std::numeric_limits<std::size_t>::max());
  std::set<std::string> block_names;
  for (auto& [name, members] : blocks) {
    if (!block_names.insert(name).second) throw PartitionError("duplicate block '" + name + "'", "");
    Block b;
    b.name = name;
    for (const auto& member : members) {
      auto it = by_name.find(member);
      if (it == by_name.end()) throw PartitionError("block '" + name + "' names unknown flag '" + member + "'", member);
      std::size_t idx = it->second;
      if (block_of_[idx] != std::numeric_limits<std::size_t>::max())
        throw PartitionError("flag '" + member + "' is assigned to two blocks", member);
      block_of_[idx] = blocks_.size();
      b.flags.push_back(idx);
    }
    if (b.flags.empty()) throw PartitionError("block '" + name + "' is empty", "");
    std::sort(b.flags.begin(), b.flags.end());
    blocks_.push_back(std::move(b));
  }
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    if (block_of_[i] == std::numeric_limits<std::size_t>::max())
      throw PartitionError("flag '" + flags_[i].name + "' is not assigned to any block", flags_[i].name);
    flags_[i].block = blocks_[block_of_[i]].name;
  }

  offsets_.resize(flags_.size());
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    offsets_[i] = encoded_dim_;
    encoded_dim_ += flags_[i].encoded_width();
  }
  for (auto& b : blocks_) {
    for (auto fi : b.flags) {
      for (std::size_t k = 0; k < flags_[fi].encoded_width(); ++k) b.coordinates.push_back(offsets_[fi] + k);
    }
  }
}

std::optional<std::size_t> FlagSpace::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    if (flags_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t FlagSpace::require_index(std::string_view name) const {
  auto idx = index_of(name);
  if (!idx) throw DomainError("unknown flag '" + std::string(name) + "'", std::string(name));
  return *idx;
}

std::vector<std::size_t> FlagSpace::free_flags() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    if (!is_excluded(i)) out.push_back(i);
  }
  return out;
}

FlagSpace FlagSpace::with_exclusion(std::size_t flag, Exclusion exclusion) const {
  if (flag >= flags_.size()) throw DomainError("exclusion index out of range", "");
  if (exclusion.pinned >= flags_[flag].level_count())
    throw DomainError("pinned value outside the domain of '" + flags_[flag].name + "'", flags_[flag].name);
  FlagSpace out = *this;
  out.excluded_[flag] = exclusion;
  return out;
}

Configuration FlagSpace::default_config() const {
  Configuration c;
  c.levels.reserve(flags_.size());
  for (const auto& f : flags_) c.levels.push_back(f.default_level);
  return pin(std::move(c));
}

Configuration FlagSpace::pin(Configuration config) const {
  for (const auto& [idx, ex] : excluded_) config.levels.at(idx) = ex.pinned;
  return config;
}

bool FlagSpace::is_pinned(const Configuration& config) const {
  for (const auto& [idx, ex] : excluded_) {
    if (config.levels.at(idx) != ex.pinned) return false;
  }
  return true;
}

void FlagSpace::validate(const Configuration& config) const {
  if (config.levels.size() != flags_.size())
    throw DomainError("configuration has " + std::to_string(config.levels.size()) + " values for " +
                          std::to_string(flags_.size()) + " flags",
                      "");
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    if (config.levels[i] >= flags_[i].level_count())
      throw DomainError("value outside the domain of '" + flags_[i].name + "'", flags_[i].name);
  }
}

std::uint64_t FlagSpace::cardinality() const {
  constexpr std::uint64_t cap = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    if (is_excluded(i)) continue;
    std::uint64_t k = flags_[i].level_count();
    if (n > cap / k) return cap;
    n *= k;
  }
  return n;
}

Json FlagSpace::to_json() const {
  Json doc;
  doc["flags"] = Json::array();
  for (const auto& f : flags_) {
    Json j;
    j["name"] = f.name;
    j["kind"] = std::string(to_string(f.kind));
    if (f.kind == FlagKind::numeric) j["candidates"] = f.candidates;
    if (f.kind == FlagKind::categorical) j["levels"] = f.levels;
    j["default"] = f.value_json(f.default_level);
    j["warm_dependent"] = f.warm_dependent;
    j["cost_weight"] = f.cost_weight;
    if (!f.counters.empty()) {
      j["counters"] = {{"write", f.counters.write}, {"consume", f.counters.consume}, {"fire_turns", f.counters.fire_turns}};
    }
    doc["flags"].push_back(std::move(j));
  }
  doc["blocks"] = Json::array();
  for (const auto& b : blocks_) {
    Json members = Json::array();
    for (auto fi : b.flags) members.push_back(flags_[fi].name);
    doc["blocks"].push_back({{"name", b.name}, {"flags", members}});
  }
  return doc;
}

namespace {

FlagKind parse_kind(const std::string& s, const std::string& flag) {
  if (s == "boolean" || s == "bool") return FlagKind::boolean;
  if (s == "numeric" || s == "threshold") return FlagKind::numeric;
  if (s == "categorical" || s == "preset") return FlagKind::categorical;
  throw SpaceError("flag '" + flag + "' has unknown kind '" + s + "'", flag);
}

std::vector<std::string> string_list(const Json& j, const char* key) {
  if (!j.contains(key)) return {};
  return j.at(key).get<std::vector<std::string>>();
}

}  // namespace

FlagSpace parse_space(const Json& document) {
  if (!document.is_object() || !document.contains("flags") || !document.contains("blocks"))
    throw SpaceError("space document needs 'flags' and 'blocks'", "");

  std::vector<FlagDef> flags;
  for (const auto& j : document.at("flags")) {
    FlagDef f;
    f.name = j.at("name").get<std::string>();
    f.kind = parse_kind(j.value("kind", std::string("boolean")), f.name);
    if (f.kind == FlagKind::numeric) {
      if (!j.contains("candidates") || j.at("candidates").empty())
        throw EmptyDomainError("flag '" + f.name + "' has an empty candidate set", f.name);
      f.candidates = j.at("candidates").get<std::vector<double>>();
      std::sort(f.candidates.begin(), f.candidates.end());
    }
    if (f.kind == FlagKind::categorical) {
      if (!j.contains("levels") || j.at("levels").empty())
        throw EmptyDomainError("flag '" + f.name + "' has an empty level set", f.name);
      f.levels = j.at("levels").get<std::vector<std::string>>();
    }
    f.warm_dependent = j.value("warm_dependent", false);
    f.cost_weight = j.value("cost_weight", 0.0);
    if (j.contains("counters")) {
      const auto& c = j.at("counters");
      f.counters.write = string_list(c, "write");
      f.counters.consume = string_list(c, "consume");
      f.counters.fire_turns = c.value("fire_turns", 1);
    }
    if (j.contains("default")) {
      auto level = f.level_of(j.at("default"));
      if (!level) throw DomainError("flag '" + f.name + "' default outside its domain", f.name);
      f.default_level = *level;
    }
    flags.push_back(std::move(f));
  }

  std::vector<std::pair<std::string, std::vector<std::string>>> blocks;
  const auto& jb = document.at("blocks");
  if (jb.is_array()) {
    for (const auto& b : jb) blocks.emplace_back(b.at("name").get<std::string>(), string_list(b, "flags"));
  } else {
    for (auto it = jb.begin(); it != jb.end(); ++it)
      blocks.emplace_back(it.key(), it.value().get<std::vector<std::string>>());
  }
  return FlagSpace(std::move(flags), std::move(blocks));
}

FlagSpace parse_space(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SpaceError(std::string("space document is not valid JSON: ") + e.what(), "");
  }
  return parse_space(doc);
}

Eigen::VectorXd encode(const Configuration& config, const FlagSpace& space) {
  space.validate(config);
  Eigen::VectorXd x(space.encoded_dim());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& f = space.flag(i);
    const auto off = space.coordinate_offset(i);
    const Level level = config.levels[i];
    switch (f.kind) {
      case FlagKind::boolean:
        x[off] = level ? 1.0 : -1.0;
        break;
      case FlagKind::numeric: {
        const double lo = f.candidates.front();
        const double hi = f.candidates.back();
        x[off] = hi > lo ? 2.0 * (f.candidates[level] - lo) / (hi - lo) - 1.0 : 0.0;
        break;
      }
      case FlagKind::categorical:
        for (std::size_t k = 0; k < f.levels.size(); ++k) x[off + k] = k == level ? 1.0 : -1.0;
        break;
    }
  }
  return x;
}

std::size_t hamming_distance(const Configuration& a, const Configuration& b) {
  std::size_t d = 0;
  const std::size_t n = std::min(a.levels.size(), b.levels.size());
  for (std::size_t i = 0; i < n; ++i) d += a.levels[i] != b.levels[i];
  return d + (std::max(a.levels.size(), b.levels.size()) - n);
}

namespace {

// Visits every choice of `depth` distinct free flags (increasing index) and
// every non-current level for each.
template <class Visit>
void visit_changes(const Configuration& center, const FlagSpace& space, const std::vector<std::size_t>& free,
                   std::size_t depth, std::size_t start, Configuration& work, Visit& visit) {
  if (depth == 0) {
    visit(work);
    return;
  }
  for (std::size_t p = start; p + depth <= free.size(); ++p) {
    const std::size_t fi = free[p];
    const auto n_levels = space.flag(fi).level_count();
    for (std::size_t l = 0; l < n_levels; ++l) {
      if (l == center.levels[fi]) continue;
      work.levels[fi] = static_cast<Level>(l);
      visit_changes(center, space, free, depth - 1, p + 1, work, visit);
    }
    work.levels[fi] = center.levels[fi];
  }
}

}  // namespace

std::vector<Configuration> hamming_neighbors(const Configuration& config, const FlagSpace& space,
                                             std::size_t radius) {
  space.validate(config);
  std::vector<Configuration> out;
  const auto free = space.free_flags();
  Configuration work = config;
  auto collect = [&](const Configuration& c) { out.push_back(c); };
  for (std::size_t d = 1; d <= std::min(radius, free.size()); ++d) {
    visit_changes(config, space, free, d, 0, work, collect);
  }
  return out;
}

std::uint64_t hamming_ball_size(const Configuration& config, const FlagSpace& space, std::size_t radius) {
  space.validate(config);
  // Elementary symmetric polynomials of (levels - 1) over free flags.
  const auto free = space.free_flags();
  const std::size_t r = std::min(radius, free.size());
  std::vector<double> e(r + 1, 0.0);
  e[0] = 1.0;
  for (auto fi : free) {
    const double w = static_cast<double>(space.flag(fi).level_count() - 1);
    for (std::size_t k = r; k >= 1; --k) e[k] += e[k - 1] * w;
  }
  double total = 0.0;
  for (std::size_t k = 1; k <= r; ++k) total += e[k];
  if (total >= 1.8e19) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(std::llround(total));
}

std::vector<Configuration> enumerate_configurations(const FlagSpace& space, std::uint64_t limit) {
  const auto n = space.cardinality();
  if (n > limit) throw DomainError("space has " + std::to_string(n) + " configurations, above the enumeration limit", "");
  const auto free = space.free_flags();
  std::vector<Configuration> out;
  out.reserve(n);
  Configuration c = space.default_config();
  for (auto fi : free) c.levels[fi] = 0;
  for (std::uint64_t k = 0; k < n; ++k) {
    out.push_back(c);
    // Odometer increment; last free flag varies fastest.
    for (std::size_t p = free.size(); p-- > 0;) {
      const auto fi = free[p];
      if (++c.levels[fi] < space.flag(fi).level_count()) break;
      c.levels[fi] = 0;
    }
  }
  return out;
}

Json config_to_json(const Configuration& config, const FlagSpace& space) {
  space.validate(config);
  Json j = Json::object();
  for (std::size_t i = 0; i < space.size(); ++i) j[space.flag(i).name] = space.flag(i).value_json(config.levels[i]);
  return j;
}

Configuration config_from_json(const Json& assignment, const FlagSpace& space) {
  if (!assignment.is_object()) throw DomainError("configuration must be an object of flag values", "");
  Configuration c = space.default_config();
  for (auto it = assignment.begin(); it != assignment.end(); ++it) {
    const auto idx = space.require_index(it.key());
    auto level = space.flag(idx).level_of(it.value());
    if (!level) throw DomainError("value outside the domain of '" + it.key() + "'", it.key());
    c.levels[idx] = *level;
  }
  return c;
}

std::string config_label(const Configuration& config, const FlagSpace& space) {
  std::ostringstream os;
  bool first = true;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& f = space.flag(i);
    const Level l = config.levels.at(i);
    if (f.kind == FlagKind::boolean) {
      if (!l) continue;
      os << (first ? "" : "+") << f.name;
    } else {
      if (l == f.default_level) continue;
      os << (first ? "" : "+") << f.name << '=' << f.value_json(l).dump();
    }
    first = false;
  }
  return first ? std::string("(all off)") : os.str();
}

}  // namespace harbor
