#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace harbor {

using Json = nlohmann::json;

/// Index into a flag's finite domain. Booleans use 0 = off, 1 = on; numeric
/// flags index their sorted candidate list; categorical flags their levels.
using Level = std::uint16_t;

enum class FlagKind { boolean, numeric, categorical };

std::string_view to_string(FlagKind kind);

/// Telemetry counters a flag writes and consumes, plus the minimum number of
/// agent turns before the flag is expected to fire at all.
struct CounterBinding {
  std::vector<std::string> write;
  std::vector<std::string> consume;
  int fire_turns = 1;

  bool empty() const { return write.empty() && consume.empty(); }
};

struct FlagDef {
  std::string name;
  FlagKind kind = FlagKind::boolean;
  std::string block;
  bool warm_dependent = false;
  Level default_level = 0;
  double cost_weight = 0.0;
  std::vector<double> candidates;   // numeric only: sorted, unique
  std::vector<std::string> levels;  // categorical only: >= 2 distinct
  CounterBinding counters;

  std::size_t level_count() const;
  /// Number of latent coordinates this flag occupies in encode().
  std::size_t encoded_width() const;
  /// The first level of every kind reads as "disabled".
  bool enabled(Level level) const { return level != 0; }

  Json value_json(Level level) const;
  /// Returns nullopt when the value is not in the flag's domain.
  std::optional<Level> level_of(const Json& value) const;
};

struct Configuration {
  std::vector<Level> levels;

  auto operator<=>(const Configuration&) const = default;
  bool operator==(const Configuration&) const = default;
};

enum class ExclusionKind { silent, frozen };

struct Exclusion {
  ExclusionKind kind = ExclusionKind::silent;
  Level pinned = 0;
};

class SpaceError : public std::runtime_error {
 public:
  SpaceError(const std::string& what, std::string flag)
      : std::runtime_error(what), flag_(std::move(flag)) {}
  const std::string& flag() const noexcept { return flag_; }

 private:
  std::string flag_;
};

class DuplicateFlagError : public SpaceError {
 public:
  using SpaceError::SpaceError;
};
class PartitionError : public SpaceError {
 public:
  using SpaceError::SpaceError;
};
class EmptyDomainError : public SpaceError {
 public:
  using SpaceError::SpaceError;
};
class DomainError : public SpaceError {
 public:
  using SpaceError::SpaceError;
};

/// The mixed-variable search domain: an ordered flag list partitioned into
/// named blocks. Immutable; exclusions produce a new value.
class FlagSpace {
 public:
  struct Block {
    std::string name;
    std::vector<std::size_t> flags;        // indices into flags()
    std::vector<std::size_t> coordinates;  // indices into encode()
  };

  FlagSpace(std::vector<FlagDef> flags, std::vector<std::pair<std::string, std::vector<std::string>>> blocks);

  const std::vector<FlagDef>& flags() const { return flags_; }
  const FlagDef& flag(std::size_t i) const { return flags_.at(i); }
  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t size() const { return flags_.size(); }
  std::size_t block_count() const { return blocks_.size(); }
  std::size_t block_of(std::size_t flag) const { return block_of_.at(flag); }
  std::size_t encoded_dim() const { return encoded_dim_; }
  std::size_t coordinate_offset(std::size_t flag) const { return offsets_.at(flag); }

  std::optional<std::size_t> index_of(std::string_view name) const;
  std::size_t require_index(std::string_view name) const;

  const std::map<std::size_t, Exclusion>& excluded() const { return excluded_; }
  bool is_excluded(std::size_t flag) const { return excluded_.count(flag) != 0; }
  std::vector<std::size_t> free_flags() const;
  FlagSpace with_exclusion(std::size_t flag, Exclusion exclusion) const;

  /// Every flag at its default, excluded flags at their pins.
  Configuration default_config() const;
  /// Overwrites excluded flags with their pinned values.
  Configuration pin(Configuration config) const;
  bool is_pinned(const Configuration& config) const;
  /// Throws DomainError when a level is out of range or the size is wrong.
  void validate(const Configuration& config) const;

  /// Number of distinct configurations over non-excluded flags, saturating.
  std::uint64_t cardinality() const;

  Json to_json() const;

 private:
  std::vector<FlagDef> flags_;
  std::vector<Block> blocks_;
  std::vector<std::size_t> block_of_;
  std::vector<std::size_t> offsets_;
  std::size_t encoded_dim_ = 0;
  std::map<std::size_t, Exclusion> excluded_;
};

FlagSpace parse_space(const Json& document);
FlagSpace parse_space(std::string_view text);

/// Booleans to -1/+1, numeric candidates affinely onto [-1, 1], categorical
/// levels to a +-1 one-hot block. Coordinate order follows flag order.
Eigen::VectorXd encode(const Configuration& config, const FlagSpace& space);

/// Number of flags whose assigned value differs.
std::size_t hamming_distance(const Configuration& a, const Configuration& b);

/// All configurations at distance 1..radius that keep excluded flags fixed,
/// in a deterministic order (increasing distance, then lexicographic).
std::vector<Configuration> hamming_neighbors(const Configuration& config, const FlagSpace& space,
                                             std::size_t radius);

/// Size of the punctured Hamming ball without enumerating it (saturating).
std::uint64_t hamming_ball_size(const Configuration& config, const FlagSpace& space, std::size_t radius);

/// Every configuration of the free flags, excluded flags pinned. Throws when
/// the space holds more than `limit` configurations.
std::vector<Configuration> enumerate_configurations(const FlagSpace& space, std::uint64_t limit = 1u << 20);

Json config_to_json(const Configuration& config, const FlagSpace& space);
/// Missing flags take their defaults; unknown names throw DomainError.
Configuration config_from_json(const Json& assignment, const FlagSpace& space);

std::string config_label(const Configuration& config, const FlagSpace& space);

}  // namespace harbor
