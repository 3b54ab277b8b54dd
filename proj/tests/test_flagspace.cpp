#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "harbor/sobol.hpp"

using namespace harbor;

TEST_SUITE("flagspace") {

TEST_CASE("parse assigns blocks and coordinate offsets") {
  const auto space = fixture::mixed_space();
  CHECK(space.size() == 5);
  CHECK(space.block_count() == 2);
  CHECK(space.encoded_dim() == 1 + 1 + 1 + 3 + 1);
  CHECK(space.coordinate_offset(3) == 3);
  CHECK(space.coordinate_offset(4) == 6);
  CHECK(space.block_of(space.require_index("router")) == 1);
  CHECK(space.flag(2).default_level == 1);
  CHECK(space.cardinality() == 2 * 2 * 3 * 3 * 2);
}

TEST_CASE("malformed spaces are rejected with the offending flag") {
  auto doc = fixture::boolean_space_doc(3, 3);
  SUBCASE("duplicate flag") {
    doc["flags"].push_back({{"name", "f0"}});
    CHECK_THROWS_AS(parse_space(doc), DuplicateFlagError);
  }
  SUBCASE("flag in no block") {
    doc["flags"].push_back({{"name", "orphan"}});
    try {
      parse_space(doc);
      FAIL("expected PartitionError");
    } catch (const PartitionError& e) {
      CHECK(e.flag() == "orphan");
    }
  }
  SUBCASE("flag in two blocks") {
    doc["blocks"]["again"] = Json::array({"f1"});
    CHECK_THROWS_AS(parse_space(doc), PartitionError);
  }
  SUBCASE("empty numeric domain") {
    doc["flags"].push_back({{"name", "t"}, {"kind", "numeric"}, {"candidates", Json::array()}});
    doc["blocks"]["b0"].push_back("t");
    CHECK_THROWS_AS(parse_space(doc), EmptyDomainError);
  }
  SUBCASE("default outside domain") {
    doc["flags"].push_back({{"name", "t"}, {"kind", "numeric"}, {"candidates", {1, 2}}, {"default", 3}});
    doc["blocks"]["b0"].push_back("t");
    CHECK_THROWS_AS(parse_space(doc), DomainError);
  }
}

TEST_CASE("encoding maps each kind onto [-1, 1]") {
  const auto space = fixture::mixed_space();
  Configuration c{{1, 0, 2, 1, 0}};
  const auto x = encode(c, space);
  CHECK(x[0] == 1.0);
  CHECK(x[1] == -1.0);
  CHECK(x[2] == doctest::Approx(1.0));
  CHECK(x[3] == -1.0);
  CHECK(x[4] == 1.0);
  CHECK(x[5] == -1.0);
  CHECK(x[6] == -1.0);
  c.levels[2] = 1;
  // 0.5 sits a third of the way from 0.25 to 1.0.
  CHECK(encode(c, space)[2] == doctest::Approx(2.0 * (0.25 / 0.75) - 1.0));
  CHECK_THROWS_AS(encode(Configuration{{2, 0, 0, 0, 0}}, space), DomainError);
}

TEST_CASE("hamming neighbours match brute-force enumeration") {
  const auto space = fixture::mixed_space();
  const Configuration center{{0, 1, 1, 2, 0}};
  const auto all = enumerate_configurations(space);
  CHECK(all.size() == space.cardinality());
  for (std::size_t r = 1; r <= 3; ++r) {
    std::set<Configuration> expected;
    for (const auto& c : all) {
      const auto d = hamming_distance(c, center);
      if (d >= 1 && d <= r) expected.insert(c);
    }
    const auto got = hamming_neighbors(center, space, r);
    CHECK(std::set<Configuration>(got.begin(), got.end()) == expected);
    CHECK(got.size() == expected.size());
    CHECK(hamming_ball_size(center, space, r) == expected.size());
    for (std::size_t i = 1; i < got.size(); ++i)
      CHECK(hamming_distance(got[i - 1], center) <= hamming_distance(got[i], center));
  }
}

TEST_CASE("exclusions pin flags and shrink the free space") {
  const auto space = fixture::mixed_space().with_exclusion(4, {ExclusionKind::silent, 0});
  CHECK(space.is_excluded(4));
  CHECK(space.free_flags().size() == 4);
  CHECK(space.cardinality() == 2 * 2 * 3 * 3);
  for (const auto& n : hamming_neighbors(space.default_config(), space, 4)) CHECK(n.levels[4] == 0);
  Configuration c{{1, 1, 0, 0, 1}};
  CHECK_FALSE(space.is_pinned(c));
  CHECK(space.pin(c).levels[4] == 0);
}

TEST_CASE("assignments round-trip through JSON") {
  const auto space = fixture::mixed_space();
  for (const auto& c : enumerate_configurations(space)) CHECK(config_from_json(config_to_json(c, space), space) == c);
  CHECK_THROWS_AS(config_from_json(Json{{"nope", true}}, space), DomainError);
  CHECK(parse_space(space.to_json()).cardinality() == space.cardinality());
}

TEST_CASE("sobol design is distinct, legal and reproducible") {
  const auto space = fixture::boolean_space(12, 4);
  const auto a = sobol_init(space, 40, 7);
  const auto b = sobol_init(space, 40, 7);
  CHECK(a.configs == b.configs);
  CHECK_FALSE(a.exhaustive);
  CHECK(std::set<Configuration>(a.configs.begin(), a.configs.end()).size() == 40);
  // Each flag is on in roughly half of the points.
  for (std::size_t f = 0; f < space.size(); ++f) {
    int on = 0;
    for (const auto& c : a.configs) on += c.levels[f];
    CHECK(on >= 12);
    CHECK(on <= 28);
  }
  const auto small = fixture::boolean_space(3, 3);
  const auto full = sobol_init(small, 32, 1);
  CHECK(full.exhaustive);
  CHECK(full.configs.size() == 8);
}

}
