#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "labels.hpp"
#include "test_util.hpp"

using namespace homctx;

namespace {

std::string minimal_config(const std::string& grasp_name = "grip") {
  return R"({
    "schema_version": 1,
    "actions": [{"id": "a1", "name": "poke"}],
    "grasps": [{"id": "g0", "name": "no hand", "null": true}, {"id": "g1", "name": ")" +
         grasp_name + R"("}],
    "attributes": [{"id": "o0", "name": "no object", "null": true}, {"id": "o1", "name": "blob"}]
  })";
}

}  // namespace

TEST_CASE("gtea default space has the published class counts") {
  const LabelSpace space = LabelSpace::gtea();
  CHECK(space.num_actions() == 10);
  CHECK(space.num_grasps() == 13);
  CHECK(space.num_attributes() == 9);
  CHECK(space.grasp(0).name == "no hand");
  CHECK(space.attribute(0).name == "no object");
  CHECK(space.grasp(1).name == "power wrap");
  CHECK(space.grasp(13).name == "inferior pincer");
  CHECK(space.attribute(9).name == "deformable-flat-small");
  CHECK(space.action(9).name == "take");
}

TEST_CASE("minimal one-class space loads") {
  const LabelSpace space = LabelSpace::from_json_text(minimal_config());
  CHECK(space.num_actions() == 1);
  CHECK(space.num_grasps() == 1);
  CHECK(space.num_attributes() == 1);
}

TEST_CASE("duplicate names are rejected") {
  const std::string config = R"({
    "actions": [{"id": "a1", "name": "poke"}],
    "grasps": [{"id": "g0", "name": "no hand", "null": true},
               {"id": "g1", "name": "power wrap"}, {"id": "g2", "name": "power wrap"}],
    "attributes": [{"id": "o0", "name": "no object", "null": true}, {"id": "o1", "name": "blob"}]
  })";
  CHECK_THROWS_WITH_AS(LabelSpace::from_json_text(config),
                       doctest::Contains("duplicate name \"power wrap\""), Error);
}

TEST_CASE("empty lists and missing null declarations are rejected") {
  CHECK_THROWS_WITH_AS(LabelSpace::from_json_text(R"({"actions": [], "grasps": [], "attributes": []})"),
                       doctest::Contains("empty"), Error);
  const std::string no_null = R"({
    "actions": [{"id": "a1", "name": "poke"}],
    "grasps": [{"id": "g1", "name": "power wrap"}, {"id": "g2", "name": "tip pinch"}],
    "attributes": [{"id": "o0", "name": "no object", "null": true}, {"id": "o1", "name": "blob"}]
  })";
  CHECK_THROWS_WITH_AS(LabelSpace::from_json_text(no_null),
                       doctest::Contains("missing null-class declaration"), Error);
}

TEST_CASE("label space round-trips through a file with a stable fingerprint") {
  test::TempDir dir("labels");
  const LabelSpace space = LabelSpace::gtea();
  space.save(dir.file("labels.json"));
  const LabelSpace reloaded = LabelSpace::load(dir.file("labels.json"));
  CHECK(reloaded.fingerprint() == space.fingerprint());
  CHECK(reloaded.num_grasps() == space.num_grasps());

  const LabelSpace other = LabelSpace::from_json_text(minimal_config());
  CHECK(other.fingerprint() != space.fingerprint());
  CHECK(LabelSpace::from_json_text(minimal_config("pinch")).fingerprint() !=
        LabelSpace::from_json_text(minimal_config("grip")).fingerprint());
}

TEST_CASE("shape criteria on the worked examples") {
  CHECK(classify_shape({10, 4, 1}) == ShapeSet{true, false, true});
  CHECK(classify_shape({5, 4, 3}) == ShapeSet{false, true, false});
  CHECK(classify_shape({2, 2, 2}) == ShapeSet{false, true, false});
  CHECK(classify_shape({10, 4.9, 2.6}).prismatic);
  CHECK_FALSE(classify_shape({10, 4.9, 2.6}).flat);
}

TEST_CASE("shape classification rejects bad orderings") {
  CHECK_THROWS_AS(classify_shape({1, 2, 3}), Error);
  CHECK_THROWS_AS(classify_shape({3, 2, 0}), Error);
}

TEST_CASE("shape classification is scale invariant and matches direct criteria") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.1, 20.0);
  for (int trial = 0; trial < 500; ++trial) {
    double d[3] = {u(gen), u(gen), u(gen)};
    std::sort(d, d + 3, std::greater<>());
    const ObjectDimensions dims{d[0], d[1], d[2]};
    const ShapeSet got = classify_shape(dims);

    ShapeSet expected;
    expected.prismatic = dims.a > 2 * dims.b;
    expected.round = dims.b <= dims.a && dims.a < 2 * dims.b && dims.c <= dims.a && dims.a < 2 * dims.c;
    expected.flat = dims.b > 2 * dims.c;
    CHECK(got == expected);

    const double scale = std::uniform_real_distribution<double>(0.01, 100.0)(gen);
    CHECK(classify_shape({dims.a * scale, dims.b * scale, dims.c * scale}) == got);
  }
}
