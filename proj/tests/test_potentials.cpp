#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "model.hpp"
#include "test_util.hpp"

using namespace homctx;
using homctx::test::simple_evidence;
using homctx::test::simple_state;

namespace {

constexpr int kNa = 3, kNg = 4, kNo = 4;

SceneState null_state(int action = 0) {
  SceneState s;
  s.action = action;
  return s;
}

/// Random valid (state, evidence) pair over small candidate lists.
struct RandomInstance {
  EvidenceBundle evidence;
  SceneState state;
};

RandomInstance random_instance(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u01(0, 1), pos(50, 400), size(20, 120), score(-1, 1);
  std::uniform_int_distribution<int> n_cand(1, 3);
  RandomInstance inst;
  inst.evidence.phi_a.resize(kNa);
  for (double& v : inst.evidence.phi_a) v = score(gen);
  inst.state.action = std::uniform_int_distribution<int>(0, kNa - 1)(gen);
  for (int si = 0; si < 2; ++si) {
    const bool present = u01(gen) < 0.8;
    if (!present) continue;
    const int hands = n_cand(gen);
    for (int k = 0; k < hands; ++k) {
      HandCandidate c;
      c.box = {pos(gen), pos(gen), size(gen), size(gen)};
      for (double& v : c.phi_h) v = u01(gen);
      c.phi_g.resize(kNg);
      for (double& v : c.phi_g) v = score(gen);
      c.offset = {score(gen), score(gen), 0.3 + u01(gen), 0.3 + u01(gen)};
      inst.evidence.hands[si].push_back(std::move(c));
    }
    const int objects = n_cand(gen);
    for (int k = 0; k < objects; ++k) {
      ObjectCandidate c;
      c.box = {pos(gen), pos(gen), size(gen), size(gen)};
      c.phi_o.resize(kNo);
      for (double& v : c.phi_o) v = score(gen);
      inst.evidence.objects[si].push_back(std::move(c));
    }
    auto& side = inst.state.sides[si];
    side.grasp = std::uniform_int_distribution<int>(1, kNg)(gen);
    side.hand_box = inst.evidence.hands[si][std::uniform_int_distribution<size_t>(
                                                0, inst.evidence.hands[si].size() - 1)(gen)]
                        .box;
    if (u01(gen) < 0.8) {
      side.attribute = std::uniform_int_distribution<int>(1, kNo)(gen);
      side.object_box = inst.evidence.objects[si][std::uniform_int_distribution<size_t>(
                                                      0, inst.evidence.objects[si].size() - 1)(gen)]
                            .box;
    }
  }
  return inst;
}

}  // namespace

TEST_CASE("functional score is a single alpha lookup") {
  ModelParams p = ModelParams::zeros(kNa, kNg, kNo);
  const EvidenceBundle e = simple_evidence(kNa, kNg, kNo);

  SceneState any = simple_state(e, 2, 1, 3);
  CHECK(score_functional(p, any) == 0.0);

  p.alpha_at(2, 1, 0, 3, 0) = 5.0;
  SceneState hit;
  hit.action = 2;
  hit.sides[0].grasp = 1;
  hit.sides[0].attribute = 3;
  hit.sides[0].hand_box = e.hands[0][0].box;
  hit.sides[0].object_box = e.objects[0][0].box;
  CHECK(score_functional(p, hit) == 5.0);

  SceneState miss = hit;
  miss.sides[1].grasp = 1;
  miss.sides[1].hand_box = e.hands[1][0].box;
  CHECK(score_functional(p, miss) == 0.0);
}

TEST_CASE("physical score sums real-label sides only") {
  ModelParams p = ModelParams::zeros(kNa, kNg, kNo);
  p.beta_at(1, 2) = 1.5;
  const EvidenceBundle e = simple_evidence(kNa, kNg, kNo);

  CHECK(score_physical(p, null_state()) == 0.0);
  CHECK(score_physical(p, simple_state(e, 0, 1, 2)) == 3.0);

  SceneState left_only;
  left_only.sides[0].grasp = 1;
  left_only.sides[0].attribute = 2;
  left_only.sides[0].hand_box = e.hands[0][0].box;
  left_only.sides[0].object_box = e.objects[0][0].box;
  CHECK(score_physical(p, left_only) == 1.5);
}

TEST_CASE("spatial score weights the iou against the regressed reference") {
  ModelParams p = ModelParams::zeros(kNa, kNg, kNo);
  p.gamma = {2.0, 0.0};
  EvidenceBundle e = simple_evidence(kNa, kNg, kNo);

  // object box exactly at the regressed reference: iou = 1
  SceneState at_ref;
  at_ref.sides[0].grasp = 1;
  at_ref.sides[0].attribute = 1;
  at_ref.sides[0].hand_box = e.hands[0][0].box;
  at_ref.sides[0].object_box = apply_offsets(e.hands[0][0].box, e.hands[0][0].offset);
  CHECK(score_spatial(p, at_ref, e) == 2.0);

  // gamma_l = 2, iou = 1/3 (boxes arranged as in the geometry example)
  e.hands[0][0].box = {0, 0, 2, 2};
  e.hands[0][0].offset = {0.5, 0.0, 1.0, 1.0};  // reference (1, 0, 2, 2)
  e.objects[0][0].box = {2, 0, 2, 2};
  SceneState third;
  third.sides[0].grasp = 1;
  third.sides[0].attribute = 1;
  third.sides[0].hand_box = e.hands[0][0].box;
  third.sides[0].object_box = {2, 0, 2, 2};
  CHECK(score_spatial(p, third, e) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  // disjoint object contributes zero
  e.objects[0][0].box = {50, 50, 2, 2};
  third.sides[0].object_box = {50, 50, 2, 2};
  CHECK(score_spatial(p, third, e) == 0.0);
}

TEST_CASE("grasp evidence combines detection and classification dots") {
  ModelParams p = ModelParams::zeros(kNa, kNg, kNo);
  EvidenceBundle e = simple_evidence(kNa, kNg, kNo);
  CHECK(score_grasp_evidence(p, simple_state(e), e) == 0.0);
  CHECK(score_grasp_evidence(p, null_state(), e) == 0.0);

  p.zeta[0] = {0.0, 1.0, 0.0};
  p.eta_row(2)[2] = 1.0;
  e.hands[0][0].phi_h = {0.1, 0.8, 0.1};
  e.hands[0][0].phi_g = {0.0, 0.0, 0.6, 0.0};
  SceneState s;
  s.sides[0].grasp = 2;
  s.sides[0].hand_box = e.hands[0][0].box;
  CHECK(score_grasp_evidence(p, s, e) == doctest::Approx(1.4).epsilon(1e-12));
}

TEST_CASE("object evidence sums lambda dots over sides") {
  ModelParams p = ModelParams::zeros(kNa, kNg, kNo);
  EvidenceBundle e = simple_evidence(kNa, kNg, kNo);
  CHECK(score_object_evidence(p, null_state(), e) == 0.0);

  p.lambda_row(3)[3] = 1.0;
  for (int si = 0; si < 2; ++si) e.objects[si][0].phi_o = {0.0, 0.0, 0.0, 0.7};
  SceneState one;
  one.sides[0].grasp = 1;
  one.sides[0].attribute = 3;
  one.sides[0].hand_box = e.hands[0][0].box;
  one.sides[0].object_box = e.objects[0][0].box;
  CHECK(score_object_evidence(p, one, e) == doctest::Approx(0.7).epsilon(1e-12));

  SceneState both = simple_state(e, 0, 1, 3);
  CHECK(score_object_evidence(p, both, e) == doctest::Approx(1.4).epsilon(1e-12));
}

TEST_CASE("action evidence is the xi row dot") {
  ModelParams p = ModelParams::zeros(kNa, kNg, kNo);
  EvidenceBundle e = simple_evidence(kNa, kNg, kNo);
  CHECK(score_action_evidence(p, null_state(1), e) == 0.0);

  e.phi_a = {0.1, 0.9, 0.3};
  p.xi_row(1)[1] = 1.0;
  CHECK(score_action_evidence(p, null_state(1), e) == doctest::Approx(0.9).epsilon(1e-12));

  for (int d = 0; d < kNa; ++d) p.xi_row(2)[d] = 1.0;
  CHECK(score_action_evidence(p, null_state(2), e) == doctest::Approx(1.3).epsilon(1e-12));
}

TEST_CASE("total potential is exactly the sum of the six terms") {
  std::mt19937_64 gen(41);
  for (int trial = 0; trial < 10000; ++trial) {
    const RandomInstance inst = random_instance(gen);
    const ModelParams p = test::random_params(kNa, kNg, kNo, gen);
    const double total = total_potential(p, inst.state, inst.evidence);
    const double parts = score_functional(p, inst.state) + score_physical(p, inst.state) +
                         score_spatial(p, inst.state, inst.evidence) +
                         score_grasp_evidence(p, inst.state, inst.evidence) +
                         score_object_evidence(p, inst.state, inst.evidence) +
                         score_action_evidence(p, inst.state, inst.evidence);
    REQUIRE(total == doctest::Approx(parts).epsilon(1e-12));
    REQUIRE(total == total_potential(p, inst.state, inst.evidence));  // deterministic
  }
}

TEST_CASE("locality: parameters not indexed by the state do not matter") {
  std::mt19937_64 gen(43);
  for (int trial = 0; trial < 200; ++trial) {
    const RandomInstance inst = random_instance(gen);
    ModelParams p = test::random_params(kNa, kNg, kNo, gen);
    const double base = total_potential(p, inst.state, inst.evidence);

    ModelParams q = p;
    const int gl = inst.state.sides[0].grasp, gr = inst.state.sides[1].grasp;
    const int ol = inst.state.sides[0].attribute, orr = inst.state.sides[1].attribute;
    for (int a = 0; a < kNa; ++a)
      for (int i = 0; i <= kNg; ++i)
        for (int j = 0; j <= kNg; ++j)
          for (int m = 0; m <= kNo; ++m)
            for (int n = 0; n <= kNo; ++n)
              if (!(a == inst.state.action && i == gl && j == gr && m == ol && n == orr))
                q.alpha_at(a, i, j, m, n) += 10.0;
    for (int i = 1; i <= kNg; ++i)
      for (int m = 1; m <= kNo; ++m)
        if (!((i == gl && m == ol) || (i == gr && m == orr))) q.beta_at(i, m) += 5.0;
    for (int i = 1; i <= kNg; ++i)
      if (i != gl && i != gr)
        for (int d = 0; d < kNg; ++d) q.eta_row(i)[d] += 3.0;
    for (int m = 1; m <= kNo; ++m)
      if (m != ol && m != orr)
        for (int d = 0; d < kNo; ++d) q.lambda_row(m)[d] += 3.0;
    for (int a = 0; a < kNa; ++a)
      if (a != inst.state.action)
        for (int d = 0; d < kNa; ++d) q.xi_row(a)[d] += 3.0;
    CHECK(total_potential(q, inst.state, inst.evidence) == base);
  }
}

TEST_CASE("null sides contribute nothing to the side terms") {
  std::mt19937_64 gen(47);
  ModelParams p = test::random_params(kNa, kNg, kNo, gen);
  const EvidenceBundle e = simple_evidence(kNa, kNg, kNo);
  const SceneState s = null_state(1);
  CHECK(score_physical(p, s) == 0.0);
  CHECK(score_spatial(p, s, e) == 0.0);
  CHECK(score_grasp_evidence(p, s, e) == 0.0);
  CHECK(score_object_evidence(p, s, e) == 0.0);
}

TEST_CASE("total potential is linear in the parameters") {
  std::mt19937_64 gen(53);
  for (int trial = 0; trial < 200; ++trial) {
    const RandomInstance inst = random_instance(gen);
    const ModelParams p = test::random_params(kNa, kNg, kNo, gen);
    const ModelParams q = test::random_params(kNa, kNg, kNo, gen);
    ModelParams sum = p;
    {
      std::vector<const double*> src;
      q.for_each_value([&src](const double& v) { src.push_back(&v); });
      size_t i = 0;
      sum.for_each_value([&](double& v) { v += *src[i++]; });
    }
    const double vp = total_potential(p, inst.state, inst.evidence);
    const double vq = total_potential(q, inst.state, inst.evidence);
    const double vsum = total_potential(sum, inst.state, inst.evidence);
    CHECK(vsum == doctest::Approx(vp + vq).epsilon(1e-9));

    ModelParams scaled = p;
    scaled.for_each_value([](double& v) { v *= 2.5; });
    CHECK(total_potential(scaled, inst.state, inst.evidence) ==
          doctest::Approx(2.5 * vp).epsilon(1e-9));
  }
}

TEST_CASE("scores validate their inputs") {
  ModelParams p = ModelParams::zeros(kNa, kNg, kNo);
  EvidenceBundle e = simple_evidence(kNa, kNg, kNo);
  SceneState s = simple_state(e);
  s.action = kNa;
  CHECK_THROWS_AS(total_potential(p, s, e), Error);
  s = simple_state(e);
  s.sides[0].grasp = kNg + 1;
  CHECK_THROWS_AS(total_potential(p, s, e), Error);
  s = simple_state(e);
  s.sides[0].hand_box = BoundingBox{9999, 9999, 5, 5};  // overlaps no record
  CHECK_THROWS_AS(score_grasp_evidence(p, s, e), Error);

  EvidenceBundle bad = e;
  bad.phi_a.resize(kNa + 1, 0.0);
  CHECK_THROWS_AS(total_potential(p, simple_state(e), bad), Error);

  // state invariants
  SceneState inconsistent;
  inconsistent.sides[0].grasp = 1;  // grasp without a hand box
  const LabelSpace space = LabelSpace::from_json_text(R"({
    "actions": [{"id":"a1","name":"x"},{"id":"a2","name":"y"},{"id":"a3","name":"z"}],
    "grasps": [{"id":"g0","name":"no hand","null":true},{"id":"g1","name":"p"},
               {"id":"g2","name":"q"},{"id":"g3","name":"r"},{"id":"g4","name":"s"}],
    "attributes": [{"id":"o0","name":"no object","null":true},{"id":"o1","name":"t"},
                   {"id":"o2","name":"u"},{"id":"o3","name":"v"},{"id":"o4","name":"w"}]
  })");
  CHECK_THROWS_AS(validate_state(inconsistent, space), Error);
  inconsistent = SceneState{};
  inconsistent.sides[0].object_box = BoundingBox{1, 1, 1, 1};
  CHECK_THROWS_AS(validate_state(inconsistent, space), Error);
}
