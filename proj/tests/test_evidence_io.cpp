#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>
#include <random>

#include "doctest.h"
#include "evidence_io.hpp"
#include "json.hpp"
#include "synth.hpp"
#include "test_util.hpp"

using namespace homctx;

namespace {

LabelSpace small_space() {
  return LabelSpace::from_json_text(R"({
    "actions": [{"id":"a1","name":"poke"},{"id":"a2","name":"lift"}],
    "grasps": [{"id":"g0","name":"no hand","null":true},{"id":"g1","name":"wrap"},
               {"id":"g2","name":"pinch"}],
    "attributes": [{"id":"o0","name":"no object","null":true},{"id":"o1","name":"box"},
                   {"id":"o2","name":"ball"}]
  })");
}

FrameRecord sample_frame(std::mt19937_64& gen, const std::string& id) {
  std::uniform_real_distribution<double> u01(0, 1), pos(10, 500), size(10, 200), score(-3, 3);
  FrameRecord f;
  f.frame_id = id;
  f.evidence.phi_a = {score(gen), score(gen)};
  SceneState truth;
  truth.action = gen() % 2;
  for (int si = 0; si < 2; ++si) {
    if (u01(gen) < 0.25) continue;
    const int hands = 1 + gen() % 3;
    for (int k = 0; k < hands; ++k) {
      HandCandidate c;
      c.box = {pos(gen), pos(gen), size(gen), size(gen)};
      c.phi_h = {u01(gen), u01(gen), u01(gen)};
      c.phi_g = {score(gen), score(gen)};
      c.offset = {score(gen) / 3, score(gen) / 3, 0.1 + u01(gen), 0.1 + u01(gen)};
      f.evidence.hands[si].push_back(std::move(c));
    }
    const int objects = 1 + gen() % 3;
    for (int k = 0; k < objects; ++k) {
      ObjectCandidate c;
      c.box = {pos(gen), pos(gen), size(gen), size(gen)};
      c.phi_o = {score(gen), score(gen)};
      f.evidence.objects[si].push_back(std::move(c));
    }
    truth.sides[si].grasp = 1 + gen() % 2;
    truth.sides[si].attribute = 1 + gen() % 2;
    truth.sides[si].hand_box = f.evidence.hands[si][0].box;
    truth.sides[si].object_box = f.evidence.objects[si][0].box;
  }
  f.truth = truth;
  return f;
}

bool frames_equal(const FrameRecord& a, const FrameRecord& b) {
  if (a.frame_id != b.frame_id || a.evidence.phi_a != b.evidence.phi_a) return false;
  for (int si = 0; si < 2; ++si) {
    if (a.evidence.hands[si].size() != b.evidence.hands[si].size()) return false;
    for (size_t k = 0; k < a.evidence.hands[si].size(); ++k) {
      const auto& x = a.evidence.hands[si][k];
      const auto& y = b.evidence.hands[si][k];
      if (!(x.box == y.box) || x.phi_h != y.phi_h || x.phi_g != y.phi_g || !(x.offset == y.offset))
        return false;
    }
    if (a.evidence.objects[si].size() != b.evidence.objects[si].size()) return false;
    for (size_t k = 0; k < a.evidence.objects[si].size(); ++k) {
      const auto& x = a.evidence.objects[si][k];
      const auto& y = b.evidence.objects[si][k];
      if (!(x.box == y.box) || x.phi_o != y.phi_o) return false;
    }
  }
  if (a.truth.has_value() != b.truth.has_value()) return false;
  if (a.truth) {
    if (a.truth->action != b.truth->action) return false;
    for (int si = 0; si < 2; ++si) {
      const auto& x = a.truth->sides[si];
      const auto& y = b.truth->sides[si];
      if (x.grasp != y.grasp || x.attribute != y.attribute || x.hand_box != y.hand_box ||
          x.object_box != y.object_box)
        return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("frames survive a write/read cycle bit-exactly") {
  test::TempDir dir("frames");
  const LabelSpace space = small_space();
  std::mt19937_64 gen(97);
  std::vector<FrameRecord> frames;
  for (int i = 0; i < 40; ++i) frames.push_back(sample_frame(gen, "f" + std::to_string(i)));

  write_frames(frames, space, dir.file("frames.jsonl"));
  FrameReader reader(dir.file("frames.jsonl"), space);
  FrameRecord got;
  size_t count = 0;
  while (reader.next(got)) {
    REQUIRE(count < frames.size());
    CHECK(frames_equal(got, frames[count]));
    ++count;
  }
  CHECK(count == frames.size());
}

TEST_CASE("empty frame file yields an empty stream") {
  test::TempDir dir("empty");
  std::ofstream(dir.file("frames.jsonl")).close();
  FrameReader reader(dir.file("frames.jsonl"), small_space());
  FrameRecord got;
  CHECK_FALSE(reader.next(got));
}

TEST_CASE("schema violations are reported with the offending field and line") {
  test::TempDir dir("bad");
  const LabelSpace space = small_space();
  std::mt19937_64 gen(5);
  std::vector<FrameRecord> frames{sample_frame(gen, "ok"), sample_frame(gen, "broken")};
  while (frames[1].evidence.hands[0].empty()) frames[1] = sample_frame(gen, "broken");
  frames[1].evidence.hands[0][0].phi_g.push_back(0.0);  // wrong length

  {
    std::ofstream out(dir.file("frames.jsonl"), std::ios::binary);
    out << R"({"schema_version":1,"type":"homctx-frames","label_space_fingerprint":")"
        << space.fingerprint() << R"("})" << "\n";
    out << frame_to_json_line(frames[0]) << "\n";
    out << frame_to_json_line(frames[1]) << "\n";
  }
  FrameReader reader(dir.file("frames.jsonl"), space);
  FrameRecord got;
  CHECK(reader.next(got));
  try {
    reader.next(got);
    FAIL("expected a schema error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("phi_g") != std::string::npos);
    CHECK(std::string(e.what()).find(":3") != std::string::npos);  // line number
  }
}

TEST_CASE("fingerprint mismatches are rejected up front") {
  test::TempDir dir("fp");
  const LabelSpace space = small_space();
  write_frames({}, space, dir.file("frames.jsonl"));
  const LabelSpace other = LabelSpace::gtea();
  CHECK_THROWS_AS(FrameReader(dir.file("frames.jsonl"), other), Error);
}

TEST_CASE("mutating a valid record breaks exactly the declared invariants") {
  const LabelSpace space = small_space();
  std::mt19937_64 gen(13);
  FrameRecord frame = sample_frame(gen, "mut");
  while (frame.evidence.hands[0].empty() || frame.evidence.objects[1].empty())
    frame = sample_frame(gen, "mut");
  const std::string line = frame_to_json_line(frame);
  CHECK(frames_equal(frame_from_json_line(line, space), frame));

  auto mutate = [&line](const std::function<void(nlohmann::json&)>& fn) {
    nlohmann::json j = nlohmann::json::parse(line);
    fn(j);
    return j.dump();
  };
  // phi_h outside [0,1]
  CHECK_THROWS_AS(frame_from_json_line(mutate([](nlohmann::json& j) {
                    j["left"]["hand_candidates"][0]["phi_h"][0] = 1.5;
                  }),
                                       space),
                  Error);
  // non-positive box width
  CHECK_THROWS_AS(frame_from_json_line(mutate([](nlohmann::json& j) {
                    j["left"]["hand_candidates"][0]["box"]["w"] = 0.0;
                  }),
                                       space),
                  Error);
  // non-positive offset scale
  CHECK_THROWS_AS(frame_from_json_line(mutate([](nlohmann::json& j) {
                    j["left"]["hand_candidates"][0]["offset"]["nw"] = -0.2;
                  }),
                                       space),
                  Error);
  // phi_o length mismatch
  CHECK_THROWS_AS(frame_from_json_line(mutate([](nlohmann::json& j) {
                    j["right"]["object_candidates"][0]["phi_o"].push_back(0.0);
                  }),
                                       space),
                  Error);
  // truth grasp out of range
  CHECK_THROWS_AS(frame_from_json_line(mutate([](nlohmann::json& j) {
                    j["truth"]["left"]["grasp"] = 9;
                  }),
                                       space),
                  Error);
}

TEST_CASE("params round-trip losslessly and verify the fingerprint") {
  test::TempDir dir("params");
  const LabelSpace space = small_space();
  std::mt19937_64 gen(29);

  ModelParams zero = ModelParams::zeros(space);
  write_params(zero, space, dir.file("zero.json"));
  ModelParams zback = read_params(dir.file("zero.json"), space);
  CHECK(zback.alpha == zero.alpha);

  ModelParams p = test::random_params(2, 2, 2, gen, 3.0);
  write_params(p, space, dir.file("p.json"));
  const ModelParams back = read_params(dir.file("p.json"), space);
  CHECK(back.alpha == p.alpha);
  CHECK(back.beta == p.beta);
  CHECK(back.gamma == p.gamma);
  CHECK(back.zeta == p.zeta);
  CHECK(back.eta == p.eta);
  CHECK(back.lambda == p.lambda);
  CHECK(back.xi == p.xi);

  // reading under a different space fails on the fingerprint
  CHECK_THROWS_AS(read_params(dir.file("p.json"), LabelSpace::gtea()), Error);
}

TEST_CASE("manifest validation") {
  test::TempDir dir("manifest");
  const LabelSpace space = small_space();
  space.save(dir.file("labels.json"));
  write_frames({}, space, dir.file("frames.jsonl"));

  DatasetManifest m;
  m.labels_path = "labels.json";
  m.frame_files = {"frames.jsonl"};
  m.train_ids = {"a", "b"};
  m.test_ids = {"c"};
  write_manifest(m, dir.file("manifest.json"));
  const DatasetManifest back = read_manifest(dir.file("manifest.json"));
  CHECK(back.train_ids == m.train_ids);
  CHECK(back.test_ids == m.test_ids);
  CHECK(back.frame_files.size() == 1);

  m.test_ids = {"b"};  // overlaps train
  write_manifest(m, dir.file("overlap.json"));
  CHECK_THROWS_AS(read_manifest(dir.file("overlap.json")), Error);

  m.test_ids = {"c"};
  m.frame_files = {"missing.jsonl"};
  write_manifest(m, dir.file("missing.json"));
  CHECK_THROWS_AS(read_manifest(dir.file("missing.json")), Error);
}

TEST_CASE("accuracy tables match an independent recount") {
  TaskTally tally;
  tally.task = "grasp";
  tally.first_label = 1;
  tally.class_names = {"wrap", "pinch", "poke"};

  SUBCASE("perfect predictions give all ones") {
    for (int label = 1; label <= 3; ++label)
      for (int k = 0; k < 5; ++k) tally.add(label, label);
    CHECK(tally.overall_accuracy() == 1.0);
    for (int label = 1; label <= 3; ++label) CHECK(tally.class_accuracy(label) == 1.0);
  }

  SUBCASE("one class always wrong gives a zero row and a weighted overall") {
    for (int k = 0; k < 6; ++k) tally.add(1, 1);
    for (int k = 0; k < 2; ++k) tally.add(2, 3);
    CHECK(tally.class_accuracy(1) == 1.0);
    CHECK(tally.class_accuracy(2) == 0.0);
    CHECK(tally.overall_accuracy() == doctest::Approx(6.0 / 8.0));
  }

  SUBCASE("random tallies equal a recount") {
    std::mt19937_64 gen(71);
    int correct = 0, total = 0;
    for (int k = 0; k < 500; ++k) {
      const int truth = 1 + gen() % 3;
      const int pred = gen() % 4;  // 0 = null prediction
      tally.add(truth, pred);
      ++total;
      if (truth == pred) ++correct;
    }
    CHECK(tally.overall_accuracy() == doctest::Approx(double(correct) / total).epsilon(1e-12));
    const auto m = tally.confusion();
    int sum = 0;
    for (const auto& row : m)
      for (int v : row) sum += v;
    CHECK(sum == total);
  }
}

TEST_CASE("result files are written") {
  test::TempDir dir("results");
  EvalReport report;
  TaskTally tally;
  tally.task = "action";
  tally.first_label = 0;
  tally.class_names = {"poke", "lift"};
  tally.add(0, 0);
  tally.add(1, 0);
  report.per_mode.push_back({"full", {tally, tally, tally}});
  report.context_tables.push_back({"demo", {"r1"}, {"c1", "c2"}, {1.0, 2.0}});
  report.summary_json = "{}\n";
  write_results(report, dir.path());
  CHECK(std::filesystem::exists(dir.file("accuracy_action_full.csv")));
  CHECK(std::filesystem::exists(dir.file("confusion_action_full.csv")));
  CHECK(std::filesystem::exists(dir.file("context_demo.csv")));
  CHECK(std::filesystem::exists(dir.file("summary.json")));
}
