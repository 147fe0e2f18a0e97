#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "harness.hpp"
#include "synth.hpp"
#include "test_util.hpp"

using namespace homctx;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int argmax(const std::vector<double>& v) {
  int best = 0;
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

}  // namespace

TEST_CASE("identical seeds produce byte-identical datasets") {
  test::TempDir dir("synthdet");
  SynthConfig cfg;
  cfg.num_frames = 60;
  cfg.seed = 99;
  write_synth_dataset(synth_generate(cfg), dir.file("a"));
  write_synth_dataset(synth_generate(cfg), dir.file("b"));
  for (const char* name : {"labels.json", "frames.jsonl", "manifest.json", "generating_params.json"})
    CHECK(slurp(dir.file("a") / name) == slurp(dir.file("b") / name));

  SynthConfig other = cfg;
  other.seed = 100;
  write_synth_dataset(synth_generate(other), dir.file("c"));
  CHECK(slurp(dir.file("a") / "frames.jsonl") != slurp(dir.file("c") / "frames.jsonl"));
}

TEST_CASE("noise-free evidence argmaxes equal the sampled truth on every frame") {
  SynthConfig cfg;
  cfg.num_frames = 120;
  cfg.evidence_noise = 0.0;
  cfg.box_noise = 0.0;
  cfg.seed = 31;
  const SynthOutput out = synth_generate(cfg);
  for (const FrameRecord& f : out.frames) {
    REQUIRE(f.truth.has_value());
    CHECK(argmax(f.evidence.phi_a) == f.truth->action);
    for (int si = 0; si < 2; ++si) {
      const SideState& side = f.truth->sides[si];
      if (side.grasp == 0) {
        CHECK(f.evidence.hands[si].empty());
        continue;
      }
      CHECK(argmax(f.evidence.hands[si][0].phi_g) == side.grasp - 1);
      CHECK(argmax(f.evidence.objects[si][0].phi_o) == side.attribute - 1);
      CHECK(*side.hand_box == f.evidence.hands[si][0].box);
      CHECK(*side.object_box == f.evidence.objects[si][0].box);
    }
  }
}

TEST_CASE("grasp-attribute co-occurrence tracks the generating beta") {
  SynthConfig cfg;
  cfg.num_frames = 2000;
  cfg.context_sharpness = 5.0;
  cfg.seed = 7;
  const SynthOutput out = synth_generate(cfg);
  const int ng = cfg.num_grasps, no = cfg.num_attributes;
  std::vector<double> counts(static_cast<size_t>(ng) * no, 0.0);
  for (const FrameRecord& f : out.frames)
    for (int si = 0; si < 2; ++si) {
      const SideState& side = f.truth->sides[si];
      if (side.grasp > 0 && side.attribute > 0)
        counts[static_cast<size_t>(side.grasp - 1) * no + (side.attribute - 1)] += 1.0;
    }

  // Spearman rank correlation between cell counts and beta entries
  auto ranks = [](const std::vector<double>& v) {
    std::vector<size_t> order(v.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&v](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (size_t i = 0; i < order.size(); ++i) r[order[i]] = static_cast<double>(i);
    return r;
  };
  const std::vector<double> beta(out.generating_params.beta.begin(), out.generating_params.beta.end());
  const auto ra = ranks(counts), rb = ranks(beta);
  double ma = 0, mb = 0;
  for (size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= ra.size();
  mb /= rb.size();
  double num = 0, da = 0, db = 0;
  for (size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  const double spearman = num / std::sqrt(da * db);
  CHECK(spearman > 0.5);
}

TEST_CASE("zero-context oracle instances match the exhaustive optimum exactly") {
  const OracleStats stats = run_oracle_suite(100, OracleCaps{}, 5, 0.0);
  CHECK(stats.match_fraction == 1.0);
  CHECK(stats.exact_matches == 100);
  CHECK(stats.trace_violations == 0);
}

TEST_CASE("default oracle suite meets the acceptance bar with margin") {
  const OracleStats stats = run_oracle_suite(200, OracleCaps{}, 21);
  CHECK(stats.match_fraction >= 0.95);
  CHECK(stats.trace_violations == 0);
  const std::string json = oracle_stats_json(stats);
  CHECK(json.find("match_fraction") != std::string::npos);
}

TEST_CASE("noiseless synthetic data is solved perfectly in every mode") {
  SynthConfig synth;
  synth.num_frames = 150;
  synth.num_actions = 3;
  synth.num_grasps = 4;
  synth.num_attributes = 3;
  synth.evidence_noise = 0.0;
  synth.box_noise = 0.0;
  synth.seed = 11;
  const SynthOutput out = synth_generate(synth);
  std::vector<FrameRecord> train, test_frames;
  for (const auto& f : out.frames)
    (out.train_ids.count(f.frame_id) ? train : test_frames).push_back(f);

  EvalOptions options;
  options.fit.max_epochs = 80;
  const EvalOutcome outcome = run_eval(out.labels, train, test_frames, options);
  REQUIRE(outcome.modes.size() == 3);
  for (const ModeAccuracy& mode : outcome.modes)
    for (int task = 0; task < 3; ++task) CHECK(mode.task_accuracy(task) == 1.0);
}

TEST_CASE("context lifts accuracy on noisy correlated data") {
  SynthConfig synth;
  synth.num_frames = 700;
  synth.num_actions = 5;
  synth.num_grasps = 6;
  synth.num_attributes = 5;
  synth.evidence_noise = 0.55;
  synth.context_sharpness = 5.0;
  synth.seed = 2;
  const SynthOutput out = synth_generate(synth);
  std::vector<FrameRecord> train, test_frames;
  for (const auto& f : out.frames)
    (out.train_ids.count(f.frame_id) ? train : test_frames).push_back(f);

  EvalOptions options;
  options.fit.max_epochs = 120;
  options.modes = {AblationMode::evidence_only, AblationMode::full};
  const EvalOutcome outcome = run_eval(out.labels, train, test_frames, options);
  const ModeAccuracy& evidence = outcome.modes[0];
  const ModeAccuracy& full = outcome.modes[1];
  for (int task = 0; task < 3; ++task) {
    CAPTURE(task);
    CHECK(full.task_accuracy(task) >= evidence.task_accuracy(task));
  }
  CHECK(full.objective >= evidence.objective);

  // overall accuracy equals an independent recount from the raw tallies
  for (const ModeAccuracy& mode : outcome.modes)
    for (int task = 0; task < 3; ++task) {
      const TaskTally& tally = mode.tallies[task];
      int correct = 0;
      for (size_t i = 0; i < tally.truths.size(); ++i)
        if (tally.truths[i] == tally.predictions[i]) ++correct;
      CHECK(mode.task_accuracy(task) ==
            doctest::Approx(double(correct) / tally.truths.size()).epsilon(1e-12));
    }
}

TEST_CASE("eval writes the full report bundle") {
  test::TempDir dir("report");
  SynthConfig synth;
  synth.num_frames = 80;
  synth.num_actions = 3;
  synth.num_grasps = 3;
  synth.num_attributes = 3;
  synth.seed = 15;
  const SynthOutput out = synth_generate(synth);
  std::vector<FrameRecord> train, test_frames;
  for (const auto& f : out.frames)
    (out.train_ids.count(f.frame_id) ? train : test_frames).push_back(f);
  EvalOptions options;
  options.fit.max_epochs = 40;
  options.downsizing_fractions = {0.0, 0.5};
  const EvalOutcome outcome = run_eval(out.labels, train, test_frames, options);
  write_results(outcome.report, dir.path());
  for (const char* name :
       {"accuracy_grasp_full.csv", "accuracy_attribute_evidence_only.csv",
        "confusion_action_full.csv", "context_action_grasp.csv", "context_grasp_attribute.csv",
        "context_top_combinations.csv", "downsizing.csv", "summary.json"})
    CHECK(std::filesystem::exists(dir.file(name)));
  CHECK(outcome.downsizing.size() == 2 * 2 * 3);  // fractions x modes x tasks
}
