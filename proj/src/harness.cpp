#include "harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace homctx {

const char* mode_name(AblationMode mode) {
  switch (mode) {
    case AblationMode::evidence_only: return "evidence_only";
    case AblationMode::evidence_physical: return "evidence_physical";
    case AblationMode::full: return "full";
  }
  return "?";
}

LearningConfig restrict_to_mode(LearningConfig config, AblationMode mode) {
  config.freeze_alpha = mode != AblationMode::full;
  config.freeze_beta = mode == AblationMode::evidence_only;
  config.freeze_gamma = mode == AblationMode::evidence_only;
  return config;
}

void EvalOptions::validate() const {
  fit.validate();
  infer.validate();
  if (modes.empty()) fail(ErrorCode::invalid_argument, "eval: no ablation modes requested");
  double prev = -1;
  for (double f : downsizing_fractions) {
    if (!(f >= 0 && f < 1))
      fail(ErrorCode::invalid_argument, "eval: downsizing fractions must lie in [0,1)");
    if (f <= prev) fail(ErrorCode::invalid_argument, "eval: downsizing fractions must be increasing");
    prev = f;
  }
}

std::vector<InferenceResult> infer_frames(const std::vector<FrameRecord>& frames,
                                          const ModelParams& params, const InferenceConfig& config,
                                          int threads) {
  std::vector<InferenceResult> results(frames.size());
  threads = std::max(1, std::min<int>(threads, static_cast<int>(frames.size())));
  if (threads == 1) {
    for (size_t i = 0; i < frames.size(); ++i) results[i] = infer(frames[i].evidence, params, config);
    return results;
  }
  std::vector<std::thread> pool;
  const size_t chunk = (frames.size() + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      const size_t lo = t * chunk, hi = std::min(frames.size(), lo + chunk);
      for (size_t i = lo; i < hi; ++i) results[i] = infer(frames[i].evidence, params, config);
    });
  }
  for (auto& th : pool) th.join();
  return results;
}

namespace {

std::array<TaskTally, 3> make_tallies(const LabelSpace& space) {
  std::array<TaskTally, 3> tallies;
  tallies[0].task = "grasp";
  tallies[0].first_label = 1;
  for (int g = 1; g <= space.num_grasps(); ++g) tallies[0].class_names.push_back(space.grasp(g).name);
  tallies[1].task = "attribute";
  tallies[1].first_label = 1;
  for (int m = 1; m <= space.num_attributes(); ++m)
    tallies[1].class_names.push_back(space.attribute(m).name);
  tallies[2].task = "action";
  tallies[2].first_label = 0;
  for (int a = 0; a < space.num_actions(); ++a) tallies[2].class_names.push_back(space.action(a).name);
  return tallies;
}

void tally_frame(std::array<TaskTally, 3>& tallies, const SceneState& truth,
                 const SceneState& predicted) {
  for (int si = 0; si < 2; ++si) {
    if (truth.sides[si].grasp > 0) tallies[0].add(truth.sides[si].grasp, predicted.sides[si].grasp);
    if (truth.sides[si].attribute > 0)
      tallies[1].add(truth.sides[si].attribute, predicted.sides[si].attribute);
  }
  tallies[2].add(truth.action, predicted.action);
}

ModeAccuracy evaluate_mode(const LabelSpace& space, const std::vector<TrainingFrame>& train,
                           const std::vector<FrameRecord>& test, const EvalOptions& options,
                           AblationMode mode, ModelParams* params_out) {
  ModeAccuracy out;
  out.mode = mode;
  ModelParams params = ModelParams::zeros(space);
  if (mode == AblationMode::full && options.full_params) {
    params = *options.full_params;
    out.objective = log_likelihood(params, train, options.fit);
  } else {
    FitResult fitres = fit(train, space, restrict_to_mode(options.fit, mode));
    params = std::move(fitres.params);
    out.objective = fitres.objective;
  }
  out.tallies = make_tallies(space);
  const auto results = infer_frames(test, params, options.infer, options.fit.threads);
  for (size_t i = 0; i < test.size(); ++i) {
    if (!test[i].truth) fail(ErrorCode::invalid_argument, "eval: test frame without ground truth");
    tally_frame(out.tallies, *test[i].truth, results[i].state);
  }
  if (params_out) *params_out = std::move(params);
  return out;
}

ContextTable table_from_matrix(const ContextMatrix& matrix, const std::string& name,
                               const std::vector<std::string>& rows,
                               const std::vector<std::string>& cols) {
  ContextTable t;
  t.name = name;
  t.row_names = rows;
  t.col_names = cols;
  t.values = matrix.values;
  return t;
}

std::vector<std::string> grasp_names(const LabelSpace& space) {
  std::vector<std::string> names;
  for (int g = 0; g <= space.num_grasps(); ++g) names.push_back(space.grasp(g).name);
  return names;
}

std::vector<std::string> attribute_names(const LabelSpace& space) {
  std::vector<std::string> names;
  for (int m = 0; m <= space.num_attributes(); ++m) names.push_back(space.attribute(m).name);
  return names;
}

std::vector<std::string> action_names(const LabelSpace& space) {
  std::vector<std::string> names;
  for (int a = 0; a < space.num_actions(); ++a) names.push_back(space.action(a).name);
  return names;
}

}  // namespace

EvalOutcome run_eval(const LabelSpace& space, const std::vector<FrameRecord>& train,
                     const std::vector<FrameRecord>& test, const EvalOptions& options) {
  options.validate();
  if (train.empty() || test.empty()) fail(ErrorCode::invalid_argument, "eval: empty split");

  std::vector<TrainingFrame> training;
  training.reserve(train.size());
  for (const FrameRecord& r : train) training.push_back(make_training_frame(r, space));

  EvalOutcome outcome;
  ModelParams full_params = ModelParams::zeros(space);
  for (AblationMode mode : options.modes) {
    ModelParams fitted = ModelParams::zeros(space);
    outcome.modes.push_back(evaluate_mode(space, training, test, options, mode, &fitted));
    if (mode == AblationMode::full) full_params = std::move(fitted);
  }

  for (const ModeAccuracy& m : outcome.modes)
    outcome.report.per_mode.push_back({mode_name(m.mode), {m.tallies[0], m.tallies[1], m.tallies[2]}});

  const bool has_full = std::find(options.modes.begin(), options.modes.end(), AblationMode::full) !=
                        options.modes.end();
  if (has_full) {
    outcome.report.context_tables.push_back(table_from_matrix(
        marginalize_context(full_params, ContextAxis::action_grasp, options.context_mode),
        "action_grasp", action_names(space), grasp_names(space)));
    outcome.report.context_tables.push_back(table_from_matrix(
        marginalize_context(full_params, ContextAxis::action_attribute, options.context_mode),
        "action_attribute", action_names(space), attribute_names(space)));
    outcome.report.context_tables.push_back(table_from_matrix(
        marginalize_context(full_params, ContextAxis::grasp_attribute, options.context_mode),
        "grasp_attribute", grasp_names(space), attribute_names(space)));
    // Most probable grasp/attribute combinations per action, one row per rank.
    ContextTable combos;
    combos.name = "top_combinations";
    combos.col_names = {"grasp_left", "grasp_right", "attribute_left", "attribute_right", "strength"};
    for (int a = 0; a < space.num_actions(); ++a) {
      int rank = 1;
      for (const Combination& c : most_probable_combinations(full_params, a, options.context_top_k)) {
        combos.row_names.push_back(space.action(a).name + "#" + std::to_string(rank++));
        combos.values.insert(combos.values.end(),
                             {static_cast<double>(c.grasp_left), static_cast<double>(c.grasp_right),
                              static_cast<double>(c.attr_left), static_cast<double>(c.attr_right),
                              c.value});
      }
    }
    outcome.report.context_tables.push_back(std::move(combos));
  }

  if (!options.downsizing_fractions.empty()) {
    const std::vector<AblationMode> study_modes{AblationMode::full, AblationMode::evidence_only};
    for (double fraction : options.downsizing_fractions) {
      const size_t keep = std::max<size_t>(
          1, static_cast<size_t>(std::lround((1.0 - fraction) * training.size())));
      const std::vector<TrainingFrame> subset(training.begin(), training.begin() + keep);
      for (AblationMode mode : study_modes) {
        EvalOptions sub = options;
        sub.full_params.reset();
        sub.downsizing_fractions.clear();
        ModeAccuracy acc = evaluate_mode(space, subset, test, sub, mode, nullptr);
        for (int task = 0; task < 3; ++task)
          outcome.downsizing.emplace_back(acc.tallies[task].task, fraction, mode_name(mode),
                                          acc.task_accuracy(task));
      }
    }
    outcome.report.downsizing_rows = outcome.downsizing;
  }

  nlohmann::json summary;
  summary["schema_version"] = 1;
  summary["type"] = "homctx-eval-summary";
  summary["train_frames"] = train.size();
  summary["test_frames"] = test.size();
  for (const ModeAccuracy& m : outcome.modes) {
    nlohmann::json j;
    j["objective"] = m.objective;
    for (int task = 0; task < 3; ++task) {
      j[m.tallies[task].task + "_accuracy"] = m.task_accuracy(task);
      j[m.tallies[task].task + "_instances"] = m.tallies[task].total();
    }
    summary["modes"][mode_name(m.mode)] = std::move(j);
  }
  if (!outcome.downsizing.empty()) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [task, fraction, mode, acc] : outcome.downsizing)
      rows.push_back({{"task", task}, {"fraction", fraction}, {"mode", mode}, {"accuracy", acc}});
    summary["downsizing"] = std::move(rows);
  }
  outcome.report.summary_json = summary.dump(2) + "\n";
  return outcome;
}

// ---------------------------------------------------------------------------
// Oracle suite

OracleInstance make_oracle_instance(Rng& rng, const OracleCaps& caps,
                                    std::optional<double> context_scale) {
  if (caps.max_actions < 2 || caps.max_grasps < 2 || caps.max_attributes < 2 || caps.max_candidates < 1)
    fail(ErrorCode::invalid_argument, "oracle: caps too small");
  const int na = rng.uniform_int(2, caps.max_actions);
  const int ng = rng.uniform_int(2, caps.max_grasps);
  const int no = rng.uniform_int(2, caps.max_attributes);
  const double cs = context_scale ? *context_scale : rng.uniform(0.1, 1.0);

  OracleInstance inst;
  inst.params = ModelParams::zeros(na, ng, no);
  // Context shaped like fitted models: a mostly-flat alpha tensor with a few
  // strong peaks per action, a dense moderate beta, and evidence weights that
  // clearly outweigh single context entries.
  for (double& v : inst.params.alpha) v = 0.05 * cs * rng.normal();
  for (int a = 0; a < na; ++a) {
    const int peaks = rng.uniform_int(1, 2);
    for (int p = 0; p < peaks; ++p)
      inst.params.alpha_at(a, rng.uniform_int(1, ng), rng.uniform_int(1, ng),
                           rng.uniform_int(1, no), rng.uniform_int(1, no)) +=
          1.5 * cs * std::abs(rng.normal());
  }
  for (double& v : inst.params.beta) v = 0.5 * cs * rng.normal();
  inst.params.gamma = {0.5 * cs * std::abs(rng.normal()), 0.5 * cs * std::abs(rng.normal())};
  for (int s = 0; s < 2; ++s)
    for (int i = 0; i < 3; ++i) inst.params.zeta[s][i] = 0.4 * rng.uniform();
  for (int g = 1; g <= ng; ++g) {
    const double diag = rng.uniform(1.5, 3.0);
    for (int d = 0; d < ng; ++d)
      inst.params.eta_row(g)[d] = (d == g - 1 ? diag : 0.0) + 0.3 * rng.uniform();
  }
  for (int m = 1; m <= no; ++m) {
    const double diag = rng.uniform(1.5, 3.0);
    for (int d = 0; d < no; ++d)
      inst.params.lambda_row(m)[d] = (d == m - 1 ? diag : 0.0) + 0.3 * rng.uniform();
  }
  for (int a = 0; a < na; ++a) {
    const double diag = rng.uniform(1.5, 3.0);
    for (int d = 0; d < na; ++d)
      inst.params.xi_row(a)[d] = (d == a ? diag : 0.0) + 0.3 * rng.uniform();
  }

  // Ground truth is sampled from the instance's own context so evidence and
  // context tell a consistent story, the regime a fitted model operates in.
  LabelState labels;
  ContextLabelSampler sampler(inst.params, rng);
  for (int i = 0; i < 60; ++i) sampler.sweep(labels);

  inst.evidence.phi_a.resize(na);
  for (int a = 0; a < na; ++a)
    inst.evidence.phi_a[a] = (a == labels.action ? 1.0 : 0.0) + 0.3 * rng.normal();

  for (Side s : kSides) {
    const int si = side_index(s);
    const auto [truth_g, truth_m] = labels.sides[si];
    if (truth_g == 0) continue;  // absent side
    const BoundingBox hand{rng.uniform(150, 450), rng.uniform(150, 330), rng.uniform(60, 140),
                           rng.uniform(60, 140)};
    const OffsetVector offset{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0.6, 1.4),
                              rng.uniform(0.6, 1.4)};
    const int hand_count = rng.uniform_int(1, caps.max_candidates);
    for (int k = 0; k < hand_count; ++k) {
      HandCandidate c;
      c.box = hand;
      if (k > 0) {
        c.box.cx += 8.0 * rng.normal();
        c.box.cy += 8.0 * rng.normal();
        c.box.w = std::max(10.0, c.box.w + 8.0 * rng.normal());
        c.box.h = std::max(10.0, c.box.h + 8.0 * rng.normal());
      }
      const double own = k == 0 ? rng.uniform(0.82, 0.97) : rng.uniform(0.5, 0.97);
      c.phi_h[0] = (1 - own) * 0.7;
      c.phi_h[1 + si] = own;
      c.phi_h[2 - si] = (1 - own) * 0.3;
      c.phi_g.resize(ng);
      for (int d = 0; d < ng; ++d)
        c.phi_g[d] = (d == truth_g - 1 ? 1.0 : 0.0) + 0.3 * rng.normal();
      c.offset = offset;
      c.offset.nx += 0.05 * rng.normal();
      c.offset.ny += 0.05 * rng.normal();
      c.offset.nw = std::max(0.1, c.offset.nw + 0.05 * rng.normal());
      c.offset.nh = std::max(0.1, c.offset.nh + 0.05 * rng.normal());
      inst.evidence.hands[si].push_back(std::move(c));
    }
    const BoundingBox object = apply_offsets(hand, offset);
    const int record_count = rng.uniform_int(1, caps.max_candidates);
    for (int r = 0; r < record_count; ++r) {
      ObjectCandidate rec;
      rec.box = object;
      if (r > 0) {
        rec.box.cx += 10.0 * rng.normal();
        rec.box.cy += 10.0 * rng.normal();
        rec.box.w = std::max(10.0, rec.box.w + 10.0 * rng.normal());
        rec.box.h = std::max(10.0, rec.box.h + 10.0 * rng.normal());
      }
      rec.phi_o.resize(no);
      for (int d = 0; d < no; ++d)
        rec.phi_o[d] = (d == truth_m - 1 ? 1.0 : 0.0) + 0.3 * rng.normal();
      inst.evidence.objects[si].push_back(std::move(rec));
    }
  }

  inst.config.hand_detection_threshold = 0.8;
  inst.config.max_iterations = 10;
  inst.config.exhaustive_cap = 1e8;  // worst-case suite instances reach ~5e7 states
  inst.config.object_grid.shift_multipliers = {0.0};
  static const double kScalePool[] = {1.0, 0.8, 1.25, 0.65, 1.45};
  const int scale_count = rng.uniform_int(1, std::min(5, caps.max_candidates));
  inst.config.object_grid.scales.assign(kScalePool, kScalePool + scale_count);
  return inst;
}

OracleStats run_oracle_suite(int count, const OracleCaps& caps, uint64_t seed,
                             std::optional<double> context_scale) {
  if (count < 1) fail(ErrorCode::invalid_argument, "oracle: count must be >= 1");
  Rng rng(seed);
  OracleStats stats;
  stats.count = count;
  double gap_sum = 0;
  for (int i = 0; i < count; ++i) {
    const OracleInstance inst = make_oracle_instance(rng, caps, context_scale);
    const InferenceResult res = infer(inst.evidence, inst.params, inst.config);
    const auto [map_state, map_potential] = exhaustive_map(inst.evidence, inst.params, inst.config);
    for (size_t t = 1; t < res.trace.size(); ++t)
      if (res.trace[t] < res.trace[t - 1]) {
        ++stats.trace_violations;
        break;
      }
    const double gap = map_potential - res.potential;
    const double rel = std::max(0.0, gap) / std::max(std::abs(map_potential), 1e-12);
    gap_sum += rel;
    stats.max_relative_gap = std::max(stats.max_relative_gap, rel);
    if (rel <= 0.01) ++stats.matches;
    if (res.potential == map_potential) ++stats.exact_matches;
  }
  stats.match_fraction = static_cast<double>(stats.matches) / count;
  stats.mean_relative_gap = gap_sum / count;
  return stats;
}

std::string oracle_stats_json(const OracleStats& stats) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["type"] = "homctx-oracle-stats";
  j["count"] = stats.count;
  j["matches"] = stats.matches;
  j["match_fraction"] = stats.match_fraction;
  j["exact_matches"] = stats.exact_matches;
  j["max_relative_gap"] = stats.max_relative_gap;
  j["mean_relative_gap"] = stats.mean_relative_gap;
  j["trace_violations"] = stats.trace_violations;
  return j.dump(2) + "\n";
}

}  // namespace homctx
