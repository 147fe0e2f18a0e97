#include "homctx/homctx.h"

#include <cstring>
#include <fstream>
#include <string>

#include "harness.hpp"
#include "json.hpp"

struct homctx_label_space {
  homctx::LabelSpace space;
};

struct homctx_params {
  homctx::ModelParams params;
};

namespace {

thread_local std::string g_last_error;

homctx_status to_status(homctx::ErrorCode code) {
  switch (code) {
    case homctx::ErrorCode::invalid_argument: return HOMCTX_ERR_INVALID_ARGUMENT;
    case homctx::ErrorCode::io: return HOMCTX_ERR_IO;
    case homctx::ErrorCode::schema: return HOMCTX_ERR_SCHEMA;
    case homctx::ErrorCode::fingerprint_mismatch: return HOMCTX_ERR_FINGERPRINT;
    case homctx::ErrorCode::numeric: return HOMCTX_ERR_NUMERIC;
    case homctx::ErrorCode::cap_exceeded: return HOMCTX_ERR_CAP_EXCEEDED;
    case homctx::ErrorCode::internal: return HOMCTX_ERR_INTERNAL;
  }
  return HOMCTX_ERR_INTERNAL;
}

template <typename Fn>
homctx_status wrap(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return HOMCTX_OK;
  } catch (const homctx::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HOMCTX_ERR_INTERNAL;
  }
}

homctx_status require(bool condition, const char* message) {
  if (condition) return HOMCTX_OK;
  g_last_error = message;
  return HOMCTX_ERR_INVALID_ARGUMENT;
}

homctx::LearningConfig learning_config(const homctx_fit_config& cfg) {
  homctx::LearningConfig out;
  out.l2_strength = cfg.l2_strength;
  out.step_size = cfg.step_size;
  out.max_epochs = cfg.max_epochs;
  out.convergence_tol = cfg.convergence_tol;
  out.alpha_smoothing = cfg.alpha_smoothing;
  out.threads = cfg.threads;
  return out;
}

homctx::AblationMode ablation_mode(int mode) {
  switch (mode) {
    case HOMCTX_MODE_FULL: return homctx::AblationMode::full;
    case HOMCTX_MODE_EVIDENCE_ONLY: return homctx::AblationMode::evidence_only;
    case HOMCTX_MODE_EVIDENCE_PHYSICAL: return homctx::AblationMode::evidence_physical;
  }
  homctx::fail(homctx::ErrorCode::invalid_argument, "unknown ablation mode");
}

homctx::InferenceConfig inference_config(const homctx_infer_config& cfg) {
  homctx::InferenceConfig out;
  out.hand_detection_threshold = cfg.hand_detection_threshold;
  out.max_iterations = cfg.max_iterations;
  out.detect_convergence = cfg.detect_convergence != 0;
  out.validate();
  return out;
}

struct LoadedDataset {
  homctx::LabelSpace space;
  std::vector<homctx::FrameRecord> frames;
  homctx::DatasetManifest manifest;
};

LoadedDataset load_dataset(const char* manifest_path) {
  const std::filesystem::path path(manifest_path);
  homctx::DatasetManifest manifest = homctx::read_manifest(path);
  const auto base = path.parent_path();
  const auto labels = manifest.labels_path.is_absolute() ? manifest.labels_path
                                                         : base / manifest.labels_path;
  homctx::LabelSpace space = homctx::LabelSpace::load(labels);
  std::vector<homctx::FrameRecord> frames = homctx::read_all_frames(manifest, space, base);
  return {std::move(space), std::move(frames), std::move(manifest)};
}

std::vector<homctx::FrameRecord> select_split(const LoadedDataset& data, const std::string& split) {
  if (split == "all") return data.frames;
  const auto& ids = split == "train" ? data.manifest.train_ids : data.manifest.test_ids;
  std::vector<homctx::FrameRecord> out;
  for (const auto& f : data.frames)
    if (ids.count(f.frame_id)) out.push_back(f);
  return out;
}

nlohmann::json box_json(const homctx::BoundingBox& b) {
  return {{"cx", b.cx}, {"cy", b.cy}, {"w", b.w}, {"h", b.h}};
}

nlohmann::json prediction_json(const std::string& frame_id, const homctx::InferenceResult& res) {
  nlohmann::json j;
  j["frame_id"] = frame_id;
  j["action"] = res.state.action;
  for (homctx::Side s : homctx::kSides) {
    const homctx::SideState& side = res.state.side(s);
    nlohmann::json sj{{"grasp", side.grasp}, {"attribute", side.attribute}};
    if (side.hand_box) sj["hand_box"] = box_json(*side.hand_box);
    if (side.object_box) sj["object_box"] = box_json(*side.object_box);
    j[homctx::side_name(s)] = std::move(sj);
  }
  j["potential"] = res.potential;
  j["iterations"] = res.iterations_used;
  j["converged"] = res.converged;
  return j;
}

}  // namespace

extern "C" {

const char* homctx_version(void) { return "0.1.0"; }

const char* homctx_status_name(homctx_status status) {
  switch (status) {
    case HOMCTX_OK: return "ok";
    case HOMCTX_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case HOMCTX_ERR_IO: return "io";
    case HOMCTX_ERR_SCHEMA: return "schema";
    case HOMCTX_ERR_FINGERPRINT: return "fingerprint_mismatch";
    case HOMCTX_ERR_NUMERIC: return "numeric";
    case HOMCTX_ERR_CAP_EXCEEDED: return "cap_exceeded";
    case HOMCTX_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* homctx_last_error(void) { return g_last_error.c_str(); }

homctx_status homctx_label_space_load(const char* path, homctx_label_space** out) {
  if (homctx_status s = require(path && out, "null argument")) return s;
  return wrap([&]() { *out = new homctx_label_space{homctx::LabelSpace::load(path)}; });
}

homctx_status homctx_label_space_gtea(homctx_label_space** out) {
  if (homctx_status s = require(out != nullptr, "null argument")) return s;
  return wrap([&]() { *out = new homctx_label_space{homctx::LabelSpace::gtea()}; });
}

homctx_status homctx_label_space_save(const homctx_label_space* space, const char* path) {
  if (homctx_status s = require(space && path, "null argument")) return s;
  return wrap([&]() { space->space.save(path); });
}

homctx_status homctx_label_space_counts(const homctx_label_space* space, int* num_actions,
                                        int* num_grasps, int* num_attributes) {
  if (homctx_status s = require(space != nullptr, "null argument")) return s;
  if (num_actions) *num_actions = space->space.num_actions();
  if (num_grasps) *num_grasps = space->space.num_grasps();
  if (num_attributes) *num_attributes = space->space.num_attributes();
  return HOMCTX_OK;
}

homctx_status homctx_label_space_fingerprint(const homctx_label_space* space, char* buffer,
                                             size_t size) {
  if (homctx_status s = require(space && buffer, "null argument")) return s;
  const std::string& fp = space->space.fingerprint();
  if (homctx_status s = require(size > fp.size(), "buffer too small")) return s;
  std::memcpy(buffer, fp.c_str(), fp.size() + 1);
  return HOMCTX_OK;
}

void homctx_label_space_free(homctx_label_space* space) { delete space; }

homctx_status homctx_params_load(const char* path, const homctx_label_space* space,
                                 homctx_params** out) {
  if (homctx_status s = require(path && space && out, "null argument")) return s;
  return wrap([&]() { *out = new homctx_params{homctx::read_params(path, space->space)}; });
}

homctx_status homctx_params_save(const homctx_params* params, const homctx_label_space* space,
                                 const char* path) {
  if (homctx_status s = require(params && space && path, "null argument")) return s;
  return wrap([&]() { homctx::write_params(params->params, space->space, path); });
}

homctx_status homctx_params_zeros(const homctx_label_space* space, homctx_params** out) {
  if (homctx_status s = require(space && out, "null argument")) return s;
  return wrap([&]() { *out = new homctx_params{homctx::ModelParams::zeros(space->space)}; });
}

void homctx_params_free(homctx_params* params) { delete params; }

void homctx_synth_config_init(homctx_synth_config* config) {
  if (!config) return;
  const homctx::SynthConfig def;
  config->num_actions = def.num_actions;
  config->num_grasps = def.num_grasps;
  config->num_attributes = def.num_attributes;
  config->num_frames = def.num_frames;
  config->context_sharpness = def.context_sharpness;
  config->evidence_noise = def.evidence_noise;
  config->box_noise = def.box_noise;
  config->seed = def.seed;
  config->hand_candidates = def.hand_candidates;
  config->object_records = def.object_records;
  config->train_fraction = def.train_fraction;
}

homctx_status homctx_synth_run(const homctx_synth_config* config, const char* out_dir) {
  if (homctx_status s = require(config && out_dir, "null argument")) return s;
  return wrap([&]() {
    homctx::SynthConfig cfg;
    cfg.num_actions = config->num_actions;
    cfg.num_grasps = config->num_grasps;
    cfg.num_attributes = config->num_attributes;
    cfg.num_frames = config->num_frames;
    cfg.context_sharpness = config->context_sharpness;
    cfg.evidence_noise = config->evidence_noise;
    cfg.box_noise = config->box_noise;
    cfg.seed = config->seed;
    cfg.hand_candidates = config->hand_candidates;
    cfg.object_records = config->object_records;
    cfg.train_fraction = config->train_fraction;
    homctx::write_synth_dataset(homctx::synth_generate(cfg), out_dir);
  });
}

void homctx_fit_config_init(homctx_fit_config* config) {
  if (!config) return;
  const homctx::LearningConfig def;
  config->l2_strength = def.l2_strength;
  config->step_size = def.step_size;
  config->max_epochs = def.max_epochs;
  config->convergence_tol = def.convergence_tol;
  config->alpha_smoothing = def.alpha_smoothing;
  config->mode = HOMCTX_MODE_FULL;
  config->threads = def.threads;
}

homctx_status homctx_fit_run(const char* manifest_path, const homctx_fit_config* config,
                             const char* out_params_path) {
  if (homctx_status s = require(manifest_path && config && out_params_path, "null argument")) return s;
  return wrap([&]() {
    const LoadedDataset data = load_dataset(manifest_path);
    std::vector<homctx::FrameRecord> records = select_split(data, "train");
    if (records.empty()) records = data.frames;  // no split declared: use everything
    std::vector<homctx::TrainingFrame> frames;
    frames.reserve(records.size());
    for (const auto& r : records) frames.push_back(homctx::make_training_frame(r, data.space));
    const homctx::LearningConfig cfg =
        homctx::restrict_to_mode(learning_config(*config), ablation_mode(config->mode));
    homctx::FitResult result = homctx::fit(frames, data.space, cfg);
    homctx::write_params(result.params, data.space, out_params_path);
  });
}

void homctx_infer_config_init(homctx_infer_config* config) {
  if (!config) return;
  const homctx::InferenceConfig def;
  config->hand_detection_threshold = def.hand_detection_threshold;
  config->max_iterations = def.max_iterations;
  config->detect_convergence = def.detect_convergence ? 1 : 0;
  config->threads = 1;
}

homctx_status homctx_infer_run(const char* manifest_path, const char* params_path,
                               const homctx_infer_config* config, const char* split,
                               const char* out_path) {
  if (homctx_status s = require(manifest_path && params_path && config && split && out_path,
                                "null argument"))
    return s;
  return wrap([&]() {
    const std::string split_name(split);
    if (split_name != "train" && split_name != "test" && split_name != "all")
      homctx::fail(homctx::ErrorCode::invalid_argument, "split must be train, test or all");
    const homctx::InferenceConfig cfg = inference_config(*config);
    const LoadedDataset data = load_dataset(manifest_path);
    const homctx::ModelParams params = homctx::read_params(params_path, data.space);
    const auto records = select_split(data, split_name);
    const auto results = homctx::infer_frames(records, params, cfg, std::max(1, config->threads));
    std::ofstream out(out_path, std::ios::binary);
    if (!out) homctx::fail(homctx::ErrorCode::io, std::string("cannot write ") + out_path);
    for (size_t i = 0; i < records.size(); ++i)
      out << prediction_json(records[i].frame_id, results[i]).dump() << "\n";
  });
}

homctx_status homctx_infer_frame_json(const homctx_label_space* space, const homctx_params* params,
                                      const char* frame_json, const homctx_infer_config* config,
                                      char** out_json) {
  if (homctx_status s = require(space && params && frame_json && config && out_json, "null argument"))
    return s;
  return wrap([&]() {
    const homctx::InferenceConfig cfg = inference_config(*config);
    const homctx::FrameRecord frame = homctx::frame_from_json_line(frame_json, space->space);
    frame.evidence.validate(space->space);
    const homctx::InferenceResult res = homctx::infer(frame.evidence, params->params, cfg);
    const std::string text = prediction_json(frame.frame_id, res).dump();
    *out_json = static_cast<char*>(std::malloc(text.size() + 1));
    if (!*out_json) homctx::fail(homctx::ErrorCode::internal, "out of memory");
    std::memcpy(*out_json, text.c_str(), text.size() + 1);
  });
}

void homctx_string_free(char* text) { std::free(text); }

void homctx_eval_config_init(homctx_eval_config* config) {
  if (!config) return;
  homctx_fit_config_init(&config->fit);
  homctx_infer_config_init(&config->infer);
  config->downsize_fractions = nullptr;
  config->num_downsize_fractions = 0;
  config->log_domain_context = 1;
}

homctx_status homctx_eval_run(const char* manifest_path, const char* full_params_path,
                              const homctx_eval_config* config, const char* out_dir) {
  if (homctx_status s = require(manifest_path && config && out_dir, "null argument")) return s;
  return wrap([&]() {
    const LoadedDataset data = load_dataset(manifest_path);
    const auto train = select_split(data, "train");
    const auto test = select_split(data, "test");
    homctx::EvalOptions options;
    options.fit = learning_config(config->fit);
    options.infer = inference_config(config->infer);
    options.context_mode = config->log_domain_context ? homctx::MarginalMode::log_sum_exp
                                                      : homctx::MarginalMode::linear;
    if (config->downsize_fractions && config->num_downsize_fractions > 0)
      options.downsizing_fractions.assign(config->downsize_fractions,
                                          config->downsize_fractions +
                                              config->num_downsize_fractions);
    if (full_params_path) options.full_params = homctx::read_params(full_params_path, data.space);
    const homctx::EvalOutcome outcome = homctx::run_eval(data.space, train, test, options);
    homctx::write_results(outcome.report, out_dir);
  });
}

void homctx_oracle_config_init(homctx_oracle_config* config) {
  if (!config) return;
  const homctx::OracleCaps caps;
  config->count = 200;
  config->seed = 1;
  config->max_actions = caps.max_actions;
  config->max_grasps = caps.max_grasps;
  config->max_attributes = caps.max_attributes;
  config->max_candidates = caps.max_candidates;
}

homctx_status homctx_oracle_run(const homctx_oracle_config* config, homctx_oracle_stats* stats,
                                const char* out_json_path) {
  if (homctx_status s = require(config != nullptr, "null argument")) return s;
  return wrap([&]() {
    homctx::OracleCaps caps{config->max_actions, config->max_grasps, config->max_attributes,
                            config->max_candidates};
    const homctx::OracleStats result = homctx::run_oracle_suite(config->count, caps, config->seed);
    if (stats) {
      stats->count = result.count;
      stats->matches = result.matches;
      stats->match_fraction = result.match_fraction;
      stats->max_relative_gap = result.max_relative_gap;
      stats->mean_relative_gap = result.mean_relative_gap;
      stats->trace_violations = result.trace_violations;
    }
    if (out_json_path) {
      std::ofstream out(out_json_path, std::ios::binary);
      if (!out) homctx::fail(homctx::ErrorCode::io, std::string("cannot write ") + out_json_path);
      out << homctx::oracle_stats_json(result);
    }
  });
}

homctx_status homctx_export_context(const char* params_path, const char* labels_path,
                                    int log_domain, int top_k, const char* out_dir) {
  if (homctx_status s = require(params_path && labels_path && out_dir, "null argument")) return s;
  return wrap([&]() {
    if (top_k < 1) homctx::fail(homctx::ErrorCode::invalid_argument, "top_k must be >= 1");
    const homctx::LabelSpace space = homctx::LabelSpace::load(labels_path);
    const homctx::ModelParams params = homctx::read_params(params_path, space);
    const homctx::MarginalMode mode =
        log_domain ? homctx::MarginalMode::log_sum_exp : homctx::MarginalMode::linear;

    auto names = [&space](bool grasp) {
      std::vector<std::string> out;
      const int n = grasp ? space.num_grasps() : space.num_attributes();
      for (int i = 0; i <= n; ++i)
        out.push_back(grasp ? space.grasp(i).name : space.attribute(i).name);
      return out;
    };
    std::vector<std::string> actions;
    for (int a = 0; a < space.num_actions(); ++a) actions.push_back(space.action(a).name);

    std::vector<homctx::ContextTable> tables;
    auto add = [&tables](const homctx::ContextMatrix& m, const std::string& name,
                         std::vector<std::string> rows, std::vector<std::string> cols) {
      tables.push_back({name, std::move(rows), std::move(cols), m.values});
    };
    add(homctx::marginalize_context(params, homctx::ContextAxis::action_grasp, mode), "action_grasp",
        actions, names(true));
    add(homctx::marginalize_context(params, homctx::ContextAxis::action_attribute, mode),
        "action_attribute", actions, names(false));
    add(homctx::marginalize_context(params, homctx::ContextAxis::grasp_attribute, mode),
        "grasp_attribute", names(true), names(false));

    homctx::ContextTable combos;
    combos.name = "top_combinations";
    combos.col_names = {"grasp_left", "grasp_right", "attribute_left", "attribute_right", "strength"};
    for (int a = 0; a < space.num_actions(); ++a) {
      int rank = 1;
      for (const homctx::Combination& c : homctx::most_probable_combinations(params, a, top_k)) {
        combos.row_names.push_back(space.action(a).name + "#" + std::to_string(rank++));
        combos.values.insert(combos.values.end(),
                             {static_cast<double>(c.grasp_left), static_cast<double>(c.grasp_right),
                              static_cast<double>(c.attr_left), static_cast<double>(c.attr_right),
                              c.value});
      }
    }
    tables.push_back(std::move(combos));
    homctx::write_context_tables(tables, out_dir);
  });
}

homctx_status homctx_extract_hand_boxes(const char* pgm_path, double threshold,
                                        double min_area_frac, double max_area_frac,
                                        const char* out_json_path) {
  if (homctx_status s = require(pgm_path && out_json_path, "null argument")) return s;
  return wrap([&]() {
    const homctx::ProbabilityMap map = homctx::read_pgm(pgm_path);
    const auto boxes =
        homctx::extract_reference_hand_boxes(map, threshold, min_area_frac, max_area_frac);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : boxes) arr.push_back(box_json(b));
    std::ofstream out(out_json_path, std::ios::binary);
    if (!out) homctx::fail(homctx::ErrorCode::io, std::string("cannot write ") + out_json_path);
    out << arr.dump(2) << "\n";
  });
}

}  // extern "C"
