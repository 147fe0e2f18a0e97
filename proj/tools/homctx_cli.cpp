// homctx command-line front end. Talks to the shared library exclusively
// through the C API so it exercises the same surface other bindings would.
#include <cinttypes>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "homctx/homctx.h"

namespace {

int fail_with(homctx_status status) {
  std::fprintf(stderr, "{\"error\": \"%s\", \"code\": %d, \"status\": \"%s\"}\n",
               homctx_last_error(), static_cast<int>(status), homctx_status_name(status));
  return static_cast<int>(status);
}

int check(homctx_status status) { return status == HOMCTX_OK ? 0 : fail_with(status); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"homctx - contextual recognition of actions, grasp types and object attributes"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic evidence dataset");
  homctx_synth_config synth_cfg;
  homctx_synth_config_init(&synth_cfg);
  std::string synth_out;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_cfg.seed, "random seed");
  synth->add_option("--frames", synth_cfg.num_frames, "number of frames");
  synth->add_option("--actions", synth_cfg.num_actions, "number of action classes");
  synth->add_option("--grasps", synth_cfg.num_grasps, "number of grasp types");
  synth->add_option("--attributes", synth_cfg.num_attributes, "number of object attributes");
  synth->add_option("--sharpness", synth_cfg.context_sharpness, "context sharpness");
  synth->add_option("--noise", synth_cfg.evidence_noise, "evidence noise scale");
  synth->add_option("--box-noise", synth_cfg.box_noise, "box jitter in pixels");
  synth->add_option("--candidates", synth_cfg.hand_candidates, "hand candidates per side");
  synth->add_option("--records", synth_cfg.object_records, "object records per side");
  synth->add_option("--train-fraction", synth_cfg.train_fraction, "train split fraction");

  // fit
  auto* fit = app.add_subcommand("fit", "learn model parameters from annotated frames");
  homctx_fit_config fit_cfg;
  homctx_fit_config_init(&fit_cfg);
  std::string fit_manifest, fit_out, fit_mode = "full";
  fit->add_option("--manifest", fit_manifest, "dataset manifest")->required();
  fit->add_option("--out", fit_out, "output params file")->required();
  fit->add_option("--mode", fit_mode, "full | evidence-only | evidence-physical");
  fit->add_option("--l2", fit_cfg.l2_strength, "L2 regularization strength");
  fit->add_option("--step", fit_cfg.step_size, "gradient ascent step size");
  fit->add_option("--epochs", fit_cfg.max_epochs, "maximum epochs");
  fit->add_option("--tol", fit_cfg.convergence_tol, "relative convergence tolerance");
  fit->add_option("--smoothing", fit_cfg.alpha_smoothing, "alpha smoothing pseudo-count weight");
  fit->add_option("--threads", fit_cfg.threads, "worker threads");

  // infer
  auto* infer = app.add_subcommand("infer", "batch MAP inference over a dataset");
  homctx_infer_config infer_cfg;
  homctx_infer_config_init(&infer_cfg);
  std::string infer_manifest, infer_params, infer_out, infer_split = "all";
  infer->add_option("--manifest", infer_manifest, "dataset manifest")->required();
  infer->add_option("--params", infer_params, "learned params file")->required();
  infer->add_option("--out", infer_out, "output predictions (JSON lines)")->required();
  infer->add_option("--split", infer_split, "train | test | all");
  infer->add_option("--threshold", infer_cfg.hand_detection_threshold,
                    "hand detection threshold in (0,1)");
  infer->add_option("--max-iter", infer_cfg.max_iterations, "maximum coordinate-ascent sweeps");
  infer->add_option("--threads", infer_cfg.threads, "worker threads");
  bool no_convergence = false;
  infer->add_flag("--no-convergence-check", no_convergence, "always run max-iter sweeps");

  // eval
  auto* eval = app.add_subcommand("eval", "accuracy tables, ablations and robustness curves");
  homctx_eval_config eval_cfg;
  homctx_eval_config_init(&eval_cfg);
  std::string eval_manifest, eval_params, eval_out;
  std::vector<double> eval_downsize;
  bool eval_linear_context = false;
  eval->add_option("--manifest", eval_manifest, "dataset manifest")->required();
  eval->add_option("--out", eval_out, "output report directory")->required();
  eval->add_option("--params", eval_params, "reuse these params for the full mode");
  eval->add_option("--downsize", eval_downsize, "downsizing fractions, e.g. 0 0.2 0.4 0.6");
  eval->add_option("--l2", eval_cfg.fit.l2_strength, "L2 regularization strength");
  eval->add_option("--step", eval_cfg.fit.step_size, "gradient ascent step size");
  eval->add_option("--epochs", eval_cfg.fit.max_epochs, "maximum epochs");
  eval->add_option("--tol", eval_cfg.fit.convergence_tol, "relative convergence tolerance");
  eval->add_option("--threshold", eval_cfg.infer.hand_detection_threshold, "hand detection threshold");
  eval->add_option("--max-iter", eval_cfg.infer.max_iterations, "maximum sweeps");
  eval->add_option("--threads", eval_cfg.fit.threads, "worker threads");
  eval->add_flag("--linear-context", eval_linear_context, "linear-sum context tables");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "compare inference against exhaustive search");
  homctx_oracle_config oracle_cfg;
  homctx_oracle_config_init(&oracle_cfg);
  std::string oracle_out;
  oracle->add_option("--count", oracle_cfg.count, "number of random instances");
  oracle->add_option("--seed", oracle_cfg.seed, "random seed");
  oracle->add_option("--max-actions", oracle_cfg.max_actions, "action classes cap");
  oracle->add_option("--max-grasps", oracle_cfg.max_grasps, "grasp types cap");
  oracle->add_option("--max-attributes", oracle_cfg.max_attributes, "attributes cap");
  oracle->add_option("--max-candidates", oracle_cfg.max_candidates, "candidates-per-entity cap");
  oracle->add_option("--out", oracle_out, "also write stats JSON here");

  // export-context
  auto* ctx = app.add_subcommand("export-context", "write learned context strength tables");
  std::string ctx_params, ctx_labels, ctx_out;
  bool ctx_linear = false;
  int ctx_top_k = 5;
  ctx->add_option("--params", ctx_params, "learned params file")->required();
  ctx->add_option("--labels", ctx_labels, "label space file")->required();
  ctx->add_option("--out", ctx_out, "output directory")->required();
  ctx->add_option("--top-k", ctx_top_k, "combinations per action");
  ctx->add_flag("--linear", ctx_linear, "linear-sum instead of log-sum-exp");

  // extract-boxes
  auto* boxes = app.add_subcommand("extract-boxes",
                                   "reference hand boxes from a probability map (P5 PGM)");
  std::string boxes_map, boxes_out;
  double boxes_threshold = 0.5, boxes_min_frac = 0.005, boxes_max_frac = 0.30;
  boxes->add_option("--map", boxes_map, "probability map (P5 PGM)")->required();
  boxes->add_option("--out", boxes_out, "output JSON box list")->required();
  boxes->add_option("--threshold", boxes_threshold, "probability threshold in (0,1)");
  boxes->add_option("--min-area-frac", boxes_min_frac, "minimum blob area fraction");
  boxes->add_option("--max-area-frac", boxes_max_frac, "maximum blob area fraction");

  CLI11_PARSE(app, argc, argv);

  if (*synth) return check(homctx_synth_run(&synth_cfg, synth_out.c_str()));

  if (*fit) {
    if (fit_mode == "full")
      fit_cfg.mode = HOMCTX_MODE_FULL;
    else if (fit_mode == "evidence-only")
      fit_cfg.mode = HOMCTX_MODE_EVIDENCE_ONLY;
    else if (fit_mode == "evidence-physical")
      fit_cfg.mode = HOMCTX_MODE_EVIDENCE_PHYSICAL;
    else {
      std::fprintf(stderr, "{\"error\": \"unknown mode: %s\", \"code\": 1}\n", fit_mode.c_str());
      return 1;
    }
    return check(homctx_fit_run(fit_manifest.c_str(), &fit_cfg, fit_out.c_str()));
  }

  if (*infer) {
    infer_cfg.detect_convergence = no_convergence ? 0 : 1;
    return check(homctx_infer_run(infer_manifest.c_str(), infer_params.c_str(), &infer_cfg,
                                  infer_split.c_str(), infer_out.c_str()));
  }

  if (*eval) {
    eval_cfg.downsize_fractions = eval_downsize.empty() ? nullptr : eval_downsize.data();
    eval_cfg.num_downsize_fractions = eval_downsize.size();
    eval_cfg.log_domain_context = eval_linear_context ? 0 : 1;
    return check(homctx_eval_run(eval_manifest.c_str(),
                                 eval_params.empty() ? nullptr : eval_params.c_str(), &eval_cfg,
                                 eval_out.c_str()));
  }

  if (*oracle) {
    homctx_oracle_stats stats;
    const homctx_status status =
        homctx_oracle_run(&oracle_cfg, &stats, oracle_out.empty() ? nullptr : oracle_out.c_str());
    if (status != HOMCTX_OK) return fail_with(status);
    std::printf("instances=%d match_fraction=%.4f max_relative_gap=%.6g trace_violations=%d\n",
                stats.count, stats.match_fraction, stats.max_relative_gap, stats.trace_violations);
    return 0;
  }

  if (*ctx)
    return check(homctx_export_context(ctx_params.c_str(), ctx_labels.c_str(), ctx_linear ? 0 : 1,
                                       ctx_top_k, ctx_out.c_str()));

  if (*boxes)
    return check(homctx_extract_hand_boxes(boxes_map.c_str(), boxes_threshold, boxes_min_frac,
                                           boxes_max_frac, boxes_out.c_str()));

  return 0;
}
