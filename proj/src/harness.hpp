#ifndef HOMCTX_HARNESS_HPP
#define HOMCTX_HARNESS_HPP

#include <optional>
#include <string>

#include "inference.hpp"
#include "learning.hpp"
#include "rng.hpp"
#include "synth.hpp"

namespace homctx {

enum class AblationMode { evidence_only, evidence_physical, full };
const char* mode_name(AblationMode mode);

/// Restricted fits realize the ablations: evidence-only pins alpha, beta and
/// gamma at zero; evidence+physical pins alpha only.
LearningConfig restrict_to_mode(LearningConfig config, AblationMode mode);

struct EvalOptions {
  LearningConfig fit;
  InferenceConfig infer;
  std::vector<AblationMode> modes{AblationMode::evidence_only, AblationMode::evidence_physical,
                                  AblationMode::full};
  std::vector<double> downsizing_fractions;  // strictly increasing, in [0,1)
  std::optional<ModelParams> full_params;    // reuse instead of fitting the full mode
  MarginalMode context_mode = MarginalMode::log_sum_exp;
  int context_top_k = 5;

  void validate() const;
};

struct ModeAccuracy {
  AblationMode mode = AblationMode::full;
  double objective = 0;
  std::array<TaskTally, 3> tallies;  // grasp, attribute, action
  double task_accuracy(int task) const { return tallies[task].overall_accuracy(); }
};

struct EvalOutcome {
  std::vector<ModeAccuracy> modes;
  // (task, fraction, mode, accuracy) rows when a downsizing study ran
  std::vector<std::tuple<std::string, double, std::string, double>> downsizing;
  EvalReport report;
};

/// Fit per mode on the train split, infer the test split, tally accuracy,
/// export the context tables of the full model, and optionally rerun fits on
/// downsized training prefixes.
EvalOutcome run_eval(const LabelSpace& space, const std::vector<FrameRecord>& train,
                     const std::vector<FrameRecord>& test, const EvalOptions& options);

/// Batch MAP inference over records; one result per record in order.
std::vector<InferenceResult> infer_frames(const std::vector<FrameRecord>& frames,
                                          const ModelParams& params, const InferenceConfig& config,
                                          int threads = 1);

struct OracleCaps {
  int max_actions = 4;
  int max_grasps = 5;
  int max_attributes = 4;
  int max_candidates = 5;  // hand candidates, object records and grid sizes
};

struct OracleInstance {
  ModelParams params;
  EvidenceBundle evidence;
  InferenceConfig config;
};

/// Random small instance; context_scale 0 yields a zero-context instance.
OracleInstance make_oracle_instance(Rng& rng, const OracleCaps& caps,
                                    std::optional<double> context_scale = std::nullopt);

struct OracleStats {
  int count = 0;
  int matches = 0;             // inference within 1% of the exhaustive potential
  double match_fraction = 0;
  double max_relative_gap = 0;
  double mean_relative_gap = 0;
  int trace_violations = 0;
  int exact_matches = 0;       // identical potential values
};

OracleStats run_oracle_suite(int count, const OracleCaps& caps, uint64_t seed,
                             std::optional<double> context_scale = std::nullopt);

std::string oracle_stats_json(const OracleStats& stats);

}  // namespace homctx

#endif
