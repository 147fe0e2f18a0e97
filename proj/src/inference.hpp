#ifndef HOMCTX_INFERENCE_HPP
#define HOMCTX_INFERENCE_HPP

#include <utility>

#include "model.hpp"

namespace homctx {

enum class UpdateBlock { grasp, object, action };

struct InferenceConfig {
  /// Hand candidates whose side-specific detection score falls below this are
  /// removed before iteration starts and never re-enter.
  double hand_detection_threshold = 0.8;
  int max_iterations = 10;
  /// Stop as soon as a full sweep leaves every label and box unchanged.
  bool detect_convergence = true;
  /// Grid used to respawn candidate object boxes around the regressed
  /// reference box each object update.
  CandidateGrid object_grid{};
  /// Refuse exhaustive enumeration beyond this many joint states.
  double exhaustive_cap = 1e7;
  std::array<UpdateBlock, 3> update_order{UpdateBlock::grasp, UpdateBlock::object, UpdateBlock::action};

  void validate() const;
};

struct InferenceResult {
  SceneState state;
  double potential = 0;
  int iterations_used = 0;
  bool converged = false;
  std::vector<double> trace;  // potential after initialization, then after each sweep
};

/// Threshold the hand candidates, pick the best surviving box per side, chain
/// the classifier argmaxes, and regress the object reference box.
SceneState initialize(const EvidenceBundle& evidence, const ModelParams& params,
                      const InferenceConfig& config);

/// Jointly re-pick (grasp label, hand box) for one side, all else fixed.
/// Ties break to the lowest grasp label, then candidate order.
SceneState update_grasp(const SceneState& state, const EvidenceBundle& evidence,
                        const ModelParams& params, const InferenceConfig& config, Side side);

/// Jointly re-pick (attribute label, object box) for one side. Candidate
/// boxes are regenerated from the current hand box, plus the regressed
/// reference box, the evidence object records and the incumbent box.
SceneState update_object(const SceneState& state, const EvidenceBundle& evidence,
                         const ModelParams& params, const InferenceConfig& config, Side side);

/// Re-pick the action by enumerating action classes; ties to the lowest index.
SceneState update_action(const SceneState& state, const EvidenceBundle& evidence,
                         const ModelParams& params);

/// Initialization followed by coordinate-ascent sweeps. Every update is an
/// exact argmax of the total potential over its block, so the trace never
/// decreases.
InferenceResult infer(const EvidenceBundle& evidence, const ModelParams& params,
                      const InferenceConfig& config);

/// Brute-force maximizer over the same feasible space the iterative updates
/// can reach: per side either null or (surviving hand candidate, real grasp,
/// object box from the shared universe, real attribute). Deterministic
/// tie-breaking by enumeration order (action, then left config, then right).
std::pair<SceneState, double> exhaustive_map(const EvidenceBundle& evidence, const ModelParams& params,
                                             const InferenceConfig& config);

/// Number of joint states exhaustive_map would enumerate.
double exhaustive_state_count(const EvidenceBundle& evidence, const ModelParams& params,
                              const InferenceConfig& config);

}  // namespace homctx

#endif
