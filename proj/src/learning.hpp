#ifndef HOMCTX_LEARNING_HPP
#define HOMCTX_LEARNING_HPP

#include <vector>

#include "evidence_io.hpp"
#include "model.hpp"

namespace homctx {

/// One annotated frame: the evidence bundle restricted to the ground-truth
/// boxes (one hand record per present side, at most one object record) plus
/// the annotated state.
struct TrainingFrame {
  EvidenceBundle evidence;
  SceneState truth;
};

/// Match a frame's truth boxes against its candidate records (exact match
/// first, then highest IoU) and keep only the matched records.
TrainingFrame make_training_frame(const FrameRecord& record, const LabelSpace& space);

struct LearningConfig {
  double l2_strength = 1e-2;
  double step_size = 0.1;
  int max_epochs = 200;
  double convergence_tol = 1e-6;
  /// Weight of uniform pseudo-observations over each frame's feasible label
  /// assignments, smoothing the data-starved alpha tensor.
  double alpha_smoothing = 0.0;
  // Restricted fits keep these blocks pinned at zero.
  bool freeze_alpha = false;
  bool freeze_beta = false;
  bool freeze_gamma = false;
  int threads = 1;

  void validate() const;
};

/// Conditional log-likelihood of the annotated labels given the ground-truth
/// boxes: sum over frames of potential(truth) - log Z, minus the L2 penalty.
/// Z sums exp(potential) over all label assignments consistent with which
/// truth boxes exist (absent hands pin a side to null, absent objects pin the
/// attribute to null). Guarded against overflow by max-shifted exponentials.
double log_likelihood(const ModelParams& params, const std::vector<TrainingFrame>& frames,
                      const LearningConfig& config);

/// Analytic gradient of log_likelihood; also reports the objective.
ModelParams log_likelihood_gradient(const ModelParams& params,
                                    const std::vector<TrainingFrame>& frames,
                                    const LearningConfig& config, double* objective_out);

struct FitResult {
  ModelParams params;
  double objective = 0;
  int epochs = 0;
  std::vector<double> trace;  // accepted objective values, non-decreasing
};

/// Gradient ascent from zero initialization with step halving on any
/// objective decrease. Deterministic given the frame order.
FitResult fit(const std::vector<TrainingFrame>& frames, const LabelSpace& space,
              const LearningConfig& config);

struct LabelAssignment {
  int action = 0;
  std::array<int, 2> grasp{0, 0};
  std::array<int, 2> attribute{0, 0};
};

/// MAP label assignment with boxes fixed at the frame's ground truth. Ties
/// break to the lowest action, then left pair, then right pair.
LabelAssignment map_labels(const ModelParams& params, const TrainingFrame& frame);

enum class ContextAxis { action_grasp, action_attribute, grasp_attribute };
enum class MarginalMode { linear, log_sum_exp };

struct ContextMatrix {
  int rows = 0, cols = 0;
  std::vector<double> values;  // row-major
  double at(int r, int c) const { return values[static_cast<size_t>(r) * cols + c]; }
};

/// Pairwise strength table obtained by reducing alpha over the non-selected
/// axes and averaging the two side placements (linear mode sums and halves,
/// log mode takes log-sum-exp minus log 2), so the linear table's total mass
/// equals the tensor's. Rows/cols include the null classes at index 0.
ContextMatrix marginalize_context(const ModelParams& params, ContextAxis axis,
                                  MarginalMode mode = MarginalMode::log_sum_exp);

struct Combination {
  int grasp_left = 0, grasp_right = 0, attr_left = 0, attr_right = 0;
  double value = 0;
};

/// Top-k entries of the alpha slice for one action, descending, ties by
/// ascending (grasp_left, grasp_right, attr_left, attr_right).
std::vector<Combination> most_probable_combinations(const ModelParams& params, int action,
                                                    int top_k = 5);

}  // namespace homctx

#endif
