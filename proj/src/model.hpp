#ifndef HOMCTX_MODEL_HPP
#define HOMCTX_MODEL_HPP

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "geometry.hpp"
#include "labels.hpp"

namespace homctx {

/// The full weight set of the contextual potential. Tensors are stored flat,
/// row-major, with dimensions tied to a LabelSpace:
///   alpha  [na][ng+1][ng+1][no+1][no+1]  action x grasps x attributes (0 = null)
///   beta   [ng][no]                      real grasp x real attribute
///   gamma  per side                      spatial-agreement weight
///   zeta   per side, 3 weights           over {background, left, right} detection scores
///   eta    [ng][ng]                      per real grasp, over grasp-score dims
///   lambda [no][no]                      per real attribute, over attribute-score dims
///   xi     [na][na]                      per action, over action-score dims
struct ModelParams {
  int na = 0, ng = 0, no = 0;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::array<double, 2> gamma{};
  std::array<std::array<double, 3>, 2> zeta{};
  std::vector<double> eta;
  std::vector<double> lambda;
  std::vector<double> xi;

  static ModelParams zeros(const LabelSpace& space);
  static ModelParams zeros(int na, int ng, int no);

  bool dims_match(const LabelSpace& space) const;

  size_t alpha_index(int a, int gl, int gr, int ol, int orr) const {
    return ((((static_cast<size_t>(a) * (ng + 1) + gl) * (ng + 1) + gr) * (no + 1) + ol)) * (no + 1) +
           orr;
  }
  double alpha_at(int a, int gl, int gr, int ol, int orr) const {
    return alpha[alpha_index(a, gl, gr, ol, orr)];
  }
  double& alpha_at(int a, int gl, int gr, int ol, int orr) {
    return alpha[alpha_index(a, gl, gr, ol, orr)];
  }
  // beta is indexed by real labels (1-based); stored shifted.
  double beta_at(int g, int o) const { return beta[static_cast<size_t>(g - 1) * no + (o - 1)]; }
  double& beta_at(int g, int o) { return beta[static_cast<size_t>(g - 1) * no + (o - 1)]; }
  const double* eta_row(int g) const { return eta.data() + static_cast<size_t>(g - 1) * ng; }
  double* eta_row(int g) { return eta.data() + static_cast<size_t>(g - 1) * ng; }
  const double* lambda_row(int o) const { return lambda.data() + static_cast<size_t>(o - 1) * no; }
  double* lambda_row(int o) { return lambda.data() + static_cast<size_t>(o - 1) * no; }
  const double* xi_row(int a) const { return xi.data() + static_cast<size_t>(a) * na; }
  double* xi_row(int a) { return xi.data() + static_cast<size_t>(a) * na; }

  /// Flat views over every block, fixed order: alpha, beta, gamma, zeta, eta,
  /// lambda, xi. Used by the learning code for gradients and norms.
  size_t num_values() const;
  void for_each_value(const std::function<void(double&)>& fn);
  void for_each_value(const std::function<void(const double&)>& fn) const;

  void check_finite() const;
};

/// One joint assignment of labels and boxes for a frame. Grasp/attribute 0
/// mean no hand / no object on that side; boxes are present exactly when the
/// matching label is non-null, and an object requires a hand.
struct SideState {
  int grasp = 0;
  int attribute = 0;
  std::optional<BoundingBox> hand_box;
  std::optional<BoundingBox> object_box;
};

struct SceneState {
  int action = 0;
  std::array<SideState, 2> sides;

  const SideState& side(Side s) const { return sides[side_index(s)]; }
  SideState& side(Side s) { return sides[side_index(s)]; }
};

void validate_state(const SceneState& state, const LabelSpace& space);

/// Per-frame classifier outputs standing in for the CNN heads: per candidate
/// hand box the detection scores (background/left/right), grasp scores and the
/// predicted hand-to-object offset; per candidate object box the attribute
/// scores; one action score vector per frame.
struct HandCandidate {
  BoundingBox box;
  std::array<double, 3> phi_h{};
  std::vector<double> phi_g;
  OffsetVector offset;
};

struct ObjectCandidate {
  BoundingBox box;
  std::vector<double> phi_o;
};

struct EvidenceBundle {
  std::array<std::vector<HandCandidate>, 2> hands;
  std::array<std::vector<ObjectCandidate>, 2> objects;
  std::vector<double> phi_a;

  const std::vector<HandCandidate>& hand_candidates(Side s) const { return hands[side_index(s)]; }
  const std::vector<ObjectCandidate>& object_candidates(Side s) const { return objects[side_index(s)]; }

  /// Index of the hand record for a state box: exact match first, otherwise
  /// the highest-IoU record (first on ties). -1 when nothing overlaps.
  int find_hand_record(Side s, const BoundingBox& box) const;
  /// Attribute scores for an arbitrary box are read from the highest-IoU
  /// object record (first on ties); -1 when there is no overlapping record.
  int find_object_record(Side s, const BoundingBox& box) const;

  void validate(const LabelSpace& space) const;
};

// The six terms of the scoring function and their sum. All are pure and
// deterministic; the sum is evaluated in a fixed order (left before right,
// term order as below) so repeated scoring is bit-identical.
double score_functional(const ModelParams& params, const SceneState& state);
double score_physical(const ModelParams& params, const SceneState& state);
double score_spatial(const ModelParams& params, const SceneState& state, const EvidenceBundle& evidence);
double score_grasp_evidence(const ModelParams& params, const SceneState& state,
                            const EvidenceBundle& evidence);
double score_object_evidence(const ModelParams& params, const SceneState& state,
                             const EvidenceBundle& evidence);
double score_action_evidence(const ModelParams& params, const SceneState& state,
                             const EvidenceBundle& evidence);
double total_potential(const ModelParams& params, const SceneState& state,
                       const EvidenceBundle& evidence);

namespace detail {

/// A state with evidence references resolved once: hand candidate indices and
/// the object record backing each object box. Inference and the exhaustive
/// search work on resolved states so every score they compare comes from the
/// same arithmetic as the public scorers.
struct ResolvedSide {
  int grasp = 0;
  int attribute = 0;
  int hand = -1;           // index into evidence.hands[side]
  bool has_object = false;
  BoundingBox object_box;
  int object_record = -1;  // index into evidence.objects[side]; -1 = no overlap
};

struct ResolvedState {
  int action = 0;
  std::array<ResolvedSide, 2> sides;
};

ResolvedState resolve(const ModelParams& params, const SceneState& state,
                      const EvidenceBundle& evidence);
SceneState unresolve(const ResolvedState& state, const EvidenceBundle& evidence);

double term_functional(const ModelParams& p, const ResolvedState& s);
double term_physical(const ModelParams& p, const ResolvedState& s);
double term_spatial(const ModelParams& p, const ResolvedState& s, const EvidenceBundle& e);
double term_grasp_evidence(const ModelParams& p, const ResolvedState& s, const EvidenceBundle& e);
double term_object_evidence(const ModelParams& p, const ResolvedState& s, const EvidenceBundle& e);
double term_action_evidence(const ModelParams& p, const ResolvedState& s, const EvidenceBundle& e);
double score_resolved(const ModelParams& p, const ResolvedState& s, const EvidenceBundle& e);

double dot(const double* a, const double* b, int n);

}  // namespace detail

}  // namespace homctx

#endif
