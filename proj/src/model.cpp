#include "model.hpp"

#include <cmath>
#include <functional>

namespace homctx {

ModelParams ModelParams::zeros(int na, int ng, int no) {
  if (na < 1 || ng < 1 || no < 1) fail(ErrorCode::invalid_argument, "ModelParams: counts must be >= 1");
  ModelParams p;
  p.na = na;
  p.ng = ng;
  p.no = no;
  p.alpha.assign(static_cast<size_t>(na) * (ng + 1) * (ng + 1) * (no + 1) * (no + 1), 0.0);
  p.beta.assign(static_cast<size_t>(ng) * no, 0.0);
  p.eta.assign(static_cast<size_t>(ng) * ng, 0.0);
  p.lambda.assign(static_cast<size_t>(no) * no, 0.0);
  p.xi.assign(static_cast<size_t>(na) * na, 0.0);
  return p;
}

ModelParams ModelParams::zeros(const LabelSpace& space) {
  return zeros(space.num_actions(), space.num_grasps(), space.num_attributes());
}

bool ModelParams::dims_match(const LabelSpace& space) const {
  return na == space.num_actions() && ng == space.num_grasps() && no == space.num_attributes();
}

size_t ModelParams::num_values() const {
  return alpha.size() + beta.size() + 2 + 6 + eta.size() + lambda.size() + xi.size();
}

void ModelParams::for_each_value(const std::function<void(double&)>& fn) {
  for (double& v : alpha) fn(v);
  for (double& v : beta) fn(v);
  for (double& v : gamma) fn(v);
  for (auto& z : zeta)
    for (double& v : z) fn(v);
  for (double& v : eta) fn(v);
  for (double& v : lambda) fn(v);
  for (double& v : xi) fn(v);
}

void ModelParams::for_each_value(const std::function<void(const double&)>& fn) const {
  const_cast<ModelParams*>(this)->for_each_value([&fn](double& v) { fn(v); });
}

void ModelParams::check_finite() const {
  bool ok = true;
  for_each_value([&ok](const double& v) { ok = ok && std::isfinite(v); });
  if (!ok) fail(ErrorCode::numeric, "ModelParams: non-finite entry");
}

void validate_state(const SceneState& state, const LabelSpace& space) {
  if (state.action < 0 || state.action >= space.num_actions())
    fail(ErrorCode::schema, "state: action index out of range");
  for (Side s : kSides) {
    const SideState& side = state.side(s);
    if (side.grasp < 0 || side.grasp > space.num_grasps())
      fail(ErrorCode::schema, "state: grasp label out of range");
    if (side.attribute < 0 || side.attribute > space.num_attributes())
      fail(ErrorCode::schema, "state: attribute label out of range");
    if ((side.grasp == 0) == side.hand_box.has_value())
      fail(ErrorCode::schema, "state: grasp label and hand box presence disagree");
    if ((side.attribute == 0) == side.object_box.has_value())
      fail(ErrorCode::schema, "state: attribute label and object box presence disagree");
    if (side.object_box && !side.hand_box)
      fail(ErrorCode::schema, "state: object box without a hand box");
    if (side.hand_box && !valid_box(*side.hand_box)) fail(ErrorCode::schema, "state: invalid hand box");
    if (side.object_box && !valid_box(*side.object_box))
      fail(ErrorCode::schema, "state: invalid object box");
  }
}

int EvidenceBundle::find_hand_record(Side s, const BoundingBox& box) const {
  const auto& list = hands[side_index(s)];
  int best = -1;
  double best_iou = 0.0;
  for (size_t i = 0; i < list.size(); ++i) {
    if (list[i].box == box) return static_cast<int>(i);
    const double v = iou(list[i].box, box);
    if (v > best_iou) {
      best_iou = v;
      best = static_cast<int>(i);
    }
  }
  return best;
}

int EvidenceBundle::find_object_record(Side s, const BoundingBox& box) const {
  const auto& list = objects[side_index(s)];
  int best = -1;
  double best_iou = 0.0;
  for (size_t i = 0; i < list.size(); ++i) {
    if (list[i].box == box) return static_cast<int>(i);
    const double v = iou(list[i].box, box);
    if (v > best_iou) {
      best_iou = v;
      best = static_cast<int>(i);
    }
  }
  return best;
}

void EvidenceBundle::validate(const LabelSpace& space) const {
  if (phi_a.size() != static_cast<size_t>(space.num_actions()))
    fail(ErrorCode::schema, "evidence: phi_a length does not match the label space");
  for (double v : phi_a)
    if (!std::isfinite(v)) fail(ErrorCode::schema, "evidence: non-finite phi_a entry");
  for (Side s : kSides) {
    for (const HandCandidate& c : hands[side_index(s)]) {
      if (!valid_box(c.box)) fail(ErrorCode::schema, "evidence: invalid hand candidate box");
      for (double v : c.phi_h)
        if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::schema, "evidence: phi_h entry outside [0,1]");
      if (c.phi_g.size() != static_cast<size_t>(space.num_grasps()))
        fail(ErrorCode::schema, "evidence: phi_g length does not match the label space");
      for (double v : c.phi_g)
        if (!std::isfinite(v)) fail(ErrorCode::schema, "evidence: non-finite phi_g entry");
      if (!std::isfinite(c.offset.nx) || !std::isfinite(c.offset.ny) || !(c.offset.nw > 0) ||
          !(c.offset.nh > 0))
        fail(ErrorCode::schema, "evidence: invalid predicted offset");
    }
    for (const ObjectCandidate& c : objects[side_index(s)]) {
      if (!valid_box(c.box)) fail(ErrorCode::schema, "evidence: invalid object candidate box");
      if (c.phi_o.size() != static_cast<size_t>(space.num_attributes()))
        fail(ErrorCode::schema, "evidence: phi_o length does not match the label space");
      for (double v : c.phi_o)
        if (!std::isfinite(v)) fail(ErrorCode::schema, "evidence: non-finite phi_o entry");
    }
  }
}

namespace detail {

double dot(const double* a, const double* b, int n) {
  double acc = 0;
  for (int i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

ResolvedState resolve(const ModelParams& params, const SceneState& state,
                      const EvidenceBundle& evidence) {
  if (state.action < 0 || state.action >= params.na)
    fail(ErrorCode::invalid_argument, "score: action index out of range");
  ResolvedState out;
  out.action = state.action;
  for (Side s : kSides) {
    const SideState& side = state.side(s);
    ResolvedSide& r = out.sides[side_index(s)];
    if (side.grasp < 0 || side.grasp > params.ng)
      fail(ErrorCode::invalid_argument, "score: grasp label out of range");
    if (side.attribute < 0 || side.attribute > params.no)
      fail(ErrorCode::invalid_argument, "score: attribute label out of range");
    r.grasp = side.grasp;
    r.attribute = side.attribute;
    if (side.hand_box) {
      r.hand = evidence.find_hand_record(s, *side.hand_box);
      if (r.hand < 0)
        fail(ErrorCode::invalid_argument,
             std::string("score: no evidence record overlaps the ") + side_name(s) + " hand box");
    } else if (side.grasp != 0) {
      fail(ErrorCode::invalid_argument, "score: non-null grasp without a hand box");
    }
    if (side.object_box) {
      if (!side.hand_box)
        fail(ErrorCode::invalid_argument, "score: object box without a hand box");
      r.has_object = true;
      r.object_box = *side.object_box;
      r.object_record = evidence.find_object_record(s, *side.object_box);
    }
  }
  return out;
}

SceneState unresolve(const ResolvedState& state, const EvidenceBundle& evidence) {
  SceneState out;
  out.action = state.action;
  for (Side s : kSides) {
    const ResolvedSide& r = state.sides[side_index(s)];
    SideState& side = out.side(s);
    side.grasp = r.grasp;
    side.attribute = r.attribute;
    if (r.hand >= 0) side.hand_box = evidence.hands[side_index(s)][r.hand].box;
    if (r.has_object) side.object_box = r.object_box;
  }
  return out;
}

double term_functional(const ModelParams& p, const ResolvedState& s) {
  return p.alpha_at(s.action, s.sides[0].grasp, s.sides[1].grasp, s.sides[0].attribute,
                    s.sides[1].attribute);
}

double term_physical(const ModelParams& p, const ResolvedState& s) {
  double acc = 0;
  for (const ResolvedSide& side : s.sides)
    if (side.grasp > 0 && side.attribute > 0) acc += p.beta_at(side.grasp, side.attribute);
  return acc;
}

double term_spatial(const ModelParams& p, const ResolvedState& s, const EvidenceBundle& e) {
  double acc = 0;
  for (int si = 0; si < 2; ++si) {
    const ResolvedSide& side = s.sides[si];
    if (!side.has_object) continue;
    const HandCandidate& hand = e.hands[si][side.hand];
    acc += p.gamma[si] * iou(side.object_box, apply_offsets(hand.box, hand.offset));
  }
  return acc;
}

double term_grasp_evidence(const ModelParams& p, const ResolvedState& s, const EvidenceBundle& e) {
  double acc = 0;
  for (int si = 0; si < 2; ++si) {
    const ResolvedSide& side = s.sides[si];
    if (side.grasp <= 0) continue;
    const HandCandidate& hand = e.hands[si][side.hand];
    acc += dot(p.zeta[si].data(), hand.phi_h.data(), 3);
    acc += dot(p.eta_row(side.grasp), hand.phi_g.data(), p.ng);
  }
  return acc;
}

double term_object_evidence(const ModelParams& p, const ResolvedState& s, const EvidenceBundle& e) {
  double acc = 0;
  for (int si = 0; si < 2; ++si) {
    const ResolvedSide& side = s.sides[si];
    if (side.attribute <= 0) continue;
    if (side.object_record < 0) continue;  // no overlapping record: neutral evidence
    acc += dot(p.lambda_row(side.attribute), e.objects[si][side.object_record].phi_o.data(), p.no);
  }
  return acc;
}

double term_action_evidence(const ModelParams& p, const ResolvedState& s, const EvidenceBundle& e) {
  return dot(p.xi_row(s.action), e.phi_a.data(), p.na);
}

double score_resolved(const ModelParams& p, const ResolvedState& s, const EvidenceBundle& e) {
  return term_functional(p, s) + term_physical(p, s) + term_spatial(p, s, e) +
         term_grasp_evidence(p, s, e) + term_object_evidence(p, s, e) + term_action_evidence(p, s, e);
}

}  // namespace detail

double score_functional(const ModelParams& params, const SceneState& state) {
  if (state.action < 0 || state.action >= params.na)
    fail(ErrorCode::invalid_argument, "score: action index out of range");
  for (const SideState& side : state.sides) {
    if (side.grasp < 0 || side.grasp > params.ng)
      fail(ErrorCode::invalid_argument, "score: grasp label out of range");
    if (side.attribute < 0 || side.attribute > params.no)
      fail(ErrorCode::invalid_argument, "score: attribute label out of range");
  }
  return params.alpha_at(state.action, state.sides[0].grasp, state.sides[1].grasp,
                         state.sides[0].attribute, state.sides[1].attribute);
}

double score_physical(const ModelParams& params, const SceneState& state) {
  double acc = 0;
  for (const SideState& side : state.sides) {
    if (side.grasp < 0 || side.grasp > params.ng || side.attribute < 0 || side.attribute > params.no)
      fail(ErrorCode::invalid_argument, "score: label out of range");
    if (side.grasp > 0 && side.attribute > 0) acc += params.beta_at(side.grasp, side.attribute);
  }
  return acc;
}

double score_spatial(const ModelParams& params, const SceneState& state,
                     const EvidenceBundle& evidence) {
  return detail::term_spatial(params, detail::resolve(params, state, evidence), evidence);
}

double score_grasp_evidence(const ModelParams& params, const SceneState& state,
                            const EvidenceBundle& evidence) {
  return detail::term_grasp_evidence(params, detail::resolve(params, state, evidence), evidence);
}

double score_object_evidence(const ModelParams& params, const SceneState& state,
                             const EvidenceBundle& evidence) {
  return detail::term_object_evidence(params, detail::resolve(params, state, evidence), evidence);
}

double score_action_evidence(const ModelParams& params, const SceneState& state,
                             const EvidenceBundle& evidence) {
  if (evidence.phi_a.size() != static_cast<size_t>(params.na))
    fail(ErrorCode::invalid_argument, "score: phi_a length does not match params");
  return detail::term_action_evidence(params, detail::resolve(params, state, evidence), evidence);
}

double total_potential(const ModelParams& params, const SceneState& state,
                       const EvidenceBundle& evidence) {
  if (evidence.phi_a.size() != static_cast<size_t>(params.na))
    fail(ErrorCode::invalid_argument, "score: phi_a length does not match params");
  return detail::score_resolved(params, detail::resolve(params, state, evidence), evidence);
}

}  // namespace homctx
