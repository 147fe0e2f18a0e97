#include "inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace homctx {

using detail::ResolvedSide;
using detail::ResolvedState;
using detail::score_resolved;

void InferenceConfig::validate() const {
  if (!(hand_detection_threshold > 0.0 && hand_detection_threshold < 1.0))
    fail(ErrorCode::invalid_argument, "inference: hand_detection_threshold must be in (0,1)");
  if (max_iterations < 1) fail(ErrorCode::invalid_argument, "inference: max_iterations must be >= 1");
  if (!(exhaustive_cap >= 1)) fail(ErrorCode::invalid_argument, "inference: exhaustive_cap must be >= 1");
  if (object_grid.shift_multipliers.empty() || object_grid.scales.empty())
    fail(ErrorCode::invalid_argument, "inference: empty object candidate grid");
  for (double s : object_grid.scales)
    if (!(s > 0)) fail(ErrorCode::invalid_argument, "inference: grid scales must be > 0");
}

namespace {

double side_score(const HandCandidate& c, Side s) {
  return s == Side::left ? c.phi_h[1] : c.phi_h[2];
}

std::vector<int> surviving_candidates(const EvidenceBundle& evidence, Side s, double threshold) {
  std::vector<int> out;
  const auto& list = evidence.hand_candidates(s);
  for (size_t i = 0; i < list.size(); ++i)
    if (side_score(list[i], s) >= threshold) out.push_back(static_cast<int>(i));
  return out;
}

int argmax_lowest(const double* v, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

void append_unique(std::vector<BoundingBox>& boxes, const BoundingBox& b) {
  for (const BoundingBox& x : boxes)
    if (x == b) return;
  boxes.push_back(b);
}

/// Object boxes reachable from one hand candidate: the regenerated grid
/// around the regressed reference box, the reference box itself, and the
/// evidence object records.
std::vector<BoundingBox> object_boxes_for_hand(const EvidenceBundle& evidence, Side side,
                                               const HandCandidate& hand, const CandidateGrid& grid) {
  std::vector<BoundingBox> boxes = generate_candidates(apply_offsets(hand.box, hand.offset), grid);
  append_unique(boxes, apply_offsets(hand.box, hand.offset));
  for (const ObjectCandidate& rec : evidence.object_candidates(side)) append_unique(boxes, rec.box);
  return boxes;
}

ResolvedState initialize_resolved(const EvidenceBundle& evidence, const ModelParams& params,
                                  const InferenceConfig& config) {
  ResolvedState state;
  state.action = argmax_lowest(evidence.phi_a.data(), params.na);
  for (Side s : kSides) {
    ResolvedSide& side = state.sides[side_index(s)];
    const auto survivors = surviving_candidates(evidence, s, config.hand_detection_threshold);
    if (survivors.empty()) continue;  // side stays null and never re-enters
    int ref = survivors[0];
    for (int idx : survivors)
      if (side_score(evidence.hand_candidates(s)[idx], s) >
          side_score(evidence.hand_candidates(s)[ref], s))
        ref = idx;
    const HandCandidate& hand = evidence.hand_candidates(s)[ref];
    side.hand = ref;
    side.grasp = 1 + argmax_lowest(hand.phi_g.data(), params.ng);
    side.has_object = true;
    side.object_box = apply_offsets(hand.box, hand.offset);
    side.object_record = evidence.find_object_record(s, side.object_box);
    if (side.object_record >= 0) {
      side.attribute =
          1 + argmax_lowest(evidence.object_candidates(s)[side.object_record].phi_o.data(), params.no);
    } else {
      side.attribute = 1;  // no overlapping record: neutral scores, lowest class wins
    }
  }
  return state;
}

ResolvedState update_grasp_resolved(const ResolvedState& state, const EvidenceBundle& evidence,
                                    const ModelParams& params, Side s,
                                    const std::vector<int>& survivors) {
  ResolvedState best = state;
  double best_score = -std::numeric_limits<double>::infinity();
  ResolvedState cand = state;
  ResolvedSide& side = cand.sides[side_index(s)];
  for (int g = 1; g <= params.ng; ++g) {
    for (int h : survivors) {
      side.grasp = g;
      side.hand = h;
      const double v = score_resolved(params, cand, evidence);
      if (v > best_score) {
        best_score = v;
        best = cand;
      }
    }
  }
  return best;
}

ResolvedState update_object_resolved(const ResolvedState& state, const EvidenceBundle& evidence,
                                     const ModelParams& params, const InferenceConfig& config, Side s) {
  const ResolvedSide& current = state.sides[side_index(s)];
  const HandCandidate& hand = evidence.hand_candidates(s)[current.hand];
  std::vector<BoundingBox> boxes = object_boxes_for_hand(evidence, s, hand, config.object_grid);
  if (current.has_object) append_unique(boxes, current.object_box);
  std::vector<int> records(boxes.size());
  for (size_t i = 0; i < boxes.size(); ++i) records[i] = evidence.find_object_record(s, boxes[i]);

  ResolvedState best = state;
  double best_score = -std::numeric_limits<double>::infinity();
  ResolvedState cand = state;
  ResolvedSide& side = cand.sides[side_index(s)];
  side.has_object = true;
  for (int m = 1; m <= params.no; ++m) {
    for (size_t b = 0; b < boxes.size(); ++b) {
      side.attribute = m;
      side.object_box = boxes[b];
      side.object_record = records[b];
      const double v = score_resolved(params, cand, evidence);
      if (v > best_score) {
        best_score = v;
        best = cand;
      }
    }
  }
  return best;
}

ResolvedState update_action_resolved(const ResolvedState& state, const EvidenceBundle& evidence,
                                     const ModelParams& params) {
  ResolvedState best = state;
  double best_score = -std::numeric_limits<double>::infinity();
  ResolvedState cand = state;
  for (int a = 0; a < params.na; ++a) {
    cand.action = a;
    const double v = score_resolved(params, cand, evidence);
    if (v > best_score) {
      best_score = v;
      best = cand;
    }
  }
  return best;
}

bool same_resolved(const ResolvedState& a, const ResolvedState& b) {
  if (a.action != b.action) return false;
  for (int si = 0; si < 2; ++si) {
    const ResolvedSide& x = a.sides[si];
    const ResolvedSide& y = b.sides[si];
    if (x.grasp != y.grasp || x.attribute != y.attribute || x.hand != y.hand ||
        x.has_object != y.has_object || x.object_record != y.object_record)
      return false;
    if (x.has_object && !(x.object_box == y.object_box)) return false;
  }
  return true;
}

void check_inputs(const EvidenceBundle& evidence, const ModelParams& params) {
  if (evidence.phi_a.size() != static_cast<size_t>(params.na))
    fail(ErrorCode::invalid_argument, "inference: phi_a length does not match params");
  for (Side s : kSides)
    for (const HandCandidate& c : evidence.hand_candidates(s))
      if (c.phi_g.size() != static_cast<size_t>(params.ng))
        fail(ErrorCode::invalid_argument, "inference: phi_g length does not match params");
  for (Side s : kSides)
    for (const ObjectCandidate& c : evidence.object_candidates(s))
      if (c.phi_o.size() != static_cast<size_t>(params.no))
        fail(ErrorCode::invalid_argument, "inference: phi_o length does not match params");
}

}  // namespace

SceneState initialize(const EvidenceBundle& evidence, const ModelParams& params,
                      const InferenceConfig& config) {
  config.validate();
  check_inputs(evidence, params);
  return detail::unresolve(initialize_resolved(evidence, params, config), evidence);
}

SceneState update_grasp(const SceneState& state, const EvidenceBundle& evidence,
                        const ModelParams& params, const InferenceConfig& config, Side side) {
  config.validate();
  check_inputs(evidence, params);
  const auto survivors = surviving_candidates(evidence, side, config.hand_detection_threshold);
  if (survivors.empty())
    fail(ErrorCode::invalid_argument, "update_grasp: side has no surviving hand candidates");
  ResolvedState resolved = detail::resolve(params, state, evidence);
  return detail::unresolve(update_grasp_resolved(resolved, evidence, params, side, survivors),
                           evidence);
}

SceneState update_object(const SceneState& state, const EvidenceBundle& evidence,
                         const ModelParams& params, const InferenceConfig& config, Side side) {
  config.validate();
  check_inputs(evidence, params);
  ResolvedState resolved = detail::resolve(params, state, evidence);
  if (resolved.sides[side_index(side)].hand < 0)
    fail(ErrorCode::invalid_argument, "update_object: side has no hand box");
  return detail::unresolve(update_object_resolved(resolved, evidence, params, config, side), evidence);
}

SceneState update_action(const SceneState& state, const EvidenceBundle& evidence,
                         const ModelParams& params) {
  check_inputs(evidence, params);
  ResolvedState resolved = detail::resolve(params, state, evidence);
  return detail::unresolve(update_action_resolved(resolved, evidence, params), evidence);
}

InferenceResult infer(const EvidenceBundle& evidence, const ModelParams& params,
                      const InferenceConfig& config) {
  config.validate();
  check_inputs(evidence, params);
  std::array<std::vector<int>, 2> survivors;
  for (Side s : kSides)
    survivors[side_index(s)] = surviving_candidates(evidence, s, config.hand_detection_threshold);

  ResolvedState state = initialize_resolved(evidence, params, config);
  InferenceResult result;
  result.trace.push_back(score_resolved(params, state, evidence));

  for (int it = 1; it <= config.max_iterations; ++it) {
    const ResolvedState before = state;
    for (UpdateBlock block : config.update_order) {
      switch (block) {
        case UpdateBlock::grasp:
          for (Side s : kSides)
            if (state.sides[side_index(s)].hand >= 0)
              state = update_grasp_resolved(state, evidence, params, s, survivors[side_index(s)]);
          break;
        case UpdateBlock::object:
          for (Side s : kSides)
            if (state.sides[side_index(s)].hand >= 0)
              state = update_object_resolved(state, evidence, params, config, s);
          break;
        case UpdateBlock::action:
          state = update_action_resolved(state, evidence, params);
          break;
      }
    }
    result.trace.push_back(score_resolved(params, state, evidence));
    result.iterations_used = it;
    if (config.detect_convergence && same_resolved(before, state)) {
      result.converged = true;
      break;
    }
  }

  result.state = detail::unresolve(state, evidence);
  result.potential = result.trace.back();
  return result;
}

namespace {

struct SideConfigs {
  // Parallel arrays, index 0 is the null configuration.
  std::vector<double> contrib;
  std::vector<int> grasp, attribute, hand, box;
  std::vector<BoundingBox> universe;
  std::vector<int> universe_record;
};

SideConfigs build_side_configs(const EvidenceBundle& evidence, const ModelParams& params,
                               const InferenceConfig& config, Side s,
                               const std::vector<int>& survivors) {
  SideConfigs out;
  out.contrib.push_back(0.0);
  out.grasp.push_back(0);
  out.attribute.push_back(0);
  out.hand.push_back(-1);
  out.box.push_back(-1);
  if (survivors.empty()) return out;

  // Shared object-box universe: any box an update could hold, from any
  // surviving hand, so the enumeration covers every reachable pairing.
  for (int h : survivors)
    for (const BoundingBox& b :
         object_boxes_for_hand(evidence, s, evidence.hand_candidates(s)[h], config.object_grid))
      append_unique(out.universe, b);
  out.universe_record.resize(out.universe.size());
  for (size_t i = 0; i < out.universe.size(); ++i)
    out.universe_record[i] = evidence.find_object_record(s, out.universe[i]);

  const int si = side_index(s);
  std::vector<double> spatial(survivors.size() * out.universe.size());
  std::vector<double> hand_base(survivors.size());
  for (size_t hi = 0; hi < survivors.size(); ++hi) {
    const HandCandidate& hand = evidence.hand_candidates(s)[survivors[hi]];
    hand_base[hi] = detail::dot(params.zeta[si].data(), hand.phi_h.data(), 3);
    const BoundingBox ref = apply_offsets(hand.box, hand.offset);
    for (size_t b = 0; b < out.universe.size(); ++b)
      spatial[hi * out.universe.size() + b] = params.gamma[si] * iou(out.universe[b], ref);
  }
  std::vector<double> object_ev(params.no * out.universe.size());
  for (int m = 1; m <= params.no; ++m)
    for (size_t b = 0; b < out.universe.size(); ++b)
      object_ev[(m - 1) * out.universe.size() + b] =
          out.universe_record[b] < 0
              ? 0.0
              : detail::dot(params.lambda_row(m),
                            evidence.object_candidates(s)[out.universe_record[b]].phi_o.data(),
                            params.no);

  // Enumeration (and tie) order: grasp, attribute, hand candidate, box.
  for (int g = 1; g <= params.ng; ++g) {
    std::vector<double> grasp_ev(survivors.size());
    for (size_t hi = 0; hi < survivors.size(); ++hi)
      grasp_ev[hi] = hand_base[hi] + detail::dot(params.eta_row(g),
                                                 evidence.hand_candidates(s)[survivors[hi]].phi_g.data(),
                                                 params.ng);
    for (int m = 1; m <= params.no; ++m) {
      const double pair_base = params.beta_at(g, m);
      for (size_t hi = 0; hi < survivors.size(); ++hi) {
        for (size_t b = 0; b < out.universe.size(); ++b) {
          out.contrib.push_back(pair_base + grasp_ev[hi] + spatial[hi * out.universe.size() + b] +
                                object_ev[(m - 1) * out.universe.size() + b]);
          out.grasp.push_back(g);
          out.attribute.push_back(m);
          out.hand.push_back(survivors[hi]);
          out.box.push_back(static_cast<int>(b));
        }
      }
    }
  }
  return out;
}

}  // namespace

double exhaustive_state_count(const EvidenceBundle& evidence, const ModelParams& params,
                              const InferenceConfig& config) {
  config.validate();
  check_inputs(evidence, params);
  double count = params.na;
  for (Side s : kSides) {
    const auto survivors = surviving_candidates(evidence, s, config.hand_detection_threshold);
    std::vector<BoundingBox> universe;
    for (int h : survivors)
      for (const BoundingBox& b :
           object_boxes_for_hand(evidence, s, evidence.hand_candidates(s)[h], config.object_grid))
        append_unique(universe, b);
    count *= 1.0 + static_cast<double>(survivors.size()) * params.ng *
                       static_cast<double>(universe.size()) * params.no;
  }
  return count;
}

std::pair<SceneState, double> exhaustive_map(const EvidenceBundle& evidence, const ModelParams& params,
                                             const InferenceConfig& config) {
  config.validate();
  check_inputs(evidence, params);
  std::array<std::vector<int>, 2> survivors;
  for (Side s : kSides)
    survivors[side_index(s)] = surviving_candidates(evidence, s, config.hand_detection_threshold);
  std::array<SideConfigs, 2> configs;
  for (Side s : kSides)
    configs[side_index(s)] = build_side_configs(evidence, params, config, s, survivors[side_index(s)]);

  const double count = static_cast<double>(params.na) * configs[0].contrib.size() *
                       configs[1].contrib.size();
  if (count > config.exhaustive_cap)
    fail(ErrorCode::cap_exceeded, "exhaustive_map: state space exceeds the configured cap");

  const size_t cl = configs[0].contrib.size(), cr = configs[1].contrib.size();
  const size_t gdim = params.ng + 1, odim = params.no + 1;
  std::vector<size_t> right_offset(cr);
  for (size_t rc = 0; rc < cr; ++rc)
    right_offset[rc] = static_cast<size_t>(configs[1].grasp[rc]) * odim * odim +
                       static_cast<size_t>(configs[1].attribute[rc]);

  double best = -std::numeric_limits<double>::infinity();
  int best_a = 0;
  size_t best_l = 0, best_r = 0;
  for (int a = 0; a < params.na; ++a) {
    const double action_ev = detail::dot(params.xi_row(a), evidence.phi_a.data(), params.na);
    const size_t a_base = static_cast<size_t>(a) * gdim * gdim * odim * odim;
    for (size_t lc = 0; lc < cl; ++lc) {
      const double left_part = configs[0].contrib[lc] + action_ev;
      const size_t l_base = a_base + static_cast<size_t>(configs[0].grasp[lc]) * gdim * odim * odim +
                            static_cast<size_t>(configs[0].attribute[lc]) * odim;
      const double* alpha_base = params.alpha.data() + l_base;
      const double* rcontrib = configs[1].contrib.data();
      for (size_t rc = 0; rc < cr; ++rc) {
        const double v = alpha_base[right_offset[rc]] + left_part + rcontrib[rc];
        if (v > best) {
          best = v;
          best_a = a;
          best_l = lc;
          best_r = rc;
        }
      }
    }
  }

  ResolvedState state;
  state.action = best_a;
  const std::array<size_t, 2> pick{best_l, best_r};
  for (int si = 0; si < 2; ++si) {
    const SideConfigs& c = configs[si];
    const size_t idx = pick[si];
    ResolvedSide& side = state.sides[si];
    side.grasp = c.grasp[idx];
    side.attribute = c.attribute[idx];
    side.hand = c.hand[idx];
    if (c.box[idx] >= 0) {
      side.has_object = true;
      side.object_box = c.universe[c.box[idx]];
      side.object_record = c.universe_record[c.box[idx]];
    }
  }
  return {detail::unresolve(state, evidence), score_resolved(params, state, evidence)};
}

}  // namespace homctx
