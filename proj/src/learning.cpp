#include "learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace homctx {

void LearningConfig::validate() const {
  if (!(l2_strength >= 0)) fail(ErrorCode::invalid_argument, "learning: l2_strength must be >= 0");
  if (!(step_size > 0)) fail(ErrorCode::invalid_argument, "learning: step_size must be > 0");
  if (max_epochs < 1) fail(ErrorCode::invalid_argument, "learning: max_epochs must be >= 1");
  if (!(convergence_tol >= 0)) fail(ErrorCode::invalid_argument, "learning: convergence_tol must be >= 0");
  if (!(alpha_smoothing >= 0)) fail(ErrorCode::invalid_argument, "learning: alpha_smoothing must be >= 0");
  if (threads < 1) fail(ErrorCode::invalid_argument, "learning: threads must be >= 1");
}

TrainingFrame make_training_frame(const FrameRecord& record, const LabelSpace& space) {
  if (!record.truth)
    fail(ErrorCode::invalid_argument, "frame " + record.frame_id + " has no ground-truth annotation");
  validate_state(*record.truth, space);
  TrainingFrame out;
  out.truth = *record.truth;
  out.evidence.phi_a = record.evidence.phi_a;
  for (Side s : kSides) {
    const SideState& truth_side = record.truth->side(s);
    const int si = side_index(s);
    if (truth_side.hand_box) {
      const int idx = record.evidence.find_hand_record(s, *truth_side.hand_box);
      if (idx < 0)
        fail(ErrorCode::schema, "frame " + record.frame_id + ": no evidence record overlaps the " +
                                    side_name(s) + " ground-truth hand box");
      out.evidence.hands[si].push_back(record.evidence.hands[si][idx]);
      out.evidence.hands[si].back().box = *truth_side.hand_box;
    }
    if (truth_side.object_box) {
      const int idx = record.evidence.find_object_record(s, *truth_side.object_box);
      if (idx < 0)
        fail(ErrorCode::schema, "frame " + record.frame_id + ": no evidence record overlaps the " +
                                    side_name(s) + " ground-truth object box");
      out.evidence.objects[si].push_back(record.evidence.objects[si][idx]);
      out.evidence.objects[si].back().box = *truth_side.object_box;
    }
  }
  return out;
}

namespace {

// Per-side feasible label pairs for the partition function: an absent side is
// pinned to (0,0); a hand without an annotated object ranges over (g,0); a
// fully annotated side ranges over (g,m), g-major.
struct SidePlan {
  bool has_hand = false, has_object = false;
  std::vector<std::pair<int, int>> pairs;
  int truth_pair = 0;
  double spatial_iou = 0;  // IoU(truth object, regressed reference), fixed
};

struct FramePlan {
  const TrainingFrame* frame = nullptr;
  std::array<SidePlan, 2> sides;
  double feasible_count = 0;
};

FramePlan plan_frame(const TrainingFrame& frame, const ModelParams& params) {
  FramePlan plan;
  plan.frame = &frame;
  plan.feasible_count = params.na;
  for (Side s : kSides) {
    const int si = side_index(s);
    SidePlan& side = plan.sides[si];
    const SideState& truth = frame.truth.side(s);
    side.has_hand = truth.hand_box.has_value();
    side.has_object = truth.object_box.has_value();
    if (!side.has_hand) {
      side.pairs.emplace_back(0, 0);
    } else if (!side.has_object) {
      for (int g = 1; g <= params.ng; ++g) side.pairs.emplace_back(g, 0);
      side.truth_pair = truth.grasp - 1;
    } else {
      for (int g = 1; g <= params.ng; ++g)
        for (int m = 1; m <= params.no; ++m) side.pairs.emplace_back(g, m);
      side.truth_pair = (truth.grasp - 1) * params.no + (truth.attribute - 1);
      const HandCandidate& hand = frame.evidence.hands[si][0];
      side.spatial_iou = iou(*truth.object_box, apply_offsets(hand.box, hand.offset));
    }
    plan.feasible_count *= static_cast<double>(side.pairs.size());
  }
  return plan;
}

struct FrameStats {
  double log_likelihood = 0;
};

// Shared per-call scratch: exp(alpha - max(alpha)) reused across frames.
struct AlphaExp {
  double shift = 0;
  std::vector<double> values;
};

AlphaExp exp_alpha(const ModelParams& params) {
  AlphaExp out;
  out.shift = params.alpha.empty() ? 0.0 : *std::max_element(params.alpha.begin(), params.alpha.end());
  out.values.resize(params.alpha.size());
  for (size_t i = 0; i < params.alpha.size(); ++i) out.values[i] = std::exp(params.alpha[i] - out.shift);
  return out;
}

struct SideTables {
  std::vector<double> e;       // per pair, unshifted
  std::vector<double> exp_e;   // exp(e - shift)
  double shift = 0;
  std::vector<double> grasp_ev;  // eta_g . phi_g per real grasp (1-based -> index g-1)
  std::vector<double> object_ev;
};

SideTables side_tables(const SidePlan& side, const TrainingFrame& frame, int si,
                       const ModelParams& params) {
  SideTables t;
  if (side.has_hand) {
    const HandCandidate& hand = frame.evidence.hands[si][0];
    t.grasp_ev.resize(params.ng);
    for (int g = 1; g <= params.ng; ++g)
      t.grasp_ev[g - 1] = detail::dot(params.eta_row(g), hand.phi_g.data(), params.ng);
  }
  if (side.has_object) {
    const ObjectCandidate& obj = frame.evidence.objects[si][0];
    t.object_ev.resize(params.no);
    for (int m = 1; m <= params.no; ++m)
      t.object_ev[m - 1] = detail::dot(params.lambda_row(m), obj.phi_o.data(), params.no);
  }
  t.e.resize(side.pairs.size());
  for (size_t i = 0; i < side.pairs.size(); ++i) {
    const auto [g, m] = side.pairs[i];
    double v = 0;
    if (g > 0) v += t.grasp_ev[g - 1];
    if (g > 0 && m > 0) v += params.beta_at(g, m) + t.object_ev[m - 1];
    t.e[i] = v;
  }
  t.shift = *std::max_element(t.e.begin(), t.e.end());
  t.exp_e.resize(t.e.size());
  for (size_t i = 0; i < t.e.size(); ++i) t.exp_e[i] = std::exp(t.e[i] - t.shift);
  return t;
}

// Label-independent part of the potential (detection scores and spatial
// agreement at the clamped boxes). It cancels between potential(truth) and
// log Z but is kept so the reported objective matches the model potential.
double constant_term(const FramePlan& plan, const ModelParams& params) {
  double c = 0;
  for (int si = 0; si < 2; ++si) {
    const SidePlan& side = plan.sides[si];
    if (!side.has_hand) continue;
    c += detail::dot(params.zeta[si].data(), plan.frame->evidence.hands[si][0].phi_h.data(), 3);
    if (side.has_object) c += params.gamma[si] * side.spatial_iou;
  }
  return c;
}

/// One frame's contribution to the objective and (optionally) the gradient.
double frame_objective(const FramePlan& plan, const ModelParams& params, const AlphaExp& aexp,
                       const LearningConfig& cfg, ModelParams* grad) {
  const TrainingFrame& frame = *plan.frame;
  const double smoothing = cfg.alpha_smoothing;
  const int na = params.na, no = params.no;
  const size_t gdim = params.ng + 1, odim = no + 1;

  std::array<SideTables, 2> tables;
  for (int si = 0; si < 2; ++si) tables[si] = side_tables(plan.sides[si], frame, si, params);
  const auto& pl = plan.sides[0].pairs;
  const auto& pr = plan.sides[1].pairs;

  std::vector<double> xiphia(na), exp_xa(na);
  for (int a = 0; a < na; ++a) xiphia[a] = detail::dot(params.xi_row(a), frame.evidence.phi_a.data(), na);
  const double xa_shift = *std::max_element(xiphia.begin(), xiphia.end());
  for (int a = 0; a < na; ++a) exp_xa[a] = std::exp(xiphia[a] - xa_shift);

  std::vector<size_t> l_off(pl.size()), r_off(pr.size());
  for (size_t i = 0; i < pl.size(); ++i)
    l_off[i] = static_cast<size_t>(pl[i].first) * gdim * odim * odim +
               static_cast<size_t>(pl[i].second) * odim;
  for (size_t i = 0; i < pr.size(); ++i)
    r_off[i] = static_cast<size_t>(pr[i].first) * odim * odim + static_cast<size_t>(pr[i].second);

  // Pass 1: partition sum, marginals, and (for smoothing) the raw score sum.
  double S = 0, score_sum = 0;
  std::vector<double> p_action(na, 0.0), q_left(pl.size(), 0.0), q_right(pr.size(), 0.0);
  for (int a = 0; a < na; ++a) {
    const double wa = exp_xa[a];
    const size_t a_base = static_cast<size_t>(a) * gdim * gdim * odim * odim;
    double sum_a = 0;
    for (size_t li = 0; li < pl.size(); ++li) {
      const double wl = wa * tables[0].exp_e[li];
      const double* arow = aexp.values.data() + a_base + l_off[li];
      double sum_l = 0;
      if (smoothing > 0) {
        const double* alpha_row = params.alpha.data() + a_base + l_off[li];
        const double base = xiphia[a] + tables[0].e[li];
        for (size_t ri = 0; ri < pr.size(); ++ri) {
          const double w = tables[1].exp_e[ri] * arow[r_off[ri]];
          sum_l += w;
          q_right[ri] += wl * w;
          score_sum += base + tables[1].e[ri] + alpha_row[r_off[ri]];
        }
      } else {
        for (size_t ri = 0; ri < pr.size(); ++ri) {
          const double w = tables[1].exp_e[ri] * arow[r_off[ri]];
          sum_l += w;
          q_right[ri] += wl * w;
        }
      }
      q_left[li] += wl * sum_l;
      sum_a += tables[0].exp_e[li] * sum_l;
    }
    p_action[a] = wa * sum_a;
    S += p_action[a];
  }
  if (!(S > 0) || !std::isfinite(S))
    fail(ErrorCode::numeric, "log_likelihood: partition sum underflowed or is non-finite");

  const double log_z = std::log(S) + aexp.shift + tables[0].shift + tables[1].shift + xa_shift;
  const int truth_a = frame.truth.action;
  const double truth_score = params.alpha_at(truth_a, frame.truth.sides[0].grasp,
                                             frame.truth.sides[1].grasp, frame.truth.sides[0].attribute,
                                             frame.truth.sides[1].attribute) +
                             tables[0].e[plan.sides[0].truth_pair] +
                             tables[1].e[plan.sides[1].truth_pair] + xiphia[truth_a];
  const double constant = constant_term(plan, params);
  double objective = (constant + truth_score) - (constant + log_z);
  if (smoothing > 0)
    objective += smoothing * ((constant + score_sum / plan.feasible_count) - (constant + log_z));

  if (!grad) return objective;

  const double inv_s = (1.0 + smoothing) / S;
  const double unif = smoothing / plan.feasible_count;

  // Empirical terms (truth plus, when smoothing, the uniform pseudo-frames).
  grad->alpha_at(truth_a, frame.truth.sides[0].grasp, frame.truth.sides[1].grasp,
                 frame.truth.sides[0].attribute, frame.truth.sides[1].attribute) += 1.0;

  // Pass 2: model expectations for alpha (and the uniform pseudo-counts).
  for (int a = 0; a < na; ++a) {
    const double wa = exp_xa[a];
    const size_t a_base = static_cast<size_t>(a) * gdim * gdim * odim * odim;
    for (size_t li = 0; li < pl.size(); ++li) {
      const double wl = wa * tables[0].exp_e[li];
      const size_t base = a_base + l_off[li];
      const double* arow = aexp.values.data() + base;
      double* grow = grad->alpha.data() + base;
      for (size_t ri = 0; ri < pr.size(); ++ri) {
        const size_t off = r_off[ri];
        grow[off] += unif - inv_s * wl * tables[1].exp_e[ri] * arow[off];
      }
    }
  }

  // Per-side marginals feed beta, eta and lambda.
  for (int si = 0; si < 2; ++si) {
    const SidePlan& side = plan.sides[si];
    if (!side.has_hand) continue;
    const auto& pairs = side.pairs;
    const auto& q = si == 0 ? q_left : q_right;
    const HandCandidate& hand = frame.evidence.hands[si][0];
    std::vector<double> p_grasp(params.ng, 0.0);
    const double unif_pair = smoothing / static_cast<double>(pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i) {
      const auto [g, m] = pairs[i];
      const double p = q[i] * inv_s;
      p_grasp[g - 1] += q[i];
      if (m > 0) {
        grad->beta_at(g, m) -= p;
        grad->beta_at(g, m) += unif_pair;
        const double* phi_o = frame.evidence.objects[si][0].phi_o.data();
        double* lrow = grad->lambda_row(m);
        for (int d = 0; d < no; ++d) lrow[d] += (unif_pair - p) * phi_o[d];
      }
    }
    const SideState& truth = frame.truth.sides[si];
    if (truth.attribute > 0) {
      grad->beta_at(truth.grasp, truth.attribute) += 1.0;
      const double* phi_o = frame.evidence.objects[si][0].phi_o.data();
      double* lrow = grad->lambda_row(truth.attribute);
      for (int d = 0; d < no; ++d) lrow[d] += phi_o[d];
    }
    const double per_grasp_unif =
        smoothing * (side.has_object ? static_cast<double>(no) : 1.0) / pairs.size();
    for (int g = 1; g <= params.ng; ++g) {
      double coef = per_grasp_unif - p_grasp[g - 1] * inv_s;
      if (g == truth.grasp) coef += 1.0;
      if (coef == 0) continue;
      double* erow = grad->eta_row(g);
      for (int d = 0; d < params.ng; ++d) erow[d] += coef * hand.phi_g[d];
    }
  }

  const double unif_a = smoothing / na;
  for (int a = 0; a < na; ++a) {
    double coef = unif_a - p_action[a] * inv_s;
    if (a == truth_a) coef += 1.0;
    double* xrow = grad->xi_row(a);
    for (int d = 0; d < na; ++d) xrow[d] += coef * frame.evidence.phi_a[d];
  }
  // zeta and gamma multiply label-independent features, so their data term
  // cancels exactly; only the L2 penalty moves them.
  return objective;
}

void check_frames(const std::vector<TrainingFrame>& frames, const ModelParams& params) {
  if (frames.empty()) fail(ErrorCode::invalid_argument, "learning: no training frames");
  for (const TrainingFrame& f : frames) {
    if (f.evidence.phi_a.size() != static_cast<size_t>(params.na))
      fail(ErrorCode::invalid_argument, "learning: phi_a length does not match params");
    for (int si = 0; si < 2; ++si) {
      const SideState& truth = f.truth.sides[si];
      if (truth.hand_box && f.evidence.hands[si].size() != 1)
        fail(ErrorCode::invalid_argument, "learning: expected exactly one hand record per truth side");
      if (truth.object_box && f.evidence.objects[si].size() != 1)
        fail(ErrorCode::invalid_argument, "learning: expected exactly one object record per truth side");
      if (truth.hand_box &&
          f.evidence.hands[si][0].phi_g.size() != static_cast<size_t>(params.ng))
        fail(ErrorCode::invalid_argument, "learning: phi_g length does not match params");
      if (truth.object_box &&
          f.evidence.objects[si][0].phi_o.size() != static_cast<size_t>(params.no))
        fail(ErrorCode::invalid_argument, "learning: phi_o length does not match params");
    }
  }
}

double l2_penalty(const ModelParams& params, double strength) {
  double sq = 0;
  params.for_each_value([&sq](const double& v) { sq += v * v; });
  return 0.5 * strength * sq;
}

struct Evaluation {
  double objective = 0;
  ModelParams gradient;
};

Evaluation evaluate(const ModelParams& params, const std::vector<TrainingFrame>& frames,
                    const LearningConfig& cfg, bool want_gradient) {
  const AlphaExp aexp = exp_alpha(params);
  Evaluation out;
  if (want_gradient) out.gradient = ModelParams::zeros(params.na, params.ng, params.no);

  const int threads = std::min<int>(cfg.threads, static_cast<int>(frames.size()));
  if (threads <= 1) {
    for (const TrainingFrame& frame : frames) {
      const FramePlan plan = plan_frame(frame, params);
      out.objective += frame_objective(plan, params, aexp, cfg, want_gradient ? &out.gradient : nullptr);
    }
  } else {
    // Static block partition; per-thread partials reduced in thread order so
    // the result is deterministic for a fixed thread count.
    std::vector<double> objectives(threads, 0.0);
    std::vector<ModelParams> grads;
    if (want_gradient)
      for (int t = 0; t < threads; ++t) grads.push_back(ModelParams::zeros(params.na, params.ng, params.no));
    std::vector<std::thread> pool;
    const size_t chunk = (frames.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t]() {
        const size_t lo = t * chunk, hi = std::min(frames.size(), lo + chunk);
        for (size_t i = lo; i < hi; ++i) {
          const FramePlan plan = plan_frame(frames[i], params);
          objectives[t] +=
              frame_objective(plan, params, aexp, cfg, want_gradient ? &grads[t] : nullptr);
        }
      });
    }
    for (auto& th : pool) th.join();
    for (int t = 0; t < threads; ++t) out.objective += objectives[t];
    if (want_gradient) {
      std::vector<double*> dst;
      out.gradient.for_each_value([&dst](double& v) { dst.push_back(&v); });
      for (int t = 0; t < threads; ++t) {
        size_t idx = 0;
        grads[t].for_each_value([&dst, &idx](double& v) { *dst[idx++] += v; });
      }
    }
  }

  out.objective -= l2_penalty(params, cfg.l2_strength);
  if (want_gradient) {
    std::vector<const double*> src;
    params.for_each_value([&src](const double& v) { src.push_back(&v); });
    size_t idx = 0;
    out.gradient.for_each_value([&](double& v) { v -= cfg.l2_strength * *src[idx++]; });
    if (cfg.freeze_alpha) std::fill(out.gradient.alpha.begin(), out.gradient.alpha.end(), 0.0);
    if (cfg.freeze_beta) std::fill(out.gradient.beta.begin(), out.gradient.beta.end(), 0.0);
    if (cfg.freeze_gamma) out.gradient.gamma = {0.0, 0.0};
  }
  if (!std::isfinite(out.objective)) fail(ErrorCode::numeric, "learning: non-finite objective");
  return out;
}

}  // namespace

double log_likelihood(const ModelParams& params, const std::vector<TrainingFrame>& frames,
                      const LearningConfig& config) {
  config.validate();
  check_frames(frames, params);
  return evaluate(params, frames, config, false).objective;
}

ModelParams log_likelihood_gradient(const ModelParams& params,
                                    const std::vector<TrainingFrame>& frames,
                                    const LearningConfig& config, double* objective_out) {
  config.validate();
  check_frames(frames, params);
  Evaluation ev = evaluate(params, frames, config, true);
  if (objective_out) *objective_out = ev.objective;
  return std::move(ev.gradient);
}

FitResult fit(const std::vector<TrainingFrame>& frames, const LabelSpace& space,
              const LearningConfig& config) {
  config.validate();
  ModelParams params = ModelParams::zeros(space);
  check_frames(frames, params);

  FitResult result;
  Evaluation current = evaluate(params, frames, config, true);
  result.trace.push_back(current.objective);
  double step = config.step_size;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    ModelParams candidate = params;
    {
      size_t idx = 0;
      std::vector<const double*> g;
      current.gradient.for_each_value([&g](const double& v) { g.push_back(&v); });
      candidate.for_each_value([&](double& v) { v += step * *g[idx++]; });
    }
    Evaluation next = evaluate(candidate, frames, config, true);
    result.epochs = epoch;
    if (next.objective < current.objective) {
      step /= 2;  // overshoot: retry the epoch from the same point
      if (step < config.step_size * 1e-12) break;
      continue;
    }
    const double change = std::abs(next.objective - current.objective);
    params = std::move(candidate);
    current = std::move(next);
    result.trace.push_back(current.objective);
    if (change <= config.convergence_tol * std::max(1.0, std::abs(current.objective))) break;
  }

  result.params = std::move(params);
  result.objective = current.objective;
  return result;
}

LabelAssignment map_labels(const ModelParams& params, const TrainingFrame& frame) {
  const FramePlan plan = plan_frame(frame, params);
  std::array<SideTables, 2> tables;
  for (int si = 0; si < 2; ++si) tables[si] = side_tables(plan.sides[si], frame, si, params);
  std::vector<double> xiphia(params.na);
  for (int a = 0; a < params.na; ++a)
    xiphia[a] = detail::dot(params.xi_row(a), frame.evidence.phi_a.data(), params.na);

  double best = -std::numeric_limits<double>::infinity();
  LabelAssignment out;
  const auto& pl = plan.sides[0].pairs;
  const auto& pr = plan.sides[1].pairs;
  for (int a = 0; a < params.na; ++a) {
    for (size_t li = 0; li < pl.size(); ++li) {
      for (size_t ri = 0; ri < pr.size(); ++ri) {
        const double v = params.alpha_at(a, pl[li].first, pr[ri].first, pl[li].second, pr[ri].second) +
                         tables[0].e[li] + tables[1].e[ri] + xiphia[a];
        if (v > best) {
          best = v;
          out.action = a;
          out.grasp = {pl[li].first, pr[ri].first};
          out.attribute = {pl[li].second, pr[ri].second};
        }
      }
    }
  }
  return out;
}

ContextMatrix marginalize_context(const ModelParams& params, ContextAxis axis, MarginalMode mode) {
  const int gdim = params.ng + 1, odim = params.no + 1;
  int rows = 0, cols = 0;
  switch (axis) {
    case ContextAxis::action_grasp: rows = params.na, cols = gdim; break;
    case ContextAxis::action_attribute: rows = params.na, cols = odim; break;
    case ContextAxis::grasp_attribute: rows = gdim, cols = odim; break;
  }
  // Collect, per cell, the tensor entries where the pair appears on the left
  // side and on the right side, then combine the two placements by mean
  // (linear) or log-sum-exp minus log 2 (log domain).
  ContextMatrix out;
  out.rows = rows;
  out.cols = cols;
  out.values.assign(static_cast<size_t>(rows) * cols, 0.0);
  std::vector<double> max_v(out.values.size(), -std::numeric_limits<double>::infinity());
  std::vector<double> acc(out.values.size(), 0.0);

  auto cell_of = [&](int a, int gl, int gr, int ol, int orr, bool left) -> size_t {
    switch (axis) {
      case ContextAxis::action_grasp:
        return static_cast<size_t>(a) * cols + (left ? gl : gr);
      case ContextAxis::action_attribute:
        return static_cast<size_t>(a) * cols + (left ? ol : orr);
      case ContextAxis::grasp_attribute:
        return static_cast<size_t>(left ? gl : gr) * cols + (left ? ol : orr);
    }
    return 0;
  };

  if (mode == MarginalMode::log_sum_exp) {
    // two passes: shifted exponential sums per cell
    for (int pass = 0; pass < 2; ++pass) {
      size_t idx = 0;
      for (int a = 0; a < params.na; ++a)
        for (int gl = 0; gl < gdim; ++gl)
          for (int gr = 0; gr < gdim; ++gr)
            for (int ol = 0; ol < odim; ++ol)
              for (int orr = 0; orr < odim; ++orr, ++idx) {
                const double v = params.alpha[idx];
                for (bool left : {true, false}) {
                  const size_t cell = cell_of(a, gl, gr, ol, orr, left);
                  if (pass == 0)
                    max_v[cell] = std::max(max_v[cell], v);
                  else
                    acc[cell] += std::exp(v - max_v[cell]);
                }
              }
    }
    for (size_t i = 0; i < out.values.size(); ++i)
      out.values[i] = max_v[i] + std::log(acc[i]) - std::log(2.0);
  } else {
    size_t idx = 0;
    for (int a = 0; a < params.na; ++a)
      for (int gl = 0; gl < gdim; ++gl)
        for (int gr = 0; gr < gdim; ++gr)
          for (int ol = 0; ol < odim; ++ol)
            for (int orr = 0; orr < odim; ++orr, ++idx) {
              const double v = params.alpha[idx];
              acc[cell_of(a, gl, gr, ol, orr, true)] += v;
              acc[cell_of(a, gl, gr, ol, orr, false)] += v;
            }
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = acc[i] / 2.0;
  }
  return out;
}

std::vector<Combination> most_probable_combinations(const ModelParams& params, int action, int top_k) {
  if (action < 0 || action >= params.na)
    fail(ErrorCode::invalid_argument, "most_probable_combinations: action index out of range");
  if (top_k < 1) fail(ErrorCode::invalid_argument, "most_probable_combinations: top_k must be >= 1");
  const int gdim = params.ng + 1, odim = params.no + 1;
  std::vector<Combination> all;
  all.reserve(static_cast<size_t>(gdim) * gdim * odim * odim);
  for (int gl = 0; gl < gdim; ++gl)
    for (int gr = 0; gr < gdim; ++gr)
      for (int ol = 0; ol < odim; ++ol)
        for (int orr = 0; orr < odim; ++orr)
          all.push_back({gl, gr, ol, orr, params.alpha_at(action, gl, gr, ol, orr)});
  std::stable_sort(all.begin(), all.end(),
                   [](const Combination& a, const Combination& b) { return a.value > b.value; });
  if (static_cast<int>(all.size()) > top_k) all.resize(top_k);
  return all;
}

}  // namespace homctx
