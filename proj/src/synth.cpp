#include "synth.hpp"

#include <algorithm>
#include <cmath>

#include "rng.hpp"

namespace homctx {

void SynthConfig::validate() const {
  if (num_actions < 1 || num_grasps < 1 || num_attributes < 1)
    fail(ErrorCode::invalid_argument, "synth: label-space sizes must be >= 1");
  if (num_frames < 1) fail(ErrorCode::invalid_argument, "synth: num_frames must be >= 1");
  if (!(context_sharpness > 0)) fail(ErrorCode::invalid_argument, "synth: context_sharpness must be > 0");
  if (!(evidence_noise >= 0)) fail(ErrorCode::invalid_argument, "synth: evidence_noise must be >= 0");
  if (!(box_noise >= 0)) fail(ErrorCode::invalid_argument, "synth: box_noise must be >= 0");
  if (hand_candidates < 1 || object_records < 1)
    fail(ErrorCode::invalid_argument, "synth: candidate counts must be >= 1");
  if (!(train_fraction >= 0 && train_fraction <= 1))
    fail(ErrorCode::invalid_argument, "synth: train_fraction must be in [0,1]");
  if (gibbs_burn_in < 1) fail(ErrorCode::invalid_argument, "synth: bad Gibbs schedule");
}

namespace {

LabelSpace synthetic_space(int na, int ng, int no) {
  auto make = [](const char* prefix, int n, int from) {
    std::vector<LabelEntry> out;
    char buf[32];
    for (int i = from; i < n + from; ++i) {
      std::snprintf(buf, sizeof(buf), "%s%02d", prefix, i);
      std::string id = buf;
      std::snprintf(buf, sizeof(buf), "%s-%02d", prefix, i);
      out.push_back({id, buf});
    }
    return out;
  };
  std::vector<LabelEntry> grasps{{"g00", "no hand"}};
  for (auto& e : make("g", ng, 1)) grasps.push_back(e);
  std::vector<LabelEntry> attrs{{"o00", "no object"}};
  for (auto& e : make("o", no, 1)) attrs.push_back(e);
  return LabelSpace(make("a", na, 1), std::move(grasps), std::move(attrs));
}

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

}  // namespace

ContextLabelSampler::ContextLabelSampler(const ModelParams& params, Rng& rng)
    : params_(params), rng_(rng) {
  pairs_.emplace_back(0, 0);
  for (int g = 1; g <= params_.ng; ++g)
    for (int m = 1; m <= params_.no; ++m) pairs_.emplace_back(g, m);
}

void ContextLabelSampler::sweep(LabelState& state) {
  resample_action(state);
  resample_side(state, 0);
  resample_side(state, 1);
}

void ContextLabelSampler::resample_action(LabelState& state) {
  std::vector<double> logits(params_.na);
  for (int a = 0; a < params_.na; ++a)
    logits[a] = params_.alpha_at(a, state.sides[0].first, state.sides[1].first,
                                 state.sides[0].second, state.sides[1].second);
  state.action = sample(logits);
}

void ContextLabelSampler::resample_side(LabelState& state, int si) {
  std::vector<double> logits(pairs_.size());
  for (size_t i = 0; i < pairs_.size(); ++i) {
    const auto [g, m] = pairs_[i];
    auto sides = state.sides;
    sides[si] = {g, m};
    double v = params_.alpha_at(state.action, sides[0].first, sides[1].first, sides[0].second,
                                sides[1].second);
    if (g > 0 && m > 0) v += params_.beta_at(g, m);
    logits[i] = v;
  }
  state.sides[si] = pairs_[sample(logits)];
}

int ContextLabelSampler::sample(std::vector<double>& logits) {
  const double shift = *std::max_element(logits.begin(), logits.end());
  for (double& v : logits) v = std::exp(v - shift);
  return rng_.categorical(logits);
}

SynthOutput synth_generate(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);

  SynthOutput out{synthetic_space(config.num_actions, config.num_grasps, config.num_attributes),
                  {},
                  ModelParams::zeros(config.num_actions, config.num_grasps, config.num_attributes),
                  {},
                  {}};
  ModelParams& gen = out.generating_params;
  const int na = gen.na, ng = gen.ng, no = gen.no;

  // Context blocks carry the sharpness; beta gets the larger share so pairwise
  // grasp-attribute structure dominates the sampled co-occurrences.
  for (double& v : gen.alpha) v = 0.22 * config.context_sharpness * rng.normal();
  for (double& v : gen.beta) v = 0.38 * config.context_sharpness * rng.normal();
  gen.gamma = {0.5, 0.5};
  gen.zeta = {{{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
  for (int g = 1; g <= ng; ++g) gen.eta_row(g)[g - 1] = 1.0;
  for (int m = 1; m <= no; ++m) gen.lambda_row(m)[m - 1] = 1.0;
  for (int a = 0; a < na; ++a) gen.xi_row(a)[a] = 1.0;

  ContextLabelSampler sampler(gen, rng);

  char idbuf[32];
  for (int f = 0; f < config.num_frames; ++f) {
    // independent chain per frame: uniform feasible start, full burn-in
    LabelState labels;
    labels.action = rng.uniform_int(0, na - 1);
    for (int si = 0; si < 2; ++si) {
      if (rng.uniform() < 1.0 / (1.0 + ng * no)) continue;
      labels.sides[si] = {rng.uniform_int(1, ng), rng.uniform_int(1, no)};
    }
    for (int i = 0; i < config.gibbs_burn_in; ++i) sampler.sweep(labels);

    FrameRecord frame;
    std::snprintf(idbuf, sizeof(idbuf), "f%06d", f);
    frame.frame_id = idbuf;

    SceneState truth;
    truth.action = labels.action;

    frame.evidence.phi_a.resize(na);
    for (int a = 0; a < na; ++a)
      frame.evidence.phi_a[a] = (a == truth.action ? 1.0 : 0.0) + config.evidence_noise * rng.normal();

    for (Side s : kSides) {
      const int si = side_index(s);
      const auto [g, m] = labels.sides[si];
      if (g == 0) continue;
      SideState& ts = truth.side(s);
      ts.grasp = g;
      ts.attribute = m;

      const BoundingBox hand_box{rng.uniform(140, 500), rng.uniform(140, 340), rng.uniform(60, 160),
                                 rng.uniform(60, 160)};
      const OffsetVector offset{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0.5, 1.4),
                                rng.uniform(0.5, 1.4)};
      const BoundingBox object_box = apply_offsets(hand_box, offset);
      ts.hand_box = hand_box;
      ts.object_box = object_box;

      // Candidate crops of the same region score alike: one shared deviation
      // per side plus a small per-candidate jitter, mimicking a classifier
      // evaluated on overlapping boxes.
      std::vector<double> g_shared(ng), o_shared(no);
      for (double& v : g_shared) v = config.evidence_noise * rng.normal();
      for (double& v : o_shared) v = config.evidence_noise * rng.normal();
      const double jitter = 0.25 * config.evidence_noise;

      for (int k = 0; k < config.hand_candidates; ++k) {
        HandCandidate cand;
        cand.box = hand_box;
        if (k > 0) {
          cand.box.cx += config.box_noise * rng.normal();
          cand.box.cy += config.box_noise * rng.normal();
          cand.box.w = std::max(8.0, cand.box.w + config.box_noise * rng.normal());
          cand.box.h = std::max(8.0, cand.box.h + config.box_noise * rng.normal());
        }
        const double own = clamp(0.96 - 0.15 * config.evidence_noise * std::abs(rng.normal()), 0.5, 1.0);
        const double rest = 1.0 - own;
        cand.phi_h[0] = rest * 0.6;
        cand.phi_h[1 + si] = own;
        cand.phi_h[2 - si] = rest * 0.4;
        cand.phi_g.resize(ng);
        for (int i = 0; i < ng; ++i)
          cand.phi_g[i] = (i == g - 1 ? 1.0 : 0.0) + g_shared[i] + jitter * rng.normal();
        cand.offset = offset;
        const double off_jitter = config.box_noise / hand_box.w;
        cand.offset.nx += off_jitter * rng.normal();
        cand.offset.ny += off_jitter * rng.normal();
        cand.offset.nw = std::max(0.05, cand.offset.nw + off_jitter * rng.normal());
        cand.offset.nh = std::max(0.05, cand.offset.nh + off_jitter * rng.normal());
        frame.evidence.hands[si].push_back(std::move(cand));
      }

      for (int r = 0; r < config.object_records; ++r) {
        ObjectCandidate rec;
        rec.box = object_box;
        if (r > 0) {
          rec.box.cx += config.box_noise * rng.normal();
          rec.box.cy += config.box_noise * rng.normal();
          rec.box.w = std::max(8.0, rec.box.w + config.box_noise * rng.normal());
          rec.box.h = std::max(8.0, rec.box.h + config.box_noise * rng.normal());
        }
        rec.phi_o.resize(no);
        for (int i = 0; i < no; ++i)
          rec.phi_o[i] = (i == m - 1 ? 1.0 : 0.0) + o_shared[i] + jitter * rng.normal();
        frame.evidence.objects[si].push_back(std::move(rec));
      }
    }

    frame.truth = truth;
    out.frames.push_back(std::move(frame));
  }

  const int train_count =
      static_cast<int>(std::lround(config.train_fraction * config.num_frames));
  for (int f = 0; f < config.num_frames; ++f) {
    if (f < train_count)
      out.train_ids.insert(out.frames[f].frame_id);
    else
      out.test_ids.insert(out.frames[f].frame_id);
  }
  return out;
}

void write_synth_dataset(const SynthOutput& output, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  output.labels.save(out_dir / "labels.json");
  write_frames(output.frames, output.labels, out_dir / "frames.jsonl");
  write_params(output.generating_params, output.labels, out_dir / "generating_params.json");
  DatasetManifest manifest;
  manifest.labels_path = "labels.json";
  manifest.frame_files = {"frames.jsonl"};
  manifest.train_ids = output.train_ids;
  manifest.test_ids = output.test_ids;
  write_manifest(manifest, out_dir / "manifest.json");
}

}  // namespace homctx
