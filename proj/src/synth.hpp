#ifndef HOMCTX_SYNTH_HPP
#define HOMCTX_SYNTH_HPP

#include <cstdint>
#include <filesystem>

#include "evidence_io.hpp"
#include "learning.hpp"
#include "rng.hpp"

namespace homctx {

/// Desk-scale stand-in for an annotated video dataset. Ground-truth labels
/// are Gibbs-sampled from a random sharp context model, evidence vectors are
/// one-hot truths plus noise, and boxes are truths plus jitter.
struct SynthConfig {
  int num_actions = 6;
  int num_grasps = 8;
  int num_attributes = 6;
  int num_frames = 1000;
  double context_sharpness = 5.0;  // peakedness of the generating alpha/beta
  double evidence_noise = 0.1;     // score perturbation scale
  double box_noise = 4.0;          // pixels
  uint64_t seed = 1;
  int hand_candidates = 5;  // per present side, first one at the truth box
  int object_records = 5;   // per present side, first one at the truth box
  double train_fraction = 0.8;
  int gibbs_burn_in = 500;  // sweeps per frame; each frame runs its own chain

  void validate() const;
};

struct SynthOutput {
  LabelSpace labels;
  std::vector<FrameRecord> frames;
  ModelParams generating_params;
  std::set<std::string> train_ids, test_ids;
};

SynthOutput synth_generate(const SynthConfig& config);

/// Joint label configuration used while sampling ground truth: an action and
/// per-side (grasp, attribute) pairs, (0,0) meaning an absent side.
struct LabelState {
  int action = 0;
  std::array<std::pair<int, int>, 2> sides{{{0, 0}, {0, 0}}};
};

/// Gibbs sampler over exp(functional + physical context), the label-only part
/// of the model. One sweep resamples the action and both side pairs.
class ContextLabelSampler {
 public:
  ContextLabelSampler(const ModelParams& params, Rng& rng);
  void sweep(LabelState& state);

 private:
  int sample(std::vector<double>& logits);
  void resample_action(LabelState& state);
  void resample_side(LabelState& state, int si);

  const ModelParams& params_;
  Rng& rng_;
  std::vector<std::pair<int, int>> pairs_;
};

/// labels.json, frames.jsonl, manifest.json and generating_params.json under
/// out_dir; byte-identical for identical configs.
void write_synth_dataset(const SynthOutput& output, const std::filesystem::path& out_dir);

}  // namespace homctx

#endif
