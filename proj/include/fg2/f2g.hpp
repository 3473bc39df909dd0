#pragma once

// Phase-II training: the fMRI-conditioned denoiser learns to agree with the
// text-conditioned one on pseudo-labeled latents (decoded words -> pseudo
// gestures), while the text model keeps its supervised objective. Generation
// from voxel records.

#include <optional>
#include <string>
#include <vector>

#include "fg2/f2t.hpp"
#include "fg2/t2g.hpp"

namespace fg2 {

enum class WeightMode { paper_sqrt, exact };
enum class PseudoMode { renoise, chain_intermediate };

struct DualConfig {
    double lambda = 0.01;
    WeightMode weight_mode = WeightMode::paper_sqrt;
    PseudoMode pseudo_mode = PseudoMode::renoise;
    bool freeze_theta_x = false;
    size_t steps = 400;
    BeamConfig beam;
    TrainConfig base; // clip geometry, schedule, optimizer, net width
};

struct PseudoPair {
    std::vector<int> fwords; // frame-aligned decoded words, length clip_len
    MatF cond_x;             // clip_len x D_x (embedded decoded words)
    MatF cond_f;             // clip_len x D_f (replicated voxel rows)
    MatF x0pp;               // clip_len x 98, the cached pseudo gesture
    std::vector<MatF> chain; // reverse-chain states (chain-intermediate mode)
    uint64_t seed = 0;       // regenerating with this seed reproduces x0pp
};

// Decode the record, replicate words and voxels to the frame grid, run the
// text-conditioned reverse chain once. Returns nullopt when the decode is
// empty or yields fewer frames than a clip.
std::optional<PseudoPair> make_pseudo(const T2GModel& t2g, const DecoderBundle& dec,
                                      const FmriRec& rec, double fps, const DualConfig& cfg,
                                      uint64_t seed, bool keep_chain);

struct DualLossResult {
    double total = 0, paired = 0, align = 0; // align includes lambda * w(t)
};

// paired eps-MSE through the text model plus the weighted eps-space
// disagreement between the two models on the re-noised pseudo gesture.
// Gradients accumulate into both sets (the text model receives both terms).
// lambda = 0 skips the alignment branch entirely.
DualLossResult dual_loss(const Denoiser<float>& net_x, const Denoiser<float>& net_f,
                         const Schedule& sched, std::span<const TrainItem<float>> paired,
                         const PseudoPair* pseudo, int align_t, const MatF* eps_prime,
                         const DualConfig& cfg, ParamSet<float>& grads_x,
                         ParamSet<float>& grads_f);

struct F2GModel {
    DenoiserConfig cfg_x, cfg_f;
    ParamSet<float> theta_x, theta_f;
    MatF cond_table;
    int sched_T = 50;
    double beta_lo = 1e-4, beta_hi = 0.02;
    double tr_seconds = 2.0, fps = 15.0;
    std::vector<double> paired_curve, align_curve;
    size_t skipped_pseudo = 0;

    Schedule schedule() const { return Schedule::linear(sched_T, beta_lo, beta_hi); }
};

// Named streams: "batch"/"t"/"eps" drive the paired branch exactly as in
// phase I; "init.f" initializes the voxel-conditioned net; "align.pick"/
// "align.t"/"align.eps" drive the alignment branch; pseudo generation seeds
// derive from "pseudo.r<i>". With lambda = 0 only the phase-I streams are
// consumed, so the theta_x trajectory is bit-identical to train_t2g and
// theta_f keeps its initialization.
F2GModel train_f2g(const T2GModel& t2g, const DecoderBundle& dec, const LoadedData& data,
                   const DualConfig& cfg, uint64_t seed);

// sample_loop under an arbitrary condition sequence (cond.rows frames).
MatF generate_with_condition(const DenoiserConfig& net_cfg, const ParamSet<float>& params,
                             const Schedule& sched, const MatF& cond, uint64_t seed);

// Replicate TR rows to the frame grid, take the first `frames` rows, condition
// the voxel-side net on them.
MatF generate_from_fmri(const F2GModel& m, const MatD& voxels, size_t frames, uint64_t seed);

void save_f2g(const F2GModel& m, const std::string& path, const std::string& config_echo);
F2GModel load_f2g(const std::string& path);

} // namespace fg2
