#pragma once

// Phase-I supervised training of the text-conditioned gesture denoiser and
// generation from frame-aligned word ids.

#include <string>
#include <vector>

#include "fg2/align.hpp"
#include "fg2/denoiser.hpp"
#include "fg2/diffusion.hpp"
#include "fg2/synthdata.hpp"

namespace fg2 {

// Row i = embedding of the word at frame i. The reserved silence id maps to
// a zero row (silent frames carry no text condition); any other id outside
// the table is an error.
MatF embed_frame_text(const std::vector<int>& fwords, const MatF& table);

struct TrainConfig {
    size_t steps = 600;
    size_t batch = 32;
    size_t clip_len = 64;
    size_t clip_stride = 16;
    int sched_T = 50;
    double beta_lo = 1e-4, beta_hi = 0.02;
    DenoiserConfig net;   // net.cond_dim is overwritten from the data tables
    AdamConfig adam;
};

// Gesture clips with their per-frame condition rows, sliced from the paired
// records with the configured window/stride. Shared by both training phases
// so their batch streams index the same clip list.
struct ClipData {
    std::vector<MatF> x0;   // clip_len x 98
    std::vector<MatF> cond; // clip_len x D_c
};

ClipData build_training_clips(const LoadedData& data, const TrainConfig& cfg);

struct T2GModel {
    DenoiserConfig net_cfg;
    ParamSet<float> theta_x;
    MatF cond_table;
    int sched_T = 50;
    double beta_lo = 1e-4, beta_hi = 0.02;
    std::vector<double> loss_curve;

    Schedule schedule() const { return Schedule::linear(sched_T, beta_lo, beta_hi); }
};

// Named RNG streams "init.x" / "batch" / "t" / "eps" derived from the seed.
// When `init` is given the optimizer starts fresh from those parameters and
// the "init.x" stream is never touched — a continuation run consumes exactly
// the same randomness as the matching phase-II run.
T2GModel train_t2g(const LoadedData& data, const TrainConfig& cfg, uint64_t seed,
                   const ParamSet<float>* init = nullptr);

MatF generate_from_text(const T2GModel& m, const std::vector<int>& fwords, uint64_t seed);

void save_t2g(const T2GModel& m, const std::string& path, const std::string& config_echo);
T2GModel load_t2g(const std::string& path);

} // namespace fg2
