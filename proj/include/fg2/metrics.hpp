#pragma once

// Evaluation measures over gesture clips: MAE, APE, PCK, FGD, beat
// consistency, diversity, plus a scalar Pearson correlation shared with the
// encoding analysis. Clips are N x 98 float matrices (49 keypoints x 2);
// keypoint i occupies columns 2i, 2i+1.

#include <span>
#include <vector>

#include "fg2/mat.hpp"

namespace fg2 {

using ClipSet = std::vector<MatF>;

struct MetricsConfig {
    bool pck_absolute = false;  // false: threshold = pck_rel * shoulder distance
    double pck_rel = 0.2;
    double pck_abs = 0.2;       // also the fallback when shoulders degenerate
    size_t shoulder_a = 1, shoulder_b = 4; // skeleton indices of the shoulders
    double bc_sigma_frames = 1.5;          // ~0.1 s at 15 fps
    size_t fgd_pca_dims = 0;               // 0 = raw flattened frames
};

double metric_mae(const ClipSet& a, const ClipSet& b);
double metric_ape(const ClipSet& a, const ClipSet& b);
// Asymmetric: `pred` is scored against `ref`, which supplies the shoulder
// distances for the relative threshold.
double metric_pck(const ClipSet& pred, const ClipSet& ref, const MetricsConfig& cfg = {});
// Frechet distance between Gaussian fits of per-frame feature vectors;
// `degenerate` is set when a covariance stays singular after regularization.
double metric_fgd(const ClipSet& a, const ClipSet& b, const MetricsConfig& cfg = {},
                  bool* degenerate = nullptr);
// Kinematic beats = strict local minima of mean keypoint speed below the
// median speed; BC = mean over beats of exp(-d^2 / 2 sigma^2) with d the
// distance (frames) to the nearest word onset.
double beat_consistency(const MatF& clip, const std::vector<size_t>& onset_frames,
                        double sigma_frames = 1.5, bool* no_beats = nullptr);
double metric_diversity(const ClipSet& clips);

double pearson(std::span<const double> a, std::span<const double> b, bool* undefined = nullptr);

struct MetricsReport {
    double mae = 0, ape = 0, pck = 0, fgd = 0, bc = 0, diversity = 0;
    bool fgd_degenerate = false;
    bool bc_no_beats = false;
    bool has_bc = false; // BC requires onsets, which not every caller has
    size_t n_pred = 0, n_ref = 0;
    MetricsConfig config;
};

MetricsReport evaluate_clips(const ClipSet& pred, const ClipSet& ref,
                             const std::vector<std::vector<size_t>>* onsets_per_pred_clip,
                             const MetricsConfig& cfg = {});

} // namespace fg2
