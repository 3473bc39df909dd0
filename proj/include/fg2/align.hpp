#pragma once

// Temporal alignment of word tracks and TR-resolution fMRI onto the gesture
// frame grid, plus fixed-stride clip slicing.

#include <cmath>
#include <cstdint>
#include <vector>

#include "fg2/mat.hpp"

namespace fg2 {

// Reserved id for frames with no word (silent TRs).
constexpr int kSilenceWord = -1;

struct ReplicateResult {
    std::vector<int> frames;  // length N word ids
    size_t dropped = 0;       // words that received no frame (W > N overflow
                              // or zero-length runs when W does not divide N)
};

// Spread W words over N frames: each word repeated ceil(N/W) times in order,
// the last occupied run truncated so the total is exactly N. W = 0 yields N
// silence tokens.
ReplicateResult replicate_words(const std::vector<int>& words_in_tr, size_t frames_per_tr);

// Repeat each TR row ceil(fps * tr_seconds) times.
MatF replicate_fmri(const MatF& voxels, double tr_seconds, double fps);

struct ClipView {
    size_t offset = 0, length = 0;
};

// Windows at offsets 0, stride, 2*stride, ...; the trailing remainder shorter
// than clip_len is dropped.
std::vector<ClipView> clip_windows(size_t total_frames, size_t clip_len, size_t stride);

inline size_t frames_per_tr(double tr_seconds, double fps) {
    require(fps > 0 && tr_seconds > 0, "frames_per_tr: fps and TR must be positive");
    return size_t(std::ceil(fps * tr_seconds));
}

} // namespace fg2
