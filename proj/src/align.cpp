#include "fg2/align.hpp"

namespace fg2 {

ReplicateResult replicate_words(const std::vector<int>& words_in_tr, size_t N) {
    require(N >= 1, "replicate_words: frames_per_tr must be >= 1");
    ReplicateResult r;
    r.frames.reserve(N);
    const size_t W = words_in_tr.size();
    if (W == 0) {
        r.frames.assign(N, kSilenceWord);
        return r;
    }
    const size_t eta = (N + W - 1) / W; // ceil(N / W)
    for (size_t i = 0; i < W; ++i) {
        const size_t remaining = N - r.frames.size();
        const size_t run = std::min(eta, remaining);
        if (run == 0) ++r.dropped; // word got no frame (W > N, or ceil over-allocation)
        for (size_t k = 0; k < run; ++k) r.frames.push_back(words_in_tr[i]);
    }
    // eta * W >= N always, so the loop can only stop short if W overflowed N;
    // by construction the track is exactly N long here.
    require(r.frames.size() == N, "replicate_words: internal length violation");
    return r;
}

MatF replicate_fmri(const MatF& voxels, double tr_seconds, double fps) {
    const size_t n = frames_per_tr(tr_seconds, fps);
    MatF out(voxels.rows * n, voxels.cols);
    for (size_t r = 0; r < voxels.rows; ++r)
        for (size_t k = 0; k < n; ++k)
            std::copy(voxels.row(r), voxels.row(r) + voxels.cols, out.row(r * n + k));
    return out;
}

std::vector<ClipView> clip_windows(size_t total_frames, size_t clip_len, size_t stride) {
    require(clip_len >= 1 && stride >= 1, "clip_windows: clip_len and stride must be >= 1");
    require(total_frames >= clip_len, "clip_windows: track shorter than one clip");
    std::vector<ClipView> out;
    for (size_t off = 0; off + clip_len <= total_frames; off += stride)
        out.push_back({off, clip_len});
    return out;
}

} // namespace fg2
