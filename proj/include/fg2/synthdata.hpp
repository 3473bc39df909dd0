#pragma once

// Seeded synthetic world: a Markov word source, per-word latent codes, a
// linear gesture readout with a periodic beat, and voxel responses generated
// THROUGH the same Lanczos/delay pipeline the decoder fits. With zero noise
// every fitted component of the system has an exact planted solution, so the
// end-to-end claims become testable closed loops.

#include <string>
#include <vector>

#include "fg2/container.hpp"
#include "fg2/mat.hpp"

namespace fg2 {

enum class RateMode {
    constant, // one word per TR
    word,     // 1 or 2 words per TR, decided by the first word's rate flag
};

struct WorldSpec {
    uint64_t seed = 1;
    size_t vocab = 64;
    size_t d_z = 8;   // latent code width
    size_t d_e = 16;  // stimulus embedding width (decoder side)
    size_t d_x = 32;  // text condition width (gesture side)
    size_t d_f = 64;  // voxels per record
    size_t x_dim = 98;
    double fps = 15.0;
    double tr_seconds = 2.0;
    double sigma_g = 0.01; // gesture noise
    double sigma_f = 0.0;  // voxel noise
    double beat_amp = 0.05;
    size_t beat_period = 16; // frames
    size_t successors = 4;   // nonzero entries per transition row
    size_t start_words = 4;  // chains start uniformly in [0, start_words)
    RateMode rate_mode = RateMode::constant;
    size_t pad_tr = 8; // trailing silent TRs so delayed responses are observed
};

struct World {
    WorldSpec spec;
    MatD stim_table; // vocab x d_e; col 0 = 0.5 presence mass, col 1 = +-0.5 rate flag
    MatF cond_table; // vocab x d_x
    MatD latent;     // vocab x d_z
    MatD readout;    // d_z x x_dim
    std::vector<double> base_pose;    // x_dim: the resting skeleton
    std::vector<double> beat_pattern; // x_dim: oscillation direction
    MatD mixing;     // (4 * d_e) x d_f, the planted encoding weights
    MatD trans_a;    // gesture-domain transition rows (sum to 1)
    MatD trans_b;    // decoder-domain transition rows (sum to 1)

    // Words per TR when `word` starts the TR (1 or 2).
    int rate_of(int word) const;

    static World make(const WorldSpec& spec);
};

struct WordChain {
    std::vector<int> words;
    std::vector<double> onsets; // seconds; word j of TR i at (i + (j+0.5)/m) * TR
    std::vector<double> counts; // words per TR, length n_tr (trailing zeros = padding)
    size_t n_word_tr = 0;       // TRs that contain words
    size_t n_tr = 0;            // n_word_tr + pad_tr
};

WordChain sample_word_chain(const World& w, const MatD& trans, size_t n_words, Rng rng);

struct GestureTrack {
    MatF frames;             // (n_word_tr * frames_per_tr) x x_dim
    std::vector<int> fwords; // frame-aligned word ids
};

// frame = base pose + readout(latent of the frame's word) + beat + noise.
GestureTrack render_gestures(const World& w, const WordChain& chain, Rng rng);

// voxels = delayed Lanczos features of the word stream times the planted
// mixing matrix, plus sigma_f noise. Rows: chain.n_tr.
MatD render_fmri(const World& w, const WordChain& chain, Rng rng);

struct DatasetSizes {
    size_t t2g_records = 6, t2g_words = 48;
    size_t f2t_records = 24, f2t_words = 16;
    size_t unpaired_records = 8, unpaired_words = 10;
    size_t heldout_records = 20, heldout_words = 10;
    size_t prior_sequences = 1500, prior_words = 80;
};

// The full on-disk dataset as an in-memory container: world tables, the
// paired gesture split (trans_a), the paired decoder split + held-out split
// (trans_b), the unpaired voxel pool (trans_b; truth words stored for
// evaluation only), and the prior corpus.
Container build_datasets(const WorldSpec& spec, const DatasetSizes& sizes);

void make_datasets(const WorldSpec& spec, const DatasetSizes& sizes, const std::string& dir,
                   const KvMap& extra_manifest = {});

// Parsed view of a dataset container with shape cross-checks.
struct FmriRec {
    MatD voxels;
    std::vector<int> words;
    std::vector<double> onsets;
    std::vector<double> counts; // empty for the unpaired pool
};

struct GestureRec {
    MatF frames;
    std::vector<int> fwords;
    std::vector<int> words;
    std::vector<double> onsets;
};

struct LoadedData {
    KvMap manifest;
    MatD stim_table;
    MatF cond_table;
    std::vector<GestureRec> t2g;
    std::vector<FmriRec> f2t;
    std::vector<FmriRec> unpaired;
    std::vector<FmriRec> heldout;
    std::vector<std::vector<int>> prior_corpus;
    size_t vocab = 0;
    double fps = 15.0, tr_seconds = 2.0;
};

LoadedData load_datasets(const Container& c);

// Fixed 49-keypoint skeleton: head, two 3-joint arms, two 21-point hands.
// Bone list serialized as "a-b,a-b,..." — stored in dataset manifests and
// consumed by the renderer.
std::string skeleton_bones();

} // namespace fg2
