#pragma once

// fMRI-to-text decoding stack: Lanczos resampling of word-embedding impulses
// onto the TR grid, delayed-stimulus construction, cross-validated ridge
// regression (the voxel encoding model and its Gaussian likelihood), a
// word-rate model, a pluggable language prior, and beam search with nucleus
// sampling. All arithmetic here is double precision.

#include <memory>
#include <span>
#include <vector>

#include "fg2/mat.hpp"

namespace fg2 {

// Lanczos window, a = lobes, x in output-sample units: sinc(x) sinc(x/a) on
// |x| < a, else 0.
double lanczos_kernel(double x, int lobes = 3);

// Resample word-embedding impulses (one row of `embs` per onset, seconds)
// onto an n_tr-point TR grid (sample i at time i * tr_seconds). Kernel
// weights at an output sample are renormalized to sum 1 when their sum
// exceeds 0.5 (partition-of-unity for dense coverage, but no blow-up where
// the kernel support is effectively empty).
MatD lanczos_to_tr(const std::vector<double>& onsets, const MatD& embs, size_t n_tr,
                   double tr_seconds, int lobes = 3);

// Column block d = features shifted down by delays[d] rows, zero-padded at
// the top. Output width = delays.size() * D_e.
MatD build_delayed_stimulus(const MatD& features, const std::vector<int>& delays = {1, 2, 3, 4});

// Mirror image for the word-rate direction: block d = rows shifted UP by
// delays[d] (row i sees voxels at i + delay), zero-padded at the bottom.
// Voxels lag the words that caused them, so word counts are predicted from
// later voxel rows.
MatD build_future_stimulus(const MatD& features, const std::vector<int>& delays = {1, 2, 3, 4});

struct RidgeModel {
    MatD weights;               // p x q
    std::vector<double> x_mean; // column means applied before the weights
    std::vector<double> y_mean;
    double alpha = 0.0;
};

// Cross-validated ridge: contiguous k-fold split, mean held-out R^2 picks
// alpha from the grid (first maximum wins), refit on everything at the
// winner. alpha = 0 is solved by symmetric pseudoinverse (centering makes
// X^T X singular), alpha > 0 by Cholesky. A single-element grid skips CV.
RidgeModel fit_ridge(const MatD& X, const MatD& Y, const std::vector<double>& alpha_grid,
                     size_t folds);

MatD ridge_predict(const RidgeModel& m, const MatD& X);

struct EncodingModel {
    RidgeModel ridge;           // delayed stimulus -> voxels
    std::vector<double> sigma2; // per-voxel residual variance, floored at 1e-6
    std::vector<int> delays{1, 2, 3, 4};
    int lobes = 3;
    double tr_seconds = 2.0;
};

EncodingModel fit_encoding(const MatD& delayed_stim, const MatD& voxels,
                           const std::vector<double>& alpha_grid, size_t folds);

// words+onsets -> Lanczos features -> delayed stimulus -> ridge prediction.
MatD predict_fmri(const EncodingModel& enc, const std::vector<int>& words,
                  const std::vector<double>& onsets, const MatD& table, size_t n_tr);

struct WordRateModel {
    RidgeModel ridge; // future-stacked voxels -> words per TR
    std::vector<int> delays{1, 2, 3, 4};
};

WordRateModel fit_word_rate(const MatD& voxels, const std::vector<double>& counts,
                            const std::vector<double>& alpha_grid, size_t folds);

// Ridge prediction rounded to the nearest integer and clamped at 0.
std::vector<int> predict_word_rate(const WordRateModel& m, const MatD& voxels);

// Smallest prefix of the descending-sorted distribution with mass >= p; ties
// in probability broken by ascending word id. Returned indices are in that
// descending-probability order.
std::vector<size_t> nucleus_set(const std::vector<double>& probs, double p = 0.9);

struct LanguagePrior {
    virtual ~LanguagePrior() = default;
    virtual size_t vocab_size() const = 0;
    // Distribution over the next word given the history; sums to 1.
    virtual std::vector<double> next_word_distribution(std::span<const int> history) const = 0;
};

// Bigram counts with add-1 smoothing; the start distribution handles an
// empty history.
class BigramPrior : public LanguagePrior {
public:
    BigramPrior(size_t vocab, const std::vector<std::vector<int>>& corpus);
    // Rebuild from already-smoothed tables (checkpoint load).
    BigramPrior(std::vector<double> start, MatD bigram);
    size_t vocab_size() const override { return vocab_; }
    std::vector<double> next_word_distribution(std::span<const int> history) const override;

    const std::vector<double>& start_table() const { return start_; }
    const MatD& bigram_table() const { return bigram_; }

private:
    size_t vocab_;
    std::vector<double> start_;  // smoothed P(w_0)
    MatD bigram_;                // smoothed P(w | prev), rows sum to 1
};

struct DecodeResult {
    std::vector<int> words;
    std::vector<double> onsets; // seconds, spread uniformly within each TR
    double score = 0.0;         // log p_LM + Gaussian brain log-likelihood
};

struct BeamConfig {
    size_t k = 8;        // beam width
    size_t expansions = 4; // sampled continuations per candidate per TR
    double top_p = 0.9;
};

// One candidate's sampled continuations for a TR: `expansions` word tuples of
// length m drawn from the prior's nucleus sets (deduplicated; when m == 1 and
// the nucleus holds <= `expansions` words the whole set is taken without
// consuming randomness). Shared by beam_decode and the greedy test oracle.
std::vector<std::vector<int>> sample_expansions(const LanguagePrior& prior,
                                                const std::vector<int>& history, size_t m,
                                                const BeamConfig& cfg, Rng& rng);

DecodeResult beam_decode(const MatD& voxels, const LanguagePrior& prior, const EncodingModel& enc,
                         const WordRateModel& rate, const MatD& table, const BeamConfig& cfg,
                         uint64_t seed);

// Held-out Pearson correlation per voxel: contiguous k-fold ridge from
// latents to voxels, predictions pooled across folds. Constant (undefined)
// voxels report r = 0 and set their flag.
std::vector<double> pearson_map(const MatD& latents, const MatD& fmri, size_t folds,
                                const std::vector<double>& alpha_grid,
                                std::vector<uint8_t>* constant_flags = nullptr);

// Everything the decoder needs at inference time, as one checkpointable unit.
struct DecoderBundle {
    EncodingModel enc;
    WordRateModel rate;
    BigramPrior prior;
    MatD stim_table; // vocab x D_e word-embedding rows for the encoder
};

void save_decoder(const DecoderBundle& d, const std::string& path,
                  const std::string& config_echo);
DecoderBundle load_decoder(const std::string& path);

} // namespace fg2
