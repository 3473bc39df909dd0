#pragma once

// Conditional noise-prediction network eps(x_t, t, cond) with hand-written
// reverse-mode gradients, plus the Adam optimizer that trains it.
//
// Layout: input projection 98 -> d_model; a sinusoidal timestep embedding
// pushed through a two-layer MLP and added to every frame; L residual blocks
// of {frame MLP d->4d->d, depthwise width-3 temporal convolution,
// cross-attention over the projected condition}; output projection
// d_model -> 98 plus a timestep-gated copy of the input, g(t) * x_t. The
// gate matters: the regression target eps = (x_t - sqrt(abar) x0) /
// sqrt(1 - abar) contains a full-rank multiple of x_t, which a rank-d_model
// readout of the hidden state cannot represent when d_model < 98. Output
// projection and gate head are zero-initialized so a fresh network predicts
// exactly 0.
//
// Everything is templated on the scalar: float is the training precision,
// double is what the finite-difference gradient check runs in. Explicit
// instantiations for both live in denoiser.cpp.

#include <span>
#include <vector>

#include "fg2/diffusion.hpp"
#include "fg2/mat.hpp"

namespace fg2 {

struct DenoiserConfig {
    size_t x_dim = 98;    // flattened keypoint coordinates per frame
    size_t d_model = 64;  // hidden width (must be even for the timestep embedding)
    size_t layers = 2;    // residual block count
    size_t cond_dim = 32; // condition width D_c (text embedding or voxel count)
};

// pairs (sin(t / 10000^{2i/d}), cos(t / 10000^{2i/d})), i = 0 .. d/2-1
std::vector<double> sinusoidal_embed(int t, size_t d);

// softmax(q k^T / sqrt(width(k))) v. Every softmax row sums to 1; the row
// weights are written to *attn when given (the backward pass needs them).
template <typename T>
Mat<T> scaled_attention(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v, Mat<T>* attn = nullptr);

template <typename T>
class Denoiser {
public:
    DenoiserConfig cfg;
    ParamSet<T> params;

    // Fresh network: Gaussian(0, 0.02) weights, zero biases, zero output
    // projection. Draws from `rng` in fixed parameter order.
    Denoiser(const DenoiserConfig& cfg, Rng& rng);
    // Wrap existing parameters (checkpoint load). Shapes are validated.
    Denoiser(const DenoiserConfig& cfg, ParamSet<T> existing);

    // Per-sample activations kept for the backward pass.
    struct Cache {
        Mat<T> x, cond;
        int t = 0;
        std::vector<double> tsin;
        Mat<T> th1, ta1; // timestep MLP intermediates (1 x d)
        struct Block {
            Mat<T> in;         // block input h
            Mat<T> u, a, h1;   // frame MLP pre-act, act, post-residual
            Mat<T> h2;         // after temporal conv residual
            Mat<T> cp;         // projected condition
            Mat<T> q, k, vv, attn, o; // attention pieces; attn = softmax rows
        };
        std::vector<Block> blocks;
        Mat<T> top; // final hidden feeding the output projection
    };

    Mat<T> forward(const Mat<T>& xt, int t, const Mat<T>& cond) const;
    Mat<T> forward_cached(const Mat<T>& xt, int t, const Mat<T>& cond, Cache& cache) const;
    // Accumulates d(loss)/d(params) into `grads` given d(loss)/d(eps_hat).
    void backward(const Cache& cache, const Mat<T>& d_eps, ParamSet<T>& grads) const;

    template <typename U>
    Denoiser<U> cast() const {
        return Denoiser<U>(cfg, params.template cast<U>());
    }
};

// One supervised sample: x_t = q_sample(x0, t, eps), target eps.
template <typename T>
struct TrainItem {
    const Mat<T>* x0;
    const Mat<T>* cond;
    int t;
    const Mat<T>* eps;
};

// Mean squared error of eps_hat against eps over every entry of the batch;
// exact gradients accumulated into `grads` (caller provides zeroed buffers).
template <typename T>
double loss_and_grad(const Denoiser<T>& net, const Schedule& sched,
                     std::span<const TrainItem<T>> batch, ParamSet<T>& grads);

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
struct Adam {
    AdamConfig cfg;
    ParamSet<T> m, v;
    long long step = 0;

    explicit Adam(const ParamSet<T>& params, AdamConfig c = {});
    // Standard bias-corrected update, in place.
    void update(ParamSet<T>& params, const ParamSet<T>& grads);
};

} // namespace fg2
