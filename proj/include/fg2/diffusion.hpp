#pragma once

// Forward-noising / reverse-sampling algebra for the denoising diffusion
// models. The schedule is always computed in double; per-state operations are
// templated on the scalar and routed through the kernel layer. Timesteps are
// 1-based: t runs T..1 during sampling and arrays are indexed with t-1.

#include <cmath>
#include <vector>

#include "fg2/kernels.hpp"
#include "fg2/mat.hpp"

namespace fg2 {

struct Schedule {
    int T = 0;
    std::vector<double> beta;      // beta_t
    std::vector<double> alpha;     // 1 - beta_t
    std::vector<double> alpha_bar; // prod_{s<=t} alpha_s
    std::vector<double> sigma2;    // posterior variance, fixed to beta_t

    static Schedule linear(int T = 50, double beta_lo = 1e-4, double beta_hi = 0.02) {
        require(T >= 1, "schedule: T must be >= 1");
        require(beta_lo > 0.0 && beta_hi < 1.0 && beta_lo <= beta_hi,
                "schedule: betas must satisfy 0 < lo <= hi < 1");
        Schedule s;
        s.T = T;
        s.beta.resize(size_t(T));
        s.alpha.resize(size_t(T));
        s.alpha_bar.resize(size_t(T));
        s.sigma2.resize(size_t(T));
        double prod = 1.0;
        for (int t = 0; t < T; ++t) {
            const double b = T == 1 ? beta_lo
                                    : beta_lo + (beta_hi - beta_lo) * double(t) / double(T - 1);
            s.beta[size_t(t)] = b;
            s.alpha[size_t(t)] = 1.0 - b;
            prod *= 1.0 - b;
            s.alpha_bar[size_t(t)] = prod;
            s.sigma2[size_t(t)] = b;
        }
        return s;
    }

    // Alignment weight between the two conditional models at step t:
    // sqrt((1-ab)/ab) by default, or the exact (1-ab)/ab ratio that makes the
    // weighted eps-space distance equal the x0-space distance.
    double align_weight(int t, bool exact) const {
        const double ab = alpha_bar[size_t(t - 1)];
        const double r = (1.0 - ab) / ab;
        return exact ? r : std::sqrt(r);
    }
};

// x_t = sqrt(ab_t) x0 + sqrt(1-ab_t) eps
template <typename T>
void q_sample(const Schedule& s, int t, const Mat<T>& x0, const Mat<T>& eps, Mat<T>& xt) {
    require(t >= 1 && t <= s.T, "q_sample: t out of schedule range");
    require(x0.same_shape(eps), "q_sample: x0/eps shape mismatch");
    const double ab = s.alpha_bar[size_t(t - 1)];
    xt = Mat<T>(x0.rows, x0.cols);
    kern::lincomb(x0.size(), T(std::sqrt(ab)), x0.data(), T(std::sqrt(1.0 - ab)), eps.data(),
                  xt.data());
}

// x0_hat = (x_t - sqrt(1-ab_t) eps_hat) / sqrt(ab_t)
template <typename T>
void ddim_predict_x0(const Schedule& s, int t, const Mat<T>& xt, const Mat<T>& eps_hat,
                     Mat<T>& x0) {
    require(t >= 1 && t <= s.T, "ddim_predict_x0: t out of schedule range");
    require(xt.same_shape(eps_hat), "ddim_predict_x0: xt/eps_hat shape mismatch");
    const double ab = s.alpha_bar[size_t(t - 1)];
    require(ab > 0.0, "ddim_predict_x0: alpha_bar must be positive");
    const double inv = 1.0 / std::sqrt(ab);
    x0 = Mat<T>(xt.rows, xt.cols);
    kern::lincomb(xt.size(), T(inv), xt.data(), T(-std::sqrt(1.0 - ab) * inv), eps_hat.data(),
                  x0.data());
}

// x_{t-1} = (x_t - beta_t/sqrt(1-ab_t) eps_hat) / sqrt(alpha_t) + sigma_t z,
// with z = 0 at t = 1. `noise` may be null when t == 1.
template <typename T>
void ancestral_step(const Schedule& s, int t, const Mat<T>& xt, const Mat<T>& eps_hat,
                    const Mat<T>* noise, Mat<T>& x_prev) {
    require(t >= 1 && t <= s.T, "ancestral_step: t out of schedule range");
    require(xt.same_shape(eps_hat), "ancestral_step: xt/eps_hat shape mismatch");
    const size_t i = size_t(t - 1);
    const double inv_sqrt_a = 1.0 / std::sqrt(s.alpha[i]);
    const double coef = s.beta[i] / std::sqrt(1.0 - s.alpha_bar[i]);
    x_prev = Mat<T>(xt.rows, xt.cols);
    kern::lincomb(xt.size(), T(inv_sqrt_a), xt.data(), T(-inv_sqrt_a * coef), eps_hat.data(),
                  x_prev.data());
    if (t > 1) {
        require(noise != nullptr, "ancestral_step: noise required for t > 1");
        kern::axpy(xt.size(), T(std::sqrt(s.sigma2[i])), noise->data(), x_prev.data());
    }
}

// Full reverse chain from x_T ~ N(0, I). `eps_fn(xt, t, eps_out)` evaluates
// the trained noise predictor. If `chain` is non-null it receives the T+1
// states x_T .. x_0 in visit order.
template <typename T, typename EpsFn>
Mat<T> sample_loop(const Schedule& s, size_t frames, size_t dim, EpsFn&& eps_fn, Rng& rng,
                   std::vector<Mat<T>>* chain = nullptr) {
    Mat<T> x = Mat<T>::normal(frames, dim, rng);
    if (chain) {
        chain->clear();
        chain->push_back(x);
    }
    Mat<T> eps(frames, dim), z(frames, dim), next;
    for (int t = s.T; t >= 1; --t) {
        eps_fn(x, t, eps);
        if (t > 1) {
            z = Mat<T>::normal(frames, dim, rng);
            ancestral_step(s, t, x, eps, &z, next);
        } else {
            ancestral_step<T>(s, t, x, eps, nullptr, next);
        }
        x = next;
        if (chain) chain->push_back(x);
    }
    return x;
}

} // namespace fg2
