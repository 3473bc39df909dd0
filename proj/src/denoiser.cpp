#include "fg2/denoiser.hpp"

#include <cmath>

namespace fg2 {

std::vector<double> sinusoidal_embed(int t, size_t d) {
    require(d >= 2 && d % 2 == 0, "sinusoidal_embed: d must be even and >= 2");
    std::vector<double> e(d);
    for (size_t i = 0; i < d / 2; ++i) {
        const double freq = std::pow(10000.0, -2.0 * double(i) / double(d));
        e[2 * i] = std::sin(double(t) * freq);
        e[2 * i + 1] = std::cos(double(t) * freq);
    }
    return e;
}

namespace {

template <typename T>
inline T gelu(T x) {
    return T(0.5) * x * (T(1) + T(std::erf(double(x) * 0.7071067811865475)));
}

template <typename T>
inline T dgelu(T x) {
    const double xd = double(x);
    const double cdf = 0.5 * (1.0 + std::erf(xd * 0.7071067811865475));
    const double pdf = 0.3989422804014327 * std::exp(-0.5 * xd * xd);
    return T(cdf + xd * pdf);
}

// Fixed tensor build order; index arithmetic below depends on it.
constexpr size_t kHeadTensors = 6;  // in.{w,b}, temb.{w1,b1,w2,b2}
constexpr size_t kBlockTensors = 13;

struct BlkIdx {
    size_t mlp_w1, mlp_b1, mlp_w2, mlp_b2;
    size_t conv_w, conv_b;
    size_t cond_w, cond_b;
    size_t wq, wk, wv, wo, bo;
};

constexpr BlkIdx blk_idx(size_t i) {
    const size_t b = kHeadTensors + kBlockTensors * i;
    return {b, b + 1, b + 2, b + 3, b + 4, b + 5, b + 6, b + 7, b + 8, b + 9, b + 10, b + 11, b + 12};
}
constexpr size_t kInW = 0, kInB = 1, kTW1 = 2, kTB1 = 3, kTW2 = 4, kTB2 = 5;
constexpr size_t out_w_idx(size_t layers) { return kHeadTensors + kBlockTensors * layers; }
constexpr size_t gate_w_idx(size_t layers) { return out_w_idx(layers) + 2; }

template <typename T>
ParamSet<T> build_params(const DenoiserConfig& c) {
    require(c.d_model >= 2 && c.d_model % 2 == 0, "denoiser: d_model must be even and >= 2");
    require(c.layers >= 1 && c.x_dim >= 1 && c.cond_dim >= 1, "denoiser: bad config");
    ParamSet<T> p;
    p.add("in.w", {c.x_dim, c.d_model});
    p.add("in.b", {c.d_model});
    p.add("temb.w1", {c.d_model, c.d_model});
    p.add("temb.b1", {c.d_model});
    p.add("temb.w2", {c.d_model, c.d_model});
    p.add("temb.b2", {c.d_model});
    for (size_t i = 0; i < c.layers; ++i) {
        const std::string b = "blk" + std::to_string(i);
        p.add(b + ".mlp.w1", {c.d_model, 4 * c.d_model});
        p.add(b + ".mlp.b1", {4 * c.d_model});
        p.add(b + ".mlp.w2", {4 * c.d_model, c.d_model});
        p.add(b + ".mlp.b2", {c.d_model});
        p.add(b + ".conv.w", {c.d_model, 3});
        p.add(b + ".conv.b", {c.d_model});
        p.add(b + ".cond.w", {c.cond_dim, c.d_model});
        p.add(b + ".cond.b", {c.d_model});
        p.add(b + ".attn.wq", {c.d_model, c.d_model});
        p.add(b + ".attn.wk", {c.d_model, c.d_model});
        p.add(b + ".attn.wv", {c.d_model, c.d_model});
        p.add(b + ".attn.wo", {c.d_model, c.d_model});
        p.add(b + ".attn.bo", {c.d_model});
    }
    p.add("out.w", {c.d_model, c.x_dim});
    p.add("out.b", {c.x_dim});
    // Scalar input gate g(t) = ta1 . gate.w + gate.b; 1-D on purpose so the
    // init loop's weight/bias rule zero-initializes it like a bias.
    p.add("gate.w", {c.d_model});
    p.add("gate.b", {1});
    return p;
}

// y = x W (+ b per row); W dims = {in, out}
template <typename T>
Mat<T> linear(const Mat<T>& x, const Tensor<T>& W, const Tensor<T>* b) {
    const size_t in = W.dims[0], out = W.dims[1];
    Mat<T> y(x.rows, out);
    kern::gemm_nn(x.rows, in, out, x.data(), W.data(), y.data(), false);
    if (b)
        for (size_t i = 0; i < x.rows; ++i) kern::axpy(out, T(1), b->data(), y.row(i));
    return y;
}

// dW += x^T dy, db += column sums of dy, dx (optional) = dy W^T
template <typename T>
void linear_backward(const Mat<T>& x, const Tensor<T>& W, const Mat<T>& dy, Tensor<T>& dW,
                     Tensor<T>* db, Mat<T>* dx, bool dx_accumulate = false) {
    const size_t in = W.dims[0], out = W.dims[1];
    kern::gemm_tn(in, x.rows, out, x.data(), dy.data(), dW.data(), true);
    if (db)
        for (size_t i = 0; i < dy.rows; ++i) kern::axpy(out, T(1), dy.row(i), db->data());
    if (dx) {
        if (!dx_accumulate) *dx = Mat<T>(x.rows, in);
        kern::gemm_nt(x.rows, out, in, dy.data(), W.data(), dx->data(), dx_accumulate);
    }
}

template <typename T>
void add_inplace(Mat<T>& a, const Mat<T>& b) {
    kern::axpy(a.size(), T(1), b.data(), a.data());
}

template <typename T>
void softmax_rows(Mat<T>& s) {
    for (size_t i = 0; i < s.rows; ++i) {
        T* r = s.row(i);
        T mx = r[0];
        for (size_t j = 1; j < s.cols; ++j) mx = std::max(mx, r[j]);
        double sum = 0.0;
        for (size_t j = 0; j < s.cols; ++j) {
            r[j] = T(std::exp(double(r[j] - mx)));
            sum += double(r[j]);
        }
        const T inv = T(1.0 / sum);
        for (size_t j = 0; j < s.cols; ++j) r[j] *= inv;
    }
}

} // namespace

template <typename T>
Mat<T> scaled_attention(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v, Mat<T>* attn) {
    require(q.cols == k.cols, "attention: query/key width mismatch");
    require(k.rows == v.rows, "attention: key/value row mismatch");
    require(k.cols > 0 && k.rows > 0, "attention: empty keys");
    Mat<T> a(q.rows, k.rows);
    kern::gemm_nt(q.rows, q.cols, k.rows, q.data(), k.data(), a.data(), false);
    const T scale = T(1.0 / std::sqrt(double(k.cols)));
    for (auto& x : a.v) x *= scale;
    softmax_rows(a);
    Mat<T> out(q.rows, v.cols);
    kern::gemm_nn(q.rows, k.rows, v.cols, a.data(), v.data(), out.data(), false);
    if (attn) *attn = std::move(a);
    return out;
}

template Mat<float> scaled_attention(const Mat<float>&, const Mat<float>&, const Mat<float>&, Mat<float>*);
template Mat<double> scaled_attention(const Mat<double>&, const Mat<double>&, const Mat<double>&,
                                      Mat<double>*);

template <typename T>
Denoiser<T>::Denoiser(const DenoiserConfig& c, Rng& rng) : cfg(c), params(build_params<T>(c)) {
    const size_t ow = out_w_idx(c.layers);
    for (size_t i = 0; i < params.count(); ++i) {
        auto& t = params.tensors[i];
        const bool is_weight = t.dims.size() >= 2;
        const bool is_out = (i == ow || i == ow + 1);
        for (auto& x : t.v) x = (is_weight && !is_out) ? T(rng.normal() * 0.02) : T(0);
    }
}

template <typename T>
Denoiser<T>::Denoiser(const DenoiserConfig& c, ParamSet<T> existing)
    : cfg(c), params(std::move(existing)) {
    const ParamSet<T> want = build_params<T>(c);
    require(params.count() == want.count(), "denoiser: parameter count mismatch");
    for (size_t i = 0; i < want.count(); ++i) {
        require(params.names[i] == want.names[i], "denoiser: parameter name mismatch at " + want.names[i]);
        require(params.tensors[i].dims == want.tensors[i].dims,
                "denoiser: parameter shape mismatch at " + want.names[i]);
    }
}

template <typename T>
Mat<T> Denoiser<T>::forward_cached(const Mat<T>& xt, int t, const Mat<T>& cond, Cache& c) const {
    require(xt.cols == cfg.x_dim, "denoiser: input width mismatch");
    require(cond.cols == cfg.cond_dim, "denoiser: condition width mismatch");
    require(cond.rows == xt.rows, "denoiser: condition/frame row mismatch");
    require(t >= 0, "denoiser: negative timestep");
    const size_t N = xt.rows, d = cfg.d_model;
    const auto& P = params.tensors;

    c.x = xt;
    c.cond = cond;
    c.t = t;

    Mat<T> h = linear(xt, P[kInW], &P[kInB]);

    c.tsin = sinusoidal_embed(t, d);
    Mat<T> ts(1, d);
    for (size_t j = 0; j < d; ++j) ts(0, j) = T(c.tsin[j]);
    c.th1 = linear(ts, P[kTW1], &P[kTB1]);
    c.ta1 = c.th1;
    for (auto& x : c.ta1.v) x = gelu(x);
    Mat<T> temb = linear(c.ta1, P[kTW2], &P[kTB2]);
    for (size_t i = 0; i < N; ++i) kern::axpy(d, T(1), temb.row(0), h.row(i));

    c.blocks.assign(cfg.layers, {});
    for (size_t li = 0; li < cfg.layers; ++li) {
        const BlkIdx ix = blk_idx(li);
        auto& B = c.blocks[li];
        B.in = h;

        // frame MLP with residual
        B.u = linear(h, P[ix.mlp_w1], &P[ix.mlp_b1]);
        B.a = B.u;
        for (auto& x : B.a.v) x = gelu(x);
        B.h1 = linear(B.a, P[ix.mlp_w2], &P[ix.mlp_b2]);
        add_inplace(B.h1, h);

        // depthwise width-3 temporal convolution with residual
        B.h2 = Mat<T>(N, d);
        {
            const T* w = P[ix.conv_w].data(); // d x 3, taps (-1, 0, +1)
            const T* cb = P[ix.conv_b].data();
            for (size_t n = 0; n < N; ++n) {
                const T* prev = n > 0 ? B.h1.row(n - 1) : nullptr;
                const T* cur = B.h1.row(n);
                const T* next = n + 1 < N ? B.h1.row(n + 1) : nullptr;
                T* out = B.h2.row(n);
                for (size_t ch = 0; ch < d; ++ch) {
                    T acc = cb[ch] + w[ch * 3 + 1] * cur[ch];
                    if (prev) acc += w[ch * 3 + 0] * prev[ch];
                    if (next) acc += w[ch * 3 + 2] * next[ch];
                    out[ch] = cur[ch] + acc;
                }
            }
        }

        // cross-attention over the projected condition, with residual
        B.cp = linear(cond, P[ix.cond_w], &P[ix.cond_b]);
        B.q = linear<T>(B.h2, P[ix.wq], nullptr);
        B.k = linear<T>(B.cp, P[ix.wk], nullptr);
        B.vv = linear<T>(B.cp, P[ix.wv], nullptr);
        B.o = scaled_attention(B.q, B.k, B.vv, &B.attn);
        Mat<T> proj = linear(B.o, P[ix.wo], &P[ix.bo]);
        h = B.h2;
        add_inplace(h, proj);
    }

    c.top = h;
    Mat<T> eps = linear(h, P[out_w_idx(cfg.layers)], &P[out_w_idx(cfg.layers) + 1]);
    // timestep-gated input skip (see header)
    const size_t gw = gate_w_idx(cfg.layers);
    T g = P[gw + 1].v[0];
    g += kern::dot(d, P[gw].data(), c.ta1.data());
    kern::axpy(eps.size(), g, xt.data(), eps.data());
    return eps;
}

template <typename T>
Mat<T> Denoiser<T>::forward(const Mat<T>& xt, int t, const Mat<T>& cond) const {
    Cache scratch;
    return forward_cached(xt, t, cond, scratch);
}

template <typename T>
void Denoiser<T>::backward(const Cache& c, const Mat<T>& d_eps, ParamSet<T>& grads) const {
    const size_t N = c.x.rows, d = cfg.d_model;
    const auto& P = params.tensors;
    auto& G = grads.tensors;
    const size_t ow = out_w_idx(cfg.layers);
    const size_t gw = gate_w_idx(cfg.layers);
    const T scale = T(1.0 / std::sqrt(double(d)));

    // input gate: eps += g * x with g = ta1 . gate.w + gate.b
    const T dg = kern::dot(d_eps.size(), d_eps.data(), c.x.data());
    G[gw + 1].v[0] += dg;
    kern::axpy(d, dg, c.ta1.data(), G[gw].data());

    Mat<T> dh;
    linear_backward(c.top, P[ow], d_eps, G[ow], &G[ow + 1], &dh);

    for (size_t li = cfg.layers; li-- > 0;) {
        const BlkIdx ix = blk_idx(li);
        const auto& B = c.blocks[li];

        // attention residual: h_out = h2 + (attn(h2, cp) Wo + bo)
        Mat<T> dh2 = dh; // residual path
        Mat<T> dO;
        linear_backward(B.o, P[ix.wo], dh, G[ix.wo], &G[ix.bo], &dO);

        Mat<T> dA(N, N);
        kern::gemm_nt(N, d, N, dO.data(), B.vv.data(), dA.data(), false);
        Mat<T> dV(N, d);
        kern::gemm_tn(N, N, d, B.attn.data(), dO.data(), dV.data(), false);

        // softmax rows: dS = attn .* (dA - rowdot(dA, attn)), then the 1/sqrt(d)
        Mat<T> dS(N, N);
        for (size_t i = 0; i < N; ++i) {
            const T* a = B.attn.row(i);
            const T* da = dA.row(i);
            const T g = kern::dot(N, da, a);
            T* ds = dS.row(i);
            for (size_t j = 0; j < N; ++j) ds[j] = a[j] * (da[j] - g) * scale;
        }

        Mat<T> dQ(N, d);
        kern::gemm_nn(N, N, d, dS.data(), B.k.data(), dQ.data(), false);
        Mat<T> dK(N, d);
        kern::gemm_tn(N, N, d, dS.data(), B.q.data(), dK.data(), false);

        linear_backward<T>(B.h2, P[ix.wq], dQ, G[ix.wq], nullptr, &dh2, /*accumulate=*/true);
        Mat<T> dcp;
        linear_backward<T>(B.cp, P[ix.wk], dK, G[ix.wk], nullptr, &dcp);
        linear_backward<T>(B.cp, P[ix.wv], dV, G[ix.wv], nullptr, &dcp, /*accumulate=*/true);
        linear_backward(c.cond, P[ix.cond_w], dcp, G[ix.cond_w], &G[ix.cond_b], (Mat<T>*)nullptr);

        // conv residual: h2 = h1 + depthwise(h1)
        Mat<T> dh1 = dh2;
        {
            const T* w = P[ix.conv_w].data();
            T* dw = G[ix.conv_w].data();
            T* db = G[ix.conv_b].data();
            for (size_t n = 0; n < N; ++n) {
                const T* dv = dh2.row(n);
                for (size_t ch = 0; ch < d; ++ch) {
                    const T g = dv[ch];
                    db[ch] += g;
                    dw[ch * 3 + 1] += g * B.h1(n, ch);
                    dh1(n, ch) += g * w[ch * 3 + 1];
                    if (n > 0) {
                        dw[ch * 3 + 0] += g * B.h1(n - 1, ch);
                        dh1(n - 1, ch) += g * w[ch * 3 + 0];
                    }
                    if (n + 1 < N) {
                        dw[ch * 3 + 2] += g * B.h1(n + 1, ch);
                        dh1(n + 1, ch) += g * w[ch * 3 + 2];
                    }
                }
            }
        }

        // frame MLP residual: h1 = in + (gelu(in W1 + b1) W2 + b2)
        Mat<T> dhin = dh1;
        Mat<T> da;
        linear_backward(B.a, P[ix.mlp_w2], dh1, G[ix.mlp_w2], &G[ix.mlp_b2], &da);
        Mat<T> du(N, 4 * d);
        for (size_t i = 0; i < du.size(); ++i) du.v[i] = da.v[i] * dgelu(B.u.v[i]);
        linear_backward(B.in, P[ix.mlp_w1], du, G[ix.mlp_w1], &G[ix.mlp_b1], &dhin,
                        /*accumulate=*/true);

        dh = std::move(dhin);
    }

    // timestep embedding was broadcast-added to every frame
    Mat<T> dtemb(1, d);
    for (size_t i = 0; i < N; ++i) kern::axpy(d, T(1), dh.row(i), dtemb.row(0));
    Mat<T> dta1;
    linear_backward(c.ta1, P[kTW2], dtemb, G[kTW2], &G[kTB2], &dta1);
    kern::axpy(d, dg, P[gw].data(), dta1.data()); // gate head also reads ta1
    Mat<T> dth1(1, d);
    for (size_t j = 0; j < d; ++j) dth1(0, j) = dta1(0, j) * dgelu(c.th1(0, j));
    Mat<T> ts(1, d);
    for (size_t j = 0; j < d; ++j) ts(0, j) = T(c.tsin[j]);
    linear_backward(ts, P[kTW1], dth1, G[kTW1], &G[kTB1], (Mat<T>*)nullptr);

    linear_backward(c.x, P[kInW], dh, G[kInW], &G[kInB], (Mat<T>*)nullptr);
}

template <typename T>
double loss_and_grad(const Denoiser<T>& net, const Schedule& sched,
                     std::span<const TrainItem<T>> batch, ParamSet<T>& grads) {
    require(!batch.empty(), "loss_and_grad: empty batch");
    size_t total = 0;
    for (const auto& it : batch) {
        require(it.t >= 1 && it.t <= sched.T, "loss_and_grad: t out of schedule range");
        require(it.x0->same_shape(*it.eps), "loss_and_grad: x0/eps shape mismatch");
        total += it.x0->size();
    }

    double loss = 0.0;
    typename Denoiser<T>::Cache cache;
    Mat<T> xt;
    for (const auto& it : batch) {
        q_sample(sched, it.t, *it.x0, *it.eps, xt);
        Mat<T> eh = net.forward_cached(xt, it.t, *it.cond, cache);
        Mat<T> d_eps(eh.rows, eh.cols);
        const T* tgt = it.eps->data();
        for (size_t i = 0; i < eh.size(); ++i) {
            const double r = double(eh.v[i]) - double(tgt[i]);
            loss += r * r;
            d_eps.v[i] = T(2.0 * r / double(total));
        }
        net.backward(cache, d_eps, grads);
    }
    loss /= double(total);
    if (!std::isfinite(loss)) throw Error("loss_and_grad: non-finite loss (divergence)");
    return loss;
}

template <typename T>
Adam<T>::Adam(const ParamSet<T>& params, AdamConfig c)
    : cfg(c), m(params.zeros_like()), v(params.zeros_like()) {}

template <typename T>
void Adam<T>::update(ParamSet<T>& params, const ParamSet<T>& grads) {
    require(params.count() == m.count() && grads.count() == m.count(),
            "adam: parameter/gradient count mismatch");
    ++step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(step));
    for (size_t i = 0; i < params.count(); ++i) {
        auto& p = params.tensors[i];
        const auto& g = grads.tensors[i];
        require(p.size() == g.size(), "adam: shape mismatch at " + params.names[i]);
        auto& mi = m.tensors[i];
        auto& vi = v.tensors[i];
        for (size_t j = 0; j < p.size(); ++j) {
            const double gj = double(g.v[j]);
            if (!std::isfinite(gj)) throw Error("adam: non-finite gradient at " + params.names[i]);
            const double mj = cfg.beta1 * double(mi.v[j]) + (1.0 - cfg.beta1) * gj;
            const double vj = cfg.beta2 * double(vi.v[j]) + (1.0 - cfg.beta2) * gj * gj;
            mi.v[j] = T(mj);
            vi.v[j] = T(vj);
            p.v[j] = T(double(p.v[j]) - cfg.lr * (mj / bc1) / (std::sqrt(vj / bc2) + cfg.eps));
        }
    }
}

template class Denoiser<float>;
template class Denoiser<double>;
template double loss_and_grad<float>(const Denoiser<float>&, const Schedule&,
                                     std::span<const TrainItem<float>>, ParamSet<float>&);
template double loss_and_grad<double>(const Denoiser<double>&, const Schedule&,
                                      std::span<const TrainItem<double>>, ParamSet<double>&);
template struct Adam<float>;
template struct Adam<double>;

} // namespace fg2
