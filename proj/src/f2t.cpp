#include "fg2/f2t.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fg2/checkpoint.hpp"
#include "fg2/kernels.hpp"
#include "fg2/linalg.hpp"
#include "fg2/metrics.hpp"

namespace fg2 {

double lanczos_kernel(double x, int lobes) {
    const double a = double(lobes);
    if (std::abs(x) >= a) return 0.0;
    if (x == 0.0) return 1.0;
    const double px = M_PI * x;
    return (std::sin(px) / px) * (std::sin(px / a) / (px / a));
}

namespace {

// One output row of the Lanczos resampler; shared verbatim by the batch
// resampler and the beam decoder's incremental recompute so the closed loop
// stays bit-exact. `emb_row(w)` returns the embedding of word index w.
template <typename EmbRow>
void lanczos_row(double* out, size_t d_e, size_t j, const std::vector<double>& onsets,
                 EmbRow&& emb_row, double tr_seconds, int lobes) {
    std::fill(out, out + d_e, 0.0);
    double wsum = 0.0;
    for (size_t w = 0; w < onsets.size(); ++w) {
        const double x = double(j) - onsets[w] / tr_seconds;
        if (std::abs(x) >= double(lobes)) continue;
        const double wt = lanczos_kernel(x, lobes);
        wsum += wt;
        kern::axpy(d_e, wt, emb_row(w), out);
    }
    if (wsum > 0.5) {
        const double inv = 1.0 / wsum;
        for (size_t c = 0; c < d_e; ++c) out[c] *= inv;
    }
}

} // namespace

MatD lanczos_to_tr(const std::vector<double>& onsets, const MatD& embs, size_t n_tr,
                   double tr_seconds, int lobes) {
    require(tr_seconds > 0, "lanczos_to_tr: tr_seconds must be positive");
    require(lobes >= 1, "lanczos_to_tr: lobes must be >= 1");
    require(onsets.size() == embs.rows, "lanczos_to_tr: onset/embedding count mismatch");
    MatD out(n_tr, embs.cols);
    if (embs.cols == 0) return out;
    for (size_t j = 0; j < n_tr; ++j)
        lanczos_row(out.row(j), embs.cols, j, onsets, [&](size_t w) { return embs.row(w); },
                    tr_seconds, lobes);
    return out;
}

MatD build_delayed_stimulus(const MatD& features, const std::vector<int>& delays) {
    require(!delays.empty(), "build_delayed_stimulus: empty delay list");
    const size_t n = features.rows, d = features.cols;
    MatD out(n, delays.size() * d);
    for (size_t b = 0; b < delays.size(); ++b) {
        require(delays[b] >= 1, "build_delayed_stimulus: delays must be positive");
        require(size_t(delays[b]) < n, "build_delayed_stimulus: delay exceeds record length");
        const size_t lag = size_t(delays[b]);
        for (size_t i = lag; i < n; ++i)
            std::copy(features.row(i - lag), features.row(i - lag) + d, out.row(i) + b * d);
    }
    return out;
}

MatD build_future_stimulus(const MatD& features, const std::vector<int>& delays) {
    require(!delays.empty(), "build_future_stimulus: empty delay list");
    const size_t n = features.rows, d = features.cols;
    MatD out(n, delays.size() * d);
    for (size_t b = 0; b < delays.size(); ++b) {
        require(delays[b] >= 1, "build_future_stimulus: delays must be positive");
        require(size_t(delays[b]) < n, "build_future_stimulus: delay exceeds record length");
        const size_t lead = size_t(delays[b]);
        for (size_t i = 0; i + lead < n; ++i)
            std::copy(features.row(i + lead), features.row(i + lead) + d, out.row(i) + b * d);
    }
    return out;
}

namespace {

void check_finite(const MatD& m, const char* who) {
    for (double x : m.v)
        if (!std::isfinite(x)) throw DataError(std::string(who) + ": non-finite input");
}

struct Centered {
    MatD m;
    std::vector<double> mean;
};

Centered center_columns(const MatD& x) {
    Centered c;
    c.m = x;
    c.mean.assign(x.cols, 0.0);
    for (size_t i = 0; i < x.rows; ++i)
        for (size_t j = 0; j < x.cols; ++j) c.mean[j] += x(i, j);
    for (auto& v : c.mean) v /= double(x.rows);
    for (size_t i = 0; i < x.rows; ++i)
        for (size_t j = 0; j < x.cols; ++j) c.m(i, j) -= c.mean[j];
    return c;
}

// Solve (Xc^T Xc + alpha I) W = Xc^T Yc; pseudoinverse at alpha = 0 because
// centering always costs X one rank.
MatD ridge_solve(const MatD& xc, const MatD& yc, double alpha) {
    const size_t p = xc.cols, q = yc.cols;
    MatD a(p, p), b(p, q);
    kern::gemm_tn(p, xc.rows, p, xc.data(), xc.data(), a.data(), false);
    kern::gemm_tn(p, xc.rows, q, xc.data(), yc.data(), b.data(), false);
    for (size_t i = 0; i < p; ++i) a(i, i) += alpha;
    return alpha > 0.0 ? cholesky_solve(a, b) : pinv_solve(a, b);
}

RidgeModel fit_at_alpha(const MatD& x, const MatD& y, double alpha) {
    Centered xc = center_columns(x), yc = center_columns(y);
    RidgeModel m;
    m.alpha = alpha;
    m.weights = ridge_solve(xc.m, yc.m, alpha);
    m.x_mean = std::move(xc.mean);
    m.y_mean = std::move(yc.mean);
    return m;
}

MatD take_rows(const MatD& x, size_t begin, size_t end, bool invert) {
    MatD out(invert ? x.rows - (end - begin) : end - begin, x.cols);
    size_t r = 0;
    for (size_t i = 0; i < x.rows; ++i) {
        const bool held = i >= begin && i < end;
        if (held == invert) continue;
        std::copy(x.row(i), x.row(i) + x.cols, out.row(r++));
    }
    return out;
}

// Mean R^2 over output columns on held-out rows, with the baseline variance
// taken around the training-fold mean.
double fold_r2(const RidgeModel& m, const MatD& xh, const MatD& yh) {
    const MatD pred = ridge_predict(m, xh);
    double acc = 0.0;
    for (size_t j = 0; j < yh.cols; ++j) {
        double ss_res = 0.0, ss_tot = 0.0;
        for (size_t i = 0; i < yh.rows; ++i) {
            const double r = yh(i, j) - pred(i, j);
            const double t = yh(i, j) - m.y_mean[j];
            ss_res += r * r;
            ss_tot += t * t;
        }
        acc += ss_tot < 1e-12 ? 0.0 : 1.0 - ss_res / ss_tot;
    }
    return acc / double(yh.cols);
}

} // namespace

RidgeModel fit_ridge(const MatD& X, const MatD& Y, const std::vector<double>& alpha_grid,
                     size_t folds) {
    require(X.rows == Y.rows, "fit_ridge: X/Y row mismatch");
    require(X.rows >= 2, "fit_ridge: need at least 2 rows");
    require(!alpha_grid.empty(), "fit_ridge: empty alpha grid");
    for (double a : alpha_grid)
        require(std::isfinite(a) && a >= 0.0, "fit_ridge: alphas must be finite and >= 0");
    check_finite(X, "fit_ridge");
    check_finite(Y, "fit_ridge");

    double best = alpha_grid[0];
    if (alpha_grid.size() > 1) {
        require(folds >= 2 && folds <= X.rows, "fit_ridge: folds must be in [2, n]");
        double best_score = -1e300;
        for (double alpha : alpha_grid) {
            double score = 0.0;
            for (size_t f = 0; f < folds; ++f) {
                const size_t a = f * X.rows / folds, b = (f + 1) * X.rows / folds;
                if (a == b) continue;
                const RidgeModel m = fit_at_alpha(take_rows(X, a, b, true), take_rows(Y, a, b, true), alpha);
                score += fold_r2(m, take_rows(X, a, b, false), take_rows(Y, a, b, false));
            }
            score /= double(folds);
            if (score > best_score) {
                best_score = score;
                best = alpha;
            }
        }
    }
    return fit_at_alpha(X, Y, best);
}

MatD ridge_predict(const RidgeModel& m, const MatD& X) {
    require(X.cols == m.weights.rows, "ridge_predict: width mismatch");
    MatD xc = X;
    for (size_t i = 0; i < xc.rows; ++i)
        for (size_t j = 0; j < xc.cols; ++j) xc(i, j) -= m.x_mean[j];
    MatD out(X.rows, m.weights.cols);
    kern::gemm_nn(X.rows, X.cols, m.weights.cols, xc.data(), m.weights.data(), out.data(), false);
    for (size_t i = 0; i < out.rows; ++i)
        for (size_t j = 0; j < out.cols; ++j) out(i, j) += m.y_mean[j];
    return out;
}

EncodingModel fit_encoding(const MatD& delayed_stim, const MatD& voxels,
                           const std::vector<double>& alpha_grid, size_t folds) {
    EncodingModel enc;
    enc.ridge = fit_ridge(delayed_stim, voxels, alpha_grid, folds);
    const MatD pred = ridge_predict(enc.ridge, delayed_stim);
    enc.sigma2.assign(voxels.cols, 0.0);
    for (size_t i = 0; i < voxels.rows; ++i)
        for (size_t j = 0; j < voxels.cols; ++j) {
            const double r = voxels(i, j) - pred(i, j);
            enc.sigma2[j] += r * r;
        }
    for (auto& s : enc.sigma2) s = std::max(s / double(voxels.rows), 1e-6);
    return enc;
}

MatD predict_fmri(const EncodingModel& enc, const std::vector<int>& words,
                  const std::vector<double>& onsets, const MatD& table, size_t n_tr) {
    require(words.size() == onsets.size(), "predict_fmri: word/onset count mismatch");
    MatD embs(words.size(), table.cols);
    for (size_t i = 0; i < words.size(); ++i) {
        require(words[i] >= 0 && size_t(words[i]) < table.rows, "predict_fmri: unknown word id");
        std::copy(table.row(size_t(words[i])), table.row(size_t(words[i])) + table.cols,
                  embs.row(i));
    }
    const MatD feats = lanczos_to_tr(onsets, embs, n_tr, enc.tr_seconds, enc.lobes);
    return ridge_predict(enc.ridge, build_delayed_stimulus(feats, enc.delays));
}

WordRateModel fit_word_rate(const MatD& voxels, const std::vector<double>& counts,
                            const std::vector<double>& alpha_grid, size_t folds) {
    require(counts.size() == voxels.rows, "fit_word_rate: count/TR length mismatch");
    WordRateModel m;
    MatD y(counts.size(), 1);
    for (size_t i = 0; i < counts.size(); ++i) y(i, 0) = counts[i];
    m.ridge = fit_ridge(build_future_stimulus(voxels, m.delays), y, alpha_grid, folds);
    return m;
}

std::vector<int> predict_word_rate(const WordRateModel& m, const MatD& voxels) {
    const MatD pred = ridge_predict(m.ridge, build_future_stimulus(voxels, m.delays));
    std::vector<int> out(pred.rows);
    for (size_t i = 0; i < pred.rows; ++i)
        out[i] = int(std::max<long long>(0, std::llround(pred(i, 0))));
    return out;
}

std::vector<size_t> nucleus_set(const std::vector<double>& probs, double p) {
    require(!probs.empty(), "nucleus_set: empty distribution");
    require(p > 0.0 && p <= 1.0, "nucleus_set: p must be in (0, 1]");
    double sum = 0.0;
    for (double x : probs) {
        require(x >= -1e-12, "nucleus_set: negative probability");
        sum += x;
    }
    require(std::abs(sum - 1.0) <= 1e-9, "nucleus_set: distribution does not sum to 1");

    std::vector<size_t> order(probs.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (probs[a] != probs[b]) return probs[a] > probs[b];
        return a < b;
    });
    std::vector<size_t> out;
    double cum = 0.0;
    for (size_t i : order) {
        out.push_back(i);
        cum += probs[i];
        if (cum >= p) break;
    }
    return out;
}

BigramPrior::BigramPrior(std::vector<double> start, MatD bigram)
    : vocab_(start.size()), start_(std::move(start)), bigram_(std::move(bigram)) {
    require(vocab_ >= 1, "bigram: empty vocabulary");
    require(bigram_.rows == vocab_ && bigram_.cols == vocab_, "bigram: table shape mismatch");
}

BigramPrior::BigramPrior(size_t vocab, const std::vector<std::vector<int>>& corpus)
    : vocab_(vocab), start_(vocab), bigram_(vocab, vocab) {
    require(vocab >= 1, "bigram: empty vocabulary");
    MatD counts(vocab, vocab);
    std::vector<double> starts(vocab, 0.0);
    for (const auto& seq : corpus) {
        if (seq.empty()) continue;
        for (int w : seq) require(w >= 0 && size_t(w) < vocab, "bigram: word id out of range");
        starts[size_t(seq[0])] += 1.0;
        for (size_t i = 1; i < seq.size(); ++i) counts(size_t(seq[i - 1]), size_t(seq[i])) += 1.0;
    }
    double stot = std::accumulate(starts.begin(), starts.end(), 0.0) + double(vocab);
    for (size_t w = 0; w < vocab; ++w) start_[w] = (starts[w] + 1.0) / stot;
    for (size_t a = 0; a < vocab; ++a) {
        double tot = double(vocab);
        for (size_t b = 0; b < vocab; ++b) tot += counts(a, b);
        for (size_t b = 0; b < vocab; ++b) bigram_(a, b) = (counts(a, b) + 1.0) / tot;
    }
}

std::vector<double> BigramPrior::next_word_distribution(std::span<const int> history) const {
    if (history.empty()) return start_;
    const int prev = history.back();
    require(prev >= 0 && size_t(prev) < vocab_, "bigram: history word out of range");
    return {bigram_.row(size_t(prev)), bigram_.row(size_t(prev)) + vocab_};
}

namespace {

// Draw one index from the renormalized nucleus.
size_t draw_from_nucleus(const std::vector<double>& dist, const std::vector<size_t>& ns, Rng& rng) {
    double mass = 0.0;
    for (size_t i : ns) mass += dist[i];
    double u = rng.uniform() * mass;
    for (size_t i : ns) {
        u -= dist[i];
        if (u <= 0.0) return i;
    }
    return ns.back();
}

} // namespace

std::vector<std::vector<int>> sample_expansions(const LanguagePrior& prior,
                                                const std::vector<int>& history, size_t m,
                                                const BeamConfig& cfg, Rng& rng) {
    require(m >= 1, "sample_expansions: m must be >= 1");
    require(cfg.expansions >= 1, "sample_expansions: need at least one expansion");
    std::vector<std::vector<int>> out;

    if (m == 1) {
        const std::vector<double> dist = prior.next_word_distribution(history);
        const std::vector<size_t> ns = nucleus_set(dist, cfg.top_p);
        if (ns.size() <= cfg.expansions) {
            // small nucleus: take it whole, no randomness consumed
            for (size_t w : ns) out.push_back({int(w)});
            return out;
        }
        std::set<size_t> seen;
        size_t attempts = 0;
        while (out.size() < cfg.expansions && attempts < 64 * cfg.expansions) {
            const size_t w = draw_from_nucleus(dist, ns, rng);
            ++attempts;
            if (seen.insert(w).second) out.push_back({int(w)});
        }
        for (size_t w : ns) { // top off deterministically if rejection stalled
            if (out.size() >= cfg.expansions) break;
            if (seen.insert(w).second) out.push_back({int(w)});
        }
        return out;
    }

    for (size_t e = 0; e < cfg.expansions; ++e) {
        std::vector<int> hist = history, tuple;
        for (size_t j = 0; j < m; ++j) {
            const std::vector<double> dist = prior.next_word_distribution(hist);
            const std::vector<size_t> ns = nucleus_set(dist, cfg.top_p);
            const size_t w = draw_from_nucleus(dist, ns, rng);
            tuple.push_back(int(w));
            hist.push_back(int(w));
        }
        if (std::find(out.begin(), out.end(), tuple) == out.end()) out.push_back(std::move(tuple));
    }
    return out;
}

namespace {

struct Cand {
    std::vector<int> words;
    std::vector<double> onsets;
    double lm = 0.0;    // cumulative log p_LM
    double brain = 0.0; // cumulative Gaussian log-likelihood over finalized TRs
    MatD features;      // n_tr x D_e Lanczos features of the candidate's words

    double score() const { return lm + brain; }
};

// -sum_v (pred - voxel)^2 / (2 sigma_v^2) for one finalized TR row.
double brain_row_ll(const Cand& c, size_t r, const EncodingModel& enc, const MatD& voxels,
                    std::vector<double>& stim_buf, std::vector<double>& pred_buf) {
    const size_t d_e = c.features.cols, q = voxels.cols;
    std::fill(stim_buf.begin(), stim_buf.end(), 0.0);
    for (size_t b = 0; b < enc.delays.size(); ++b) {
        const size_t lag = size_t(enc.delays[b]);
        if (r >= lag)
            std::copy(c.features.row(r - lag), c.features.row(r - lag) + d_e,
                      stim_buf.data() + b * d_e);
    }
    for (size_t p = 0; p < stim_buf.size(); ++p) stim_buf[p] -= enc.ridge.x_mean[p];
    kern::gemm_nn(1, stim_buf.size(), q, stim_buf.data(), enc.ridge.weights.data(),
                  pred_buf.data(), false);
    double ll = 0.0;
    for (size_t v = 0; v < q; ++v) {
        const double d = pred_buf[v] + enc.ridge.y_mean[v] - voxels(r, v);
        ll -= d * d / (2.0 * enc.sigma2[v]);
    }
    return ll;
}

void recompute_feature_window(Cand& c, size_t lo, size_t hi, const EncodingModel& enc,
                              const MatD& table) {
    for (size_t j = lo; j <= hi; ++j)
        lanczos_row(c.features.row(j), c.features.cols, j, c.onsets,
                    [&](size_t w) { return table.row(size_t(c.words[w])); }, enc.tr_seconds,
                    enc.lobes);
}

} // namespace

DecodeResult beam_decode(const MatD& voxels, const LanguagePrior& prior, const EncodingModel& enc,
                         const WordRateModel& rate, const MatD& table, const BeamConfig& cfg,
                         uint64_t seed) {
    require(cfg.k >= 1, "beam_decode: beam width must be >= 1");
    require(voxels.cols >= 1, "beam_decode: zero-voxel record");
    require(voxels.cols == enc.ridge.weights.cols, "beam_decode: voxel width mismatch");
    require(table.rows == prior.vocab_size(), "beam_decode: vocabulary mismatch");
    const size_t n_tr = voxels.rows, d_e = table.cols;
    require(enc.ridge.weights.rows == enc.delays.size() * d_e,
            "beam_decode: encoding model width mismatch");

    const std::vector<int> rates = predict_word_rate(rate, voxels);
    const Rng master(seed);

    std::vector<Cand> beam(1);
    beam[0].features = MatD(n_tr, d_e);
    std::vector<double> stim_buf(enc.delays.size() * d_e), pred_buf(voxels.cols);

    for (size_t i = 0; i < n_tr; ++i) {
        const size_t m = size_t(rates[i]);
        std::vector<Cand> pool;
        for (size_t rank = 0; rank < beam.size(); ++rank) {
            if (m == 0) {
                pool.push_back(std::move(beam[rank]));
                continue;
            }
            Rng sub = master.child("tr" + std::to_string(i) + ".cand" + std::to_string(rank));
            const auto exps = sample_expansions(prior, beam[rank].words, m, cfg, sub);
            for (const auto& exp : exps) {
                Cand ch = beam[rank];
                for (size_t j = 0; j < exp.size(); ++j) {
                    const std::vector<double> dist = prior.next_word_distribution(ch.words);
                    ch.lm += std::log(dist[size_t(exp[j])]);
                    ch.words.push_back(exp[j]);
                    ch.onsets.push_back((double(i) + (double(j) + 0.5) / double(exp.size())) *
                                        enc.tr_seconds);
                }
                pool.push_back(std::move(ch));
            }
        }

        // Lanczos support: words placed in TR i can touch feature rows
        // [i-2, i+3]; rows below i-2 are already final.
        const size_t lo = i >= 2 ? i - 2 : 0;
        const size_t hi = std::min(n_tr - 1, i + 3);
        for (auto& c : pool) recompute_feature_window(c, lo, hi, enc, table);
        // Voxel row i-1 is fully determined once TR i's words are fixed
        // (its newest stimulus block is feature row i-2).
        if (i >= 1)
            for (auto& c : pool) c.brain += brain_row_ll(c, i - 1, enc, voxels, stim_buf, pred_buf);

        // Prune on the accumulated score plus a transient lookahead over the
        // next two voxel rows. Those rows are not final (words from later TRs
        // still spill into them), but the unplaced mass perturbs every
        // candidate's prediction alike, while a wrong word just placed shows
        // up immediately - without this, early prunes see only the prior,
        // because row i-1 barely depends on the newest words. The rows are
        // re-scored exactly when they become final.
        std::vector<double> peek(pool.size(), 0.0);
        for (size_t c = 0; c < pool.size(); ++c)
            for (size_t r = i; r <= std::min(i + 1, n_tr - 1); ++r)
                peek[c] += brain_row_ll(pool[c], r, enc, voxels, stim_buf, pred_buf);
        std::vector<size_t> order(pool.size());
        for (size_t c = 0; c < order.size(); ++c) order[c] = c;
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return pool[a].score() + peek[a] > pool[b].score() + peek[b];
        });
        std::vector<Cand> kept;
        for (size_t c = 0; c < std::min(cfg.k, order.size()); ++c)
            kept.push_back(std::move(pool[order[c]]));
        beam = std::move(kept);
    }

    // last voxel row becomes final only after the word track ends
    for (auto& c : beam) c.brain += brain_row_ll(c, n_tr - 1, enc, voxels, stim_buf, pred_buf);

    const Cand* best = &beam[0];
    for (const auto& c : beam)
        if (c.score() > best->score()) best = &c;
    return {best->words, best->onsets, best->score()};
}

std::vector<double> pearson_map(const MatD& latents, const MatD& fmri, size_t folds,
                                const std::vector<double>& alpha_grid,
                                std::vector<uint8_t>* constant_flags) {
    require(latents.rows == fmri.rows, "pearson_map: row mismatch");
    require(folds >= 2 && folds <= latents.rows, "pearson_map: folds must be in [2, n]");
    const size_t n = latents.rows, q = fmri.cols;
    MatD pred(n, q);
    for (size_t f = 0; f < folds; ++f) {
        const size_t a = f * n / folds, b = (f + 1) * n / folds;
        if (a == b) continue;
        const RidgeModel m =
            fit_ridge(take_rows(latents, a, b, true), take_rows(fmri, a, b, true), alpha_grid, 2);
        const MatD ph = ridge_predict(m, take_rows(latents, a, b, false));
        for (size_t i = a; i < b; ++i)
            std::copy(ph.row(i - a), ph.row(i - a) + q, pred.row(i));
    }
    std::vector<double> r(q);
    if (constant_flags) constant_flags->assign(q, 0);
    std::vector<double> pv(n), av(n);
    for (size_t j = 0; j < q; ++j) {
        for (size_t i = 0; i < n; ++i) {
            pv[i] = pred(i, j);
            av[i] = fmri(i, j);
        }
        bool undef = false;
        r[j] = pearson(pv, av, &undef);
        if (undef && constant_flags) (*constant_flags)[j] = 1;
    }
    return r;
}

namespace {

void add_ridge(Checkpoint& c, const std::string& p, const RidgeModel& m) {
    c.add_matd(p + "weights", m.weights);
    c.add_vecd(p + "x_mean", m.x_mean);
    c.add_vecd(p + "y_mean", m.y_mean);
    c.add_scalar(p + "alpha", m.alpha);
}

RidgeModel ridge_from(const Checkpoint& c, const std::string& p) {
    RidgeModel m;
    m.weights = c.matd(p + "weights");
    m.x_mean = c.vecd(p + "x_mean");
    m.y_mean = c.vecd(p + "y_mean");
    m.alpha = c.scalar(p + "alpha");
    return m;
}

std::vector<double> to_dbl(const std::vector<int>& v) {
    return std::vector<double>(v.begin(), v.end());
}

std::vector<int> to_int(const std::vector<double>& v) {
    std::vector<int> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = int(std::llround(v[i]));
    return out;
}

} // namespace

void save_decoder(const DecoderBundle& d, const std::string& path,
                  const std::string& config_echo) {
    Checkpoint c;
    c.add_text("meta.kind", "decoder");
    c.add_text("meta.config_text", config_echo);
    add_ridge(c, "enc.", d.enc.ridge);
    c.add_vecd("enc.sigma2", d.enc.sigma2);
    c.add_vecd("enc.delays", to_dbl(d.enc.delays));
    c.add_scalar("enc.lobes", d.enc.lobes);
    c.add_scalar("enc.tr_seconds", d.enc.tr_seconds);
    add_ridge(c, "rate.", d.rate.ridge);
    c.add_vecd("rate.delays", to_dbl(d.rate.delays));
    c.add_vecd("prior.start", d.prior.start_table());
    c.add_matd("prior.bigram", d.prior.bigram_table());
    c.add_matd("stim_table", d.stim_table);
    save_checkpoint(c, path);
}

DecoderBundle load_decoder(const std::string& path) {
    const Checkpoint c = load_checkpoint(path);
    require(c.text("meta.kind") == "decoder", "decoder load: wrong checkpoint kind");
    EncodingModel enc;
    enc.ridge = ridge_from(c, "enc.");
    enc.sigma2 = c.vecd("enc.sigma2");
    enc.delays = to_int(c.vecd("enc.delays"));
    enc.lobes = int(std::llround(c.scalar("enc.lobes")));
    enc.tr_seconds = c.scalar("enc.tr_seconds");
    WordRateModel rate;
    rate.ridge = ridge_from(c, "rate.");
    rate.delays = to_int(c.vecd("rate.delays"));
    return DecoderBundle{std::move(enc), std::move(rate),
                         BigramPrior(c.vecd("prior.start"), c.matd("prior.bigram")),
                         c.matd("stim_table")};
}

} // namespace fg2
