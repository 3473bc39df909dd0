#include "fg2/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "fg2/kernels.hpp"
#include "fg2/linalg.hpp"

namespace fg2 {

namespace {

void require_matched(const ClipSet& a, const ClipSet& b, const char* who) {
    require(!a.empty() && a.size() == b.size(), std::string(who) + ": clip sets must match");
    for (size_t i = 0; i < a.size(); ++i)
        require(a[i].same_shape(b[i]), std::string(who) + ": clip shape mismatch");
}

// Unbiased mean/covariance of per-frame feature rows pooled over a clip set.
void gaussian_fit(const std::vector<std::vector<double>>& rows, std::vector<double>& mu,
                  MatD& cov) {
    const size_t n = rows.size(), d = rows[0].size();
    require(n >= 2, "fgd: need at least 2 feature rows per set");
    mu.assign(d, 0.0);
    for (const auto& r : rows)
        for (size_t j = 0; j < d; ++j) mu[j] += r[j];
    for (size_t j = 0; j < d; ++j) mu[j] /= double(n);
    cov = MatD(d, d);
    for (const auto& r : rows)
        for (size_t i = 0; i < d; ++i) {
            const double di = r[i] - mu[i];
            for (size_t j = i; j < d; ++j) cov(i, j) += di * (r[j] - mu[j]);
        }
    for (size_t i = 0; i < d; ++i)
        for (size_t j = i; j < d; ++j) {
            cov(i, j) /= double(n - 1);
            cov(j, i) = cov(i, j);
        }
    for (size_t i = 0; i < d; ++i) cov(i, i) += 1e-6;
}

std::vector<std::vector<double>> frame_rows(const ClipSet& set) {
    std::vector<std::vector<double>> rows;
    for (const auto& c : set)
        for (size_t i = 0; i < c.rows; ++i) {
            std::vector<double> r(c.cols);
            for (size_t j = 0; j < c.cols; ++j) r[j] = double(c(i, j));
            rows.push_back(std::move(r));
        }
    return rows;
}

// Symmetric PSD square root via eigendecomposition (eigenvalues clamped at 0).
MatD psd_sqrt(const MatD& a) {
    const EigSym eg = eigh(a);
    const size_t d = a.rows;
    MatD out(d, d);
    for (size_t k = 0; k < d; ++k) {
        const double s = std::sqrt(std::max(eg.values[k], 0.0));
        if (s == 0.0) continue;
        for (size_t i = 0; i < d; ++i)
            for (size_t j = 0; j < d; ++j) out(i, j) += s * eg.vectors(i, k) * eg.vectors(j, k);
    }
    return out;
}

} // namespace

double metric_mae(const ClipSet& a, const ClipSet& b) {
    require_matched(a, b, "mae");
    double s = 0.0;
    size_t n = 0;
    for (size_t c = 0; c < a.size(); ++c) {
        for (size_t i = 0; i < a[c].size(); ++i) s += std::abs(double(a[c].v[i]) - double(b[c].v[i]));
        n += a[c].size();
    }
    return s / double(n);
}

double metric_ape(const ClipSet& a, const ClipSet& b) {
    require_matched(a, b, "ape");
    double s = 0.0;
    size_t n = 0;
    for (size_t c = 0; c < a.size(); ++c) {
        require(a[c].cols % 2 == 0, "ape: odd coordinate count");
        for (size_t i = 0; i < a[c].rows; ++i)
            for (size_t k = 0; k < a[c].cols / 2; ++k) {
                const double dx = double(a[c](i, 2 * k)) - double(b[c](i, 2 * k));
                const double dy = double(a[c](i, 2 * k + 1)) - double(b[c](i, 2 * k + 1));
                s += std::sqrt(dx * dx + dy * dy);
                ++n;
            }
    }
    return s / double(n);
}

double metric_pck(const ClipSet& pred, const ClipSet& ref, const MetricsConfig& cfg) {
    require_matched(pred, ref, "pck");
    size_t hit = 0, n = 0;
    for (size_t c = 0; c < pred.size(); ++c) {
        const size_t kp = pred[c].cols / 2;
        require(cfg.pck_absolute ||
                    (cfg.shoulder_a < kp && cfg.shoulder_b < kp && cfg.shoulder_a != cfg.shoulder_b),
                "pck: shoulder indices out of range");
        for (size_t i = 0; i < pred[c].rows; ++i) {
            double thr = cfg.pck_abs;
            if (!cfg.pck_absolute) {
                const double sx = double(ref[c](i, 2 * cfg.shoulder_a)) - double(ref[c](i, 2 * cfg.shoulder_b));
                const double sy = double(ref[c](i, 2 * cfg.shoulder_a + 1)) - double(ref[c](i, 2 * cfg.shoulder_b + 1));
                const double shoulder = std::sqrt(sx * sx + sy * sy);
                thr = shoulder < 1e-6 ? cfg.pck_abs : cfg.pck_rel * shoulder;
            }
            for (size_t k = 0; k < kp; ++k) {
                const double dx = double(pred[c](i, 2 * k)) - double(ref[c](i, 2 * k));
                const double dy = double(pred[c](i, 2 * k + 1)) - double(ref[c](i, 2 * k + 1));
                if (std::sqrt(dx * dx + dy * dy) <= thr) ++hit;
                ++n;
            }
        }
    }
    return double(hit) / double(n);
}

double metric_fgd(const ClipSet& a, const ClipSet& b, const MetricsConfig& cfg, bool* degenerate) {
    require(a.size() >= 2 && b.size() >= 2, "fgd: each set needs at least 2 clips");
    if (degenerate) *degenerate = false;

    std::vector<std::vector<double>> ra = frame_rows(a), rb = frame_rows(b);

    if (cfg.fgd_pca_dims > 0) {
        // project both sets onto the top eigenvectors of the pooled covariance
        std::vector<std::vector<double>> pooled = ra;
        pooled.insert(pooled.end(), rb.begin(), rb.end());
        std::vector<double> mu;
        MatD cov;
        gaussian_fit(pooled, mu, cov);
        const EigSym eg = eigh(cov);
        const size_t d = cov.rows, keep = std::min(cfg.fgd_pca_dims, d);
        auto project = [&](std::vector<std::vector<double>>& rows) {
            for (auto& r : rows) {
                std::vector<double> p(keep);
                for (size_t k = 0; k < keep; ++k) {
                    double s = 0.0;
                    const size_t col = d - 1 - k; // eigenvalues ascend; take from the top
                    for (size_t j = 0; j < d; ++j) s += (r[j] - mu[j]) * eg.vectors(j, col);
                    p[k] = s;
                }
                r = std::move(p);
            }
        };
        project(ra);
        project(rb);
    }

    std::vector<double> mu1, mu2;
    MatD c1, c2;
    gaussian_fit(ra, mu1, c1);
    gaussian_fit(rb, mu2, c2);
    const size_t d = c1.rows;

    double mean_term = 0.0;
    for (size_t j = 0; j < d; ++j) {
        const double diff = mu1[j] - mu2[j];
        mean_term += diff * diff;
    }
    double tr1 = 0.0, tr2 = 0.0;
    for (size_t j = 0; j < d; ++j) {
        tr1 += c1(j, j);
        tr2 += c2(j, j);
    }

    // Tr((C1 C2)^{1/2}) = sum sqrt(eig(C1^{1/2} C2 C1^{1/2}))
    const MatD s1 = psd_sqrt(c1);
    MatD tmp(d, d), inner(d, d);
    kern::gemm_nn(d, d, d, s1.data(), c2.data(), tmp.data(), false);
    kern::gemm_nn(d, d, d, tmp.data(), s1.data(), inner.data(), false);
    for (size_t i = 0; i < d; ++i)
        for (size_t j = i + 1; j < d; ++j) {
            const double sym = 0.5 * (inner(i, j) + inner(j, i));
            inner(i, j) = inner(j, i) = sym;
        }
    const EigSym eg = eigh(inner);
    double tr_sqrt = 0.0;
    bool bad = false;
    for (double w : eg.values) {
        if (w < -1e-8) bad = true;
        tr_sqrt += std::sqrt(std::max(w, 0.0));
    }
    if (degenerate) *degenerate = bad;
    return mean_term + tr1 + tr2 - 2.0 * tr_sqrt;
}

double beat_consistency(const MatF& clip, const std::vector<size_t>& onset_frames,
                        double sigma_frames, bool* no_beats) {
    require(!onset_frames.empty(), "beat_consistency: empty onset list");
    require(sigma_frames > 0, "beat_consistency: sigma must be positive");
    require(clip.rows >= 4, "beat_consistency: clip too short for speed minima");
    if (no_beats) *no_beats = false;

    // speed at frame n = mean keypoint displacement from frame n-1
    const size_t kp = clip.cols / 2;
    std::vector<double> speed(clip.rows, 0.0);
    for (size_t n = 1; n < clip.rows; ++n) {
        double s = 0.0;
        for (size_t k = 0; k < kp; ++k) {
            const double dx = double(clip(n, 2 * k)) - double(clip(n - 1, 2 * k));
            const double dy = double(clip(n, 2 * k + 1)) - double(clip(n - 1, 2 * k + 1));
            s += std::sqrt(dx * dx + dy * dy);
        }
        speed[n] = s / double(kp);
    }

    std::vector<double> sorted(speed.begin() + 1, speed.end());
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted.size() % 2 == 1
                              ? sorted[sorted.size() / 2]
                              : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);

    std::vector<size_t> beats;
    for (size_t n = 2; n + 1 < clip.rows; ++n)
        if (speed[n] < speed[n - 1] && speed[n] < speed[n + 1] && speed[n] < median)
            beats.push_back(n);

    if (beats.empty()) {
        if (no_beats) *no_beats = true;
        return 0.0;
    }
    double bc = 0.0;
    for (size_t b : beats) {
        double dmin = 1e300;
        for (size_t o : onset_frames) {
            const double d = double(b) - double(o);
            dmin = std::min(dmin, d * d);
        }
        bc += std::exp(-dmin / (2.0 * sigma_frames * sigma_frames));
    }
    return bc / double(beats.size());
}

double metric_diversity(const ClipSet& clips) {
    require(clips.size() >= 2, "diversity: need at least 2 clips");
    double s = 0.0;
    size_t pairs = 0;
    for (size_t i = 0; i < clips.size(); ++i)
        for (size_t j = i + 1; j < clips.size(); ++j) {
            require(clips[i].same_shape(clips[j]), "diversity: clip shape mismatch");
            double d2 = 0.0;
            for (size_t k = 0; k < clips[i].size(); ++k) {
                const double d = double(clips[i].v[k]) - double(clips[j].v[k]);
                d2 += d * d;
            }
            s += std::sqrt(d2);
            ++pairs;
        }
    return s / double(pairs);
}

double pearson(std::span<const double> a, std::span<const double> b, bool* undefined) {
    require(a.size() == b.size() && a.size() >= 2, "pearson: need matched series of length >= 2");
    if (undefined) *undefined = false;
    const double n = double(a.size());
    double ma = 0, mb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa < 1e-24 || sbb < 1e-24) {
        if (undefined) *undefined = true;
        return 0.0;
    }
    return sab / std::sqrt(saa * sbb);
}

MetricsReport evaluate_clips(const ClipSet& pred, const ClipSet& ref,
                             const std::vector<std::vector<size_t>>* onsets_per_pred_clip,
                             const MetricsConfig& cfg) {
    MetricsReport r;
    r.config = cfg;
    r.n_pred = pred.size();
    r.n_ref = ref.size();
    r.mae = metric_mae(pred, ref);
    r.ape = metric_ape(pred, ref);
    r.pck = metric_pck(pred, ref, cfg);
    if (pred.size() >= 2 && ref.size() >= 2) r.fgd = metric_fgd(pred, ref, cfg, &r.fgd_degenerate);
    if (pred.size() >= 2) r.diversity = metric_diversity(pred);
    if (onsets_per_pred_clip) {
        require(onsets_per_pred_clip->size() == pred.size(), "evaluate: onset track count mismatch");
        double bc = 0.0;
        bool any_flag = false;
        for (size_t i = 0; i < pred.size(); ++i) {
            bool flag = false;
            bc += beat_consistency(pred[i], (*onsets_per_pred_clip)[i], cfg.bc_sigma_frames, &flag);
            any_flag = any_flag || flag;
        }
        r.bc = bc / double(pred.size());
        r.bc_no_beats = any_flag;
        r.has_bc = true;
    }
    return r;
}

} // namespace fg2
