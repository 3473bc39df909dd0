// Gesture metric tests. Each metric is checked against either a hand
// computation, a brute-force recomputation, or (for the Frechet score) the
// closed form for diagonal Gaussians built from exactly-known sample stats.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fg2/metrics.hpp"
#include "fg2/rng.hpp"

#include <cmath>
#include <vector>

using namespace fg2;

namespace {

ClipSet random_set(Rng& rng, size_t clips, size_t rows, size_t cols) {
    ClipSet s;
    for (size_t i = 0; i < clips; ++i) s.push_back(MatF::normal(rows, cols, rng));
    return s;
}

// One-keypoint clip whose per-frame speed profile is exactly `speeds`
// (speeds[0] is ignored; motion is monotone +x so displacement == speed).
MatF clip_from_speeds(const std::vector<double>& speeds) {
    MatF c(speeds.size(), 2);
    double x = 0.0;
    c(0, 0) = 0;
    c(0, 1) = 0;
    for (size_t n = 1; n < speeds.size(); ++n) {
        x += speeds[n];
        c(n, 0) = float(x);
        c(n, 1) = 0;
    }
    return c;
}

} // namespace

TEST_CASE("mae/ape: uniform displacement has a hand answer") {
    // Every keypoint moved by (3, 4): per-coordinate MAE 3.5, per-joint APE 5.
    MatF ref(6, 8);
    Rng rng(3);
    for (auto& v : ref.v) v = float(rng.normal());
    MatF pred = ref;
    for (size_t i = 0; i < pred.rows; ++i)
        for (size_t k = 0; k < 4; ++k) {
            pred(i, 2 * k) += 3.0f;
            pred(i, 2 * k + 1) += 4.0f;
        }
    CHECK(metric_mae({pred}, {ref}) == doctest::Approx(3.5).epsilon(1e-6));
    CHECK(metric_ape({pred}, {ref}) == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("mae/ape: random sets match a brute-force recomputation") {
    Rng rng(11);
    ClipSet a = random_set(rng, 3, 7, 10);
    ClipSet b = random_set(rng, 3, 7, 10);
    double mae = 0, ape = 0;
    size_t nm = 0, na = 0;
    for (size_t c = 0; c < 3; ++c)
        for (size_t i = 0; i < 7; ++i)
            for (size_t k = 0; k < 5; ++k) {
                const double dx = a[c](i, 2 * k) - b[c](i, 2 * k);
                const double dy = a[c](i, 2 * k + 1) - b[c](i, 2 * k + 1);
                mae += std::abs(dx) + std::abs(dy);
                nm += 2;
                ape += std::hypot(dx, dy);
                ++na;
            }
    CHECK(metric_mae(a, b) == doctest::Approx(mae / nm).epsilon(1e-9));
    CHECK(metric_ape(a, b) == doctest::Approx(ape / na).epsilon(1e-9));
}

TEST_CASE("mae: identical sets score zero") {
    Rng rng(4);
    ClipSet a = random_set(rng, 2, 5, 12);
    CHECK(metric_mae(a, a) == 0.0);
    CHECK(metric_ape(a, a) == 0.0);
    CHECK(metric_pck(a, a) == 1.0);
}

TEST_CASE("mae/ape: shape and emptiness validation") {
    ClipSet a = {MatF(3, 4)}, b = {MatF(3, 6)};
    CHECK_THROWS_AS(metric_mae(a, b), DataError);
    CHECK_THROWS_AS(metric_mae({}, {}), DataError);
    ClipSet odd1 = {MatF(3, 5)}, odd2 = {MatF(3, 5)};
    CHECK_THROWS_AS(metric_ape(odd1, odd2), DataError);
}

TEST_CASE("pck: relative threshold from reference shoulder distance") {
    // 10 keypoints; shoulders (indices 1, 4) one unit apart -> threshold 0.2.
    MatF ref(4, 20);
    for (size_t i = 0; i < 4; ++i) {
        ref(i, 2 * 1) = 0.0f; // shoulder a at x=0
        ref(i, 2 * 4) = 1.0f; // shoulder b at x=1
    }
    MatF pred = ref;
    // keypoints 0..4 displaced by 0.1 (hits), 5..9 by 0.3 (misses)
    for (size_t i = 0; i < 4; ++i)
        for (size_t k = 0; k < 10; ++k) pred(i, 2 * k) += (k < 5) ? 0.1f : 0.3f;
    CHECK(metric_pck({pred}, {ref}) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("pck: degenerate shoulders fall back to the absolute threshold") {
    MetricsConfig cfg; // shoulders both at origin -> fallback pck_abs = 0.2
    MatF ref(2, 20);   // all zeros
    MatF pred = ref;
    for (size_t i = 0; i < 2; ++i)
        for (size_t k = 0; k < 10; ++k) pred(i, 2 * k) += (k % 2 == 0) ? 0.15f : 0.25f;
    CHECK(metric_pck({pred}, {ref}, cfg) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("pck: absolute mode ignores shoulders entirely") {
    MetricsConfig cfg;
    cfg.pck_absolute = true;
    cfg.pck_abs = 1.0;
    MatF ref(3, 4); // 2 keypoints, shoulder indices 1 and 4 would be invalid
    MatF pred = ref;
    pred(0, 0) = 0.5f;  // hit
    pred(1, 2) = 2.0f;  // miss
    CHECK(metric_pck({pred}, {ref}, cfg) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    MetricsConfig rel; // relative mode with 2 keypoints must reject index 4
    CHECK_THROWS_AS(metric_pck({pred}, {ref}, rel), DataError);
}

TEST_CASE("fgd: diagonal Gaussians with exact sample stats match the closed form") {
    // Set A rows: (+-1.5, 0), (0, +-0.75)  -> mean 0, unbiased cov diag(1.5, 0.375)
    // Set B rows: same pattern scaled (1.25, 2.5), shifted by (0.5, -0.25).
    // All values dyadic, so float storage and the sample stats are exact.
    auto build = [](double sx, double sy, double mx, double my) {
        MatF c1(2, 2), c2(2, 2);
        c1(0, 0) = float(sx + mx);
        c1(0, 1) = float(my);
        c1(1, 0) = float(-sx + mx);
        c1(1, 1) = float(my);
        c2(0, 0) = float(mx);
        c2(0, 1) = float(sy + my);
        c2(1, 0) = float(mx);
        c2(1, 1) = float(-sy + my);
        return ClipSet{c1, c2};
    };
    ClipSet a = build(1.5, 0.75, 0.0, 0.0);
    ClipSet b = build(1.25, 2.5, 0.5, -0.25);
    const double c1x = 2 * 1.5 * 1.5 / 3 + 1e-6, c1y = 2 * 0.75 * 0.75 / 3 + 1e-6;
    const double c2x = 2 * 1.25 * 1.25 / 3 + 1e-6, c2y = 2 * 2.5 * 2.5 / 3 + 1e-6;
    // FGD for diagonals: |dmu|^2 + sum_i (sqrt(c1i) - sqrt(c2i))^2
    const double want = 0.5 * 0.5 + 0.25 * 0.25 +
                        (c1x + c2x - 2 * std::sqrt(c1x * c2x)) +
                        (c1y + c2y - 2 * std::sqrt(c1y * c2y));
    bool degenerate = true;
    const double got = metric_fgd(a, b, {}, &degenerate);
    CHECK(!degenerate);
    CHECK(got == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("fgd: identical sets score ~0 and order does not matter") {
    Rng rng(17);
    ClipSet a = random_set(rng, 3, 6, 8);
    ClipSet b = random_set(rng, 3, 6, 8);
    CHECK(std::abs(metric_fgd(a, a)) < 1e-9);
    const double ab = metric_fgd(a, b), ba = metric_fgd(b, a);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-8));
    CHECK(ab > 0.0);
}

TEST_CASE("fgd: full-rank PCA projection preserves the score") {
    Rng rng(19);
    ClipSet a = random_set(rng, 2, 8, 3);
    ClipSet b = random_set(rng, 2, 8, 3);
    MetricsConfig pca;
    pca.fgd_pca_dims = 3;
    CHECK(metric_fgd(a, b, pca) == doctest::Approx(metric_fgd(a, b)).epsilon(1e-6));
}

TEST_CASE("fgd: PCA to one dimension keeps a pure x shift intact") {
    auto build = [](double shift) {
        MatF c1(2, 2), c2(2, 2);
        c1(0, 0) = float(1.5 + shift);
        c1(1, 0) = float(-1.5 + shift);
        c2(0, 0) = float(0.5 + shift);
        c2(1, 0) = float(-0.5 + shift);
        c1(0, 1) = c1(1, 1) = c2(0, 1) = c2(1, 1) = 0.0f;
        return ClipSet{c1, c2};
    };
    ClipSet a = build(0.0), b = build(0.5);
    MetricsConfig pca;
    pca.fgd_pca_dims = 1;
    // identical spreads, mean shift 0.5 along the only varying axis
    CHECK(metric_fgd(a, b, pca) == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(metric_fgd(a, b) == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("fgd: set size validation") {
    ClipSet one = {MatF(4, 2)};
    ClipSet two = {MatF(4, 2), MatF(4, 2)};
    CHECK_THROWS_AS(metric_fgd(one, two), DataError);
    CHECK_THROWS_AS(metric_fgd(two, one), DataError);
}

TEST_CASE("beat consistency: beat exactly on an onset scores 1") {
    MatF clip = clip_from_speeds({0, 3, 3, 0.5, 3, 3, 3, 3});
    bool no_beats = true;
    const double bc = beat_consistency(clip, {3}, 1.5, &no_beats);
    CHECK(!no_beats);
    CHECK(bc == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("beat consistency: one-frame offset scores exp(-1/(2 sigma^2))") {
    MatF clip = clip_from_speeds({0, 3, 3, 0.5, 3, 3, 3, 3});
    CHECK(beat_consistency(clip, {4}, 1.5) ==
          doctest::Approx(std::exp(-1.0 / 4.5)).epsilon(1e-9));
    CHECK(beat_consistency(clip, {4}, 1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
    // nearest onset wins
    CHECK(beat_consistency(clip, {4, 3, 30}, 1.5) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("beat consistency: two beats average their scores") {
    // strict minima below median at n=3 and n=7
    MatF clip = clip_from_speeds({0, 3, 3, 0.5, 3, 4, 3, 0.5, 3, 3, 3});
    const double want = 0.5 * (1.0 + std::exp(-1.0 / 4.5));
    CHECK(beat_consistency(clip, {3, 8}, 1.5) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("beat consistency: constant motion has no beats") {
    MatF clip = clip_from_speeds({0, 2, 2, 2, 2, 2, 2});
    bool no_beats = false;
    CHECK(beat_consistency(clip, {2}, 1.5, &no_beats) == 0.0);
    CHECK(no_beats);
}

TEST_CASE("beat consistency: validation") {
    MatF clip = clip_from_speeds({0, 1, 2, 1, 2});
    CHECK_THROWS_AS(beat_consistency(clip, {}, 1.5), DataError);
    CHECK_THROWS_AS(beat_consistency(clip, {1}, 0.0), DataError);
    MatF tiny(3, 2);
    CHECK_THROWS_AS(beat_consistency(tiny, {1}, 1.5), DataError);
}

TEST_CASE("diversity: mean pairwise Frobenius distance") {
    MatF a(2, 2), b(2, 2), c(2, 2);
    b.v = {1, 1, 1, 1};                       // |a-b| = 2
    c.v = {3, 0, 0, 4};                       // |a-c| = 5, |b-c| = sqrt(4+1+1+9) = sqrt(15)
    const double want = (2.0 + 5.0 + std::sqrt(15.0)) / 3.0;
    CHECK(metric_diversity({a, b, c}) == doctest::Approx(want).epsilon(1e-7));
    CHECK(metric_diversity({a, a}) == 0.0);
    CHECK_THROWS_AS(metric_diversity({a}), DataError);
}

TEST_CASE("pearson: exact lines, symmetry, undefined flag") {
    std::vector<double> x = {1, 2, 3, 4, 5};
    std::vector<double> y, z, flat(5, 2.0);
    for (double v : x) {
        y.push_back(2 * v + 1);
        z.push_back(-v + 7);
    }
    CHECK(pearson(x, y) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pearson(x, z) == doctest::Approx(-1.0).epsilon(1e-12));
    bool undef = false;
    CHECK(pearson(x, flat, &undef) == 0.0);
    CHECK(undef);
    // hand case: x=(0,1,2), y=(1,0,2) -> r = 0.5
    std::vector<double> h1 = {0, 1, 2}, h2 = {1, 0, 2};
    CHECK(pearson(h1, h2) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pearson(h2, h1) == doctest::Approx(0.5).epsilon(1e-12));
    std::vector<double> short1 = {1.0};
    CHECK_THROWS_AS(pearson(short1, short1), DataError);
}

TEST_CASE("evaluate_clips: identity report and onset plumbing") {
    Rng rng(23);
    ClipSet ref;
    for (int i = 0; i < 3; ++i) {
        MatF c = MatF::normal(12, 10, rng);
        ref.push_back(c);
    }
    MetricsReport r = evaluate_clips(ref, ref, nullptr, {});
    CHECK(r.mae == 0.0);
    CHECK(r.ape == 0.0);
    CHECK(r.pck == 1.0);
    CHECK(std::abs(r.fgd) < 1e-9);
    CHECK(!r.has_bc);
    CHECK(r.n_pred == 3);
    CHECK(r.n_ref == 3);
    CHECK(r.diversity == doctest::Approx(metric_diversity(ref)).epsilon(1e-12));

    std::vector<std::vector<size_t>> onsets(3, std::vector<size_t>{2, 7});
    MetricsReport r2 = evaluate_clips(ref, ref, &onsets, {});
    CHECK(r2.has_bc);
    double bc = 0;
    for (int i = 0; i < 3; ++i) bc += beat_consistency(ref[size_t(i)], onsets[size_t(i)], 1.5);
    CHECK(r2.bc == doctest::Approx(bc / 3.0).epsilon(1e-12));

    std::vector<std::vector<size_t>> wrong(2);
    CHECK_THROWS_AS(evaluate_clips(ref, ref, &wrong, {}), DataError);
}
