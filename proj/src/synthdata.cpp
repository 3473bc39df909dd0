#include "fg2/synthdata.hpp"

#include <cmath>

#include "fg2/align.hpp"
#include "fg2/f2t.hpp"
#include "fg2/kernels.hpp"

namespace fg2 {

namespace {

constexpr double kPi = 3.14159265358979323846;

// 49 keypoints: 0 head; 1-3 left shoulder/elbow/wrist; 4-6 right; 7 left
// palm + 20 finger joints; 28 right palm + 20 finger joints. y grows down.
std::vector<double> make_base_pose() {
    std::vector<double> p(98, 0.0);
    auto set = [&](size_t kp, double x, double y) {
        p[2 * kp] = x;
        p[2 * kp + 1] = y;
    };
    set(0, 0.0, -0.75);
    set(1, -0.35, -0.45);
    set(2, -0.55, -0.15);
    set(3, -0.60, 0.15);
    set(4, 0.35, -0.45);
    set(5, 0.55, -0.15);
    set(6, 0.60, 0.15);
    auto hand = [&](size_t palm, double wx, double wy, double side) {
        set(palm, wx + side * 0.02, wy + 0.08);
        for (size_t f = 0; f < 5; ++f) {
            const double ang = (90.0 + side * 10.0 + side * (double(f) - 2.0) * 18.0) * kPi / 180.0;
            for (size_t j = 0; j < 4; ++j) {
                const double r = 0.06 + 0.05 * double(j);
                set(palm + 1 + 4 * f + j, p[2 * palm] + r * std::cos(ang),
                    p[2 * palm + 1] + r * std::sin(ang));
            }
        }
    };
    hand(7, -0.60, 0.15, -1.0);
    hand(28, 0.60, 0.15, 1.0);
    return p;
}

MatD make_transitions(size_t vocab, size_t successors, Rng rng) {
    MatD t(vocab, vocab);
    std::vector<size_t> picked;
    for (size_t w = 0; w < vocab; ++w) {
        picked.clear();
        while (picked.size() < successors) {
            const size_t c = size_t(rng.below(uint64_t(vocab)));
            if (std::find(picked.begin(), picked.end(), c) == picked.end()) picked.push_back(c);
        }
        double tot = 0.0;
        std::vector<double> wt(successors);
        for (size_t i = 0; i < successors; ++i) {
            wt[i] = 1.0 + 0.1 * rng.uniform(); // near-uniform, not exactly tied
            tot += wt[i];
        }
        for (size_t i = 0; i < successors; ++i) t(w, picked[i]) = wt[i] / tot;
    }
    return t;
}

int sample_row(const MatD& trans, int from, Rng& rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    for (size_t c = 0; c < trans.cols; ++c) {
        cum += trans(size_t(from), c);
        if (u < cum) return int(c);
    }
    return int(trans.cols - 1); // u landed in the terminal rounding gap
}

} // namespace

int World::rate_of(int word) const {
    require(word >= 0 && size_t(word) < spec.vocab, "rate_of: word id out of range");
    if (spec.rate_mode == RateMode::constant) return 1;
    return stim_table(size_t(word), 1) > 0.0 ? 2 : 1;
}

World World::make(const WorldSpec& spec) {
    require(spec.vocab >= 2 && spec.d_z >= 1 && spec.d_e >= 2 && spec.d_x >= 1 &&
                spec.d_f >= 1 && spec.x_dim == 98,
            "world: bad dimensions");
    require(spec.successors >= 1 && spec.successors <= spec.vocab, "world: bad successor count");
    require(spec.start_words >= 1 && spec.start_words <= spec.vocab, "world: bad start range");
    require(spec.sigma_g >= 0 && spec.sigma_f >= 0, "world: noise scales must be >= 0");
    World w;
    w.spec = spec;
    Rng master(spec.seed);

    Rng r_lat = master.child("latent");
    w.latent = MatD::normal(spec.vocab, spec.d_z, r_lat);

    // Channel 0 is a constant presence mass (every word injects 0.5), so the
    // per-TR word count is a linear readout of the Lanczos features; channel
    // 1 is a +-0.5 rate flag, the sign of a fixed readout of the latent.
    Rng r_rate = master.child("rate");
    std::vector<double> u(spec.d_z);
    for (auto& x : u) x = r_rate.normal();
    Rng r_stim = master.child("stim");
    w.stim_table = MatD::normal(spec.vocab, spec.d_e, r_stim);
    for (size_t v = 0; v < spec.vocab; ++v) {
        const double s = kern::dot(spec.d_z, w.latent.row(v), u.data());
        w.stim_table(v, 0) = 0.5;
        w.stim_table(v, 1) = s >= 0.0 ? 0.5 : -0.5;
    }

    Rng r_cond = master.child("cond");
    w.cond_table = MatF::normal(spec.vocab, spec.d_x, r_cond);

    Rng r_read = master.child("readout");
    w.readout = MatD::normal(spec.d_z, spec.x_dim, r_read, 0.25 / std::sqrt(double(spec.d_z)));

    w.base_pose = make_base_pose();

    Rng r_beat = master.child("beat");
    w.beat_pattern.resize(spec.x_dim);
    for (auto& x : w.beat_pattern) x = r_beat.normal();

    Rng r_mix = master.child("mixing");
    const size_t p = 4 * spec.d_e;
    w.mixing = MatD::normal(p, spec.d_f, r_mix, 1.0 / std::sqrt(double(p)));

    w.trans_a = make_transitions(spec.vocab, spec.successors, master.child("trans.a"));
    w.trans_b = make_transitions(spec.vocab, spec.successors, master.child("trans.b"));
    return w;
}

WordChain sample_word_chain(const World& w, const MatD& trans, size_t n_words, Rng rng) {
    require(n_words >= 1, "sample_word_chain: need at least one word");
    require(trans.rows == w.spec.vocab && trans.cols == w.spec.vocab,
            "sample_word_chain: transition shape mismatch");
    WordChain c;
    int cur = int(rng.below(uint64_t(w.spec.start_words)));
    size_t placed = 0, tr = 0;
    while (placed < n_words) {
        const size_t m = std::min(size_t(w.rate_of(cur)), n_words - placed);
        for (size_t j = 0; j < m; ++j) {
            c.words.push_back(cur);
            c.onsets.push_back((double(tr) + (double(j) + 0.5) / double(m)) * w.spec.tr_seconds);
            ++placed;
            if (placed < n_words) cur = sample_row(trans, cur, rng);
        }
        c.counts.push_back(double(m));
        ++tr;
    }
    c.n_word_tr = tr;
    c.counts.resize(tr + w.spec.pad_tr, 0.0);
    c.n_tr = c.counts.size();
    return c;
}

GestureTrack render_gestures(const World& w, const WordChain& chain, Rng rng) {
    const size_t N = frames_per_tr(w.spec.tr_seconds, w.spec.fps);
    const size_t D = w.spec.x_dim;

    GestureTrack out;
    size_t word_at = 0;
    for (size_t tr = 0; tr < chain.n_word_tr; ++tr) {
        const size_t m = size_t(chain.counts[tr]);
        const std::vector<int> in_tr(chain.words.begin() + long(word_at),
                                     chain.words.begin() + long(word_at + m));
        const ReplicateResult rep = replicate_words(in_tr, N);
        out.fwords.insert(out.fwords.end(), rep.frames.begin(), rep.frames.end());
        word_at += m;
    }

    // Per-word pose offsets, precomputed: latent . readout.
    MatD offsets(w.spec.vocab, D);
    kern::gemm_nn(w.spec.vocab, w.spec.d_z, D, w.latent.data(), w.readout.data(), offsets.data());

    out.frames = MatF(out.fwords.size(), D);
    for (size_t n = 0; n < out.fwords.size(); ++n) {
        const double beat =
            w.spec.beat_amp * std::sin(2.0 * kPi * double(n) / double(w.spec.beat_period));
        const double* off = offsets.row(size_t(out.fwords[n]));
        float* row = out.frames.row(n);
        for (size_t d = 0; d < D; ++d) {
            double x = w.base_pose[d] + off[d] + beat * w.beat_pattern[d];
            if (w.spec.sigma_g > 0) x += w.spec.sigma_g * rng.normal();
            row[d] = float(x);
        }
    }
    return out;
}

MatD render_fmri(const World& w, const WordChain& chain, Rng rng) {
    MatD embs(chain.words.size(), w.spec.d_e);
    for (size_t i = 0; i < chain.words.size(); ++i)
        std::copy(w.stim_table.row(size_t(chain.words[i])),
                  w.stim_table.row(size_t(chain.words[i])) + w.spec.d_e, embs.row(i));
    const MatD feats = lanczos_to_tr(chain.onsets, embs, chain.n_tr, w.spec.tr_seconds);
    const MatD X = build_delayed_stimulus(feats);
    MatD vox(chain.n_tr, w.spec.d_f);
    kern::gemm_nn(chain.n_tr, X.cols, w.spec.d_f, X.data(), w.mixing.data(), vox.data());
    if (w.spec.sigma_f > 0)
        for (auto& v : vox.v) v += w.spec.sigma_f * rng.normal();
    return vox;
}

namespace {

std::vector<int32_t> to_i32(const std::vector<int>& v) {
    return std::vector<int32_t>(v.begin(), v.end());
}

void add_chain_truth(Container& c, const std::string& p, const WordChain& chain) {
    c.add(ArrayData::of_i32(p + "words", {chain.words.size()}, to_i32(chain.words)));
    c.add(ArrayData::of_f64(p + "onsets", {chain.onsets.size()}, chain.onsets));
}

void add_fmri_record(Container& c, const std::string& p, const World& w, const WordChain& chain,
                     const MatD& vox, bool with_counts) {
    c.add(ArrayData::of_f64(p + "voxels", {vox.rows, vox.cols}, vox.v));
    add_chain_truth(c, p, chain);
    if (with_counts) c.add(ArrayData::of_f64(p + "counts", {chain.counts.size()}, chain.counts));
    (void)w;
}

} // namespace

Container build_datasets(const WorldSpec& spec, const DatasetSizes& sizes) {
    const World w = World::make(spec);
    Rng master(spec.seed);
    Container c;

    c.manifest["format"] = "fg2-dataset-v1";
    c.manifest["seed"] = std::to_string(spec.seed);
    c.manifest["vocab"] = std::to_string(spec.vocab);
    c.manifest["d_z"] = std::to_string(spec.d_z);
    c.manifest["d_e"] = std::to_string(spec.d_e);
    c.manifest["d_x"] = std::to_string(spec.d_x);
    c.manifest["d_f"] = std::to_string(spec.d_f);
    c.manifest["x_dim"] = std::to_string(spec.x_dim);
    c.manifest["fps"] = format_double(spec.fps);
    c.manifest["tr_seconds"] = format_double(spec.tr_seconds);
    c.manifest["sigma_g"] = format_double(spec.sigma_g);
    c.manifest["sigma_f"] = format_double(spec.sigma_f);
    c.manifest["beat_amp"] = format_double(spec.beat_amp);
    c.manifest["beat_period"] = std::to_string(spec.beat_period);
    c.manifest["successors"] = std::to_string(spec.successors);
    c.manifest["start_words"] = std::to_string(spec.start_words);
    c.manifest["rate_mode"] = spec.rate_mode == RateMode::constant ? "constant" : "word";
    c.manifest["pad_tr"] = std::to_string(spec.pad_tr);
    c.manifest["bones"] = skeleton_bones();
    c.manifest["t2g.records"] = std::to_string(sizes.t2g_records);
    c.manifest["f2t.records"] = std::to_string(sizes.f2t_records);
    c.manifest["unpaired.records"] = std::to_string(sizes.unpaired_records);
    c.manifest["heldout.records"] = std::to_string(sizes.heldout_records);
    c.manifest["prior.sequences"] = std::to_string(sizes.prior_sequences);

    c.add(ArrayData::of_f64("world.stim_table", {spec.vocab, spec.d_e}, w.stim_table.v));
    c.add(ArrayData::of_f32("world.cond_table", {spec.vocab, spec.d_x}, w.cond_table.v));
    c.add(ArrayData::of_f64("world.latent", {spec.vocab, spec.d_z}, w.latent.v));
    c.add(ArrayData::of_f64("world.readout", {spec.d_z, spec.x_dim}, w.readout.v));
    c.add(ArrayData::of_f64("world.base_pose", {spec.x_dim}, w.base_pose));
    c.add(ArrayData::of_f64("world.beat_pattern", {spec.x_dim}, w.beat_pattern));
    c.add(ArrayData::of_f64("world.mixing", {4 * spec.d_e, spec.d_f}, w.mixing.v));
    c.add(ArrayData::of_f64("world.trans_a", {spec.vocab, spec.vocab}, w.trans_a.v));
    c.add(ArrayData::of_f64("world.trans_b", {spec.vocab, spec.vocab}, w.trans_b.v));

    for (size_t r = 0; r < sizes.t2g_records; ++r) {
        const std::string pre = "t2g.r" + std::to_string(r) + ".";
        const WordChain chain =
            sample_word_chain(w, w.trans_a, sizes.t2g_words, master.child(pre + "chain"));
        const GestureTrack g = render_gestures(w, chain, master.child(pre + "gest"));
        c.add(ArrayData::of_f32(pre + "gesture", {g.frames.rows, g.frames.cols}, g.frames.v));
        c.add(ArrayData::of_i32(pre + "fwords", {g.fwords.size()}, to_i32(g.fwords)));
        add_chain_truth(c, pre, chain);
    }
    for (size_t r = 0; r < sizes.f2t_records; ++r) {
        const std::string pre = "f2t.r" + std::to_string(r) + ".";
        const WordChain chain =
            sample_word_chain(w, w.trans_b, sizes.f2t_words, master.child(pre + "chain"));
        add_fmri_record(c, pre, w, chain, render_fmri(w, chain, master.child(pre + "vox")), true);
    }
    for (size_t r = 0; r < sizes.unpaired_records; ++r) {
        const std::string pre = "unp.r" + std::to_string(r) + ".";
        const WordChain chain =
            sample_word_chain(w, w.trans_b, sizes.unpaired_words, master.child(pre + "chain"));
        add_fmri_record(c, pre, w, chain, render_fmri(w, chain, master.child(pre + "vox")), false);
    }
    for (size_t r = 0; r < sizes.heldout_records; ++r) {
        const std::string pre = "held.r" + std::to_string(r) + ".";
        const WordChain chain =
            sample_word_chain(w, w.trans_b, sizes.heldout_words, master.child(pre + "chain"));
        add_fmri_record(c, pre, w, chain, render_fmri(w, chain, master.child(pre + "vox")), true);
    }

    std::vector<int32_t> corpus;
    std::vector<int32_t> offsets{0};
    for (size_t s = 0; s < sizes.prior_sequences; ++s) {
        const WordChain chain = sample_word_chain(
            w, w.trans_b, sizes.prior_words, master.child("prior.s" + std::to_string(s)));
        for (int word : chain.words) corpus.push_back(word);
        offsets.push_back(int32_t(corpus.size()));
    }
    const size_t n_words = corpus.size(), n_offs = offsets.size();
    c.add(ArrayData::of_i32("prior.words", {n_words}, std::move(corpus)));
    c.add(ArrayData::of_i32("prior.offsets", {n_offs}, std::move(offsets)));
    return c;
}

void make_datasets(const WorldSpec& spec, const DatasetSizes& sizes, const std::string& dir,
                   const KvMap& extra_manifest) {
    Container c = build_datasets(spec, sizes);
    for (const auto& [k, v] : extra_manifest) c.manifest[k] = v;
    save_container(c, dir);
}

namespace {

std::vector<int> from_i32(const std::vector<int32_t>& v) {
    return std::vector<int>(v.begin(), v.end());
}

FmriRec load_fmri_rec(const Container& c, const std::string& pre, size_t d_f, size_t vocab,
                      bool with_counts) {
    FmriRec rec;
    rec.voxels = c.matd(pre + "voxels");
    require(rec.voxels.cols == d_f, "dataset: voxel width mismatch in " + pre);
    rec.words = from_i32(c.veci(pre + "words"));
    rec.onsets = c.vecd(pre + "onsets");
    require(rec.words.size() == rec.onsets.size(), "dataset: word/onset mismatch in " + pre);
    for (int word : rec.words)
        require(word >= 0 && size_t(word) < vocab, "dataset: word id out of range in " + pre);
    if (with_counts) {
        rec.counts = c.vecd(pre + "counts");
        require(rec.counts.size() == rec.voxels.rows, "dataset: count length mismatch in " + pre);
    }
    return rec;
}

} // namespace

LoadedData load_datasets(const Container& c) {
    LoadedData d;
    d.manifest = c.manifest;
    require(kv_get_or(c.manifest, "format", "") == "fg2-dataset-v1",
            "dataset: unknown container format");
    d.vocab = size_t(kv_get_int(c.manifest, "vocab", 0));
    d.fps = kv_get_double(c.manifest, "fps", 15.0);
    d.tr_seconds = kv_get_double(c.manifest, "tr_seconds", 2.0);
    const size_t d_f = size_t(kv_get_int(c.manifest, "d_f", 0));
    const size_t x_dim = size_t(kv_get_int(c.manifest, "x_dim", 98));
    require(d.vocab >= 1 && d_f >= 1, "dataset: missing vocab/d_f metadata");

    d.stim_table = c.matd("world.stim_table");
    d.cond_table = c.matf("world.cond_table");
    require(d.stim_table.rows == d.vocab && d.cond_table.rows == d.vocab,
            "dataset: table rows disagree with the declared vocabulary");

    const size_t fpt = frames_per_tr(d.tr_seconds, d.fps);
    const size_t n_t2g = size_t(kv_get_int(c.manifest, "t2g.records", 0));
    for (size_t r = 0; r < n_t2g; ++r) {
        const std::string pre = "t2g.r" + std::to_string(r) + ".";
        GestureRec rec;
        rec.frames = c.matf(pre + "gesture");
        rec.fwords = from_i32(c.veci(pre + "fwords"));
        rec.words = from_i32(c.veci(pre + "words"));
        rec.onsets = c.vecd(pre + "onsets");
        require(rec.frames.cols == x_dim, "dataset: gesture width mismatch in " + pre);
        require(rec.frames.rows == rec.fwords.size(), "dataset: frame/word mismatch in " + pre);
        require(rec.frames.rows % fpt == 0, "dataset: frames not TR-aligned in " + pre);
        for (int word : rec.fwords)
            require(word >= 0 && size_t(word) < d.vocab, "dataset: word id out of range in " + pre);
        d.t2g.push_back(std::move(rec));
    }

    const size_t n_f2t = size_t(kv_get_int(c.manifest, "f2t.records", 0));
    for (size_t r = 0; r < n_f2t; ++r)
        d.f2t.push_back(load_fmri_rec(c, "f2t.r" + std::to_string(r) + ".", d_f, d.vocab, true));
    const size_t n_unp = size_t(kv_get_int(c.manifest, "unpaired.records", 0));
    for (size_t r = 0; r < n_unp; ++r)
        d.unpaired.push_back(
            load_fmri_rec(c, "unp.r" + std::to_string(r) + ".", d_f, d.vocab, false));
    const size_t n_held = size_t(kv_get_int(c.manifest, "heldout.records", 0));
    for (size_t r = 0; r < n_held; ++r)
        d.heldout.push_back(
            load_fmri_rec(c, "held.r" + std::to_string(r) + ".", d_f, d.vocab, true));

    const std::vector<int> words = from_i32(c.veci("prior.words"));
    const std::vector<int32_t> offs = c.veci("prior.offsets");
    require(!offs.empty() && offs.front() == 0 && size_t(offs.back()) == words.size(),
            "dataset: corrupt prior offsets");
    for (size_t s = 0; s + 1 < offs.size(); ++s) {
        require(offs[s] <= offs[s + 1], "dataset: corrupt prior offsets");
        d.prior_corpus.emplace_back(words.begin() + offs[s], words.begin() + offs[s + 1]);
    }
    return d;
}

std::string skeleton_bones() {
    std::string s = "0-1,0-4,1-2,2-3,4-5,5-6,3-7,6-28";
    for (int hand = 0; hand < 2; ++hand) {
        const int palm = hand == 0 ? 7 : 28;
        for (int f = 0; f < 5; ++f) {
            int prev = palm;
            for (int j = 0; j < 4; ++j) {
                const int kp = palm + 1 + 4 * f + j;
                s += "," + std::to_string(prev) + "-" + std::to_string(kp);
                prev = kp;
            }
        }
    }
    return s;
}

} // namespace fg2
