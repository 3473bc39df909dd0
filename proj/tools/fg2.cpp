// fg2: command-line surface over the gesture-diffusion / brain-decoding
// library. Subcommands: gen-data, train-t2g, fit-f2t, train-f2g, decode-text,
// generate, evaluate, render. Global flags --seed / --config FILE / --out PATH
// work before or after the subcommand; a --config file supplies key=value
// defaults which explicit flags override. Exit codes: 0 success, 1 usage
// error, 2 data/validation error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fg2/clipset.hpp"
#include "fg2/container.hpp"
#include "fg2/f2g.hpp"
#include "fg2/f2t.hpp"
#include "fg2/metrics.hpp"
#include "fg2/render_svg.hpp"
#include "fg2/synthdata.hpp"
#include "fg2/t2g.hpp"

namespace {

using namespace fg2;

double parse_num(const std::string& s, const std::string& key) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("config: bad number for " + key + ": '" + s + "'");
    }
}

long long parse_int(const std::string& s, const std::string& key) {
    try {
        size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("config: bad integer for " + key + ": '" + s + "'");
    }
}

std::vector<double> parse_num_list(const std::string& s, const std::string& key) {
    std::vector<double> out;
    size_t at = 0;
    while (at <= s.size()) {
        size_t end = s.find(',', at);
        if (end == std::string::npos) end = s.size();
        out.push_back(parse_num(s.substr(at, end - at), key));
        at = end + 1;
    }
    require(!out.empty(), "config: empty list for " + key);
    return out;
}

// Flag > config-file > built-in default, with every resolved value recorded
// for the config echo that goes into output artifacts.
class Params {
public:
    explicit Params(const std::string& config_path) {
        if (!config_path.empty()) file_ = load_kv_file(config_path);
    }

    double num(const CLI::Option* o, const std::string& key, double v) {
        if (fall_back(o, key)) v = parse_num(file_.at(key), key);
        used_[key] = format_double(v);
        return v;
    }
    long long inum(const CLI::Option* o, const std::string& key, long long v) {
        if (fall_back(o, key)) v = parse_int(file_.at(key), key);
        used_[key] = std::to_string(v);
        return v;
    }
    size_t unum(const CLI::Option* o, const std::string& key, size_t v) {
        const long long r = inum(o, key, (long long)(v));
        require(r >= 0, "config: " + key + " must be >= 0");
        return size_t(r);
    }
    std::string str(const CLI::Option* o, const std::string& key, std::string v) {
        if (fall_back(o, key)) v = file_.at(key);
        used_[key] = v;
        return v;
    }
    bool flag(const CLI::Option* o, const std::string& key, bool v) {
        if (fall_back(o, key)) {
            const std::string& s = file_.at(key);
            if (s == "1" || s == "true") v = true;
            else if (s == "0" || s == "false") v = false;
            else throw DataError("config: bad flag for " + key + ": '" + s + "'");
        }
        used_[key] = v ? "1" : "0";
        return v;
    }

    void note(const std::string& key, const std::string& value) { used_[key] = value; }
    const KvMap& used() const { return used_; }
    std::string echo() const { return serialize_kv(used_); }

private:
    bool fall_back(const CLI::Option* o, const std::string& key) const {
        return (!o || o->count() == 0) && file_.count(key) > 0;
    }
    KvMap file_, used_;
};

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    require(f.good(), "cannot open for writing: " + path);
    f << text;
    f.flush();
    require(f.good(), "write failed: " + path);
}

std::string comment_block(const KvMap& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += "# " + k + "=" + v + "\n";
    return out;
}

void need(const std::string& value, const std::string& flag, const std::string& what) {
    if (value.empty())
        throw DataError("missing required input " + flag + " (" + what + ")");
}

LoadedData load_data_dir(const std::string& dir) {
    return load_datasets(load_container(dir));
}

const std::vector<FmriRec>& fmri_split(const LoadedData& d, const std::string& name) {
    if (name == "f2t") return d.f2t;
    if (name == "unpaired") return d.unpaired;
    if (name == "heldout") return d.heldout;
    throw DataError("unknown fMRI split '" + name + "' (expected f2t|unpaired|heldout)");
}

std::vector<size_t> onset_frames(const std::vector<double>& onsets_sec, double fps,
                                 size_t max_frames) {
    std::vector<size_t> out;
    for (double o : onsets_sec) {
        const long long f = llround(o * fps);
        if (f >= 0 && size_t(f) < max_frames) out.push_back(size_t(f));
    }
    return out;
}

MatD vstack(const std::vector<MatD>& parts) {
    require(!parts.empty(), "vstack: no blocks");
    size_t rows = 0;
    for (const auto& p : parts) {
        require(p.cols == parts[0].cols, "vstack: column mismatch");
        rows += p.rows;
    }
    MatD out(rows, parts[0].cols);
    size_t at = 0;
    for (const auto& p : parts) {
        std::copy(p.v.begin(), p.v.end(), out.v.begin() + long(at * out.cols));
        at += p.rows;
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"seeded gesture-diffusion + brain-decoding pipeline"};
    app.require_subcommand(1);

    uint64_t seed = 1;
    std::string config_path, out_path;
    app.add_option("--seed", seed, "master RNG seed (default 1)");
    app.add_option("--config", config_path, "key=value config file; explicit flags override");
    app.add_option("--out", out_path, "output path (directory or file per subcommand)");

    // ---- gen-data ----------------------------------------------------
    auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset directory");
    gen->fallthrough();
    double g_sigma_f = 0.0, g_sigma_g = 0.01;
    std::string g_rate_mode = "constant";
    size_t g_vocab = 64, g_d_f = 64;
    auto* o_gsf = gen->add_option("--sigma-f", g_sigma_f, "voxel noise scale");
    auto* o_gsg = gen->add_option("--sigma-g", g_sigma_g, "gesture noise scale");
    auto* o_grm = gen->add_option("--rate-mode", g_rate_mode, "words per TR: constant|word");
    auto* o_gv = gen->add_option("--vocab", g_vocab, "vocabulary size");
    auto* o_gdf = gen->add_option("--d-f", g_d_f, "voxels per record");
    gen->callback([&] {
        need(out_path, "--out", "dataset directory to create");
        Params P(config_path);
        WorldSpec spec;
        spec.seed = seed;
        spec.vocab = P.unum(o_gv, "vocab", g_vocab);
        spec.d_z = P.unum(nullptr, "d_z", spec.d_z);
        spec.d_e = P.unum(nullptr, "d_e", spec.d_e);
        spec.d_x = P.unum(nullptr, "d_x", spec.d_x);
        spec.d_f = P.unum(o_gdf, "d_f", g_d_f);
        spec.fps = P.num(nullptr, "fps", spec.fps);
        spec.tr_seconds = P.num(nullptr, "tr_seconds", spec.tr_seconds);
        spec.sigma_g = P.num(o_gsg, "sigma_g", g_sigma_g);
        spec.sigma_f = P.num(o_gsf, "sigma_f", g_sigma_f);
        spec.beat_amp = P.num(nullptr, "beat_amp", spec.beat_amp);
        spec.beat_period = P.unum(nullptr, "beat_period", spec.beat_period);
        spec.successors = P.unum(nullptr, "successors", spec.successors);
        spec.start_words = P.unum(nullptr, "start_words", spec.start_words);
        spec.pad_tr = P.unum(nullptr, "pad_tr", spec.pad_tr);
        const std::string rm = P.str(o_grm, "rate_mode", g_rate_mode);
        if (rm == "constant") spec.rate_mode = RateMode::constant;
        else if (rm == "word") spec.rate_mode = RateMode::word;
        else throw DataError("rate_mode must be constant|word, got '" + rm + "'");

        DatasetSizes sz;
        sz.t2g_records = P.unum(nullptr, "t2g.records", sz.t2g_records);
        sz.t2g_words = P.unum(nullptr, "t2g.words", sz.t2g_words);
        sz.f2t_records = P.unum(nullptr, "f2t.records", sz.f2t_records);
        sz.f2t_words = P.unum(nullptr, "f2t.words", sz.f2t_words);
        sz.unpaired_records = P.unum(nullptr, "unpaired.records", sz.unpaired_records);
        sz.unpaired_words = P.unum(nullptr, "unpaired.words", sz.unpaired_words);
        sz.heldout_records = P.unum(nullptr, "heldout.records", sz.heldout_records);
        sz.heldout_words = P.unum(nullptr, "heldout.words", sz.heldout_words);
        sz.prior_sequences = P.unum(nullptr, "prior.sequences", sz.prior_sequences);
        sz.prior_words = P.unum(nullptr, "prior.words", sz.prior_words);

        KvMap extra;
        extra["cli.command"] = "gen-data";
        extra["cli.seed"] = std::to_string(seed);
        make_datasets(spec, sz, out_path, extra);
        std::cout << "wrote dataset to " << out_path << "\n";
    });

    // ---- train-t2g ---------------------------------------------------
    auto* tt = app.add_subcommand("train-t2g", "train the text-conditioned denoiser");
    tt->fallthrough();
    std::string tt_data;
    size_t tt_steps = 600, tt_batch = 32, tt_dm = 64, tt_layers = 2;
    double tt_lr = 1e-4;
    tt->add_option("--data", tt_data, "dataset directory");
    auto* o_ts = tt->add_option("--steps", tt_steps, "optimizer steps");
    auto* o_tb = tt->add_option("--batch", tt_batch, "batch size");
    auto* o_td = tt->add_option("--d-model", tt_dm, "hidden width");
    auto* o_tl = tt->add_option("--layers", tt_layers, "residual blocks");
    auto* o_tlr = tt->add_option("--lr", tt_lr, "Adam learning rate");
    tt->callback([&] {
        need(tt_data, "--data", "dataset directory");
        need(out_path, "--out", "checkpoint file to write");
        Params P(config_path);
        TrainConfig cfg;
        cfg.steps = P.unum(o_ts, "steps", tt_steps);
        cfg.batch = P.unum(o_tb, "batch", tt_batch);
        cfg.clip_len = P.unum(nullptr, "clip_len", cfg.clip_len);
        cfg.clip_stride = P.unum(nullptr, "clip_stride", cfg.clip_stride);
        cfg.sched_T = int(P.inum(nullptr, "sched_T", cfg.sched_T));
        cfg.beta_lo = P.num(nullptr, "beta_lo", cfg.beta_lo);
        cfg.beta_hi = P.num(nullptr, "beta_hi", cfg.beta_hi);
        cfg.net.d_model = P.unum(o_td, "d_model", tt_dm);
        cfg.net.layers = P.unum(o_tl, "layers", tt_layers);
        cfg.adam.lr = P.num(o_tlr, "lr", tt_lr);
        P.note("command", "train-t2g");
        P.note("seed", std::to_string(seed));

        const LoadedData data = load_data_dir(tt_data);
        cfg.net.x_dim = size_t(kv_get_int(data.manifest, "x_dim", 98));
        const T2GModel m = train_t2g(data, cfg, seed);
        save_t2g(m, out_path, P.echo());
        std::printf("trained %zu steps, loss %.6f -> %.6f, saved %s\n", cfg.steps,
                    m.loss_curve.empty() ? 0.0 : m.loss_curve.front(),
                    m.loss_curve.empty() ? 0.0 : m.loss_curve.back(), out_path.c_str());
    });

    // ---- fit-f2t -----------------------------------------------------
    auto* ft = app.add_subcommand("fit-f2t", "fit the voxel decoder (encoder, rate, prior)");
    ft->fallthrough();
    std::string ft_data, ft_alphas = "0,0.01,0.1,1,10,100";
    size_t ft_folds = 5;
    ft->add_option("--data", ft_data, "dataset directory");
    auto* o_fa = ft->add_option("--alphas", ft_alphas, "comma-separated ridge grid");
    auto* o_ff = ft->add_option("--folds", ft_folds, "CV folds");
    ft->callback([&] {
        need(ft_data, "--data", "dataset directory");
        need(out_path, "--out", "decoder file to write");
        Params P(config_path);
        const std::vector<double> grid =
            parse_num_list(P.str(o_fa, "alphas", ft_alphas), "alphas");
        const size_t folds = P.unum(o_ff, "folds", ft_folds);
        P.note("command", "fit-f2t");
        P.note("seed", std::to_string(seed));

        const LoadedData data = load_data_dir(ft_data);
        require(!data.f2t.empty(), "fit-f2t: dataset has no paired voxel records");
        std::vector<MatD> stim_blocks, vox_blocks, future_blocks;
        std::vector<double> counts;
        for (const FmriRec& r : data.f2t) {
            MatD embs(r.words.size(), data.stim_table.cols);
            for (size_t i = 0; i < r.words.size(); ++i)
                std::copy(data.stim_table.row(size_t(r.words[i])),
                          data.stim_table.row(size_t(r.words[i])) + data.stim_table.cols,
                          embs.row(i));
            const MatD feats =
                lanczos_to_tr(r.onsets, embs, r.voxels.rows, data.tr_seconds);
            stim_blocks.push_back(build_delayed_stimulus(feats));
            vox_blocks.push_back(r.voxels);
            future_blocks.push_back(build_future_stimulus(r.voxels));
            counts.insert(counts.end(), r.counts.begin(), r.counts.end());
        }
        const EncodingModel enc =
            fit_encoding(vstack(stim_blocks), vstack(vox_blocks), grid, folds);
        MatD ymat(counts.size(), 1);
        std::copy(counts.begin(), counts.end(), ymat.v.begin());
        WordRateModel rate;
        rate.ridge = fit_ridge(vstack(future_blocks), ymat, grid, folds);
        const BigramPrior prior(data.vocab, data.prior_corpus);

        const DecoderBundle bundle{enc, rate, prior, data.stim_table};
        save_decoder(bundle, out_path, P.echo());
        std::printf("fit decoder on %zu records (enc alpha %g, rate alpha %g), saved %s\n",
                    data.f2t.size(), enc.ridge.alpha, rate.ridge.alpha, out_path.c_str());
    });

    // ---- train-f2g ---------------------------------------------------
    auto* tf = app.add_subcommand("train-f2g", "dual-objective training of the voxel denoiser");
    tf->fallthrough();
    std::string tf_data, tf_t2g, tf_f2t;
    double tf_lambda = 0.01;
    size_t tf_steps = 400;
    tf->add_option("--data", tf_data, "dataset directory");
    tf->add_option("--t2g", tf_t2g, "phase-I gesture model checkpoint");
    tf->add_option("--f2t", tf_f2t, "fitted decoder file");
    auto* o_dl = tf->add_option("--lambda", tf_lambda, "alignment weight");
    auto* o_ds = tf->add_option("--steps", tf_steps, "optimizer steps");
    tf->callback([&] {
        need(tf_t2g, "--t2g", "phase-I gesture model checkpoint");
        need(tf_f2t, "--f2t", "fitted decoder file");
        need(tf_data, "--data", "dataset directory");
        need(out_path, "--out", "checkpoint file to write");
        Params P(config_path);
        const T2GModel t2g = load_t2g(tf_t2g);
        const DecoderBundle dec = load_decoder(tf_f2t);
        const LoadedData data = load_data_dir(tf_data);

        DualConfig cfg;
        cfg.lambda = P.num(o_dl, "lambda", tf_lambda);
        cfg.steps = P.unum(o_ds, "steps", tf_steps);
        const std::string wm = P.str(nullptr, "weight_mode", "paper_sqrt");
        if (wm == "paper_sqrt") cfg.weight_mode = WeightMode::paper_sqrt;
        else if (wm == "exact") cfg.weight_mode = WeightMode::exact;
        else throw DataError("weight_mode must be paper_sqrt|exact, got '" + wm + "'");
        const std::string pm = P.str(nullptr, "pseudo_mode", "renoise");
        if (pm == "renoise") cfg.pseudo_mode = PseudoMode::renoise;
        else if (pm == "chain") cfg.pseudo_mode = PseudoMode::chain_intermediate;
        else throw DataError("pseudo_mode must be renoise|chain, got '" + pm + "'");
        cfg.freeze_theta_x = P.flag(nullptr, "freeze_theta_x", cfg.freeze_theta_x);
        cfg.beam.k = P.unum(nullptr, "beam.k", cfg.beam.k);
        cfg.beam.expansions = P.unum(nullptr, "beam.expansions", cfg.beam.expansions);
        cfg.beam.top_p = P.num(nullptr, "beam.top_p", cfg.beam.top_p);
        cfg.base.batch = P.unum(nullptr, "batch", cfg.base.batch);
        cfg.base.clip_len = P.unum(nullptr, "clip_len", cfg.base.clip_len);
        cfg.base.clip_stride = P.unum(nullptr, "clip_stride", cfg.base.clip_stride);
        cfg.base.sched_T = int(P.inum(nullptr, "sched_T", t2g.sched_T));
        cfg.base.beta_lo = P.num(nullptr, "beta_lo", t2g.beta_lo);
        cfg.base.beta_hi = P.num(nullptr, "beta_hi", t2g.beta_hi);
        cfg.base.net.d_model = P.unum(nullptr, "d_model", t2g.net_cfg.d_model);
        cfg.base.net.layers = P.unum(nullptr, "layers", t2g.net_cfg.layers);
        cfg.base.adam.lr = P.num(nullptr, "lr", cfg.base.adam.lr);
        P.note("command", "train-f2g");
        P.note("seed", std::to_string(seed));

        const F2GModel m = train_f2g(t2g, dec, data, cfg, seed);
        save_f2g(m, out_path, P.echo());
        std::printf("trained %zu steps (paired %.6f -> %.6f, %zu pseudo skipped), saved %s\n",
                    cfg.steps, m.paired_curve.empty() ? 0.0 : m.paired_curve.front(),
                    m.paired_curve.empty() ? 0.0 : m.paired_curve.back(), m.skipped_pseudo,
                    out_path.c_str());
    });

    // ---- decode-text -------------------------------------------------
    auto* dt = app.add_subcommand("decode-text", "beam-decode words from a voxel record");
    dt->fallthrough();
    std::string dt_f2t, dt_data, dt_split = "heldout";
    size_t dt_record = 0, dt_k = 8, dt_exp = 4;
    double dt_topp = 0.9;
    dt->add_option("--f2t", dt_f2t, "fitted decoder file");
    dt->add_option("--data", dt_data, "dataset directory");
    auto* o_dsp = dt->add_option("--split", dt_split, "record split: f2t|unpaired|heldout");
    auto* o_dr = dt->add_option("--record", dt_record, "record index within the split");
    auto* o_dk = dt->add_option("--beam-k", dt_k, "beam width");
    auto* o_de = dt->add_option("--expansions", dt_exp, "sampled continuations per candidate");
    auto* o_dp = dt->add_option("--top-p", dt_topp, "nucleus mass");
    dt->callback([&] {
        need(dt_f2t, "--f2t", "fitted decoder file");
        need(dt_data, "--data", "dataset directory");
        Params P(config_path);
        BeamConfig cfg;
        cfg.k = P.unum(o_dk, "beam.k", dt_k);
        cfg.expansions = P.unum(o_de, "beam.expansions", dt_exp);
        cfg.top_p = P.num(o_dp, "beam.top_p", dt_topp);
        const std::string split = P.str(o_dsp, "split", dt_split);
        const size_t rec_idx = P.unum(o_dr, "record", dt_record);
        P.note("command", "decode-text");
        P.note("seed", std::to_string(seed));

        const DecoderBundle dec = load_decoder(dt_f2t);
        const LoadedData data = load_data_dir(dt_data);
        const auto& split_recs = fmri_split(data, split);
        require(rec_idx < split_recs.size(), "record index out of range for split " + split);
        const FmriRec& rec = split_recs[rec_idx];
        const DecodeResult res =
            beam_decode(rec.voxels, dec.prior, dec.enc, dec.rate, dec.stim_table, cfg,
                        derive_seed(seed, "decode.r" + std::to_string(rec_idx)));

        std::string out = comment_block(P.used());
        out += "# score=" + format_double(res.score) + "\n";
        for (size_t i = 0; i < res.words.size(); ++i)
            out += std::to_string(res.words[i]) + " " + format_double(res.onsets[i]) + "\n";
        if (!out_path.empty()) write_text_file(out_path, out);
        std::cout << out;
    });

    // ---- generate ----------------------------------------------------
    auto* gn = app.add_subcommand("generate", "sample gesture clips from a trained model");
    gn->fallthrough();
    std::string gn_mode = "text", gn_t2g, gn_f2g, gn_data, gn_split;
    size_t gn_records = 4, gn_frames = 64;
    gn->add_option("--mode", gn_mode, "condition source: text|fmri|noise");
    gn->add_option("--t2g", gn_t2g, "phase-I gesture model checkpoint (text mode)");
    gn->add_option("--f2g", gn_f2g, "dual-trained model checkpoint (fmri/noise modes)");
    gn->add_option("--data", gn_data, "dataset directory");
    auto* o_gsp = gn->add_option("--split", gn_split, "record split (fMRI: f2t|unpaired|heldout)");
    auto* o_gr = gn->add_option("--records", gn_records, "number of records to sample");
    auto* o_gf = gn->add_option("--frames", gn_frames, "frames per generated clip");
    gn->callback([&] {
        need(out_path, "--out", "clip-set file to write");
        Params P(config_path);
        const std::string mode = P.str(nullptr, "mode", gn_mode);
        const size_t n_rec = P.unum(o_gr, "records", gn_records);
        const size_t frames = P.unum(o_gf, "frames", gn_frames);
        require(frames >= 1, "generate: frames must be >= 1");
        P.note("command", "generate");
        P.note("seed", std::to_string(seed));

        ClipSetFile out;
        if (mode == "text") {
            need(gn_t2g, "--t2g", "phase-I gesture model checkpoint");
            need(gn_data, "--data", "dataset directory");
            const T2GModel m = load_t2g(gn_t2g);
            const LoadedData data = load_data_dir(gn_data);
            for (size_t i = 0; i < data.t2g.size() && out.clips.size() < n_rec; ++i) {
                const GestureRec& rec = data.t2g[i];
                if (rec.fwords.size() < frames) continue;
                std::vector<int> fw(rec.fwords.begin(), rec.fwords.begin() + long(frames));
                out.clips.push_back(
                    generate_from_text(m, fw, derive_seed(seed, "gen.r" + std::to_string(i))));
                out.onsets.push_back(onset_frames(rec.onsets, data.fps, frames));
            }
        } else if (mode == "fmri" || mode == "noise") {
            need(gn_f2g, "--f2g", "dual-trained model checkpoint");
            const F2GModel m = load_f2g(gn_f2g);
            const std::string split =
                P.str(o_gsp, "split", gn_split.empty() ? "heldout" : gn_split);
            if (mode == "fmri") {
                need(gn_data, "--data", "dataset directory");
                const LoadedData data = load_data_dir(gn_data);
                const auto& recs = fmri_split(data, split);
                const size_t fpt = frames_per_tr(m.tr_seconds, m.fps);
                for (size_t i = 0; i < recs.size() && out.clips.size() < n_rec; ++i) {
                    if (recs[i].voxels.rows * fpt < frames) continue;
                    out.clips.push_back(
                        generate_from_fmri(m, recs[i].voxels, frames,
                                           derive_seed(seed, "gen.r" + std::to_string(i))));
                    out.onsets.push_back(onset_frames(recs[i].onsets, m.fps, frames));
                }
            } else {
                // Control condition: the voxel-side net driven by pure noise.
                const LoadedData* data = nullptr;
                LoadedData loaded;
                if (!gn_data.empty()) {
                    loaded = load_data_dir(gn_data);
                    data = &loaded;
                }
                for (size_t i = 0; i < n_rec; ++i) {
                    Rng rc(derive_seed(seed, "noise.r" + std::to_string(i)));
                    const MatF cond = MatF::normal(frames, m.cfg_f.cond_dim, rc);
                    out.clips.push_back(
                        generate_with_condition(m.cfg_f, m.theta_f, m.schedule(), cond,
                                                derive_seed(seed, "gen.r" + std::to_string(i))));
                    if (data) {
                        const auto& recs = fmri_split(*data, split);
                        if (i < recs.size())
                            out.onsets.push_back(onset_frames(recs[i].onsets, m.fps, frames));
                        else
                            out.onsets.push_back({});
                    }
                }
            }
        } else {
            throw DataError("generate: mode must be text|fmri|noise, got '" + mode + "'");
        }
        require(!out.clips.empty(), "generate: no usable records in the selected split");
        out.config_text = P.echo();
        save_clipset(out, out_path);
        std::printf("wrote %zu clips (%zu frames each) to %s\n", out.clips.size(), frames,
                    out_path.c_str());
    });

    // ---- evaluate ----------------------------------------------------
    auto* ev = app.add_subcommand("evaluate", "score a generated clip set against a reference");
    ev->fallthrough();
    std::string ev_ref, ev_gen;
    ev->add_option("--ref", ev_ref, "reference clip-set file");
    ev->add_option("--gen", ev_gen, "generated clip-set file");
    ev->callback([&] {
        need(ev_ref, "--ref", "reference clip-set file");
        need(ev_gen, "--gen", "generated clip-set file");
        Params P(config_path);
        MetricsConfig cfg;
        cfg.pck_absolute = P.flag(nullptr, "pck_absolute", cfg.pck_absolute);
        cfg.pck_rel = P.num(nullptr, "pck_rel", cfg.pck_rel);
        cfg.pck_abs = P.num(nullptr, "pck_abs", cfg.pck_abs);
        cfg.bc_sigma_frames = P.num(nullptr, "bc_sigma_frames", cfg.bc_sigma_frames);
        cfg.fgd_pca_dims = P.unum(nullptr, "fgd_pca_dims", cfg.fgd_pca_dims);
        P.note("command", "evaluate");

        const ClipSetFile ref = load_clipset(ev_ref);
        const ClipSetFile gen2 = load_clipset(ev_gen);
        const MetricsReport rep = evaluate_clips(
            gen2.clips, ref.clips, gen2.onsets.empty() ? nullptr : &gen2.onsets, cfg);

        KvMap kv;
        kv["mae"] = format_double(rep.mae);
        kv["ape"] = format_double(rep.ape);
        kv["pck"] = format_double(rep.pck);
        kv["fgd"] = format_double(rep.fgd);
        kv["diversity"] = format_double(rep.diversity);
        kv["fgd_degenerate"] = rep.fgd_degenerate ? "1" : "0";
        if (rep.has_bc) {
            kv["bc"] = format_double(rep.bc);
            kv["bc_no_beats"] = rep.bc_no_beats ? "1" : "0";
        }
        kv["n_pred"] = std::to_string(rep.n_pred);
        kv["n_ref"] = std::to_string(rep.n_ref);
        for (const auto& [k, v] : P.used()) kv["config." + k] = v;
        const std::string text = serialize_kv(kv);

        nlohmann::json j;
        j["mae"] = rep.mae;
        j["ape"] = rep.ape;
        j["pck"] = rep.pck;
        j["fgd"] = rep.fgd;
        j["diversity"] = rep.diversity;
        j["fgd_degenerate"] = rep.fgd_degenerate;
        if (rep.has_bc) {
            j["bc"] = rep.bc;
            j["bc_no_beats"] = rep.bc_no_beats;
        } else {
            j["bc"] = nullptr;
        }
        j["n_pred"] = rep.n_pred;
        j["n_ref"] = rep.n_ref;
        j["config"] = P.used();

        if (!out_path.empty()) {
            write_text_file(out_path, text);
            write_text_file(out_path + ".json", j.dump(2) + "\n");
        }
        std::cout << text;
    });

    // ---- render ------------------------------------------------------
    auto* rd = app.add_subcommand("render", "draw a clip as a static SVG filmstrip");
    rd->fallthrough();
    std::string rd_in, rd_bones, rd_data;
    size_t rd_clip = 0, rd_k = 8;
    rd->add_option("--in", rd_in, "clip-set file");
    auto* o_rc = rd->add_option("--clip", rd_clip, "clip index within the set");
    auto* o_rk = rd->add_option("--every-k", rd_k, "draw every k-th frame");
    auto* o_rb = rd->add_option("--bones", rd_bones, "bone list 'a-b,c-d,...'");
    rd->add_option("--data", rd_data, "dataset directory whose manifest supplies the bones");
    rd->callback([&] {
        need(rd_in, "--in", "clip-set file");
        need(out_path, "--out", "SVG file to write");
        Params P(config_path);
        const size_t clip_idx = P.unum(o_rc, "clip", rd_clip);
        const size_t k = P.unum(o_rk, "every_k", rd_k);
        std::string bones = P.str(o_rb, "bones", rd_bones);
        if (bones.empty() && !rd_data.empty()) {
            const KvMap manifest = load_kv_file(rd_data + "/manifest.txt");
            bones = kv_get(manifest, "bones");
        }
        if (bones.empty()) bones = skeleton_bones();

        const ClipSetFile set = load_clipset(rd_in);
        require(clip_idx < set.clips.size(), "render: clip index out of range");
        const std::string svg = render_svg(set.clips[clip_idx], parse_bone_list(bones), k);
        write_text_file(out_path, svg);
        std::printf("wrote %s (%zu frames, every %zu)\n", out_path.c_str(),
                    set.clips[clip_idx].rows, k);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
