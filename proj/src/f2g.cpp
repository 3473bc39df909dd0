#include "fg2/f2g.hpp"

#include <cmath>

#include "fg2/checkpoint.hpp"

namespace fg2 {

std::optional<PseudoPair> make_pseudo(const T2GModel& t2g, const DecoderBundle& dec,
                                      const FmriRec& rec, double fps, const DualConfig& cfg,
                                      uint64_t seed, bool keep_chain) {
    const double tr = dec.enc.tr_seconds;
    const DecodeResult dr = beam_decode(rec.voxels, dec.prior, dec.enc, dec.rate, dec.stim_table,
                                        cfg.beam, derive_seed(seed, "decode"));
    if (dr.words.empty()) return std::nullopt;

    // Group decoded words by TR and replicate onto the frame grid; silent TRs
    // become silence runs.
    const size_t fpt = frames_per_tr(tr, fps);
    std::vector<int> track;
    std::vector<int> in_tr;
    size_t at = 0;
    for (size_t i = 0; i < rec.voxels.rows; ++i) {
        in_tr.clear();
        while (at < dr.words.size() && dr.onsets[at] < double(i + 1) * tr)
            in_tr.push_back(dr.words[at++]);
        const ReplicateResult rep = replicate_words(in_tr, fpt);
        track.insert(track.end(), rep.frames.begin(), rep.frames.end());
    }
    if (track.size() < cfg.base.clip_len) return std::nullopt;
    track.resize(cfg.base.clip_len);

    PseudoPair p;
    p.seed = seed;
    p.fwords = std::move(track);
    p.cond_x = embed_frame_text(p.fwords, t2g.cond_table);

    MatF voxf(rec.voxels.rows, rec.voxels.cols);
    for (size_t i = 0; i < rec.voxels.v.size(); ++i) voxf.v[i] = float(rec.voxels.v[i]);
    const MatF rep_vox = replicate_fmri(voxf, tr, fps);
    p.cond_f = MatF(cfg.base.clip_len, rep_vox.cols);
    std::copy(rep_vox.row(0), rep_vox.row(cfg.base.clip_len), p.cond_f.data());

    const Denoiser<float> net(t2g.net_cfg, t2g.theta_x);
    const Schedule sched = t2g.schedule();
    Rng rng = Rng(seed).child("pseudo.gen");
    p.x0pp = sample_loop<float>(
        sched, cfg.base.clip_len, t2g.net_cfg.x_dim,
        [&](const MatF& x, int t, MatF& out) { out = net.forward(x, t, p.cond_x); }, rng,
        keep_chain ? &p.chain : nullptr);
    return p;
}

DualLossResult dual_loss(const Denoiser<float>& net_x, const Denoiser<float>& net_f,
                         const Schedule& sched, std::span<const TrainItem<float>> paired,
                         const PseudoPair* pseudo, int align_t, const MatF* eps_prime,
                         const DualConfig& cfg, ParamSet<float>& grads_x,
                         ParamSet<float>& grads_f) {
    require(cfg.lambda >= 0.0, "dual_loss: lambda must be >= 0");
    DualLossResult r;
    r.paired = loss_and_grad<float>(net_x, sched, paired, grads_x);
    if (cfg.lambda == 0.0) {
        r.total = r.paired;
        return r;
    }
    require(pseudo != nullptr, "dual_loss: alignment branch needs a pseudo pair");
    require(align_t >= 1 && align_t <= sched.T, "dual_loss: alignment step out of range");

    MatF xt;
    if (cfg.pseudo_mode == PseudoMode::renoise) {
        require(eps_prime != nullptr, "dual_loss: renoise mode needs the eps' draw");
        q_sample(sched, align_t, pseudo->x0pp, *eps_prime, xt);
    } else {
        require(pseudo->chain.size() == size_t(sched.T) + 1,
                "dual_loss: pseudo pair has no recorded reverse chain");
        xt = pseudo->chain[size_t(sched.T - align_t)];
    }

    Denoiser<float>::Cache cx, cf;
    const MatF a = net_x.forward_cached(xt, align_t, pseudo->cond_x, cx);
    const MatF b = net_f.forward_cached(xt, align_t, pseudo->cond_f, cf);
    const double w = sched.align_weight(align_t, cfg.weight_mode == WeightMode::exact);
    const size_t n = a.size();
    const double scale = cfg.lambda * w * 2.0 / double(n);
    MatF da(a.rows, a.cols), db(a.rows, a.cols);
    double msq = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = double(a.v[i]) - double(b.v[i]);
        msq += d * d;
        da.v[i] = float(scale * d);
        db.v[i] = float(-scale * d);
    }
    net_x.backward(cx, da, grads_x);
    net_f.backward(cf, db, grads_f);
    r.align = cfg.lambda * w * (msq / double(n));
    r.total = r.paired + r.align;
    if (!std::isfinite(r.total)) throw Error("dual_loss: non-finite loss (divergence)");
    return r;
}

F2GModel train_f2g(const T2GModel& t2g, const DecoderBundle& dec, const LoadedData& data,
                   const DualConfig& cfg, uint64_t seed) {
    require(cfg.base.sched_T == t2g.sched_T && cfg.base.beta_lo == t2g.beta_lo &&
                cfg.base.beta_hi == t2g.beta_hi,
            "train_f2g: schedule must match the phase-I checkpoint");
    const ClipData clips = build_training_clips(data, cfg.base);
    const Schedule sched = t2g.schedule();

    Rng master(seed);
    Rng r_batch = master.child("batch");
    Rng r_t = master.child("t");
    Rng r_eps = master.child("eps");

    Denoiser<float> net_x(t2g.net_cfg, t2g.theta_x);
    DenoiserConfig cfg_f = cfg.base.net;
    cfg_f.x_dim = t2g.net_cfg.x_dim;
    cfg_f.cond_dim = size_t(kv_get_int(data.manifest, "d_f", 0));
    require(cfg_f.cond_dim >= 1, "train_f2g: dataset lacks the voxel width");
    Rng r_init_f = master.child("init.f");
    Denoiser<float> net_f(cfg_f, r_init_f);

    F2GModel m;
    m.skipped_pseudo = 0;

    std::vector<PseudoPair> pairs;
    if (cfg.lambda > 0.0) {
        require(!data.unpaired.empty(), "train_f2g: empty unpaired voxel pool");
        for (size_t i = 0; i < data.unpaired.size(); ++i) {
            auto p = make_pseudo(t2g, dec, data.unpaired[i], data.fps, cfg,
                                 derive_seed(seed, "pseudo.r" + std::to_string(i)),
                                 cfg.pseudo_mode == PseudoMode::chain_intermediate);
            if (p)
                pairs.push_back(std::move(*p));
            else
                ++m.skipped_pseudo;
        }
        require(!pairs.empty(), "train_f2g: every unpaired record failed to decode");
    }

    Rng r_pick = master.child("align.pick");
    Rng r_at = master.child("align.t");
    Rng r_aeps = master.child("align.eps");

    Adam<float> adam_x(net_x.params, cfg.base.adam);
    Adam<float> adam_f(net_f.params, cfg.base.adam);
    ParamSet<float> grads_x = net_x.params.zeros_like();
    ParamSet<float> grads_f = net_f.params.zeros_like();

    std::vector<MatF> eps(cfg.base.batch);
    std::vector<TrainItem<float>> batch(cfg.base.batch);
    MatF eps_prime;
    for (size_t step = 0; step < cfg.steps; ++step) {
        for (size_t b = 0; b < cfg.base.batch; ++b) {
            const size_t idx = size_t(r_batch.below(uint64_t(clips.x0.size())));
            const int t = int(r_t.below(uint64_t(sched.T))) + 1;
            const MatF& x0 = clips.x0[idx];
            eps[b] = MatF::normal(x0.rows, x0.cols, r_eps);
            batch[b] = TrainItem<float>{&x0, &clips.cond[idx], t, &eps[b]};
        }
        const PseudoPair* pseudo = nullptr;
        int align_t = 1;
        if (cfg.lambda > 0.0) {
            pseudo = &pairs[size_t(r_pick.below(uint64_t(pairs.size())))];
            align_t = int(r_at.below(uint64_t(sched.T))) + 1;
            eps_prime = MatF::normal(cfg.base.clip_len, cfg_f.x_dim, r_aeps);
        }
        for (auto& g : grads_x.tensors) std::fill(g.v.begin(), g.v.end(), 0.0f);
        if (cfg.lambda > 0.0)
            for (auto& g : grads_f.tensors) std::fill(g.v.begin(), g.v.end(), 0.0f);
        const DualLossResult res = dual_loss(net_x, net_f, sched, batch, pseudo, align_t,
                                             &eps_prime, cfg, grads_x, grads_f);
        m.paired_curve.push_back(res.paired);
        m.align_curve.push_back(res.align);
        if (!cfg.freeze_theta_x) adam_x.update(net_x.params, grads_x);
        if (cfg.lambda > 0.0) adam_f.update(net_f.params, grads_f);
    }

    m.cfg_x = t2g.net_cfg;
    m.cfg_f = cfg_f;
    m.theta_x = std::move(net_x.params);
    m.theta_f = std::move(net_f.params);
    m.cond_table = t2g.cond_table;
    m.sched_T = t2g.sched_T;
    m.beta_lo = t2g.beta_lo;
    m.beta_hi = t2g.beta_hi;
    m.tr_seconds = dec.enc.tr_seconds;
    m.fps = data.fps;
    return m;
}

MatF generate_with_condition(const DenoiserConfig& net_cfg, const ParamSet<float>& params,
                             const Schedule& sched, const MatF& cond, uint64_t seed) {
    require(cond.rows >= 1, "generate: empty condition");
    require(cond.cols == net_cfg.cond_dim, "generate: condition width mismatch");
    const Denoiser<float> net(net_cfg, params);
    Rng rng = Rng(seed).child("gen");
    return sample_loop<float>(
        sched, cond.rows, net_cfg.x_dim,
        [&](const MatF& x, int t, MatF& out) { out = net.forward(x, t, cond); }, rng);
}

MatF generate_from_fmri(const F2GModel& m, const MatD& voxels, size_t frames, uint64_t seed) {
    require(voxels.cols == m.cfg_f.cond_dim, "generate: voxel width mismatch");
    MatF voxf(voxels.rows, voxels.cols);
    for (size_t i = 0; i < voxels.v.size(); ++i) voxf.v[i] = float(voxels.v[i]);
    const MatF rep = replicate_fmri(voxf, m.tr_seconds, m.fps);
    require(rep.rows >= frames && frames >= 1, "generate: record shorter than requested frames");
    MatF cond(frames, rep.cols);
    std::copy(rep.row(0), rep.row(frames), cond.data());
    return generate_with_condition(m.cfg_f, m.theta_f, m.schedule(), cond, seed);
}

namespace {

void add_net_cfg(Checkpoint& c, const std::string& p, const DenoiserConfig& cfg) {
    c.add_scalar(p + "x_dim", double(cfg.x_dim));
    c.add_scalar(p + "d_model", double(cfg.d_model));
    c.add_scalar(p + "layers", double(cfg.layers));
    c.add_scalar(p + "cond_dim", double(cfg.cond_dim));
}

DenoiserConfig net_cfg_from(const Checkpoint& c, const std::string& p) {
    auto sz = [&](const std::string& name) {
        const double v = c.scalar(name);
        require(v >= 0 && v == std::floor(v), "checkpoint: " + name + " is not a size");
        return size_t(v);
    };
    DenoiserConfig cfg;
    cfg.x_dim = sz(p + "x_dim");
    cfg.d_model = sz(p + "d_model");
    cfg.layers = sz(p + "layers");
    cfg.cond_dim = sz(p + "cond_dim");
    return cfg;
}

} // namespace

void save_f2g(const F2GModel& m, const std::string& path, const std::string& config_echo) {
    Checkpoint c;
    c.add_text("meta.kind", "f2g");
    c.add_text("meta.config_text", config_echo);
    add_net_cfg(c, "net_x.", m.cfg_x);
    add_net_cfg(c, "net_f.", m.cfg_f);
    c.add_scalar("sched.T", double(m.sched_T));
    c.add_scalar("sched.beta_lo", m.beta_lo);
    c.add_scalar("sched.beta_hi", m.beta_hi);
    c.add_scalar("tr_seconds", m.tr_seconds);
    c.add_scalar("fps", m.fps);
    c.add_scalar("skipped_pseudo", double(m.skipped_pseudo));
    c.add_matf("cond_table", m.cond_table);
    c.add_vecd("paired_curve", m.paired_curve);
    c.add_vecd("align_curve", m.align_curve);
    c.add_params("theta_x.", m.theta_x);
    c.add_params("theta_f.", m.theta_f);
    save_checkpoint(c, path);
}

F2GModel load_f2g(const std::string& path) {
    const Checkpoint c = load_checkpoint(path);
    require(c.text("meta.kind") == "f2g", "f2g load: wrong checkpoint kind");
    F2GModel m;
    m.cfg_x = net_cfg_from(c, "net_x.");
    m.cfg_f = net_cfg_from(c, "net_f.");
    m.sched_T = int(c.scalar("sched.T"));
    m.beta_lo = c.scalar("sched.beta_lo");
    m.beta_hi = c.scalar("sched.beta_hi");
    m.tr_seconds = c.scalar("tr_seconds");
    m.fps = c.scalar("fps");
    m.skipped_pseudo = size_t(c.scalar("skipped_pseudo"));
    m.cond_table = c.matf("cond_table");
    m.paired_curve = c.vecd("paired_curve");
    m.align_curve = c.vecd("align_curve");
    m.theta_x = c.params("theta_x.");
    m.theta_f = c.params("theta_f.");
    Denoiser<float> check_x(m.cfg_x, m.theta_x);
    Denoiser<float> check_f(m.cfg_f, m.theta_f);
    return m;
}

} // namespace fg2
