#include "fg2/t2g.hpp"

#include <cmath>

#include "fg2/checkpoint.hpp"

namespace fg2 {

MatF embed_frame_text(const std::vector<int>& fwords, const MatF& table) {
    MatF out(fwords.size(), table.cols);
    for (size_t i = 0; i < fwords.size(); ++i) {
        const int w = fwords[i];
        if (w == kSilenceWord) continue; // zero row
        require(w >= 0 && size_t(w) < table.rows, "embed: unknown word id");
        std::copy(table.row(size_t(w)), table.row(size_t(w)) + table.cols, out.row(i));
    }
    return out;
}

ClipData build_training_clips(const LoadedData& data, const TrainConfig& cfg) {
    require(!data.t2g.empty(), "train: empty paired gesture dataset");
    ClipData clips;
    for (const GestureRec& rec : data.t2g) {
        if (rec.frames.rows < cfg.clip_len) continue;
        const MatF cond = embed_frame_text(rec.fwords, data.cond_table);
        for (const ClipView& cv : clip_windows(rec.frames.rows, cfg.clip_len, cfg.clip_stride)) {
            MatF x0(cfg.clip_len, rec.frames.cols), cc(cfg.clip_len, cond.cols);
            std::copy(rec.frames.row(cv.offset), rec.frames.row(cv.offset + cv.length), x0.data());
            std::copy(cond.row(cv.offset), cond.row(cv.offset + cv.length), cc.data());
            clips.x0.push_back(std::move(x0));
            clips.cond.push_back(std::move(cc));
        }
    }
    require(!clips.x0.empty(), "train: no clips (records shorter than the clip length)");
    return clips;
}

T2GModel train_t2g(const LoadedData& data, const TrainConfig& cfg, uint64_t seed,
                   const ParamSet<float>* init) {
    require(cfg.batch >= 1 && cfg.steps >= 1, "train: bad step/batch configuration");
    const ClipData clips = build_training_clips(data, cfg);
    const Schedule sched = Schedule::linear(cfg.sched_T, cfg.beta_lo, cfg.beta_hi);

    DenoiserConfig net_cfg = cfg.net;
    net_cfg.cond_dim = data.cond_table.cols;

    Rng master(seed);
    Rng r_batch = master.child("batch");
    Rng r_t = master.child("t");
    Rng r_eps = master.child("eps");

    T2GModel m;
    m.net_cfg = net_cfg;
    m.cond_table = data.cond_table;
    m.sched_T = cfg.sched_T;
    m.beta_lo = cfg.beta_lo;
    m.beta_hi = cfg.beta_hi;

    Denoiser<float> net = [&] {
        if (init) return Denoiser<float>(net_cfg, *init);
        Rng r_init = master.child("init.x");
        return Denoiser<float>(net_cfg, r_init);
    }();
    Adam<float> adam(net.params, cfg.adam);
    ParamSet<float> grads = net.params.zeros_like();

    std::vector<MatF> eps(cfg.batch);
    std::vector<TrainItem<float>> batch(cfg.batch);
    for (size_t step = 0; step < cfg.steps; ++step) {
        for (size_t b = 0; b < cfg.batch; ++b) {
            const size_t idx = size_t(r_batch.below(uint64_t(clips.x0.size())));
            const int t = int(r_t.below(uint64_t(sched.T))) + 1;
            const MatF& x0 = clips.x0[idx];
            eps[b] = MatF::normal(x0.rows, x0.cols, r_eps);
            batch[b] = TrainItem<float>{&x0, &clips.cond[idx], t, &eps[b]};
        }
        for (auto& g : grads.tensors) std::fill(g.v.begin(), g.v.end(), 0.0f);
        const double loss = loss_and_grad<float>(net, sched, batch, grads);
        m.loss_curve.push_back(loss);
        adam.update(net.params, grads);
    }
    m.theta_x = std::move(net.params);
    return m;
}

MatF generate_from_text(const T2GModel& m, const std::vector<int>& fwords, uint64_t seed) {
    require(!fwords.empty(), "generate: empty word track");
    const Denoiser<float> net(m.net_cfg, m.theta_x);
    const MatF cond = embed_frame_text(fwords, m.cond_table);
    const Schedule sched = m.schedule();
    Rng rng = Rng(seed).child("gen");
    return sample_loop<float>(
        sched, fwords.size(), m.net_cfg.x_dim,
        [&](const MatF& x, int t, MatF& out) { out = net.forward(x, t, cond); }, rng);
}

void save_t2g(const T2GModel& m, const std::string& path, const std::string& config_echo) {
    Checkpoint c;
    c.add_text("meta.kind", "t2g");
    c.add_text("meta.config_text", config_echo);
    c.add_scalar("net.x_dim", double(m.net_cfg.x_dim));
    c.add_scalar("net.d_model", double(m.net_cfg.d_model));
    c.add_scalar("net.layers", double(m.net_cfg.layers));
    c.add_scalar("net.cond_dim", double(m.net_cfg.cond_dim));
    c.add_scalar("sched.T", double(m.sched_T));
    c.add_scalar("sched.beta_lo", m.beta_lo);
    c.add_scalar("sched.beta_hi", m.beta_hi);
    c.add_matf("cond_table", m.cond_table);
    c.add_vecd("loss_curve", m.loss_curve);
    c.add_params("theta_x.", m.theta_x);
    save_checkpoint(c, path);
}

namespace {

size_t scalar_sz(const Checkpoint& c, const std::string& name) {
    const double v = c.scalar(name);
    require(v >= 0 && v == std::floor(v), "checkpoint: " + name + " is not a size");
    return size_t(v);
}

} // namespace

T2GModel load_t2g(const std::string& path) {
    const Checkpoint c = load_checkpoint(path);
    require(c.text("meta.kind") == "t2g", "t2g load: wrong checkpoint kind");
    T2GModel m;
    m.net_cfg.x_dim = scalar_sz(c, "net.x_dim");
    m.net_cfg.d_model = scalar_sz(c, "net.d_model");
    m.net_cfg.layers = scalar_sz(c, "net.layers");
    m.net_cfg.cond_dim = scalar_sz(c, "net.cond_dim");
    m.sched_T = int(scalar_sz(c, "sched.T"));
    m.beta_lo = c.scalar("sched.beta_lo");
    m.beta_hi = c.scalar("sched.beta_hi");
    m.cond_table = c.matf("cond_table");
    m.loss_curve = c.vecd("loss_curve");
    m.theta_x = c.params("theta_x.");
    Denoiser<float> check(m.net_cfg, m.theta_x); // validates shapes
    return m;
}

} // namespace fg2
