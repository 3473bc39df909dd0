#pragma once

// Gesture clip sets on disk: a checkpoint-envelope file holding clip.<i>
// matrices, optional per-clip onset frame indices (for beat scoring), and a
// config echo. Written by `generate`, consumed by `evaluate` and `render`.

#include <string>
#include <vector>

#include "fg2/checkpoint.hpp"
#include "fg2/metrics.hpp"

namespace fg2 {

struct ClipSetFile {
    ClipSet clips;
    std::vector<std::vector<size_t>> onsets; // empty, or one list per clip
    std::string config_text;
};

inline void save_clipset(const ClipSetFile& s, const std::string& path) {
    require(!s.clips.empty(), "clipset: no clips to save");
    require(s.onsets.empty() || s.onsets.size() == s.clips.size(),
            "clipset: onset list count mismatch");
    Checkpoint c;
    c.add_text("meta.kind", "clipset");
    c.add_text("meta.config_text", s.config_text);
    c.add_scalar("count", double(s.clips.size()));
    c.add_scalar("has_onsets", s.onsets.empty() ? 0.0 : 1.0);
    for (size_t i = 0; i < s.clips.size(); ++i) {
        c.add_matf("clip." + std::to_string(i), s.clips[i]);
        if (!s.onsets.empty())
            c.add_vecd("onsets." + std::to_string(i),
                       std::vector<double>(s.onsets[i].begin(), s.onsets[i].end()));
    }
    save_checkpoint(c, path);
}

inline ClipSetFile load_clipset(const std::string& path) {
    const Checkpoint c = load_checkpoint(path);
    require(c.text("meta.kind") == "clipset", "clipset: wrong file kind");
    ClipSetFile s;
    s.config_text = c.text("meta.config_text");
    const size_t n = size_t(c.scalar("count"));
    const bool has_onsets = c.scalar("has_onsets") != 0.0;
    for (size_t i = 0; i < n; ++i) {
        s.clips.push_back(c.matf("clip." + std::to_string(i)));
        if (has_onsets) {
            std::vector<size_t> o;
            for (double v : c.vecd("onsets." + std::to_string(i))) {
                require(v >= 0, "clipset: negative onset frame");
                o.push_back(size_t(v));
            }
            s.onsets.push_back(std::move(o));
        }
    }
    return s;
}

} // namespace fg2
