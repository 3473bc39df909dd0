#include "fg2/render_svg.hpp"

#include <cstdio>

namespace fg2 {

std::vector<std::pair<int, int>> parse_bone_list(const std::string& bones) {
    std::vector<std::pair<int, int>> out;
    size_t at = 0;
    while (at < bones.size()) {
        size_t end = bones.find(',', at);
        if (end == std::string::npos) end = bones.size();
        const std::string item = bones.substr(at, end - at);
        const size_t dash = item.find('-');
        require(dash != std::string::npos && dash > 0 && dash + 1 < item.size(),
                "bones: malformed entry '" + item + "'");
        try {
            out.emplace_back(std::stoi(item.substr(0, dash)), std::stoi(item.substr(dash + 1)));
        } catch (const std::exception&) {
            throw DataError("bones: malformed entry '" + item + "'");
        }
        require(out.back().first >= 0 && out.back().second >= 0, "bones: negative index");
        at = end + 1;
    }
    require(!out.empty(), "bones: empty list");
    return out;
}

namespace {

constexpr double kPanelW = 160.0, kPanelH = 200.0;
constexpr double kScale = 70.0; // world units -> px; world (0,0) lands at panel center

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace

std::string render_svg(const MatF& clip, const std::vector<std::pair<int, int>>& bones,
                       size_t every_k) {
    require(clip.rows >= 1 && clip.cols >= 2 && clip.cols % 2 == 0,
            "render: clip must be N x 2K with N >= 1");
    require(every_k >= 1, "render: sampling stride must be >= 1");
    const int kps = int(clip.cols / 2);
    for (const auto& [a, b] : bones)
        require(a < kps && b < kps, "render: bone index beyond keypoint count");

    const size_t panels = (clip.rows + every_k - 1) / every_k;
    const std::string total_w = std::to_string(size_t(kPanelW) * panels);
    const std::string total_h = std::to_string(size_t(kPanelH));
    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + total_w + "\" height=\"" +
         total_h + "\" viewBox=\"0 0 " + total_w + " " + total_h + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

    for (size_t p = 0; p < panels; ++p) {
        const size_t frame = p * every_k;
        const float* row = clip.row(frame);
        const double ox = double(p) * kPanelW;
        auto px = [&](int kp) { return ox + kPanelW / 2 + kScale * double(row[2 * kp]); };
        auto py = [&](int kp) { return kPanelH / 2 + kScale * double(row[2 * kp + 1]); };

        s += "<g stroke=\"#334455\" stroke-width=\"1.5\" fill=\"none\">\n";
        for (const auto& [a, b] : bones)
            s += "<line x1=\"" + num(px(a)) + "\" y1=\"" + num(py(a)) + "\" x2=\"" + num(px(b)) +
                 "\" y2=\"" + num(py(b)) + "\"/>\n";
        s += "</g>\n<g fill=\"#cc4433\">\n";
        for (int kp = 0; kp < kps; ++kp)
            s += "<circle cx=\"" + num(px(kp)) + "\" cy=\"" + num(py(kp)) + "\" r=\"1.8\"/>\n";
        s += "</g>\n";
        s += "<text x=\"" + num(ox + 6.0) +
             "\" y=\"14.00\" font-size=\"10\" fill=\"#888888\">f" + std::to_string(frame) +
             "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

} // namespace fg2
