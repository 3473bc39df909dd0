#pragma once

// Static SVG filmstrip: every k-th frame of a gesture clip drawn as a
// connected skeleton, one panel per sampled frame. Output bytes are a pure
// function of the inputs.

#include <string>
#include <utility>
#include <vector>

#include "fg2/mat.hpp"

namespace fg2 {

// "a-b,c-d,..." -> index pairs; validated against the keypoint count later.
std::vector<std::pair<int, int>> parse_bone_list(const std::string& bones);

std::string render_svg(const MatF& clip, const std::vector<std::pair<int, int>>& bones,
                       size_t every_k = 8);

} // namespace fg2
