#pragma once

// Test-only reference implementations, written straight from the definitions
// and kept independent of the library code paths they check.

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "paps/mask.hpp"
#include "paps/scene.hpp"

namespace paps_test {

// Longest chain of occluders ending at each node, by exhaustive path search.
inline std::map<int, int> oracle_longest_chain_layers(
    const std::vector<int>& nodes, const std::vector<std::pair<int, int>>& edges) {
    std::map<int, std::vector<int>> occluders;
    for (int v : nodes) occluders[v];
    for (const auto& [u, v] : edges) occluders[v].push_back(u);

    std::map<int, int> layers;
    // no memoization on purpose: enumerate every chain
    std::function<int(int)> longest = [&](int v) -> int {
        int best = 0;
        for (int u : occluders[v]) best = std::max(best, 1 + longest(u));
        return best;
    };
    for (int v : nodes) layers[v] = longest(v);
    return layers;
}

// Occlusion edges recomputed pairwise from the definition.
inline std::vector<std::pair<int, int>> oracle_occlusion_edges(const paps::AmodalScene& scene) {
    std::vector<std::pair<int, int>> edges;
    for (const auto& a : scene.instances)
        for (const auto& b : scene.instances) {
            if (a.instance_id == b.instance_id || a.depth_rank >= b.depth_rank) continue;
            bool hit = false;
            for (int y = 0; y < scene.h && !hit; ++y)
                for (int x = 0; x < scene.w && !hit; ++x)
                    if (a.amodal_mask.at(y, x) && b.amodal_mask.at(y, x) && !b.inmodal_mask.at(y, x))
                        hit = true;
            if (hit) edges.emplace_back(a.instance_id, b.instance_id);
        }
    std::sort(edges.begin(), edges.end());
    return edges;
}

// Mass center by direct averaging over mask pixel coordinates.
inline std::pair<double, double> oracle_mass_center(const paps::BinaryMask& m) {
    double sy = 0, sx = 0;
    int n = 0;
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x)
            if (m.at(y, x)) {
                sy += y;
                sx += x;
                ++n;
            }
    return {sy / n, sx / n};
}

// Sliding-window local-maximum peak extraction (keypoint NMS reference).
struct OraclePeak {
    int y, x;
    double score;
};
inline std::vector<OraclePeak> oracle_find_centers(const std::vector<double>& heat, int h, int w,
                                                   int k_max, double conf, int kernel) {
    int r = kernel / 2;
    std::vector<OraclePeak> peaks;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double v = heat[static_cast<size_t>(y) * w + x];
            if (v < conf) continue;
            bool is_max = true;
            for (int dy = -r; dy <= r && is_max; ++dy)
                for (int dx = -r; dx <= r && is_max; ++dx) {
                    int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                    if (heat[static_cast<size_t>(yy) * w + xx] > v) is_max = false;
                    // ties: the lexicographically first pixel wins
                    if (heat[static_cast<size_t>(yy) * w + xx] == v && (yy < y || (yy == y && xx < x)))
                        is_max = false;
                }
            if (is_max) peaks.push_back({y, x, v});
        }
    std::stable_sort(peaks.begin(), peaks.end(), [](const OraclePeak& a, const OraclePeak& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    if (static_cast<int>(peaks.size()) > k_max) peaks.resize(k_max);
    return peaks;
}

}  // namespace paps_test
