#include "paps/targets.hpp"

#include <cmath>

namespace paps {

DenseTargets derive_dense_targets(const AmodalScene& scene, double sigma) {
    if (sigma <= 0.0) throw ConfigError("sigma must be positive");
    const int h = scene.h, w = scene.w;
    DenseTargets t;
    t.h = h;
    t.w = w;
    t.sigma = sigma;
    t.center_heatmap = Array3(1, h, w);
    t.inmodal_offsets = Array3(2, h, w);
    t.inmodal_valid = Array3(1, h, w);
    t.amodal_center_offsets = Array3(2, h, w);
    t.occlusion_map = Array3(1, h, w);
    t.center_occ_flags = Array3(1, h, w);
    t.center_valid = Array3(1, h, w);
    t.semantic_target.assign(scene.semantic_map.begin(), scene.semantic_map.end());
    t.thing_sem_target.assign(static_cast<size_t>(h) * w, 0);
    t.ce_weights.assign(static_cast<size_t>(h) * w, 1.0);

    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (const auto& inst : scene.instances) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (inst.amodal_mask.at(y, x) && !inst.inmodal_mask.at(y, x)) t.occlusion_map.at(0, y, x) = 1.0;

        if (inst.inmodal_mask.count() == 0) {
            ++t.n_fully_occluded;
            continue;
        }
        auto [icy, icx] = inst.inmodal_mask.centroid();
        auto [acy, acx] = inst.amodal_mask.centroid();
        t.live_instance_ids.push_back(inst.instance_id);
        t.inmodal_centers.emplace_back(icy, icx);
        t.amodal_centers.emplace_back(acy, acx);

        int ry = static_cast<int>(std::lround(icy));
        int rx = static_cast<int>(std::lround(icx));
        // heatmap peak placed at the rounded center, merged across instances by max
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double d2 = (y - ry) * static_cast<double>(y - ry) + (x - rx) * static_cast<double>(x - rx);
                double g = std::exp(-d2 * inv2s2);
                if (g > t.center_heatmap.at(0, y, x)) t.center_heatmap.at(0, y, x) = g;
            }

        double small_w = inst.inmodal_mask.count() < kSmallInstanceArea ? kSmallInstanceWeight : 1.0;
        uint16_t thing_cls = static_cast<uint16_t>(1 + inst.class_id);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (inst.inmodal_mask.at(y, x)) {
                    t.inmodal_offsets.at(0, y, x) = icy - y;
                    t.inmodal_offsets.at(1, y, x) = icx - x;
                    t.inmodal_valid.at(0, y, x) = 1.0;
                    t.thing_sem_target[static_cast<size_t>(y) * w + x] = thing_cls;
                    t.ce_weights[static_cast<size_t>(y) * w + x] = small_w;
                }

        // amodal center offset and occlusion flag supervised on a 3×3 window
        double flag = inst.occluded_flag ? 1.0 : 0.0;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                int y = ry + dy, x = rx + dx;
                if (y < 0 || y >= h || x < 0 || x >= w) continue;
                t.amodal_center_offsets.at(0, y, x) = acy - icy;
                t.amodal_center_offsets.at(1, y, x) = acx - icx;
                t.center_occ_flags.at(0, y, x) = flag;
                t.center_valid.at(0, y, x) = 1.0;
            }
    }
    return t;
}

}  // namespace paps
