#include "paps/ideal.hpp"

#include <cmath>

namespace paps {

HeadOutputs encode_ideal_outputs(const AmodalScene& scene, const OrderingStack& stack,
                                 const DenseTargets& dense, double magnitude) {
    const int h = scene.h, w = scene.w;
    const int ns = scene.n_stuff, nt = scene.n_thing;
    const int nl = stack.n_layers;
    const double m = magnitude;

    HeadOutputs out;
    out.h = h;
    out.w = w;
    out.n_stuff = ns;
    out.n_thing = nt;
    out.n_layers = nl;
    out.sem_logits = Array3(ns + nt, h, w);
    out.roo_seg_logits = Array3(nl, h, w, -m);
    out.occ_seg_logits = Array3(1, h, w);
    out.thing_sem_logits = Array3(1 + nt, h, w);
    out.center_heatmap = dense.center_heatmap;
    out.center_occ_logits = Array3(1, h, w, -m);
    out.inmodal_offsets = dense.inmodal_offsets;
    out.amodal_center_offsets = Array3(2, h, w);
    out.roo_amodal_offsets = stack.layer_offsets;

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int sem = scene.semantic_at(y, x);
            out.sem_logits.at(sem, y, x) = m;
            int thing_channel = sem < ns ? 0 : 1 + (sem - ns);
            out.thing_sem_logits.at(thing_channel, y, x) = m;
            out.occ_seg_logits.at(0, y, x) = dense.occlusion_map.at(0, y, x) > 0 ? m : -m;
        }

    for (int l = 0; l < nl; ++l)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (stack.layer_masks[l].at(y, x)) out.roo_seg_logits.at(l, y, x) = m;

    // center-window fields: occlusion flag logits, and amodal-center offsets
    // expressed relative to the window pixel so the fused center is exact
    for (size_t k = 0; k < dense.live_instance_ids.size(); ++k) {
        auto [icy, icx] = dense.inmodal_centers[k];
        auto [acy, acx] = dense.amodal_centers[k];
        int ry = static_cast<int>(std::lround(icy));
        int rx = static_cast<int>(std::lround(icx));
        double flag = dense.center_occ_flags.at(0, ry, rx) > 0 ? m : -m;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                int y = ry + dy, x = rx + dx;
                if (y < 0 || y >= h || x < 0 || x >= w) continue;
                out.amodal_center_offsets.at(0, y, x) = acy - y;
                out.amodal_center_offsets.at(1, y, x) = acx - x;
                out.center_occ_logits.at(0, y, x) = flag;
            }
    }
    return out;
}

}  // namespace paps
