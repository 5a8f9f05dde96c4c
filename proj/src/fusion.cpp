#include "paps/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace paps {

HeadOutputs head_values(const HeadTensors& heads, int n_stuff, int n_thing, int n_layers,
                        bool use_refined) {
    HeadOutputs out;
    out.h = heads.h;
    out.w = heads.w;
    out.n_stuff = n_stuff;
    out.n_thing = n_thing;
    out.n_layers = n_layers;
    out.sem_logits = heads.sem_logits.to_array();
    out.occ_seg_logits = heads.occ_seg_logits.to_array();
    out.thing_sem_logits = heads.thing_sem_logits.to_array();
    out.center_heatmap = heads.center_heatmap.to_array();
    out.center_occ_logits = heads.center_occ_logits.to_array();
    out.inmodal_offsets = heads.inmodal_offsets.to_array();
    out.amodal_center_offsets = heads.amodal_center_offsets.to_array();
    if (use_refined) {
        if (!heads.has_refined()) throw ConfigError("refined outputs requested but absent");
        out.roo_seg_logits = heads.refined_roo_seg_logits.to_array();
        out.roo_amodal_offsets = heads.refined_roo_amodal_offsets.to_array();
    } else {
        out.roo_seg_logits = heads.roo_seg_logits.to_array();
        out.roo_amodal_offsets = heads.roo_amodal_offsets.to_array();
    }
    return out;
}

std::pair<std::vector<uint16_t>, BinaryMask> merge_semantics(const Array3& sem_logits,
                                                             const Array3& thing_sem_logits,
                                                             int n_stuff) {
    const int k = sem_logits.c;
    const int h = sem_logits.h, w = sem_logits.w;
    const int n_thing = thing_sem_logits.c - 1;
    if (n_thing + n_stuff != k)
        throw ShapeError("merge_semantics: channel counts disagree (" + std::to_string(k) + " vs 1+" +
                         std::to_string(n_thing) + " with N_stuff " + std::to_string(n_stuff) + ")");
    if (thing_sem_logits.h != h || thing_sem_logits.w != w)
        throw ShapeError("merge_semantics: spatial dims disagree");

    std::vector<uint16_t> semantic(static_cast<size_t>(h) * w, 0);
    BinaryMask foreground(h, w);
    size_t plane = static_cast<size_t>(h) * w;
    for (size_t p = 0; p < plane; ++p) {
        double void_logit = thing_sem_logits.v[p];  // channel 0
        int best = 0;
        double best_v = -1e300;
        for (int c = 0; c < k; ++c) {
            double add = c < n_stuff ? void_logit : thing_sem_logits.v[(1 + c - n_stuff) * plane + p];
            double v = sem_logits.v[c * plane + p] + add;
            if (v > best_v) {  // ties keep the lower class id
                best_v = v;
                best = c;
            }
        }
        semantic[p] = static_cast<uint16_t>(best);
        foreground.data[p] = best >= n_stuff;
    }
    return {std::move(semantic), std::move(foreground)};
}

std::vector<CenterPeak> find_centers(const Array3& heatmap, int k_max, double conf_threshold,
                                     int nms_kernel) {
    const int h = heatmap.h, w = heatmap.w;
    const int r = nms_kernel / 2;
    std::vector<CenterPeak> peaks;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double v = heatmap.at(0, y, x);
            if (v < conf_threshold) continue;
            bool keep = true;
            for (int dy = -r; dy <= r && keep; ++dy)
                for (int dx = -r; dx <= r && keep; ++dx) {
                    int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                    double u = heatmap.at(0, yy, xx);
                    if (u > v) keep = false;
                    if (u == v && (yy < y || (yy == y && xx < x))) keep = false;
                }
            if (keep) peaks.push_back({y, x, v});
        }
    std::stable_sort(peaks.begin(), peaks.end(), [](const CenterPeak& a, const CenterPeak& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    if (static_cast<int>(peaks.size()) > k_max) peaks.resize(k_max);
    return peaks;
}

std::vector<BinaryMask> group_inmodal(const std::vector<CenterPeak>& centers,
                                      const Array3& inmodal_offsets, const BinaryMask& foreground) {
    const int h = foreground.h, w = foreground.w;
    std::vector<BinaryMask> masks(centers.size(), BinaryMask(h, w));
    if (centers.empty()) return masks;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!foreground.at(y, x)) continue;
            double ty = y + inmodal_offsets.at(0, y, x);
            double tx = x + inmodal_offsets.at(1, y, x);
            int best = 0;
            double best_d = 1e300;
            for (size_t i = 0; i < centers.size(); ++i) {
                double dy = ty - centers[i].y, dx = tx - centers[i].x;
                double d = dy * dy + dx * dx;
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(i);
                }
            }
            masks[best].at(y, x) = 1;
        }
    return masks;
}

std::vector<int> vote_labels(const std::vector<BinaryMask>& inmodal_masks,
                             const std::vector<uint16_t>& semantic_map, int n_stuff,
                             std::vector<std::string>* warnings) {
    std::vector<int> classes;
    for (size_t i = 0; i < inmodal_masks.size(); ++i) {
        const BinaryMask& m = inmodal_masks[i];
        std::map<int, int> votes;
        for (int y = 0; y < m.h; ++y)
            for (int x = 0; x < m.w; ++x)
                if (m.at(y, x)) {
                    int sem = semantic_map[static_cast<size_t>(y) * m.w + x];
                    if (sem >= n_stuff) ++votes[sem - n_stuff];
                }
        if (votes.empty()) {
            if (warnings)
                warnings->push_back("instance " + std::to_string(i + 1) + " has no thing pixels; dropped");
            classes.push_back(-1);
            continue;
        }
        int best = -1, best_n = -1;
        for (const auto& [cls, n] : votes)
            if (n > best_n) {  // map iteration ascends, so ties keep the lower class id
                best_n = n;
                best = cls;
            }
        classes.push_back(best);
    }
    return classes;
}

namespace {

double mask_distance_sq(const BinaryMask& m, double cy, double cx) {
    double best = 1e300;
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x)
            if (m.at(y, x)) {
                double d = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                best = std::min(best, d);
            }
    return best;
}

}  // namespace

void assign_and_group_amodal(std::vector<FusedInstance>& instances,
                             const Array3& amodal_center_offsets, const Array3& roo_seg_logits,
                             const Array3& roo_amodal_offsets, double seg_threshold,
                             std::vector<std::string>* warnings) {
    const int n_layers = roo_seg_logits.c;
    const int h = roo_seg_logits.h, w = roo_seg_logits.w;
    const double logit_thr = std::log(seg_threshold / (1.0 - seg_threshold));

    std::vector<BinaryMask> layer_masks(n_layers, BinaryMask(h, w));
    for (int l = 0; l < n_layers; ++l)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) layer_masks[l].at(y, x) = roo_seg_logits.at(l, y, x) > logit_thr;

    // amodal centers from the offset head at the inmodal center pixel
    for (auto& inst : instances) {
        int cy = inst.inmodal_center.y, cx = inst.inmodal_center.x;
        inst.amodal_center = {cy + amodal_center_offsets.at(0, cy, cx),
                              cx + amodal_center_offsets.at(1, cy, cx)};
    }

    // layer selection: among containing layers, prefer the one whose regression
    // field at the center is most consistent with the center itself
    std::vector<bool> fallback(instances.size(), false);
    for (size_t i = 0; i < instances.size(); ++i) {
        auto& inst = instances[i];
        auto [acy, acx] = inst.amodal_center;
        int ry = static_cast<int>(std::lround(acy));
        int rx = static_cast<int>(std::lround(acx));
        int best_layer = -1;
        double best_res = 1e300;
        if (ry >= 0 && ry < h && rx >= 0 && rx < w) {
            for (int l = 0; l < n_layers; ++l) {
                if (!layer_masks[l].at(ry, rx)) continue;
                double py = ry + roo_amodal_offsets.at(2 * l + 0, ry, rx);
                double px = rx + roo_amodal_offsets.at(2 * l + 1, ry, rx);
                double res = (py - acy) * (py - acy) + (px - acx) * (px - acx);
                if (res < best_res - 1e-12) {
                    best_res = res;
                    best_layer = l;
                }
            }
        }
        if (best_layer < 0) {
            fallback[i] = true;
            double best_d = 1e300;
            int near = 0;
            for (int l = 0; l < n_layers; ++l) {
                if (layer_masks[l].count() == 0) continue;
                double d = mask_distance_sq(layer_masks[l], acy, acx);
                if (d < best_d) {
                    best_d = d;
                    near = l;
                }
            }
            inst.layer_index = near;
            if (warnings)
                warnings->push_back("instance " + std::to_string(inst.instance_id) +
                                    ": amodal center in no layer mask; using inmodal mask only");
        } else {
            inst.layer_index = best_layer;
        }
    }

    // per-layer grouping against the member amodal centers
    for (int l = 0; l < n_layers; ++l) {
        std::vector<size_t> members;
        for (size_t i = 0; i < instances.size(); ++i)
            if (!fallback[i] && instances[i].layer_index == l) members.push_back(i);
        std::vector<BinaryMask> grouped(members.size(), BinaryMask(h, w));
        if (!members.empty()) {
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    if (!layer_masks[l].at(y, x)) continue;
                    double ty = y + roo_amodal_offsets.at(2 * l + 0, y, x);
                    double tx = x + roo_amodal_offsets.at(2 * l + 1, y, x);
                    int best = 0;
                    double best_d = 1e300;
                    for (size_t k = 0; k < members.size(); ++k) {
                        auto [acy, acx] = instances[members[k]].amodal_center;
                        double dy = ty - acy, dx = tx - acx;
                        double d = dy * dy + dx * dx;
                        if (d < best_d) {
                            best_d = d;
                            best = static_cast<int>(k);
                        }
                    }
                    grouped[best].at(y, x) = 1;
                }
        }
        for (size_t k = 0; k < members.size(); ++k)
            instances[members[k]].amodal_mask = grouped[k].set_union(instances[members[k]].inmodal_mask);
    }
    for (size_t i = 0; i < instances.size(); ++i)
        if (fallback[i]) instances[i].amodal_mask = instances[i].inmodal_mask;
}

AmodalPanopticPrediction finalize(std::vector<uint16_t> semantic_map,
                                  std::vector<FusedInstance> instances, int h, int w, int n_stuff,
                                  int n_thing, std::vector<std::string> warnings) {
    AmodalPanopticPrediction pred;
    pred.h = h;
    pred.w = w;
    pred.n_stuff = n_stuff;
    pred.n_thing = n_thing;
    pred.semantic_map = std::move(semantic_map);
    pred.warnings = std::move(warnings);
    for (auto& inst : instances) {
        inst.visible_mask = inst.inmodal_mask;
        inst.occluded_mask = inst.amodal_mask.set_difference(inst.inmodal_mask);
        if (!inst.inmodal_mask.is_subset_of(inst.amodal_mask))
            throw InvariantError("fused amodal mask does not contain the inmodal mask");
        pred.instances.push_back(std::move(inst));
    }
    for (size_t i = 0; i < pred.instances.size(); ++i)
        for (size_t j = i + 1; j < pred.instances.size(); ++j)
            if (pred.instances[i].inmodal_mask.intersects(pred.instances[j].inmodal_mask))
                throw InvariantError("fused inmodal masks overlap");
    return pred;
}

std::vector<double> instance_occlusion_probs(const std::vector<CenterPeak>& centers,
                                             const Array3& center_occ_logits) {
    std::vector<double> probs;
    for (const auto& c : centers) {
        double logit = center_occ_logits.at(0, c.y, c.x);
        probs.push_back(1.0 / (1.0 + std::exp(-logit)));
    }
    return probs;
}

AmodalPanopticPrediction fuse(const HeadOutputs& heads, const FusionConfig& cfg) {
    auto [semantic, foreground] = merge_semantics(heads.sem_logits, heads.thing_sem_logits, heads.n_stuff);
    std::vector<CenterPeak> centers = find_centers(heads.center_heatmap, cfg.k_max, cfg.conf_threshold,
                                                   cfg.nms_kernel);
    std::vector<BinaryMask> inmodal = group_inmodal(centers, heads.inmodal_offsets, foreground);
    std::vector<std::string> warnings;
    std::vector<int> classes = vote_labels(inmodal, semantic, heads.n_stuff, &warnings);

    std::vector<FusedInstance> instances;
    for (size_t i = 0; i < centers.size(); ++i) {
        if (classes[i] < 0) continue;  // empty grouping, dropped
        FusedInstance inst;
        inst.instance_id = static_cast<int>(instances.size()) + 1;
        inst.class_id = classes[i];
        inst.inmodal_mask = inmodal[i];
        inst.inmodal_center = centers[i];
        instances.push_back(std::move(inst));
    }
    assign_and_group_amodal(instances, heads.amodal_center_offsets, heads.roo_seg_logits,
                            heads.roo_amodal_offsets, cfg.seg_threshold, &warnings);
    return finalize(std::move(semantic), std::move(instances), heads.h, heads.w, heads.n_stuff,
                    heads.n_thing, std::move(warnings));
}

}  // namespace paps
