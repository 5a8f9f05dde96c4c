#include "paps/metrics.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

namespace paps {

void MetricAccumulator::add(const AmodalPanopticPrediction& pred, const AmodalScene& gt,
                            bool inmodal_only) {
    if (pred.h != gt.h || pred.w != gt.w) throw ConfigError("evaluate: image dims disagree");
    if (gt.n_stuff != n_stuff_ || gt.n_thing != n_thing_ || pred.n_stuff != n_stuff_ ||
        pred.n_thing != n_thing_)
        throw ConfigError("evaluate: class vocabulary mismatch");

    auto gt_mask = [&](const InstanceGT& g) -> const BinaryMask& {
        return inmodal_only ? g.inmodal_mask : g.amodal_mask;
    };
    auto pred_mask = [&](const FusedInstance& p) -> const BinaryMask& {
        return inmodal_only ? p.inmodal_mask : p.amodal_mask;
    };

    // thing classes
    for (int cls = 0; cls < n_thing_; ++cls) {
        int sem_id = n_stuff_ + cls;
        ClassMetrics& cm = per_class_[sem_id];
        std::vector<const InstanceGT*> gts;
        for (const auto& g : gt.instances)
            if (g.class_id == cls && gt_mask(g).count() > 0) gts.push_back(&g);
        std::vector<const FusedInstance*> preds;
        for (const auto& p : pred.instances)
            if (p.class_id == cls && pred_mask(p).count() > 0) preds.push_back(&p);

        struct Cand {
            size_t gi, pi;
            double iou;
        };
        std::vector<Cand> cands;
        for (size_t gi = 0; gi < gts.size(); ++gi)
            for (size_t pi = 0; pi < preds.size(); ++pi) {
                double iou = mask_iou(gt_mask(*gts[gi]), pred_mask(*preds[pi]));
                if (iou > 0.5) cands.push_back({gi, pi, iou});
            }
        std::stable_sort(cands.begin(), cands.end(),
                         [](const Cand& a, const Cand& b) { return a.iou > b.iou; });
        std::vector<bool> g_used(gts.size(), false), p_used(preds.size(), false);
        for (const Cand& c : cands) {
            if (g_used[c.gi] || p_used[c.pi]) continue;
            g_used[c.gi] = p_used[c.pi] = true;
            ++cm.tp;
            cm.iou_sum += c.iou;
            matches_.push_back({sem_id, gts[c.gi]->instance_id, preds[c.pi]->instance_id, c.iou,
                                MatchRecord::TP});
        }
        for (size_t gi = 0; gi < gts.size(); ++gi)
            if (!g_used[gi]) {
                ++cm.fn;
                matches_.push_back({sem_id, gts[gi]->instance_id, 0, 0.0, MatchRecord::FN});
            }
        for (size_t pi = 0; pi < preds.size(); ++pi)
            if (!p_used[pi]) {
                ++cm.fp;
                matches_.push_back({sem_id, 0, preds[pi]->instance_id, 0.0, MatchRecord::FP});
            }

        // coverage: best-match IoU per ground-truth segment, area weighted
        for (const auto* g : gts) {
            double best = 0.0;
            for (const auto* p : preds) best = std::max(best, mask_iou(gt_mask(*g), pred_mask(*p)));
            double area = gt_mask(*g).count();
            cm.apc_weighted += area * best;
            cm.apc_area += area;
        }
    }

    // stuff classes: one region per class per scene
    size_t plane = static_cast<size_t>(gt.h) * gt.w;
    for (int cls = 0; cls < n_stuff_; ++cls) {
        ClassMetrics& cm = per_class_[cls];
        long inter = 0, gt_n = 0, pred_n = 0;
        for (size_t p = 0; p < plane; ++p) {
            bool in_gt = gt.semantic_map[p] == cls;
            bool in_pred = pred.semantic_map[p] == cls;
            inter += in_gt && in_pred;
            gt_n += in_gt;
            pred_n += in_pred;
        }
        if (gt_n == 0 && pred_n == 0) continue;
        double uni = static_cast<double>(gt_n + pred_n - inter);
        double iou = uni > 0 ? inter / uni : 0.0;
        if (gt_n > 0 && pred_n > 0 && iou > 0.5) {
            ++cm.tp;
            cm.iou_sum += iou;
            matches_.push_back({cls, 0, 0, iou, MatchRecord::TP});
        } else {
            if (gt_n > 0) {
                ++cm.fn;
                matches_.push_back({cls, 0, 0, iou, MatchRecord::FN});
            }
            if (pred_n > 0) {
                ++cm.fp;
                matches_.push_back({cls, 0, 0, iou, MatchRecord::FP});
            }
        }
        if (gt_n > 0) {
            cm.apc_weighted += static_cast<double>(gt_n) * iou;
            cm.apc_area += static_cast<double>(gt_n);
        }
    }
}

MetricReport MetricAccumulator::report() const {
    MetricReport rep;
    rep.n_stuff = n_stuff_;
    rep.n_thing = n_thing_;
    rep.per_class = per_class_;
    rep.matches = matches_;

    auto mean_over = [&](bool stuff, bool thing, bool apc) {
        double sum = 0;
        int n = 0;
        for (const auto& [cls, cm] : per_class_) {
            bool is_stuff = cls < n_stuff_;
            if (is_stuff && !stuff) continue;
            if (!is_stuff && !thing) continue;
            if (apc) {
                if (!cm.active_apc()) continue;
                sum += cm.apc();
            } else {
                if (!cm.active_apq()) continue;
                sum += cm.apq();
            }
            ++n;
        }
        return n > 0 ? sum / n : 0.0;
    };
    rep.apq = mean_over(true, true, false);
    rep.apq_s = mean_over(true, false, false);
    rep.apq_t = mean_over(false, true, false);
    rep.apc = mean_over(true, true, true);
    rep.apc_s = mean_over(true, false, true);
    rep.apc_t = mean_over(false, true, true);
    return rep;
}

MetricReport evaluate(const AmodalPanopticPrediction& pred, const AmodalScene& gt, bool inmodal_only) {
    MetricAccumulator acc(gt.n_stuff, gt.n_thing);
    acc.add(pred, gt, inmodal_only);
    return acc.report();
}

std::string MetricReport::to_json(const std::vector<std::string>& class_names) const {
    nlohmann::json j;
    j["convention"] = convention;
    j["APQ"] = apq;
    j["APC"] = apc;
    j["APQ_S"] = apq_s;
    j["APQ_T"] = apq_t;
    j["APC_S"] = apc_s;
    j["APC_T"] = apc_t;
    nlohmann::json per;
    for (const auto& [cls, cm] : per_class) {
        nlohmann::json c;
        c["class_id"] = cls;
        if (cls < static_cast<int>(class_names.size())) c["name"] = class_names[cls];
        c["TP"] = cm.tp;
        c["FP"] = cm.fp;
        c["FN"] = cm.fn;
        c["APQ"] = cm.apq();
        c["APC"] = cm.apc();
        per.push_back(c);
    }
    j["per_class"] = per;
    j["n_matches"] = matches.size();
    return j.dump(2);
}

}  // namespace paps
