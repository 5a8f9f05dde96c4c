#pragma once

#include <map>
#include <string>
#include <vector>

#include "paps/fusion.hpp"
#include "paps/scene.hpp"

namespace paps {

// Matching convention (recorded in the report header): thing segments match
// when classes agree and amodal IoU > 0.5, uniquely per class by descending
// IoU; stuff segments match per class by semantic IoU > 0.5. APQ is PQ-style
// (Σ IoU of TPs) / (TP + FP/2 + FN/2) per class; APC is the area-weighted mean
// of each ground-truth segment's best-match IoU. Both average over classes.
inline constexpr const char* kMetricConvention = "paps-apq-apc-v1 (amodal-IoU matching)";

struct MatchRecord {
    int class_id;      // semantic id
    int gt_id;         // instance id (0 for stuff)
    int pred_id;       // fused instance id (0 for stuff)
    double iou;
    enum Kind { TP, FP, FN } kind;
};

struct ClassMetrics {
    int tp = 0, fp = 0, fn = 0;
    double iou_sum = 0.0;       // over true positives
    double apc_weighted = 0.0;  // Σ area(gt) * best IoU
    double apc_area = 0.0;      // Σ area(gt)

    double apq() const {
        double denom = tp + 0.5 * fp + 0.5 * fn;
        return denom > 0 ? iou_sum / denom : 0.0;
    }
    double apc() const { return apc_area > 0 ? apc_weighted / apc_area : 0.0; }
    bool active_apq() const { return tp + fp + fn > 0; }
    bool active_apc() const { return apc_area > 0; }
};

struct MetricReport {
    std::string convention = kMetricConvention;
    int n_stuff = 0, n_thing = 0;
    double apq = 0, apc = 0;
    double apq_s = 0, apq_t = 0, apc_s = 0, apc_t = 0;
    std::map<int, ClassMetrics> per_class;  // keyed by semantic class id
    std::vector<MatchRecord> matches;

    std::string to_json(const std::vector<std::string>& class_names = {}) const;
};

// Accumulates per-class statistics over scenes; report() finalizes the means.
class MetricAccumulator {
public:
    MetricAccumulator(int n_stuff, int n_thing) : n_stuff_(n_stuff), n_thing_(n_thing) {}

    // With inmodal_only the amodal masks are replaced by the inmodal ones on
    // both sides, which reduces APQ to standard panoptic quality.
    void add(const AmodalPanopticPrediction& pred, const AmodalScene& gt, bool inmodal_only = false);
    MetricReport report() const;

private:
    int n_stuff_, n_thing_;
    std::map<int, ClassMetrics> per_class_;
    std::vector<MatchRecord> matches_;
};

MetricReport evaluate(const AmodalPanopticPrediction& pred, const AmodalScene& gt,
                      bool inmodal_only = false);

}  // namespace paps
