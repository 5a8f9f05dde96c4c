#pragma once

#include <string>
#include <utility>
#include <vector>

#include "paps/decoders.hpp"
#include "paps/mask.hpp"

namespace paps {

// Plain-array bundle of head predictions at input resolution; the deterministic
// fusion pipeline consumes this, never tensors.
struct HeadOutputs {
    int h = 0, w = 0;
    int n_stuff = 0, n_thing = 0, n_layers = 0;
    Array3 sem_logits;             // (n_stuff+n_thing)×H×W
    Array3 roo_seg_logits;         // n_layers×H×W
    Array3 occ_seg_logits;         // 1×H×W
    Array3 thing_sem_logits;       // (n_thing+1)×H×W, channel 0 is the all-stuff class
    Array3 center_heatmap;         // 1×H×W in [0,1]
    Array3 center_occ_logits;      // 1×H×W
    Array3 inmodal_offsets;        // 2×H×W (dy,dx)
    Array3 amodal_center_offsets;  // 2×H×W
    Array3 roo_amodal_offsets;     // (n_layers*2)×H×W
};

// Extracts plain values from a forward pass; with use_refined the relative
// occlusion ordering maps come from the refiner heads.
HeadOutputs head_values(const HeadTensors& heads, int n_stuff, int n_thing, int n_layers,
                        bool use_refined);

struct FusionConfig {
    double conf_threshold = 0.1;  // center confidence cutoff
    int k_max = 200;              // top-k retained peaks
    int nms_kernel = 7;           // keypoint NMS window
    double seg_threshold = 0.5;   // ordering-layer mask threshold
    double occ_threshold = 0.5;   // unoccluded-instance cutoff (refiner input)
};

struct CenterPeak {
    int y = 0, x = 0;
    double score = 0.0;
};

struct FusedInstance {
    int instance_id = 0;  // 1-based in center-score order
    int class_id = -1;    // thing class index
    BinaryMask inmodal_mask, amodal_mask, visible_mask, occluded_mask;
    CenterPeak inmodal_center;
    std::pair<double, double> amodal_center{0.0, 0.0};
    int layer_index = -1;
};

struct AmodalPanopticPrediction {
    int h = 0, w = 0;
    int n_stuff = 0, n_thing = 0;
    std::vector<uint16_t> semantic_map;
    std::vector<FusedInstance> instances;
    std::vector<std::string> warnings;
};

// Void-duplication semantic merge: the thing head's void logit is replicated
// across all stuff channels, added to the semantic logits, and argmaxed.
// Foreground is 1 on thing classes.
std::pair<std::vector<uint16_t>, BinaryMask> merge_semantics(const Array3& sem_logits,
                                                             const Array3& thing_sem_logits,
                                                             int n_stuff);

// Keypoint NMS: local maxima over an nms_kernel window (ties resolved toward
// the lexicographically first pixel), confidence-thresholded, top-k by score,
// sorted by (score desc, y, x).
std::vector<CenterPeak> find_centers(const Array3& heatmap, int k_max, double conf_threshold,
                                     int nms_kernel);

// Nearest-center grouping of foreground pixels through the offset field.
// Returns one mask per center; pixels with no centers stay unassigned.
std::vector<BinaryMask> group_inmodal(const std::vector<CenterPeak>& centers,
                                      const Array3& inmodal_offsets, const BinaryMask& foreground);

// Majority vote over the semantic labels inside each inmodal mask; returns the
// thing class id, or -1 for empty masks (dropped with a warning). Ties break
// toward the lower class id.
std::vector<int> vote_labels(const std::vector<BinaryMask>& inmodal_masks,
                             const std::vector<uint16_t>& semantic_map, int n_stuff,
                             std::vector<std::string>* warnings);

// Amodal center derivation, ordering-layer assignment and per-layer grouping.
// Instances whose amodal center falls in no layer mask keep their inmodal mask
// and get the nearest layer by mask distance.
void assign_and_group_amodal(std::vector<FusedInstance>& instances,
                             const Array3& amodal_center_offsets, const Array3& roo_seg_logits,
                             const Array3& roo_amodal_offsets, double seg_threshold,
                             std::vector<std::string>* warnings);

// visible = inmodal, occluded = amodal \ inmodal; checks prediction invariants.
AmodalPanopticPrediction finalize(std::vector<uint16_t> semantic_map,
                                  std::vector<FusedInstance> instances, int h, int w, int n_stuff,
                                  int n_thing, std::vector<std::string> warnings);

// The whole §-pipeline in order.
AmodalPanopticPrediction fuse(const HeadOutputs& heads, const FusionConfig& cfg = {});

// Per-instance predicted occlusion probability read at the center peak.
std::vector<double> instance_occlusion_probs(const std::vector<CenterPeak>& centers,
                                             const Array3& center_occ_logits);

}  // namespace paps
