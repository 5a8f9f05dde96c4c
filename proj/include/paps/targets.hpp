#pragma once

#include <utility>
#include <vector>

#include "paps/scene.hpp"

namespace paps {

// Dense regression / heatmap targets derived from ground truth. Offsets are
// (dy, dx) from a pixel to the instance's fractional mass center. Instances
// with an empty inmodal mask contribute no center targets and are counted in
// n_fully_occluded.
struct DenseTargets {
    int h = 0, w = 0;
    double sigma = 8.0;
    Array3 center_heatmap;         // 1×H×W, max-merged Gaussians
    Array3 inmodal_offsets;        // 2×H×W
    Array3 inmodal_valid;          // 1×H×W, inmodal thing pixels
    Array3 amodal_center_offsets;  // 2×H×W, constant per 3×3 center window
    Array3 occlusion_map;          // 1×H×W, any amodal-minus-inmodal cover
    Array3 center_occ_flags;       // 1×H×W, occluded flag at center windows
    Array3 center_valid;           // 1×H×W, 3×3 windows around inmodal centers
    std::vector<int> live_instance_ids;                      // nonempty inmodal
    std::vector<std::pair<double, double>> inmodal_centers;  // fractional, per live instance
    std::vector<std::pair<double, double>> amodal_centers;
    int n_fully_occluded = 0;

    // Classification targets (row-major H*W).
    std::vector<uint16_t> semantic_target;   // [0, n_stuff+n_thing)
    std::vector<uint16_t> thing_sem_target;  // 0 = all-stuff class, 1+k = thing k
    std::vector<double> ce_weights;          // small-instance upweighting
};

DenseTargets derive_dense_targets(const AmodalScene& scene, double sigma = 8.0);

// Area below which an instance's pixels get the bootstrapped-CE upweight.
constexpr int kSmallInstanceArea = 64 * 64;
constexpr double kSmallInstanceWeight = 3.0;

}  // namespace paps
