#pragma once

#include <map>
#include <vector>

#include "paps/scene.hpp"

namespace paps {

// Directed occlusion relations: edge (occluder → occludee) whenever the
// occluder's amodal mask overlaps the occludee's hidden region and the
// occluder is strictly in front.
struct OcclusionGraph {
    std::vector<int> nodes;                       // instance ids
    std::vector<std::pair<int, int>> edges;       // (occluder_id, occludee_id)
};

OcclusionGraph build_occlusion_graph(const AmodalScene& scene);

// Longest-occluder-chain layer assignment: layer 0 for nodes with no incoming
// edges, otherwise 1 + max over occluders. Layers ≥ n_max clamp to n_max-1 and
// count into *truncated. Throws OrderingError naming a cycle on cyclic input.
std::map<int, int> assign_layers(const OcclusionGraph& graph, int n_max, int* truncated = nullptr);

// Per-layer segmentation and amodal center-regression targets.
struct OrderingStack {
    int n_layers = 0, h = 0, w = 0;
    std::vector<BinaryMask> layer_masks;  // n_layers masks
    Array3 layer_offsets;                 // (n_layers*2)×H×W, (dy,dx) per layer
    Array3 layer_valid;                   // n_layers×H×W
    std::map<int, int> layer_assignment;  // instance id → layer
};

OrderingStack build_ordering_stack(const AmodalScene& scene, const std::map<int, int>& assignment,
                                   int n_layers);

}  // namespace paps
