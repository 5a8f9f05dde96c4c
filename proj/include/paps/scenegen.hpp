#pragma once

#include <cstdint>

#include "paps/scene.hpp"

namespace paps {

struct SceneGenConfig {
    int height = 128;
    int width = 128;
    int n_stuff = 4;
    int n_thing = 3;
    int min_instances = 2;
    int max_instances = 5;
    int min_shape_extent = 12;  // bounding-box edge in pixels
    int max_shape_extent = 48;
    int min_instance_area = 24;
    int max_stuff_bands = 3;
    double noise_level = 0.02;
    // Every instance must keep at least this fraction of its amodal area visible
    // (0 permits fully occluded instances).
    double min_visible_fraction = 0.0;
    // Minimum pairwise Euclidean distance between all instance mass centers
    // (0 disables the constraint).
    double min_center_sep = 0.0;
    int max_retries = 64;
};

// Deterministic for a fixed (config, seed). Throws GenerationError when the
// retry budget is exhausted without satisfying the placement constraints.
AmodalScene generate_scene(const SceneGenConfig& config, uint64_t seed);

// Class names used by generated datasets ("stuff0".."thing2" style).
std::vector<std::string> default_class_names(int n_stuff, int n_thing);

}  // namespace paps
