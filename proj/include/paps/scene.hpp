#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "paps/common.hpp"
#include "paps/mask.hpp"

namespace paps {

// Ground truth for one thing instance. depth_rank 0 is frontmost.
struct InstanceGT {
    int instance_id = 0;  // positive
    int class_id = 0;     // thing class index in [0, n_thing)
    BinaryMask amodal_mask;
    BinaryMask inmodal_mask;
    int depth_rank = 0;
    bool occluded_flag = false;
};

// One rendered scene with exact amodal ground truth. Image is channel-major
// 3×H×W in [0,1]; semantic ids are stuff [0,n_stuff) then thing
// [n_stuff, n_stuff+n_thing).
struct AmodalScene {
    int h = 0, w = 0;
    int n_stuff = 0, n_thing = 0;
    Array3 image;
    std::vector<uint16_t> semantic_map;
    std::vector<InstanceGT> instances;

    uint16_t semantic_at(int y, int x) const { return semantic_map[static_cast<size_t>(y) * w + x]; }
    int fully_occluded_count() const;
};

// Checks all AmodalScene/InstanceGT invariants; throws ValidationError on the
// first violation. Vocabulary checks are skipped when n_stuff/n_thing are 0.
void validate_scene(const AmodalScene& scene);

struct DatasetManifest {
    std::string version = "1";
    std::vector<std::string> class_names;  // stuff first, then thing
    int n_stuff = 0;
    int n_thing = 0;
    std::vector<std::string> scene_files;
    uint64_t seed = 0;
};

}  // namespace paps
