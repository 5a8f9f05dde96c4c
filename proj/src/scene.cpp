#include "paps/scene.hpp"

#include <set>

namespace paps {

int AmodalScene::fully_occluded_count() const {
    int n = 0;
    for (const auto& inst : instances) n += inst.inmodal_mask.count() == 0;
    return n;
}

void validate_scene(const AmodalScene& scene) {
    if (scene.image.c != 3 || scene.image.h != scene.h || scene.image.w != scene.w)
        throw ValidationError("image dims do not match scene dims");
    if (scene.semantic_map.size() != static_cast<size_t>(scene.h) * scene.w)
        throw ValidationError("semantic_map size does not match scene dims");
    for (double v : scene.image.v)
        if (v < 0.0 || v > 1.0) throw ValidationError("image value outside [0,1]");

    std::set<int> ids, ranks;
    for (const auto& inst : scene.instances) {
        if (inst.instance_id <= 0) throw ValidationError("instance_id must be positive");
        if (!ids.insert(inst.instance_id).second)
            throw ValidationError("duplicate instance_id " + std::to_string(inst.instance_id));
        if (!ranks.insert(inst.depth_rank).second)
            throw ValidationError("duplicate depth_rank " + std::to_string(inst.depth_rank));
        if (inst.amodal_mask.h != scene.h || inst.amodal_mask.w != scene.w ||
            inst.inmodal_mask.h != scene.h || inst.inmodal_mask.w != scene.w)
            throw ValidationError("mask dims do not match scene dims (instance " +
                                  std::to_string(inst.instance_id) + ")");
        if (!inst.inmodal_mask.is_subset_of(inst.amodal_mask))
            throw ValidationError("inmodal mask not a subset of amodal mask (instance " +
                                  std::to_string(inst.instance_id) + ")");
        bool occ = inst.amodal_mask.set_difference(inst.inmodal_mask).count() > 0;
        if (occ != inst.occluded_flag)
            throw ValidationError("occluded_flag inconsistent with masks (instance " +
                                  std::to_string(inst.instance_id) + ")");
        if (scene.n_thing > 0 && (inst.class_id < 0 || inst.class_id >= scene.n_thing))
            throw ValidationError("class_id out of range (instance " + std::to_string(inst.instance_id) + ")");
    }
    for (size_t i = 0; i < scene.instances.size(); ++i)
        for (size_t j = i + 1; j < scene.instances.size(); ++j)
            if (scene.instances[i].inmodal_mask.intersects(scene.instances[j].inmodal_mask))
                throw ValidationError("inmodal masks of instances " +
                                      std::to_string(scene.instances[i].instance_id) + " and " +
                                      std::to_string(scene.instances[j].instance_id) + " overlap");
    if (scene.n_stuff > 0) {
        for (const auto& inst : scene.instances) {
            uint16_t want = static_cast<uint16_t>(scene.n_stuff + inst.class_id);
            for (int y = 0; y < scene.h; ++y)
                for (int x = 0; x < scene.w; ++x)
                    if (inst.inmodal_mask.at(y, x) && scene.semantic_at(y, x) != want)
                        throw ValidationError("semantic_map disagrees with inmodal mask of instance " +
                                              std::to_string(inst.instance_id));
        }
        int n_classes = scene.n_stuff + scene.n_thing;
        for (uint16_t v : scene.semantic_map)
            if (v >= n_classes) throw ValidationError("semantic_map id out of range");
    }
}

}  // namespace paps
