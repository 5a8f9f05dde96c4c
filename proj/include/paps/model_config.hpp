#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "paps/nn.hpp"

namespace paps {

enum class CrossTaskVariant { None, Concat, Sum, SelfOnly, PerInputSelf, CrossOnly, Full };

CrossTaskVariant cross_task_variant_from_string(const std::string& s);
std::string to_string(CrossTaskVariant v);

struct ModelConfig {
    int n_stuff = 4;
    int n_thing = 3;
    int n_layers = 4;
    int crop_h = 64;  // pins the refiner embedding geometry
    int crop_w = 64;
    std::array<int, 4> stage_channels = {16, 32, 64, 128};
    std::array<int, 4> stage_depths = {1, 1, 1, 1};
    int head_mid = 128;
    int head_narrow = 32;
    CrossTaskVariant cross_variant = CrossTaskVariant::Full;
    NormMode norm = NormMode::Group;
    bool with_refiner = true;
    int refiner_mem_slots = 128;  // N
    int refiner_channels = 64;    // C
    uint64_t init_seed = 1;

    static ModelConfig toy();
    // Mirrors the published preset shapes (N=8 ordering layers, 128-slot
    // refiner memory, 376x1408 crop) without claiming its capacity.
    static ModelConfig paper_shape();

    int n_classes() const { return n_stuff + n_thing; }
};

}  // namespace paps
