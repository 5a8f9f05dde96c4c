#pragma once

#include "paps/model_config.hpp"
#include "paps/nn.hpp"

namespace paps {

// Shared multi-resolution features: per-stage trunk outputs B, the stride-4
// concatenation C4 (256 channels) and the aggregated 256-channel P levels.
struct FeaturePyramid {
    Tensor b4, b8, b16, b32;
    Tensor c4;
    Tensor p4, p8, p16, p32;
};

class Backbone {
public:
    Backbone(ParamStore& ps, Rng& rng, const ModelConfig& cfg);
    FeaturePyramid forward(const Tensor& image) const;

private:
    ConvUnit stem1_, stem2_;
    SepConv down8_, down16_, down32_;
    std::array<std::vector<SepConv>, 4> stage_blocks_;
    // one cross-resolution exchange between adjacent branches
    ConvUnit xc_from_up_[4], xc_from_down_[4];
    bool has_up_[4] = {false, false, false, false};
    bool has_down_[4] = {false, false, false, false};
    ConvUnit c4_reduce_;
    SepConv p4_, p8_, p16_, p32_;
};

}  // namespace paps
