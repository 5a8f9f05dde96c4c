#pragma once

#include "paps/model_config.hpp"
#include "paps/nn.hpp"

namespace paps {

// Within-scale multi-scale context: two 1x1 reducers feeding a 128-channel
// branch and two 3x3 depthwise-separable atrous branches with dilations (1,6)
// and (3,1), each paired with its globally pooled broadcast. Output is always
// 128 + 4*32 = 256 channels.
class ContextExtractor {
public:
    ContextExtractor() = default;
    ContextExtractor(ParamStore& ps, Rng& rng, const std::string& name, int in_c, NormMode norm);
    Tensor forward(const Tensor& x) const;

    static constexpr int kOutChannels = 256;

private:
    ConvUnit wide_;         // 1x1 in -> 128
    ConvUnit atrous_in_;    // 1x1 in -> 32
    SepConv atrous_a_;      // dilation (1,6)
    SepConv atrous_b_;      // dilation (3,1)
    int in_c_ = 0;
};

}  // namespace paps
