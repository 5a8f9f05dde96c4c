#pragma once

#include "paps/model_config.hpp"
#include "paps/nn.hpp"

namespace paps {

// Channel-confidence gate: global pool -> 1x1 reduce 256->64 -> 1x1 expand
// 64->256 -> sigmoid; output is a per-channel score in (0,1).
struct GateFn {
    ConvUnit reduce, expand;
    Tensor operator()(const Tensor& x) const;
};

// Bilateral decoder feature exchange. The full variant computes
//   F_R = (1-g1(F_S))·F_I + (1-g2(F_I))·F_S,   F_O = g3(F_R)·F_R,
// the other variants are the ablation topologies (M61-M66).
class CrossTaskModule {
public:
    struct Output {
        Tensor for_semantic;  // concatenated with F_S by the semantic decoder
        Tensor for_instance;  // concatenated with F_I by the instance decoder
    };

    CrossTaskModule() = default;
    CrossTaskModule(ParamStore& ps, Rng& rng, const std::string& name, CrossTaskVariant variant,
                    int channels, NormMode norm);

    Output fuse(const Tensor& f_i, const Tensor& f_s) const;
    CrossTaskVariant variant() const { return variant_; }

    // Expression core with externally supplied gate outputs (test seam for the
    // constant-gate degeneracies).
    static Tensor fuse_full_with_gates(const Tensor& f_i, const Tensor& f_s, const Tensor& g1_of_fs,
                                       const Tensor& g2_of_fi, const Tensor& g3_of_fr);
    static Tensor cross_attention(const Tensor& f_i, const Tensor& f_s, const Tensor& g1_of_fs,
                                  const Tensor& g2_of_fi);

private:
    CrossTaskVariant variant_ = CrossTaskVariant::Full;
    GateFn g1_, g2_, g3_;
    int channels_ = 0;
};

}  // namespace paps
