#pragma once

#include "paps/decoders.hpp"
#include "paps/mask.hpp"
#include "paps/model_config.hpp"

namespace paps {

// Union of predicted-unoccluded inmodal masks, max-pooled to the stride-4
// feature grid. Instances whose predicted occlusion probability is at or above
// the threshold are discarded; no unoccluded instances yields an all-zero map.
Array3 build_unoccluded_mask_s4(const std::vector<BinaryMask>& inmodal_masks,
                                const std::vector<double>& occluded_prob, double threshold,
                                int h_s4, int w_s4);

// Memory-attention amodal refinement: two stride-16 encoders over unoccluded
// and amodal features, an N×D embedding with key correlation, and a decoder
// back to stride 4 (F_AMR), feeding refiner roo segmentation/regression heads.
class AmodalMaskRefiner {
public:
    AmodalMaskRefiner(ParamStore& ps, Rng& rng, const ModelConfig& cfg);

    struct Result {
        Tensor f_amr;             // {C, H/4, W/4}
        Tensor attention;         // {N}, softmax weights
        Tensor roo_seg_logits;    // stride-4 logits
        Tensor roo_amodal_offsets;
    };

    // unocc_feat: {head_narrow, H/4, W/4}; amodal_feat: {2*head_narrow, H/4, W/4}
    Result forward(const Tensor& unocc_feat, const Tensor& amodal_feat) const;

    int mem_slots() const { return n_; }
    int channels() const { return c_; }
    int embed_dim() const { return d_; }

private:
    Tensor encode(const SepConv* stages, const Tensor& x) const;

    SepConv ie_enc_[3];
    SepConv q_enc_[3];
    Tensor e_mem_, k_mem_;              // {N,D}
    Tensor e_w_, e_b_, k_w_, k_b_;      // diagonal projections of flat IE encoding
    Tensor q_w_, q_b_;                  // diagonal projection of flat Q encoding
    SepConv dec16_a_, dec16_b_, dec8_a_, dec8_b_;
    Head roo_head_, rooacr_head_;
    int n_ = 0, c_ = 0, d_ = 0, eh_ = 0, ew_ = 0;
};

}  // namespace paps
