#pragma once

#include "paps/backbone.hpp"
#include "paps/context_extractor.hpp"
#include "paps/model_config.hpp"

namespace paps {

// Prediction head: two separable convs narrowing to head_narrow channels, then
// a 1x1 logit projection. Returns (logits, penultimate features), both at the
// decoder resolution (stride 4).
struct Head {
    SepConv c1, c2;
    ConvUnit out;
    std::pair<Tensor, Tensor> operator()(const Tensor& x) const {
        Tensor f = c2(c1(x));
        return {out(f), f};
    }
};

Head make_head(ParamStore& ps, Rng& rng, const std::string& name, int in_c, int mid, int narrow,
               int out_c, NormMode norm);

// All decoder predictions at input resolution, plus the stride-4 feature maps
// the refiner consumes.
struct HeadTensors {
    int h = 0, w = 0;
    Tensor sem_logits;             // (n_stuff+n_thing)×H×W
    Tensor roo_seg_logits;         // n_layers×H×W
    Tensor occ_seg_logits;         // 1×H×W
    Tensor thing_sem_logits;       // (n_thing+1)×H×W
    Tensor center_heatmap;         // 1×H×W, sigmoid output
    Tensor center_occ_logits;      // 1×H×W
    Tensor inmodal_offsets;        // 2×H×W
    Tensor amodal_center_offsets;  // 2×H×W
    Tensor roo_amodal_offsets;     // (n_layers*2)×H×W
    // present after the refiner pass
    Tensor refined_roo_seg_logits;
    Tensor refined_roo_amodal_offsets;
    // stride-4 internals
    Tensor occ_head_feat;     // occlusion-segmentation head penultimate features
    Tensor roo_seg_feat;      // semantic decoder roo head penultimate features
    Tensor rooacr_feat;       // instance decoder roo regression head penultimate features
    Tensor icr_second_feat;   // second layer of the inmodal center regression head

    bool has_refined() const { return refined_roo_seg_logits.defined(); }
};

class SemanticDecoder {
public:
    SemanticDecoder(ParamStore& ps, Rng& rng, const ModelConfig& cfg);
    // B32 ↑ concat B16 → context block (DPC slot) → ↑ → convs → ↑ concat C4 → convs → F_S
    Tensor features(const FeaturePyramid& pyr) const;
    void heads(const Tensor& f_s, const Tensor& f_o, HeadTensors& out) const;

private:
    ContextExtractor dpc_;
    SepConv s8_a_, s8_b_, s4_a_, s4_b_;
    Head sem_head_, roo_head_, occ_head_;
    bool concat_cross_;
};

class InstanceDecoder {
public:
    InstanceDecoder(ParamStore& ps, Rng& rng, const ModelConfig& cfg);
    // context-enhanced P levels merged from stride 32 down to stride 4 → F_I
    Tensor features(const FeaturePyramid& pyr) const;
    void heads(const Tensor& f_i, const Tensor& f_o, const Tensor& occ_feat, HeadTensors& out) const;

private:
    ContextExtractor ce4_, ce8_, ce16_, ce32_;
    SepConv m32_a_, m32_b_, m16_a_, m16_b_, m8_a_, m8_b_, m4_a_, m4_b_;
    SepConv post_a_, post_b_;
    SepConv center_trunk_;
    SepConv heat_narrow_;
    ConvUnit heat_out_;
    SepConv cocc_narrow_;
    ConvUnit cocc_out_;
    Head tss_head_, icr_head_, aco_head_, rooacr_head_;
    bool concat_cross_;
};

}  // namespace paps
