#include "paps/refiner.hpp"

namespace paps {

Array3 build_unoccluded_mask_s4(const std::vector<BinaryMask>& inmodal_masks,
                                const std::vector<double>& occluded_prob, double threshold,
                                int h_s4, int w_s4) {
    if (inmodal_masks.size() != occluded_prob.size())
        throw ShapeError("unoccluded mask: instance count mismatch");
    Array3 out(1, h_s4, w_s4);
    for (size_t i = 0; i < inmodal_masks.size(); ++i) {
        if (occluded_prob[i] >= threshold) continue;  // discard occluded instances
        const BinaryMask& m = inmodal_masks[i];
        if (m.h != h_s4 * 4 || m.w != w_s4 * 4) throw ShapeError("unoccluded mask: mask dims mismatch");
        for (int y = 0; y < m.h; ++y)
            for (int x = 0; x < m.w; ++x)
                if (m.at(y, x)) out.at(0, y / 4, x / 4) = 1.0;
    }
    return out;
}

AmodalMaskRefiner::AmodalMaskRefiner(ParamStore& ps, Rng& rng, const ModelConfig& cfg) {
    n_ = cfg.refiner_mem_slots;
    c_ = cfg.refiner_channels;
    if (cfg.crop_h % 16 != 0 || cfg.crop_w % 16 != 0)
        throw ConfigError("refiner requires crop dims divisible by 16");
    eh_ = cfg.crop_h / 16;
    ew_ = cfg.crop_w / 16;
    d_ = eh_ * ew_ * c_;

    int ie_in = cfg.head_narrow;
    int q_in = 2 * cfg.head_narrow;
    ie_enc_[0] = make_sep_conv(ps, rng, "refiner.ie1", ie_in, c_, cfg.norm);
    ie_enc_[1] = make_sep_conv(ps, rng, "refiner.ie2", c_, c_, cfg.norm, 1, 1, 2);
    ie_enc_[2] = make_sep_conv(ps, rng, "refiner.ie3", c_, c_, cfg.norm, 1, 1, 2);
    q_enc_[0] = make_sep_conv(ps, rng, "refiner.q1", q_in, c_, cfg.norm);
    q_enc_[1] = make_sep_conv(ps, rng, "refiner.q2", c_, c_, cfg.norm, 1, 1, 2);
    q_enc_[2] = make_sep_conv(ps, rng, "refiner.q3", c_, c_, cfg.norm, 1, 1, 2);

    e_mem_ = ps.create("refiner.e_mem", {n_, d_}, init_normal(0.05), rng);
    k_mem_ = ps.create("refiner.k_mem", {n_, d_}, init_normal(0.05), rng);
    e_w_ = ps.create("refiner.e_w", {d_}, init_normal(0.05), rng);
    e_b_ = ps.create("refiner.e_b", {d_}, init_const(0.0), rng);
    k_w_ = ps.create("refiner.k_w", {d_}, init_normal(0.05), rng);
    k_b_ = ps.create("refiner.k_b", {d_}, init_const(0.0), rng);
    q_w_ = ps.create("refiner.q_w", {d_}, init_normal(0.05), rng);
    q_b_ = ps.create("refiner.q_b", {d_}, init_const(0.0), rng);

    dec16_a_ = make_sep_conv(ps, rng, "refiner.dec16a", 2 * c_, c_, cfg.norm);
    dec16_b_ = make_sep_conv(ps, rng, "refiner.dec16b", c_, c_, cfg.norm);
    dec8_a_ = make_sep_conv(ps, rng, "refiner.dec8a", c_, c_, cfg.norm);
    dec8_b_ = make_sep_conv(ps, rng, "refiner.dec8b", c_, c_, cfg.norm);

    int head_in = c_ + 2 * cfg.head_narrow;  // F_AMR concatenated with the amodal features
    roo_head_ = make_head(ps, rng, "refiner.head_roo", head_in, cfg.head_mid, cfg.head_narrow,
                          cfg.n_layers, cfg.norm);
    rooacr_head_ = make_head(ps, rng, "refiner.head_rooacr", head_in, cfg.head_mid, cfg.head_narrow,
                             cfg.n_layers * 2, cfg.norm);
}

Tensor AmodalMaskRefiner::encode(const SepConv* stages, const Tensor& x) const {
    return stages[2](stages[1](stages[0](x)));
}

AmodalMaskRefiner::Result AmodalMaskRefiner::forward(const Tensor& unocc_feat,
                                                     const Tensor& amodal_feat) const {
    Tensor ie = encode(ie_enc_, unocc_feat);  // {C, H/16, W/16}
    Tensor q = encode(q_enc_, amodal_feat);
    if (ie.dim(1) != eh_ || ie.dim(2) != ew_)
        throw ConfigError("refiner embedding dims configured for " + std::to_string(eh_ * 16) + "x" +
                          std::to_string(ew_ * 16) + " crops, got encoding " +
                          std::to_string(ie.dim(1)) + "x" + std::to_string(ie.dim(2)));

    Tensor ie_flat = flatten(ie);  // {D}
    Tensor q_flat = flatten(q);

    // memory and keys, additively modulated by the encodings
    Tensor e_used = add_row_broadcast(e_mem_, add(mul(e_w_, ie_flat), e_b_));
    Tensor k_ie = add_row_broadcast(k_mem_, add(mul(k_w_, ie_flat), k_b_));
    Tensor k_q = add(mul(q_w_, q_flat), q_b_);

    Tensor att = softmax(matvec(k_ie, k_q));           // {N}
    Tensor readout = reshape(vecmat(att, e_used), {c_, eh_, ew_});

    Tensor x = concat_c({readout, q});
    x = upsample_bilinear(dec16_b_(dec16_a_(x)), 2);   // stride 8
    Tensor f_amr = upsample_bilinear(dec8_b_(dec8_a_(x)), 2);  // stride 4

    Tensor head_in = concat_c({f_amr, amodal_feat});
    auto [roo, roo_feat] = roo_head_(head_in);
    auto [acr, acr_feat] = rooacr_head_(head_in);
    (void)roo_feat;
    (void)acr_feat;

    Result r;
    r.f_amr = f_amr;
    r.attention = att;
    r.roo_seg_logits = roo;
    r.roo_amodal_offsets = acr;
    return r;
}

}  // namespace paps
