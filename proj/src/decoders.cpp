#include "paps/decoders.hpp"

namespace paps {

Head make_head(ParamStore& ps, Rng& rng, const std::string& name, int in_c, int mid, int narrow,
               int out_c, NormMode norm) {
    Head h;
    h.c1 = make_sep_conv(ps, rng, name + ".c1", in_c, mid, norm);
    h.c2 = make_sep_conv(ps, rng, name + ".c2", mid, narrow, norm);
    h.out = make_proj(ps, rng, name + ".out", narrow, out_c);
    return h;
}

SemanticDecoder::SemanticDecoder(ParamStore& ps, Rng& rng, const ModelConfig& cfg)
    : concat_cross_(cfg.cross_variant != CrossTaskVariant::None) {
    int dpc_in = cfg.stage_channels[3] + cfg.stage_channels[2];
    dpc_ = ContextExtractor(ps, rng, "sem.dpc", dpc_in, cfg.norm);
    s8_a_ = make_sep_conv(ps, rng, "sem.s8a", 256, 256, cfg.norm);
    s8_b_ = make_sep_conv(ps, rng, "sem.s8b", 256, 256, cfg.norm);
    s4_a_ = make_sep_conv(ps, rng, "sem.s4a", 512, 256, cfg.norm);
    s4_b_ = make_sep_conv(ps, rng, "sem.s4b", 256, 256, cfg.norm);
    int head_in = concat_cross_ ? 512 : 256;
    sem_head_ = make_head(ps, rng, "sem.head_ss", head_in, cfg.head_mid, cfg.head_narrow,
                          cfg.n_classes(), cfg.norm);
    roo_head_ = make_head(ps, rng, "sem.head_roo", head_in, cfg.head_mid, cfg.head_narrow,
                          cfg.n_layers, cfg.norm);
    occ_head_ = make_head(ps, rng, "sem.head_os", head_in, cfg.head_mid, cfg.head_narrow, 1, cfg.norm);
}

Tensor SemanticDecoder::features(const FeaturePyramid& pyr) const {
    Tensor x = concat_c({upsample_bilinear(pyr.b32, 2), pyr.b16});
    x = dpc_.forward(x);                    // stride 16, 256ch
    x = upsample_bilinear(x, 2);            // stride 8
    x = s8_b_(s8_a_(x));
    x = upsample_bilinear(x, 2);            // stride 4
    x = concat_c({x, pyr.c4});
    return s4_b_(s4_a_(x));
}

void SemanticDecoder::heads(const Tensor& f_s, const Tensor& f_o, HeadTensors& out) const {
    Tensor x = concat_cross_ ? concat_c({f_s, f_o}) : f_s;
    auto [sem, sem_feat] = sem_head_(x);
    auto [roo, roo_feat] = roo_head_(x);
    auto [occ, occ_feat] = occ_head_(x);
    out.sem_logits = upsample_bilinear(sem, 4);
    out.roo_seg_logits = upsample_bilinear(roo, 4);
    out.occ_seg_logits = upsample_bilinear(occ, 4);
    out.roo_seg_feat = roo_feat;
    out.occ_head_feat = occ_feat;
    (void)sem_feat;
}

InstanceDecoder::InstanceDecoder(ParamStore& ps, Rng& rng, const ModelConfig& cfg)
    : concat_cross_(cfg.cross_variant != CrossTaskVariant::None) {
    const auto& ch = cfg.stage_channels;
    ce4_ = ContextExtractor(ps, rng, "inst.ce4", ch[0], cfg.norm);
    ce8_ = ContextExtractor(ps, rng, "inst.ce8", ch[1], cfg.norm);
    ce16_ = ContextExtractor(ps, rng, "inst.ce16", ch[2], cfg.norm);
    ce32_ = ContextExtractor(ps, rng, "inst.ce32", ch[3], cfg.norm);
    m32_a_ = make_sep_conv(ps, rng, "inst.m32a", 256, 256, cfg.norm);
    m32_b_ = make_sep_conv(ps, rng, "inst.m32b", 256, 256, cfg.norm);
    m16_a_ = make_sep_conv(ps, rng, "inst.m16a", 512, 256, cfg.norm);
    m16_b_ = make_sep_conv(ps, rng, "inst.m16b", 256, 256, cfg.norm);
    m8_a_ = make_sep_conv(ps, rng, "inst.m8a", 512, 256, cfg.norm);
    m8_b_ = make_sep_conv(ps, rng, "inst.m8b", 256, 256, cfg.norm);
    m4_a_ = make_sep_conv(ps, rng, "inst.m4a", 512, 256, cfg.norm);
    m4_b_ = make_sep_conv(ps, rng, "inst.m4b", 256, 256, cfg.norm);
    int post_in = concat_cross_ ? 512 : 256;
    post_a_ = make_sep_conv(ps, rng, "inst.posta", post_in, 256, cfg.norm);
    post_b_ = make_sep_conv(ps, rng, "inst.postb", 256, 256, cfg.norm);

    int fio_c = 256 + cfg.head_narrow;  // occlusion head features appended
    center_trunk_ = make_sep_conv(ps, rng, "inst.center_trunk", fio_c, cfg.head_mid, cfg.norm);
    heat_narrow_ = make_sep_conv(ps, rng, "inst.heat_narrow", cfg.head_mid, cfg.head_narrow, cfg.norm);
    heat_out_ = make_proj(ps, rng, "inst.heat_out", cfg.head_narrow, 1);
    cocc_narrow_ = make_sep_conv(ps, rng, "inst.cocc_narrow", cfg.head_mid, cfg.head_narrow, cfg.norm);
    cocc_out_ = make_proj(ps, rng, "inst.cocc_out", cfg.head_narrow, 1);

    tss_head_ = make_head(ps, rng, "inst.head_tss", fio_c, cfg.head_mid, cfg.head_narrow,
                          cfg.n_thing + 1, cfg.norm);
    icr_head_ = make_head(ps, rng, "inst.head_icr", fio_c, cfg.head_mid, cfg.head_narrow, 2, cfg.norm);
    int glob_c = fio_c + cfg.head_mid;  // F_IO plus center-head trunk features
    aco_head_ = make_head(ps, rng, "inst.head_aco", glob_c, cfg.head_mid, cfg.head_narrow, 2, cfg.norm);
    rooacr_head_ = make_head(ps, rng, "inst.head_rooacr", glob_c, cfg.head_mid, cfg.head_narrow,
                             cfg.n_layers * 2, cfg.norm);
}

Tensor InstanceDecoder::features(const FeaturePyramid& pyr) const {
    Tensor p32 = add(pyr.p32, ce32_.forward(pyr.b32));
    Tensor p16 = add(pyr.p16, ce16_.forward(pyr.b16));
    Tensor p8 = add(pyr.p8, ce8_.forward(pyr.b8));
    Tensor p4 = add(pyr.p4, ce4_.forward(pyr.b4));

    Tensor x = m32_b_(m32_a_(p32));
    x = concat_c({upsample_bilinear(x, 2), p16});
    x = m16_b_(m16_a_(x));
    x = concat_c({upsample_bilinear(x, 2), p8});
    x = m8_b_(m8_a_(x));
    x = concat_c({upsample_bilinear(x, 2), p4});
    return m4_b_(m4_a_(x));
}

void InstanceDecoder::heads(const Tensor& f_i, const Tensor& f_o, const Tensor& occ_feat,
                            HeadTensors& out) const {
    Tensor x = concat_cross_ ? concat_c({f_i, f_o}) : f_i;
    x = post_b_(post_a_(x));
    Tensor f_io = concat_c({x, occ_feat});  // pixel-wise local occlusion information

    Tensor trunk = center_trunk_(f_io);
    Tensor heat = sigmoid(heat_out_(heat_narrow_(trunk)));
    Tensor cocc = cocc_out_(cocc_narrow_(trunk));

    auto [tss, tss_feat] = tss_head_(f_io);
    auto [icr, icr_feat] = icr_head_(f_io);
    Tensor glob = concat_c({f_io, trunk});  // object-level global occlusion features
    auto [aco, aco_feat] = aco_head_(glob);
    auto [rooacr, rooacr_feat] = rooacr_head_(glob);

    out.thing_sem_logits = upsample_bilinear(tss, 4);
    out.center_heatmap = upsample_bilinear(heat, 4);
    out.center_occ_logits = upsample_bilinear(cocc, 4);
    out.inmodal_offsets = upsample_bilinear(icr, 4);
    out.amodal_center_offsets = upsample_bilinear(aco, 4);
    out.roo_amodal_offsets = upsample_bilinear(rooacr, 4);
    out.icr_second_feat = icr_feat;
    out.rooacr_feat = rooacr_feat;
    (void)tss_feat;
    (void)aco_feat;
}

}  // namespace paps
