#include "paps/backbone.hpp"

namespace paps {

Backbone::Backbone(ParamStore& ps, Rng& rng, const ModelConfig& cfg) {
    const auto& ch = cfg.stage_channels;
    for (int c : ch)
        if (c < 1) throw ConfigError("backbone stage channels must be >= 1");
    for (int d : cfg.stage_depths)
        if (d < 1) throw ConfigError("backbone stage depths must be >= 1");

    stem1_ = make_conv(ps, rng, "backbone.stem1", 3, ch[0], 3, ConvSpec{.stride = 2}, cfg.norm);
    stem2_ = make_conv(ps, rng, "backbone.stem2", ch[0], ch[0], 3, ConvSpec{.stride = 2}, cfg.norm);
    down8_ = make_sep_conv(ps, rng, "backbone.down8", ch[0], ch[1], cfg.norm, 1, 1, 2);
    down16_ = make_sep_conv(ps, rng, "backbone.down16", ch[1], ch[2], cfg.norm, 1, 1, 2);
    down32_ = make_sep_conv(ps, rng, "backbone.down32", ch[2], ch[3], cfg.norm, 1, 1, 2);

    for (int s = 0; s < 4; ++s) {
        for (int d = 0; d < cfg.stage_depths[s]; ++d)
            stage_blocks_[s].push_back(make_sep_conv(
                ps, rng, "backbone.stage" + std::to_string(s) + ".block" + std::to_string(d), ch[s],
                ch[s], cfg.norm));
        if (s > 0) {
            xc_from_up_[s] = make_conv(ps, rng, "backbone.xc_up" + std::to_string(s), ch[s - 1], ch[s],
                                       1, ConvSpec{}, cfg.norm, true, false);
            has_up_[s] = true;
        }
        if (s < 3) {
            xc_from_down_[s] = make_conv(ps, rng, "backbone.xc_down" + std::to_string(s), ch[s + 1],
                                         ch[s], 1, ConvSpec{}, cfg.norm, true, false);
            has_down_[s] = true;
        }
    }

    int concat_ch = ch[0] + ch[1] + ch[2] + ch[3];
    c4_reduce_ = make_conv(ps, rng, "backbone.c4_reduce", concat_ch, 256, 1, ConvSpec{}, cfg.norm);
    p4_ = make_sep_conv(ps, rng, "backbone.p4", 256, 256, cfg.norm);
    p8_ = make_sep_conv(ps, rng, "backbone.p8", 256, 256, cfg.norm);
    p16_ = make_sep_conv(ps, rng, "backbone.p16", 256, 256, cfg.norm);
    p32_ = make_sep_conv(ps, rng, "backbone.p32", 256, 256, cfg.norm);
}

FeaturePyramid Backbone::forward(const Tensor& image) const {
    if (image.shape().size() != 3 || image.dim(0) != 3) throw ShapeError("backbone: expected {3,H,W} image");
    int h = image.dim(1), w = image.dim(2);
    if (h % 32 != 0 || w % 32 != 0)
        throw ShapeError("backbone: input dims " + std::to_string(h) + "x" + std::to_string(w) +
                         " not divisible by 32");

    // parallel trunk: stride chain, per-branch blocks, one adjacent-scale exchange
    Tensor x4 = stem2_(stem1_(image));
    Tensor x8 = down8_(x4);
    Tensor x16 = down16_(x8);
    Tensor x32 = down32_(x16);
    Tensor branch[4] = {x4, x8, x16, x32};
    for (int s = 0; s < 4; ++s)
        for (const auto& block : stage_blocks_[s]) branch[s] = add(branch[s], block(branch[s]));

    Tensor fused[4];
    for (int s = 0; s < 4; ++s) {
        Tensor acc = branch[s];
        if (has_up_[s]) acc = add(acc, xc_from_up_[s](avg_pool(branch[s - 1], 2)));
        if (has_down_[s]) acc = add(acc, xc_from_down_[s](upsample_bilinear(branch[s + 1], 2)));
        fused[s] = relu(acc);
    }

    FeaturePyramid pyr;
    pyr.b4 = fused[0];
    pyr.b8 = fused[1];
    pyr.b16 = fused[2];
    pyr.b32 = fused[3];

    Tensor cat = concat_c({pyr.b4, upsample_bilinear(pyr.b8, 2), upsample_bilinear(pyr.b16, 4),
                           upsample_bilinear(pyr.b32, 8)});
    pyr.c4 = c4_reduce_(cat);
    pyr.p4 = p4_(pyr.c4);
    pyr.p8 = p8_(avg_pool(pyr.c4, 2));
    pyr.p16 = p16_(avg_pool(pyr.c4, 4));
    pyr.p32 = p32_(avg_pool(pyr.c4, 8));
    return pyr;
}

}  // namespace paps
