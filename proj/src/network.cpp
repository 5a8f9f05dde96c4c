#include "paps/network.hpp"

namespace paps {

ModelConfig ModelConfig::toy() { return ModelConfig{}; }

ModelConfig ModelConfig::paper_shape() {
    ModelConfig cfg;
    cfg.n_stuff = 10;
    cfg.n_thing = 6;
    cfg.n_layers = 8;
    cfg.crop_h = 376;
    cfg.crop_w = 1408;
    cfg.refiner_mem_slots = 128;
    cfg.refiner_channels = 64;
    cfg.norm = NormMode::PerChannel;
    return cfg;
}

PapsNetwork::PapsNetwork(const ModelConfig& cfg) : cfg_(cfg) {
    if (cfg.n_layers < 1) throw ConfigError("n_layers must be >= 1");
    if (cfg.n_stuff < 1 || cfg.n_thing < 1) throw ConfigError("need at least one stuff and one thing class");
    Rng rng(cfg.init_seed);
    backbone_ = std::make_unique<Backbone>(params_, rng, cfg);
    cross_ = std::make_unique<CrossTaskModule>(params_, rng, "cross", cfg.cross_variant, 256, cfg.norm);
    sem_ = std::make_unique<SemanticDecoder>(params_, rng, cfg);
    inst_ = std::make_unique<InstanceDecoder>(params_, rng, cfg);
    if (cfg.with_refiner) refiner_ = std::make_unique<AmodalMaskRefiner>(params_, rng, cfg);
}

HeadTensors PapsNetwork::forward(const Tensor& image) const {
    FeaturePyramid pyr = backbone_->forward(image);
    Tensor f_s = sem_->features(pyr);
    Tensor f_i = inst_->features(pyr);
    CrossTaskModule::Output cross = cross_->fuse(f_i, f_s);

    HeadTensors heads;
    heads.h = image.dim(1);
    heads.w = image.dim(2);
    sem_->heads(f_s, cross.for_semantic, heads);
    inst_->heads(f_i, cross.for_instance, heads.occ_head_feat, heads);
    return heads;
}

void PapsNetwork::run_refiner(HeadTensors& heads, const Array3& unocc_mask_s4) const {
    if (!refiner_) throw ConfigError("refiner pass requested but the model has no refiner");
    Tensor unocc_feat = mul_plain(heads.icr_second_feat, unocc_mask_s4);
    Tensor amodal_feat = concat_c({heads.roo_seg_feat, heads.rooacr_feat});
    AmodalMaskRefiner::Result r = refiner_->forward(unocc_feat, amodal_feat);
    heads.refined_roo_seg_logits = upsample_bilinear(r.roo_seg_logits, 4);
    heads.refined_roo_amodal_offsets = upsample_bilinear(r.roo_amodal_offsets, 4);
}

}  // namespace paps
