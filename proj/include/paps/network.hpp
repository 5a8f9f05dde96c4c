#pragma once

#include <memory>
#include <optional>

#include "paps/backbone.hpp"
#include "paps/cross_task.hpp"
#include "paps/decoders.hpp"
#include "paps/refiner.hpp"

namespace paps {

// Full PAPS model: shared backbone, cross-task exchange, dual decoders and the
// optional amodal mask refiner.
class PapsNetwork {
public:
    explicit PapsNetwork(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    bool has_refiner() const { return refiner_ != nullptr; }
    const AmodalMaskRefiner& refiner() const { return *refiner_; }

    // Trunk pass: backbone, cross-task, both decoders. Refined outputs are not
    // produced here (the refiner needs fused inmodal predictions).
    HeadTensors forward(const Tensor& image) const;

    // Refiner pass over an existing trunk result. unocc_mask_s4 selects the
    // predicted-unoccluded support on the stride-4 grid.
    void run_refiner(HeadTensors& heads, const Array3& unocc_mask_s4) const;

private:
    ModelConfig cfg_;
    ParamStore params_;
    std::unique_ptr<Backbone> backbone_;
    std::unique_ptr<CrossTaskModule> cross_;
    std::unique_ptr<SemanticDecoder> sem_;
    std::unique_ptr<InstanceDecoder> inst_;
    std::unique_ptr<AmodalMaskRefiner> refiner_;
};

}  // namespace paps
