#pragma once

#include "paps/fusion.hpp"
#include "paps/ordering.hpp"
#include "paps/targets.hpp"

namespace paps {

// Head outputs a perfect network would emit for a scene: saturated logits at
// ±magnitude, the target heatmap, and exact offset fields. Feeding these
// through the fusion pipeline recovers the ground truth.
HeadOutputs encode_ideal_outputs(const AmodalScene& scene, const OrderingStack& stack,
                                 const DenseTargets& dense, double magnitude = 12.0);

}  // namespace paps
