#pragma once

#include "paps/decoders.hpp"
#include "paps/ordering.hpp"
#include "paps/targets.hpp"

namespace paps {

constexpr double kAlpha = 200.0;
constexpr double kBeta = 0.01;
constexpr double kBootstrapKeep = 0.15;

struct LossReport {
    double l_ss = 0, l_os = 0, l_roo = 0;
    double l_tss = 0, l_ico = 0, l_icp = 0, l_icr = 0, l_aco = 0, l_rooacr = 0;
    double l_sem = 0, l_inst = 0;
    double l_roo_refined = 0, l_rooacr_refined = 0, l_refiner_total = 0;
    double alpha = kAlpha, beta = kBeta;
    Tensor total;  // graph root for the optimized objective
};

struct LossTargets {
    const DenseTargets* dense = nullptr;
    const OrderingStack* stack = nullptr;
    const std::vector<uint8_t>* ignore = nullptr;  // optional H*W mask of excluded pixels
};

// Stage-1 objective is L_sem + L_inst; with refined_only the returned total
// covers only the refiner heads (same loss forms and weights).
LossReport compute_losses(const HeadTensors& heads, const LossTargets& targets, double alpha = kAlpha,
                          double beta = kBeta, double bootstrap_keep = kBootstrapKeep,
                          bool refined_only = false);

}  // namespace paps
