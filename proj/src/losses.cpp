#include "paps/losses.hpp"

#include <cmath>

namespace paps {

namespace {

void check_finite(const Tensor& t, const char* term) {
    if (!std::isfinite(t.item())) throw NumericalError(std::string("loss term ") + term + " is not finite");
}

Array3 plane_from_valid(const std::vector<uint8_t>* ignore, int h, int w) {
    Array3 valid(1, h, w, 1.0);
    if (ignore)
        for (size_t i = 0; i < valid.v.size(); ++i)
            if ((*ignore)[i]) valid.v[i] = 0.0;
    return valid;
}

Array3 combine_valid(const Array3& base, const std::vector<uint8_t>* ignore) {
    if (!ignore) return base;
    Array3 out = base;
    size_t plane = static_cast<size_t>(out.h) * out.w;
    for (int c = 0; c < out.c; ++c)
        for (size_t p = 0; p < plane; ++p)
            if ((*ignore)[p]) out.v[c * plane + p] = 0.0;
    return out;
}

Array3 slice_plane(const Array3& a, int c) {
    Array3 out(1, a.h, a.w);
    size_t plane = static_cast<size_t>(a.h) * a.w;
    std::copy(a.v.begin() + c * plane, a.v.begin() + (c + 1) * plane, out.v.begin());
    return out;
}

// per-layer BCE summed over layers
Tensor roo_bce(const Tensor& logits, const Array3& layer_valid, int n_layers,
               const std::vector<uint8_t>* ignore) {
    Array3 valid = plane_from_valid(ignore, layer_valid.h, layer_valid.w);
    Tensor total;
    for (int l = 0; l < n_layers; ++l) {
        Array3 target = slice_plane(layer_valid, l);
        Tensor term = bce_with_logits(slice_c(logits, l, l + 1), target, ignore ? &valid : nullptr);
        total = total.defined() ? add(total, term) : term;
    }
    return total;
}

Array3 expand_layer_valid(const Array3& layer_valid) {
    Array3 out(layer_valid.c * 2, layer_valid.h, layer_valid.w);
    size_t plane = static_cast<size_t>(layer_valid.h) * layer_valid.w;
    for (int l = 0; l < layer_valid.c; ++l)
        for (int k = 0; k < 2; ++k)
            std::copy(layer_valid.v.begin() + l * plane, layer_valid.v.begin() + (l + 1) * plane,
                      out.v.begin() + (2 * l + k) * plane);
    return out;
}

Array3 duplicate_valid(const Array3& plane_valid, int copies) {
    Array3 out(copies, plane_valid.h, plane_valid.w);
    size_t plane = static_cast<size_t>(plane_valid.h) * plane_valid.w;
    for (int c = 0; c < copies; ++c)
        std::copy(plane_valid.v.begin(), plane_valid.v.begin() + plane, out.v.begin() + c * plane);
    return out;
}

}  // namespace

LossReport compute_losses(const HeadTensors& heads, const LossTargets& tg, double alpha, double beta,
                          double bootstrap_keep, bool refined_only) {
    if (!tg.dense || !tg.stack) throw ConfigError("compute_losses: missing targets");
    const DenseTargets& d = *tg.dense;
    const OrderingStack& st = *tg.stack;
    const int n_layers = st.n_layers;

    LossReport rep;
    rep.alpha = alpha;
    rep.beta = beta;

    Array3 img_valid = plane_from_valid(tg.ignore, d.h, d.w);
    const Array3* img_valid_ptr = tg.ignore ? &img_valid : nullptr;

    Tensor l_ss = ce_bootstrap(heads.sem_logits, d.semantic_target, d.ce_weights, bootstrap_keep,
                               tg.ignore);
    Tensor l_os = bce_with_logits(heads.occ_seg_logits, d.occlusion_map, img_valid_ptr);
    Tensor l_roo = roo_bce(heads.roo_seg_logits, st.layer_valid, n_layers, tg.ignore);
    check_finite(l_ss, "L_ss");
    check_finite(l_os, "L_os");
    check_finite(l_roo, "L_roo");

    Tensor l_tss = ce_bootstrap(heads.thing_sem_logits, d.thing_sem_target, d.ce_weights,
                                bootstrap_keep, tg.ignore);
    Tensor l_icp = mse_loss(heads.center_heatmap, d.center_heatmap, img_valid_ptr);
    Array3 center_valid = combine_valid(d.center_valid, tg.ignore);
    Tensor l_ico = bce_with_logits(heads.center_occ_logits, d.center_occ_flags, &center_valid);
    Array3 inmodal_valid = combine_valid(d.inmodal_valid, tg.ignore);
    Tensor l_icr = l1_masked(heads.inmodal_offsets, d.inmodal_offsets, inmodal_valid);
    Array3 aco_valid = duplicate_valid(center_valid, 2);
    Tensor l_aco = l1_masked(heads.amodal_center_offsets, d.amodal_center_offsets, aco_valid);
    Array3 roo_valid = combine_valid(expand_layer_valid(st.layer_valid), tg.ignore);
    Tensor l_rooacr = l1_masked(heads.roo_amodal_offsets, st.layer_offsets, roo_valid);
    check_finite(l_tss, "L_tss");
    check_finite(l_icp, "L_icp");
    check_finite(l_ico, "L_ico");
    check_finite(l_icr, "L_icr");
    check_finite(l_aco, "L_aco");
    check_finite(l_rooacr, "L_rooacr");

    Tensor l_sem = add(add(l_ss, l_os), l_roo);
    Tensor l_inst = add(add(l_tss, l_ico),
                        add(scale(l_icp, alpha), scale(add(add(l_icr, l_aco), l_rooacr), beta)));

    rep.l_ss = l_ss.item();
    rep.l_os = l_os.item();
    rep.l_roo = l_roo.item();
    rep.l_tss = l_tss.item();
    rep.l_ico = l_ico.item();
    rep.l_icp = l_icp.item();
    rep.l_icr = l_icr.item();
    rep.l_aco = l_aco.item();
    rep.l_rooacr = l_rooacr.item();
    rep.l_sem = l_sem.item();
    rep.l_inst = l_inst.item();

    if (heads.has_refined()) {
        Tensor lr_roo = roo_bce(heads.refined_roo_seg_logits, st.layer_valid, n_layers, tg.ignore);
        Tensor lr_acr = l1_masked(heads.refined_roo_amodal_offsets, st.layer_offsets, roo_valid);
        check_finite(lr_roo, "L_roo_refined");
        check_finite(lr_acr, "L_rooacr_refined");
        Tensor lr_total = add(lr_roo, scale(lr_acr, beta));
        rep.l_roo_refined = lr_roo.item();
        rep.l_rooacr_refined = lr_acr.item();
        rep.l_refiner_total = lr_total.item();
        rep.total = refined_only ? lr_total : add(add(l_sem, l_inst), lr_total);
    } else {
        if (refined_only) throw ConfigError("refined_only loss requested without refiner outputs");
        rep.total = add(l_sem, l_inst);
    }
    return rep;
}

}  // namespace paps
