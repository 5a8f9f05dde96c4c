#include <doctest.h>

#include <cmath>

#include "paps/ideal.hpp"
#include "paps/losses.hpp"
#include "paps/network.hpp"
#include "paps/scenegen.hpp"
#include "test_util.hpp"

using namespace paps;
using paps_test::fd_check_param;

namespace {

struct Fixture {
    AmodalScene scene;
    DenseTargets dense;
    OrderingStack stack;

    static Fixture make(int size, int n_layers, uint64_t seed, int max_inst = 4) {
        SceneGenConfig gc;
        gc.height = size;
        gc.width = size;
        gc.min_shape_extent = 8;
        gc.max_shape_extent = std::max(10, size / 3);
        gc.min_instances = 1;
        gc.max_instances = max_inst;
        Fixture f;
        f.scene = generate_scene(gc, seed);
        f.dense = derive_dense_targets(f.scene);
        auto layers = assign_layers(build_occlusion_graph(f.scene), n_layers);
        f.stack = build_ordering_stack(f.scene, layers, n_layers);
        return f;
    }
};

// Wraps ideal plain outputs into head tensors (perfect-prediction limit).
HeadTensors tensors_from_ideal(const HeadOutputs& ideal) {
    HeadTensors t;
    t.h = ideal.h;
    t.w = ideal.w;
    t.sem_logits = Tensor::from_array(ideal.sem_logits);
    t.roo_seg_logits = Tensor::from_array(ideal.roo_seg_logits);
    t.occ_seg_logits = Tensor::from_array(ideal.occ_seg_logits);
    t.thing_sem_logits = Tensor::from_array(ideal.thing_sem_logits);
    t.center_heatmap = Tensor::from_array(ideal.center_heatmap);
    t.center_occ_logits = Tensor::from_array(ideal.center_occ_logits);
    t.inmodal_offsets = Tensor::from_array(ideal.inmodal_offsets);
    t.amodal_center_offsets = Tensor::from_array(ideal.amodal_center_offsets);
    t.roo_amodal_offsets = Tensor::from_array(ideal.roo_amodal_offsets);
    return t;
}

}  // namespace

TEST_CASE("decoder head shapes in the toy configuration") {
    ModelConfig cfg = ModelConfig::toy();
    PapsNetwork net(cfg);
    NoGradGuard guard;
    Tensor img = Tensor::zeros({3, 64, 64});
    HeadTensors h = net.forward(img);
    CHECK(h.sem_logits.shape() == std::vector<int>{7, 64, 64});
    CHECK(h.roo_seg_logits.shape() == std::vector<int>{4, 64, 64});
    CHECK(h.occ_seg_logits.shape() == std::vector<int>{1, 64, 64});
    CHECK(h.thing_sem_logits.shape() == std::vector<int>{4, 64, 64});
    CHECK(h.center_heatmap.shape() == std::vector<int>{1, 64, 64});
    CHECK(h.center_occ_logits.shape() == std::vector<int>{1, 64, 64});
    CHECK(h.inmodal_offsets.shape() == std::vector<int>{2, 64, 64});
    CHECK(h.amodal_center_offsets.shape() == std::vector<int>{2, 64, 64});
    CHECK(h.roo_amodal_offsets.shape() == std::vector<int>{8, 64, 64});
    CHECK_FALSE(h.has_refined());
    for (double v : h.center_heatmap.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("paper preset wires 8 ordering layers into the heads") {
    ModelConfig cfg = ModelConfig::paper_shape();
    CHECK(cfg.n_layers == 8);
    cfg.crop_h = 32;  // shape check at a desk-scale crop
    cfg.crop_w = 32;
    cfg.with_refiner = false;
    PapsNetwork net(cfg);
    NoGradGuard guard;
    HeadTensors h = net.forward(Tensor::zeros({3, 32, 32}));
    CHECK(h.roo_seg_logits.dim(0) == 8);
    CHECK(h.roo_amodal_offsets.dim(0) == 16);
    CHECK(h.sem_logits.dim(0) == 16);
    CHECK(h.thing_sem_logits.dim(0) == 7);
}

TEST_CASE("loss terms vanish in the perfect-prediction limit") {
    Fixture f = Fixture::make(32, 4, 21);
    HeadOutputs ideal = encode_ideal_outputs(f.scene, f.stack, f.dense, 40.0);
    HeadTensors h = tensors_from_ideal(ideal);
    LossTargets tg{&f.dense, &f.stack, nullptr};
    LossReport rep = compute_losses(h, tg);
    CHECK(rep.l_icp == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rep.l_icr == doctest::Approx(0.0));
    CHECK(rep.l_aco == doctest::Approx(0.0));
    CHECK(rep.l_rooacr == doctest::Approx(0.0));
    CHECK(rep.l_ss < 1e-10);
    CHECK(rep.l_tss < 1e-10);
    CHECK(rep.l_os < 1e-10);
    CHECK(rep.l_roo < 1e-9);
    CHECK(rep.l_ico < 1e-10);
    CHECK(rep.l_sem < 1e-9);
    CHECK(rep.l_inst < 1e-9);
}

TEST_CASE("loss totals honor the alpha/beta weighting") {
    Fixture f = Fixture::make(32, 4, 22);
    HeadOutputs ideal = encode_ideal_outputs(f.scene, f.stack, f.dense);
    LossTargets tg{&f.dense, &f.stack, nullptr};

    HeadTensors base = tensors_from_ideal(ideal);
    LossReport r0 = compute_losses(base, tg);
    CHECK(r0.l_sem == doctest::Approx(r0.l_ss + r0.l_os + r0.l_roo).epsilon(1e-12));
    CHECK(r0.l_inst ==
          doctest::Approx(r0.l_tss + r0.l_ico + 200.0 * r0.l_icp +
                          0.01 * (r0.l_icr + r0.l_aco + r0.l_rooacr)).epsilon(1e-12));

    // doubling the raw heatmap error raises L_inst by 200x that delta
    HeadOutputs noisy = ideal;
    for (double& v : noisy.center_heatmap.v) v = std::min(1.0, v + 0.05);
    HeadTensors h1 = tensors_from_ideal(noisy);
    LossReport r1 = compute_losses(h1, tg);
    double d_icp = r1.l_icp - r0.l_icp;
    double d_inst = r1.l_inst - r0.l_inst;
    CHECK(d_inst == doctest::Approx(200.0 * d_icp).epsilon(1e-9));
}

TEST_CASE("offset losses ignore pixels outside their masks") {
    Fixture f = Fixture::make(32, 4, 23);
    HeadOutputs ideal = encode_ideal_outputs(f.scene, f.stack, f.dense);
    LossTargets tg{&f.dense, &f.stack, nullptr};
    LossReport base = compute_losses(tensors_from_ideal(ideal), tg);

    HeadOutputs poked = ideal;
    size_t plane = static_cast<size_t>(ideal.h) * ideal.w;
    int changed = 0;
    for (size_t p = 0; p < plane && changed < 20; ++p) {
        if (f.dense.inmodal_valid.v[p] == 0.0) {
            poked.inmodal_offsets.v[p] += 37.0;  // outside the inmodal mask
            ++changed;
        }
    }
    changed = 0;
    for (size_t p = 0; p < plane && changed < 20; ++p) {
        if (f.stack.layer_valid.v[p] == 0.0) {  // layer 0 invalid region
            poked.roo_amodal_offsets.v[p] += 11.0;
            ++changed;
        }
    }
    LossReport after = compute_losses(tensors_from_ideal(poked), tg);
    CHECK(after.l_icr == doctest::Approx(base.l_icr));
    CHECK(after.l_rooacr == doctest::Approx(base.l_rooacr));
}

TEST_CASE("L_roo decomposes into independent per-layer terms") {
    Fixture f = Fixture::make(32, 4, 24, 6);
    HeadOutputs ideal = encode_ideal_outputs(f.scene, f.stack, f.dense);
    LossTargets tg{&f.dense, &f.stack, nullptr};
    LossReport base = compute_losses(tensors_from_ideal(ideal), tg);

    // perturb layer 2 logits only
    HeadOutputs poked = ideal;
    size_t plane = static_cast<size_t>(ideal.h) * ideal.w;
    for (size_t p = 0; p < plane; ++p) poked.roo_seg_logits.v[2 * plane + p] *= 0.1;
    LossReport after = compute_losses(tensors_from_ideal(poked), tg);

    // recompute the layer-2 BCE delta at the op level
    auto layer_bce = [&](const HeadOutputs& ho, int l) {
        Array3 target(1, ideal.h, ideal.w);
        for (size_t p = 0; p < plane; ++p) target.v[p] = f.stack.layer_valid.v[l * plane + p];
        Array3 slice(1, ideal.h, ideal.w);
        for (size_t p = 0; p < plane; ++p) slice.v[p] = ho.roo_seg_logits.v[l * plane + p];
        return bce_with_logits(Tensor::from_array(slice), target).item();
    };
    double delta_l2 = layer_bce(poked, 2) - layer_bce(ideal, 2);
    CHECK(after.l_roo - base.l_roo == doctest::Approx(delta_l2).epsilon(1e-9));
    for (int l : {0, 1, 3}) CHECK(layer_bce(poked, l) == doctest::Approx(layer_bce(ideal, l)));
}

TEST_CASE("hand-computed L1 offset loss on a three-pixel instance") {
    AmodalScene s;
    s.h = 32;
    s.w = 32;
    s.n_stuff = 1;
    s.n_thing = 1;
    s.image = Array3(3, 32, 32);
    s.semantic_map.assign(32 * 32, 0);
    InstanceGT inst;
    inst.instance_id = 1;
    inst.class_id = 0;
    inst.amodal_mask = BinaryMask(32, 32);
    inst.amodal_mask.at(10, 10) = 1;
    inst.amodal_mask.at(10, 11) = 1;
    inst.amodal_mask.at(10, 12) = 1;
    inst.inmodal_mask = inst.amodal_mask;
    s.instances.push_back(inst);
    s.semantic_map[10 * 32 + 10] = 1;
    s.semantic_map[10 * 32 + 11] = 1;
    s.semantic_map[10 * 32 + 12] = 1;
    validate_scene(s);

    DenseTargets dense = derive_dense_targets(s);
    auto layers = assign_layers(build_occlusion_graph(s), 4);
    OrderingStack stack = build_ordering_stack(s, layers, 4);
    HeadOutputs ideal = encode_ideal_outputs(s, stack, dense);

    // perturb predicted offsets at the three pixels by (+0.25,-0.5), (+1,0), (0,+2)
    HeadOutputs poked = ideal;
    size_t plane = 32 * 32;
    poked.inmodal_offsets.v[0 * plane + 10 * 32 + 10] += 0.25;
    poked.inmodal_offsets.v[1 * plane + 10 * 32 + 10] -= 0.5;
    poked.inmodal_offsets.v[0 * plane + 10 * 32 + 11] += 1.0;
    poked.inmodal_offsets.v[1 * plane + 10 * 32 + 12] += 2.0;

    LossTargets tg{&dense, &stack, nullptr};
    LossReport rep = compute_losses(tensors_from_ideal(poked), tg);
    // sum of absolute differences 0.25+0.5+1+2 = 3.75 over 3 pixels * 2 components
    CHECK(rep.l_icr == doctest::Approx(3.75 / 6.0).epsilon(1e-12));
}

TEST_CASE("NaN in a head raises a numerical error naming the term") {
    Fixture f = Fixture::make(32, 4, 25);
    HeadOutputs ideal = encode_ideal_outputs(f.scene, f.stack, f.dense);
    HeadOutputs bad = ideal;
    bad.center_heatmap.v[5] = std::nan("");
    LossTargets tg{&f.dense, &f.stack, nullptr};
    try {
        compute_losses(tensors_from_ideal(bad), tg);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("L_icp") != std::string::npos);
    }
}

TEST_CASE("loss gradients match finite differences through the network") {
    ModelConfig cfg = ModelConfig::toy();
    cfg.crop_h = 32;
    cfg.crop_w = 32;
    cfg.with_refiner = false;
    PapsNetwork net(cfg);
    Fixture f = Fixture::make(32, cfg.n_layers, 26);
    Tensor img = Tensor::from_array(f.scene.image);
    LossTargets tg{&f.dense, &f.stack, nullptr};

    auto total_loss = [&] { return compute_losses(net.forward(img), tg).total; };
    CHECK(fd_check_param(net.params().get("inst.head_icr.out.w"), total_loss, 5) < 1e-4);
    CHECK(fd_check_param(net.params().get("sem.head_ss.out.w"), total_loss, 5) < 1e-4);
    CHECK(fd_check_param(net.params().get("backbone.c4_reduce.w"), total_loss, 5) < 1e-4);
}
