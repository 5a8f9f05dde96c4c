#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "paps/losses.hpp"
#include "paps/network.hpp"
#include "paps/refiner.hpp"
#include "test_util.hpp"

using namespace paps;
using paps_test::fd_check_param;
using paps_test::random_tensor;

namespace {
ModelConfig refiner_cfg() {
    ModelConfig cfg = ModelConfig::toy();
    cfg.crop_h = 32;
    cfg.crop_w = 32;
    cfg.refiner_mem_slots = 16;  // desk-size memory for unit tests
    cfg.refiner_channels = 8;
    return cfg;
}
}  // namespace

TEST_CASE("unoccluded mask construction") {
    int h = 32, w = 32;
    BinaryMask a(h, w), b(h, w);
    for (int y = 4; y < 12; ++y)
        for (int x = 4; x < 12; ++x) a.at(y, x) = 1;
    for (int y = 20; y < 28; ++y)
        for (int x = 16; x < 24; ++x) b.at(y, x) = 1;

    SUBCASE("all instances occluded yields the zero map") {
        Array3 m = build_unoccluded_mask_s4({a, b}, {0.9, 0.8}, 0.5, h / 4, w / 4);
        for (double v : m.v) CHECK(v == 0.0);
    }
    SUBCASE("one unoccluded instance: support exactly over its mask cells") {
        Array3 m = build_unoccluded_mask_s4({a, b}, {0.1, 0.9}, 0.5, h / 4, w / 4);
        for (int cy = 0; cy < h / 4; ++cy)
            for (int cx = 0; cx < w / 4; ++cx) {
                bool any = false;
                for (int y = cy * 4; y < cy * 4 + 4; ++y)
                    for (int x = cx * 4; x < cx * 4 + 4; ++x) any |= a.at(y, x) != 0;
                CHECK(m.at(0, cy, cx) == (any ? 1.0 : 0.0));
            }
    }
    SUBCASE("threshold sweep changes the support monotonically") {
        std::vector<double> probs = {0.35, 0.55, 0.65};
        BinaryMask c(h, w);
        c.at(0, 0) = 1;
        int prev = -1;
        for (double thr : {0.3, 0.4, 0.5, 0.6, 0.7}) {
            Array3 m = build_unoccluded_mask_s4({a, b, c}, probs, thr, h / 4, w / 4);
            int support = 0;
            for (double v : m.v) support += v > 0;
            if (prev >= 0) CHECK(support >= prev);  // larger threshold keeps more instances
            prev = support;
        }
    }
}

TEST_CASE("refiner attention weights form a distribution") {
    ModelConfig cfg = refiner_cfg();
    ParamStore ps;
    Rng rng(1);
    AmodalMaskRefiner ref(ps, rng, cfg);
    Rng dr(2);
    NoGradGuard guard;
    for (int trial = 0; trial < 5; ++trial) {
        Tensor unocc = random_tensor({cfg.head_narrow, 8, 8}, dr, false);
        Tensor amodal = random_tensor({2 * cfg.head_narrow, 8, 8}, dr, false);
        auto r = ref.forward(unocc, amodal);
        double sum = std::accumulate(r.attention.values().begin(), r.attention.values().end(), 0.0);
        CHECK(std::abs(sum - 1.0) < 1e-6);
        for (double v : r.attention.values()) CHECK(v >= 0.0);
        CHECK(r.f_amr.shape() == std::vector<int>{8, 8, 8});  // {C, H/4, W/4}
        CHECK(r.roo_seg_logits.shape() == std::vector<int>{cfg.n_layers, 8, 8});
        CHECK(r.roo_amodal_offsets.shape() == std::vector<int>{cfg.n_layers * 2, 8, 8});
    }
}

TEST_CASE("equal memory keys give uniform attention and the mean readout") {
    ModelConfig cfg = refiner_cfg();
    ParamStore ps;
    Rng rng(3);
    AmodalMaskRefiner ref(ps, rng, cfg);
    // force K_IE rows identical: equal memory rows and zero modulation
    Tensor k_mem = ps.get("refiner.k_mem");
    int n = cfg.refiner_mem_slots, d = ref.embed_dim();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) k_mem.values()[static_cast<size_t>(i) * d + j] = 0.01 * j;
    for (double& v : ps.get("refiner.k_w").values()) v = 0.0;
    for (double& v : ps.get("refiner.k_b").values()) v = 0.0;

    Rng dr(4);
    NoGradGuard guard;
    Tensor unocc = random_tensor({cfg.head_narrow, 8, 8}, dr, false);
    Tensor amodal = random_tensor({2 * cfg.head_narrow, 8, 8}, dr, false);
    auto r = ref.forward(unocc, amodal);
    for (double v : r.attention.values()) CHECK(v == doctest::Approx(1.0 / n).epsilon(1e-9));
}

TEST_CASE("permuting memory rows jointly leaves the readout unchanged") {
    ModelConfig cfg = refiner_cfg();
    ParamStore ps;
    Rng rng(5);
    AmodalMaskRefiner ref(ps, rng, cfg);
    Rng dr(6);
    Tensor unocc = random_tensor({cfg.head_narrow, 8, 8}, dr, false);
    Tensor amodal = random_tensor({2 * cfg.head_narrow, 8, 8}, dr, false);
    NoGradGuard guard;
    auto base = ref.forward(unocc, amodal);

    // apply the same permutation to E and K rows
    int n = cfg.refiner_mem_slots, d = ref.embed_dim();
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng prng(7);
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[prng.uniform_int(0, i)]);
    for (const char* name : {"refiner.e_mem", "refiner.k_mem"}) {
        Tensor t = ps.get(name);
        std::vector<double> orig = t.values();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j)
                t.values()[static_cast<size_t>(i) * d + j] = orig[static_cast<size_t>(perm[i]) * d + j];
    }
    auto permuted = ref.forward(unocc, amodal);
    for (size_t i = 0; i < base.f_amr.numel(); ++i)
        CHECK(permuted.f_amr.data()[i] == doctest::Approx(base.f_amr.data()[i]).epsilon(1e-9));
}

TEST_CASE("embedding dims are pinned to the configured crop") {
    ModelConfig cfg = refiner_cfg();
    ParamStore ps;
    Rng rng(8);
    AmodalMaskRefiner ref(ps, rng, cfg);
    Rng dr(9);
    Tensor wrong = random_tensor({cfg.head_narrow, 16, 16}, dr, false);  // 64x64 crop instead of 32x32
    Tensor amodal = random_tensor({2 * cfg.head_narrow, 16, 16}, dr, false);
    NoGradGuard guard;
    CHECK_THROWS_AS(ref.forward(wrong, amodal), ConfigError);
}

TEST_CASE("gradients flow end to end through the attention path") {
    ModelConfig cfg = refiner_cfg();
    ParamStore ps;
    Rng rng(10);
    AmodalMaskRefiner ref(ps, rng, cfg);
    Rng dr(11);
    Tensor unocc = random_tensor({cfg.head_narrow, 8, 8}, dr, true, 0.5);
    Tensor amodal = random_tensor({2 * cfg.head_narrow, 8, 8}, dr, true, 0.5);
    auto loss = [&] { return sum_all(sigmoid(ref.forward(unocc, amodal).f_amr)); };
    CHECK(fd_check_param(ps.get("refiner.e_mem"), loss, 6) < 1e-4);
    CHECK(fd_check_param(ps.get("refiner.k_mem"), loss, 6) < 1e-4);
    CHECK(fd_check_param(ps.get("refiner.q_w"), loss, 6) < 1e-4);
    CHECK(fd_check_param(ps.get("refiner.ie1.pw.w"), loss, 6) < 1e-4);
    CHECK(fd_check_param(unocc, loss, 6) < 1e-4);
}

TEST_CASE("stage-2 style backward touches only refiner parameters") {
    ModelConfig cfg = refiner_cfg();
    PapsNetwork net(cfg);
    net.params().set_requires_grad_all(false);
    net.params().set_requires_grad_prefix("refiner.", true);

    Rng dr(12);
    Tensor img = random_tensor({3, 32, 32}, dr, false, 0.3);
    HeadTensors heads = net.forward(img);
    Array3 mask(1, 8, 8, 1.0);
    net.run_refiner(heads, mask);
    Tensor loss = sum_all(sigmoid(heads.refined_roo_seg_logits));
    loss.backward();

    for (const auto& [name, t] : net.params().items()) {
        bool is_refiner = name.rfind("refiner.", 0) == 0;
        bool has_grad = false;
        for (double g : t.grad()) has_grad |= g != 0.0;
        if (is_refiner)
            continue;  // refiner grads may or may not be nonzero per parameter
        else
            CHECK_FALSE(has_grad);
    }
    // at least one refiner parameter received gradient
    bool any = false;
    for (double g : net.params().get("refiner.head_roo.out.w").grad()) any |= g != 0.0;
    CHECK(any);
}
