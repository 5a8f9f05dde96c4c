#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "paps/scene_io.hpp"
#include "paps/scenegen.hpp"
#include "paps/targets.hpp"

using namespace paps;
namespace fs = std::filesystem;

namespace {
SceneGenConfig small_cfg() {
    SceneGenConfig cfg;
    cfg.height = 64;
    cfg.width = 64;
    cfg.min_shape_extent = 8;
    cfg.max_shape_extent = 24;
    cfg.min_instances = 2;
    cfg.max_instances = 5;
    return cfg;
}
}  // namespace

TEST_CASE("generated scenes satisfy composition invariants") {
    SceneGenConfig cfg = small_cfg();
    for (uint64_t seed = 0; seed < 20; ++seed) {
        AmodalScene s = generate_scene(cfg, seed);
        validate_scene(s);
        // inmodal equals amodal minus the union of strictly front-lying amodal masks
        for (const auto& inst : s.instances) {
            BinaryMask front(s.h, s.w);
            for (const auto& other : s.instances)
                if (other.depth_rank < inst.depth_rank) front = front.set_union(other.amodal_mask);
            BinaryMask expect = inst.amodal_mask.set_difference(front);
            CHECK(expect.data == inst.inmodal_mask.data);
            // hidden region is covered by front-lying amodal masks
            CHECK(inst.amodal_mask.set_difference(inst.inmodal_mask).is_subset_of(front));
        }
    }
}

TEST_CASE("single unoccluded instance: inmodal equals amodal") {
    SceneGenConfig cfg = small_cfg();
    cfg.min_instances = 1;
    cfg.max_instances = 1;
    AmodalScene s = generate_scene(cfg, 3);
    REQUIRE(s.instances.size() == 1);
    CHECK_FALSE(s.instances[0].occluded_flag);
    CHECK(s.instances[0].inmodal_mask.data == s.instances[0].amodal_mask.data);
}

TEST_CASE("full occlusion: identical extents give an empty inmodal mask") {
    // Two identical rectangles composed by the generator's rule.
    AmodalScene s;
    s.h = 32;
    s.w = 32;
    s.n_stuff = 1;
    s.n_thing = 1;
    s.image = Array3(3, 32, 32);
    s.semantic_map.assign(32 * 32, 0);
    BinaryMask rect(32, 32);
    for (int y = 8; y < 20; ++y)
        for (int x = 8; x < 20; ++x) rect.at(y, x) = 1;
    InstanceGT front{1, 0, rect, rect, 0, false};
    InstanceGT back{2, 0, rect, rect.set_difference(rect), 1, true};
    s.instances = {front, back};
    for (int y = 8; y < 20; ++y)
        for (int x = 8; x < 20; ++x) s.semantic_map[y * 32 + x] = 1;
    validate_scene(s);
    CHECK(s.instances[1].inmodal_mask.count() == 0);
    CHECK(s.instances[1].occluded_flag);
    CHECK(s.fully_occluded_count() == 1);
}

TEST_CASE("generation is deterministic for a fixed seed") {
    SceneGenConfig cfg = small_cfg();
    AmodalScene a = generate_scene(cfg, 7);
    AmodalScene b = generate_scene(cfg, 7);
    CHECK(a.image.v == b.image.v);
    CHECK(a.semantic_map == b.semantic_map);
    REQUIRE(a.instances.size() == b.instances.size());
    for (size_t i = 0; i < a.instances.size(); ++i) {
        CHECK(a.instances[i].instance_id == b.instances[i].instance_id);
        CHECK(a.instances[i].amodal_mask.data == b.instances[i].amodal_mask.data);
        CHECK(a.instances[i].inmodal_mask.data == b.instances[i].inmodal_mask.data);
    }
}

TEST_CASE("unsatisfiable constraints exhaust the retry budget") {
    SceneGenConfig cfg = small_cfg();
    cfg.min_center_sep = 1000.0;  // impossible for two instances in a 64px frame
    cfg.max_retries = 8;
    CHECK_THROWS_AS(generate_scene(cfg, 1), GenerationError);
}

TEST_CASE("scene file round-trip is bit-exact") {
    fs::path dir = fs::temp_directory_path() / "paps_io_test";
    fs::create_directories(dir);
    SceneGenConfig cfg = small_cfg();
    AmodalScene a = generate_scene(cfg, 42);
    std::string path = (dir / "scene.apsc").string();
    write_scene(a, path);
    AmodalScene b = read_scene(path);
    CHECK(a.h == b.h);
    CHECK(a.image.v == b.image.v);
    CHECK(a.semantic_map == b.semantic_map);
    REQUIRE(a.instances.size() == b.instances.size());
    for (size_t i = 0; i < a.instances.size(); ++i) {
        CHECK(a.instances[i].instance_id == b.instances[i].instance_id);
        CHECK(a.instances[i].class_id == b.instances[i].class_id);
        CHECK(a.instances[i].depth_rank == b.instances[i].depth_rank);
        CHECK(a.instances[i].occluded_flag == b.instances[i].occluded_flag);
        CHECK(a.instances[i].amodal_mask.data == b.instances[i].amodal_mask.data);
        CHECK(a.instances[i].inmodal_mask.data == b.instances[i].inmodal_mask.data);
    }
    fs::remove_all(dir);
}

TEST_CASE("invalid and truncated scene files are rejected") {
    fs::path dir = fs::temp_directory_path() / "paps_io_bad";
    fs::create_directories(dir);

    SUBCASE("inmodal not a subset of amodal") {
        AmodalScene s;
        s.h = 32;
        s.w = 32;
        s.image = Array3(3, 32, 32);
        s.semantic_map.assign(32 * 32, 0);
        InstanceGT bad;
        bad.instance_id = 1;
        bad.amodal_mask = BinaryMask(32, 32);
        bad.inmodal_mask = BinaryMask(32, 32);
        bad.amodal_mask.at(5, 5) = 1;
        bad.inmodal_mask.at(10, 10) = 1;  // outside amodal
        bad.occluded_flag = false;
        s.instances.push_back(bad);
        std::string path = (dir / "bad.apsc").string();
        write_scene(s, path);
        CHECK_THROWS_AS(read_scene(path), ValidationError);
    }

    SUBCASE("truncated file raises a parse error") {
        SceneGenConfig cfg = small_cfg();
        AmodalScene a = generate_scene(cfg, 9);
        std::string path = (dir / "trunc.apsc").string();
        write_scene(a, path);
        auto full = fs::file_size(path);
        fs::resize_file(path, full / 2);
        CHECK_THROWS_AS(read_scene(path), ParseError);
    }

    SUBCASE("bad magic") {
        std::string path = (dir / "magic.apsc").string();
        std::ofstream(path) << "NOPE garbage";
        CHECK_THROWS_AS(read_scene(path), ParseError);
    }
    fs::remove_all(dir);
}

TEST_CASE("manifest round-trip and dataset validation") {
    fs::path dir = fs::temp_directory_path() / "paps_ds_test";
    fs::remove_all(dir);
    SceneGenConfig cfg = small_cfg();
    DatasetManifest m;
    m.class_names = default_class_names(cfg.n_stuff, cfg.n_thing);
    m.n_stuff = cfg.n_stuff;
    m.n_thing = cfg.n_thing;
    m.seed = 5;
    Dataset ds = Dataset::create(dir.string(), m);
    for (uint64_t i = 0; i < 3; ++i) ds.append_scene(generate_scene(cfg, 100 + i));
    ds.finalize();

    Dataset loaded = Dataset::open(dir.string());
    CHECK(loaded.size() == 3);
    CHECK(loaded.manifest().n_stuff == 4);
    CHECK(loaded.manifest().class_names.size() == 7);
    AmodalScene s = loaded.load_scene(1);
    CHECK(s.n_stuff == 4);
    validate_scene(s);
    fs::remove_all(dir);
}

TEST_CASE("dense targets: centers match brute-force pixel averaging") {
    SceneGenConfig cfg = small_cfg();
    for (uint64_t seed = 0; seed < 8; ++seed) {
        AmodalScene s = generate_scene(cfg, 200 + seed);
        DenseTargets t = derive_dense_targets(s, 8.0);
        size_t k = 0;
        for (const auto& inst : s.instances) {
            if (inst.inmodal_mask.count() == 0) continue;
            auto [oy, ox] = paps_test::oracle_mass_center(inst.inmodal_mask);
            CHECK(t.inmodal_centers[k].first == doctest::Approx(oy).epsilon(1e-12));
            CHECK(t.inmodal_centers[k].second == doctest::Approx(ox).epsilon(1e-12));
            auto [ay, ax] = paps_test::oracle_mass_center(inst.amodal_mask);
            CHECK(t.amodal_centers[k].first == doctest::Approx(ay).epsilon(1e-12));
            ++k;
        }
        CHECK(k == t.live_instance_ids.size());

        // offset-field consistency: p + offset lands on the instance center
        for (int y = 0; y < s.h; ++y)
            for (int x = 0; x < s.w; ++x)
                if (t.inmodal_valid.at(0, y, x) > 0) {
                    double cy = y + t.inmodal_offsets.at(0, y, x);
                    double cx = x + t.inmodal_offsets.at(1, y, x);
                    bool near_center = false;
                    for (auto& [iy, ix] : t.inmodal_centers)
                        if (std::abs(cy - iy) < 0.5 && std::abs(cx - ix) < 0.5) near_center = true;
                    CHECK(near_center);
                }

        // heatmap range and peak values
        double peak_floor = std::exp(-0.5 * (0.5 / t.sigma) * (0.5 / t.sigma));
        for (double v : t.center_heatmap.v) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        for (auto& [cy, cx] : t.inmodal_centers) {
            int ry = static_cast<int>(std::lround(cy)), rx = static_cast<int>(std::lround(cx));
            CHECK(t.center_heatmap.at(0, ry, rx) >= peak_floor);
        }
    }
}

TEST_CASE("dense targets: centered square and unoccluded offset cases") {
    AmodalScene s;
    s.h = 33;
    s.w = 33;
    s.n_stuff = 1;
    s.n_thing = 1;
    s.image = Array3(3, 33, 33);
    s.semantic_map.assign(33 * 33, 0);
    InstanceGT inst;
    inst.instance_id = 1;
    inst.class_id = 0;
    inst.amodal_mask = BinaryMask(33, 33);
    for (int y = 12; y <= 20; ++y)
        for (int x = 12; x <= 20; ++x) inst.amodal_mask.at(y, x) = 1;  // 9x9 centered at 16,16
    inst.inmodal_mask = inst.amodal_mask;
    s.instances.push_back(inst);
    for (int y = 12; y <= 20; ++y)
        for (int x = 12; x <= 20; ++x) s.semantic_map[y * 33 + x] = 1;

    DenseTargets t = derive_dense_targets(s, 4.0);
    CHECK(t.center_heatmap.at(0, 16, 16) == doctest::Approx(1.0));
    double best = 0;
    for (double v : t.center_heatmap.v) best = std::max(best, v);
    CHECK(best == doctest::Approx(1.0));
    CHECK(t.inmodal_offsets.at(0, 16, 16) == doctest::Approx(0.0));
    CHECK(t.inmodal_offsets.at(1, 16, 16) == doctest::Approx(0.0));
    // unoccluded instance: amodal center offset is exactly (0,0)
    CHECK(t.amodal_center_offsets.at(0, 16, 16) == doctest::Approx(0.0));
    CHECK(t.amodal_center_offsets.at(1, 16, 16) == doctest::Approx(0.0));
    CHECK(t.center_valid.at(0, 16, 16) == 1.0);
    CHECK(t.center_occ_flags.at(0, 16, 16) == 0.0);
}

TEST_CASE("fully occluded instances are excluded from center targets and counted") {
    AmodalScene s;
    s.h = 32;
    s.w = 32;
    s.n_stuff = 1;
    s.n_thing = 1;
    s.image = Array3(3, 32, 32);
    s.semantic_map.assign(32 * 32, 0);
    BinaryMask rect(32, 32);
    for (int y = 4; y < 16; ++y)
        for (int x = 4; x < 16; ++x) rect.at(y, x) = 1;
    InstanceGT front{1, 0, rect, rect, 0, false};
    InstanceGT hidden{2, 0, rect, BinaryMask(32, 32), 1, true};
    s.instances = {front, hidden};
    for (int y = 4; y < 16; ++y)
        for (int x = 4; x < 16; ++x) s.semantic_map[y * 32 + x] = 1;

    DenseTargets t = derive_dense_targets(s);
    CHECK(t.n_fully_occluded == 1);
    CHECK(t.live_instance_ids.size() == 1);
    CHECK(t.live_instance_ids[0] == 1);
}

TEST_CASE("rejects non-positive sigma") {
    SceneGenConfig cfg = small_cfg();
    AmodalScene s = generate_scene(cfg, 1);
    CHECK_THROWS_AS(derive_dense_targets(s, 0.0), ConfigError);
}
