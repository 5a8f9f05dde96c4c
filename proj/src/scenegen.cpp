#include "paps/scenegen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace paps {

namespace {

constexpr std::array<std::array<double, 3>, 8> kStuffPalette = {{
    {0.30, 0.47, 0.75},  // sky
    {0.32, 0.62, 0.33},  // grass
    {0.48, 0.48, 0.50},  // road
    {0.55, 0.42, 0.28},  // dirt
    {0.62, 0.60, 0.44},
    {0.36, 0.55, 0.58},
    {0.44, 0.36, 0.52},
    {0.58, 0.50, 0.58},
}};

constexpr std::array<std::array<double, 3>, 8> kThingPalette = {{
    {0.88, 0.21, 0.18},  // red
    {0.93, 0.86, 0.20},  // yellow
    {0.16, 0.80, 0.86},  // cyan
    {0.86, 0.30, 0.80},
    {0.95, 0.58, 0.16},
    {0.25, 0.90, 0.35},
    {0.70, 0.85, 0.95},
    {0.95, 0.75, 0.75},
}};

enum class ShapeKind { Rectangle, Ellipse, Triangle };

BinaryMask rasterize_shape(ShapeKind kind, int h, int w, int y0, int x0, int ext_h, int ext_w,
                           Rng& rng) {
    BinaryMask m(h, w);
    switch (kind) {
        case ShapeKind::Rectangle:
            for (int y = y0; y < y0 + ext_h; ++y)
                for (int x = x0; x < x0 + ext_w; ++x) m.at(y, x) = 1;
            break;
        case ShapeKind::Ellipse: {
            double cy = y0 + (ext_h - 1) / 2.0, cx = x0 + (ext_w - 1) / 2.0;
            double a = std::max(1.0, ext_w / 2.0), b = std::max(1.0, ext_h / 2.0);
            for (int y = y0; y < y0 + ext_h; ++y)
                for (int x = x0; x < x0 + ext_w; ++x) {
                    double dy = (y - cy) / b, dx = (x - cx) / a;
                    if (dy * dy + dx * dx <= 1.0) m.at(y, x) = 1;
                }
            break;
        }
        case ShapeKind::Triangle: {
            // sample vertices in the box until the triangle is fat enough
            double vy[3], vx[3];
            for (int attempt = 0; attempt < 32; ++attempt) {
                for (int i = 0; i < 3; ++i) {
                    vy[i] = y0 + rng.uniform() * (ext_h - 1);
                    vx[i] = x0 + rng.uniform() * (ext_w - 1);
                }
                double cross = (vx[1] - vx[0]) * (vy[2] - vy[0]) - (vx[2] - vx[0]) * (vy[1] - vy[0]);
                if (std::abs(cross) * 0.5 >= 0.25 * ext_h * ext_w) break;
            }
            auto side = [&](double ay, double ax, double by, double bx, double py, double px) {
                return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
            };
            for (int y = y0; y < y0 + ext_h; ++y)
                for (int x = x0; x < x0 + ext_w; ++x) {
                    double s0 = side(vy[0], vx[0], vy[1], vx[1], y, x);
                    double s1 = side(vy[1], vx[1], vy[2], vx[2], y, x);
                    double s2 = side(vy[2], vx[2], vy[0], vx[0], y, x);
                    bool neg = s0 < 0 || s1 < 0 || s2 < 0;
                    bool pos = s0 > 0 || s1 > 0 || s2 > 0;
                    if (!(neg && pos)) m.at(y, x) = 1;
                }
            break;
        }
    }
    return m;
}

struct Placed {
    BinaryMask amodal;
    int class_id;
};

bool centers_separated(const std::vector<std::pair<double, double>>& centers, double min_sep) {
    for (size_t i = 0; i < centers.size(); ++i)
        for (size_t j = i + 1; j < centers.size(); ++j) {
            double dy = centers[i].first - centers[j].first;
            double dx = centers[i].second - centers[j].second;
            if (std::sqrt(dy * dy + dx * dx) < min_sep) return false;
        }
    return true;
}

}  // namespace

std::vector<std::string> default_class_names(int n_stuff, int n_thing) {
    std::vector<std::string> names;
    for (int i = 0; i < n_stuff; ++i) names.push_back("stuff" + std::to_string(i));
    for (int i = 0; i < n_thing; ++i) names.push_back("thing" + std::to_string(i));
    return names;
}

AmodalScene generate_scene(const SceneGenConfig& cfg, uint64_t seed) {
    if (cfg.height < 32 || cfg.width < 32) throw ConfigError("scene dims must be at least 32x32");
    if (cfg.n_stuff < 1) throw ConfigError("need at least one stuff class");
    if (cfg.min_instances < 0 || cfg.max_instances < cfg.min_instances)
        throw ConfigError("bad instance count range");
    if (cfg.min_shape_extent < 4 || cfg.max_shape_extent < cfg.min_shape_extent)
        throw ConfigError("bad shape extent range");
    if (cfg.max_shape_extent > std::min(cfg.height, cfg.width))
        throw ConfigError("max shape extent exceeds scene dims");

    Rng rng(seed);
    const int h = cfg.height, w = cfg.width;

    for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
        // background: horizontal stuff bands
        int n_bands = static_cast<int>(rng.uniform_int(1, std::max(1, cfg.max_stuff_bands)));
        std::vector<int> band_ends;
        for (int i = 1; i < n_bands; ++i)
            band_ends.push_back(static_cast<int>(rng.uniform_int(h / 8, h - h / 8)));
        band_ends.push_back(h);
        std::sort(band_ends.begin(), band_ends.end());
        std::vector<int> band_class(n_bands);
        for (int i = 0; i < n_bands; ++i)
            band_class[i] = static_cast<int>(rng.uniform_int(0, cfg.n_stuff - 1));

        AmodalScene scene;
        scene.h = h;
        scene.w = w;
        scene.n_stuff = cfg.n_stuff;
        scene.n_thing = cfg.n_thing;
        scene.image = Array3(3, h, w);
        scene.semantic_map.assign(static_cast<size_t>(h) * w, 0);

        int band = 0;
        for (int y = 0; y < h; ++y) {
            while (y >= band_ends[band]) ++band;
            int cls = band_class[band];
            const auto& col = kStuffPalette[cls % kStuffPalette.size()];
            for (int x = 0; x < w; ++x) {
                scene.semantic_map[static_cast<size_t>(y) * w + x] = static_cast<uint16_t>(cls);
                for (int c = 0; c < 3; ++c) scene.image.at(c, y, x) = col[c];
            }
        }

        // instances placed back-to-front; the last placed is frontmost
        int n_inst = static_cast<int>(rng.uniform_int(cfg.min_instances, cfg.max_instances));
        std::vector<Placed> placed;
        bool ok = true;
        for (int i = 0; i < n_inst && ok; ++i) {
            bool got = false;
            for (int tries = 0; tries < 16 && !got; ++tries) {
                int ext_h = static_cast<int>(rng.uniform_int(cfg.min_shape_extent, cfg.max_shape_extent));
                int ext_w = static_cast<int>(rng.uniform_int(cfg.min_shape_extent, cfg.max_shape_extent));
                int y0 = static_cast<int>(rng.uniform_int(0, h - ext_h));
                int x0 = static_cast<int>(rng.uniform_int(0, w - ext_w));
                int cls = cfg.n_thing > 0 ? static_cast<int>(rng.uniform_int(0, cfg.n_thing - 1)) : 0;
                ShapeKind kind = static_cast<ShapeKind>(cls % 3);
                BinaryMask amodal = rasterize_shape(kind, h, w, y0, x0, ext_h, ext_w, rng);
                if (amodal.count() < cfg.min_instance_area) continue;
                placed.push_back({std::move(amodal), cls});
                got = true;
            }
            if (!got) ok = false;
        }
        if (!ok) continue;

        // inmodal = amodal minus the union of strictly front-lying amodal masks
        int n = static_cast<int>(placed.size());
        std::vector<int> ids(n);
        std::iota(ids.begin(), ids.end(), 1);
        for (int i = n - 1; i > 0; --i) std::swap(ids[i], ids[rng.uniform_int(0, i)]);

        scene.instances.clear();
        BinaryMask front_union(h, w);
        for (int i = n - 1; i >= 0; --i) {  // frontmost first
            InstanceGT inst;
            inst.instance_id = ids[i];
            inst.class_id = placed[i].class_id;
            inst.depth_rank = n - 1 - i;
            inst.amodal_mask = placed[i].amodal;
            inst.inmodal_mask = placed[i].amodal.set_difference(front_union);
            inst.occluded_flag = inst.inmodal_mask.count() < inst.amodal_mask.count();
            front_union = front_union.set_union(placed[i].amodal);
            scene.instances.push_back(std::move(inst));
        }

        // constraints
        if (cfg.min_visible_fraction > 0.0) {
            bool visible_ok = true;
            for (const auto& inst : scene.instances) {
                double frac = static_cast<double>(inst.inmodal_mask.count()) / inst.amodal_mask.count();
                if (inst.inmodal_mask.count() == 0 || frac < cfg.min_visible_fraction) visible_ok = false;
            }
            if (!visible_ok) continue;
        }
        if (cfg.min_center_sep > 0.0) {
            std::vector<std::pair<double, double>> inmodal_centers, amodal_centers;
            for (const auto& inst : scene.instances) {
                if (inst.inmodal_mask.count() > 0) inmodal_centers.push_back(inst.inmodal_mask.centroid());
                amodal_centers.push_back(inst.amodal_mask.centroid());
            }
            if (!centers_separated(inmodal_centers, cfg.min_center_sep) ||
                !centers_separated(amodal_centers, cfg.min_center_sep))
                continue;
        }

        // paint instances back-to-front and stamp semantic ids on visible pixels
        for (auto it = scene.instances.rbegin(); it != scene.instances.rend(); ++it) {
            const auto& base = kThingPalette[it->class_id % kThingPalette.size()];
            double jr = rng.uniform(-0.04, 0.04), jg = rng.uniform(-0.04, 0.04), jb = rng.uniform(-0.04, 0.04);
            double col[3] = {base[0] + jr, base[1] + jg, base[2] + jb};
            uint16_t sem = static_cast<uint16_t>(cfg.n_stuff + it->class_id);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    if (it->amodal_mask.at(y, x)) {
                        for (int c = 0; c < 3; ++c) scene.image.at(c, y, x) = col[c];
                    }
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    if (it->inmodal_mask.at(y, x)) scene.semantic_map[static_cast<size_t>(y) * w + x] = sem;
        }

        // Image values are snapped to the f32 grid so on-disk round-trips are exact.
        for (double& v : scene.image.v) {
            if (cfg.noise_level > 0.0) v += rng.uniform(-cfg.noise_level, cfg.noise_level);
            v = static_cast<double>(static_cast<float>(std::clamp(v, 0.0, 1.0)));
        }

        validate_scene(scene);
        return scene;
    }
    throw GenerationError("could not place " + std::to_string(cfg.min_instances) + "-" +
                          std::to_string(cfg.max_instances) + " instances within " +
                          std::to_string(cfg.max_retries) + " retries");
}

}  // namespace paps
