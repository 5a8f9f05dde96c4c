#pragma once

#include <string>

#include "paps/scene.hpp"

namespace paps {

// Binary per-scene file: magic "APSC", version u16, H u16, W u16, N_inst u16,
// row-major interleaved image (f32), semantic_map (u16), then per instance:
// instance_id/class_id/depth_rank (u16 each), occluded_flag (u8), RLE inmodal
// mask, RLE amodal mask (u32 run count, then u32 start/length pairs). All
// integers little-endian.
void write_scene(const AmodalScene& scene, const std::string& path);
AmodalScene read_scene(const std::string& path);

void write_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest read_manifest(const std::string& path);

// Dataset directory = manifest.json + scene files. Scenes are validated against
// the manifest vocabulary on load.
class Dataset {
public:
    static Dataset open(const std::string& dir);
    static Dataset create(const std::string& dir, DatasetManifest manifest);

    const DatasetManifest& manifest() const { return manifest_; }
    size_t size() const { return manifest_.scene_files.size(); }
    AmodalScene load_scene(size_t index) const;
    void append_scene(const AmodalScene& scene);
    void finalize();  // rewrites the manifest

    const std::string& dir() const { return dir_; }

private:
    std::string dir_;
    DatasetManifest manifest_;
};

}  // namespace paps
