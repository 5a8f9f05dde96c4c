#include "paps/scene_io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace paps {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void put_u16(std::ostream& os, uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    os.write(b, 2);
}
void put_u32(std::ostream& os, uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 4);
}
void put_f32(std::ostream& os, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
}

class Reader {
public:
    Reader(std::istream& is, std::string path) : is_(is), path_(std::move(path)) {}

    uint8_t u8(const char* field) {
        char b;
        if (!is_.read(&b, 1)) fail(field);
        return static_cast<uint8_t>(b);
    }
    uint16_t u16(const char* field) {
        char b[2];
        if (!is_.read(b, 2)) fail(field);
        return static_cast<uint16_t>(static_cast<uint8_t>(b[0]) | (static_cast<uint8_t>(b[1]) << 8));
    }
    uint32_t u32(const char* field) {
        char b[4];
        if (!is_.read(b, 4)) fail(field);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(b[i])) << (8 * i);
        return v;
    }
    float f32(const char* field) {
        uint32_t bits = u32(field);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    [[noreturn]] void fail(const char* field) {
        throw ParseError("truncated or malformed scene file " + path_ + " at field '" + field + "'");
    }

private:
    std::istream& is_;
    std::string path_;
};

void write_rle(std::ostream& os, const BinaryMask& m) {
    auto runs = rle_encode(m);
    put_u32(os, static_cast<uint32_t>(runs.size()));
    for (const auto& [start, len] : runs) {
        put_u32(os, start);
        put_u32(os, len);
    }
}

BinaryMask read_rle(Reader& r, int h, int w, const char* field) {
    uint32_t n = r.u32(field);
    if (static_cast<uint64_t>(n) * 2 > static_cast<uint64_t>(h) * w + 1)
        throw ParseError(std::string("implausible run count in field '") + field + "'");
    std::vector<std::pair<uint32_t, uint32_t>> runs;
    runs.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        uint32_t start = r.u32(field);
        uint32_t len = r.u32(field);
        runs.emplace_back(start, len);
    }
    return rle_decode(runs, h, w);
}

}  // namespace

void write_scene(const AmodalScene& scene, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write("APSC", 4);
    put_u16(os, 1);  // format version
    put_u16(os, static_cast<uint16_t>(scene.h));
    put_u16(os, static_cast<uint16_t>(scene.w));
    put_u16(os, static_cast<uint16_t>(scene.instances.size()));
    for (int y = 0; y < scene.h; ++y)
        for (int x = 0; x < scene.w; ++x)
            for (int c = 0; c < 3; ++c) put_f32(os, static_cast<float>(scene.image.at(c, y, x)));
    for (uint16_t v : scene.semantic_map) put_u16(os, v);
    for (const auto& inst : scene.instances) {
        put_u16(os, static_cast<uint16_t>(inst.instance_id));
        put_u16(os, static_cast<uint16_t>(inst.class_id));
        put_u16(os, static_cast<uint16_t>(inst.depth_rank));
        char flag = inst.occluded_flag ? 1 : 0;
        os.write(&flag, 1);
        write_rle(os, inst.inmodal_mask);
        write_rle(os, inst.amodal_mask);
    }
    if (!os) throw IoError("write failed: " + path);
}

AmodalScene read_scene(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    Reader r(is, path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "APSC", 4) != 0)
        throw ParseError("bad magic in scene file " + path + " (field 'magic')");
    uint16_t version = r.u16("version");
    if (version != 1) throw ParseError("unsupported scene format version " + std::to_string(version));
    AmodalScene scene;
    scene.h = r.u16("height");
    scene.w = r.u16("width");
    if (scene.h == 0 || scene.w == 0) throw ParseError("zero scene dims (field 'height/width')");
    int n_inst = r.u16("n_instances");
    scene.image = Array3(3, scene.h, scene.w);
    for (int y = 0; y < scene.h; ++y)
        for (int x = 0; x < scene.w; ++x)
            for (int c = 0; c < 3; ++c) scene.image.at(c, y, x) = r.f32("image");
    scene.semantic_map.resize(static_cast<size_t>(scene.h) * scene.w);
    for (auto& v : scene.semantic_map) v = r.u16("semantic_map");
    for (int i = 0; i < n_inst; ++i) {
        InstanceGT inst;
        inst.instance_id = r.u16("instance_id");
        inst.class_id = r.u16("class_id");
        inst.depth_rank = r.u16("depth_rank");
        inst.occluded_flag = r.u8("occluded_flag") != 0;
        inst.inmodal_mask = read_rle(r, scene.h, scene.w, "inmodal_mask");
        inst.amodal_mask = read_rle(r, scene.h, scene.w, "amodal_mask");
        scene.instances.push_back(std::move(inst));
    }
    validate_scene(scene);  // vocabulary unknown here; structural invariants only
    return scene;
}

void write_manifest(const DatasetManifest& m, const std::string& path) {
    json j;
    j["version"] = m.version;
    j["class_names"] = m.class_names;
    j["N_stuff"] = m.n_stuff;
    j["N_thing"] = m.n_thing;
    j["scene_files"] = m.scene_files;
    j["seed"] = m.seed;
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << j.dump(2) << "\n";
}

DatasetManifest read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open manifest: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ParseError("manifest " + path + ": " + e.what());
    }
    DatasetManifest m;
    try {
        m.version = j.at("version").get<std::string>();
        m.class_names = j.at("class_names").get<std::vector<std::string>>();
        m.n_stuff = j.at("N_stuff").get<int>();
        m.n_thing = j.at("N_thing").get<int>();
        m.scene_files = j.at("scene_files").get<std::vector<std::string>>();
        m.seed = j.at("seed").get<uint64_t>();
    } catch (const json::exception& e) {
        throw ParseError("manifest " + path + ": " + e.what());
    }
    if (static_cast<int>(m.class_names.size()) != m.n_stuff + m.n_thing)
        throw ValidationError("manifest class_names length does not equal N_stuff + N_thing");
    return m;
}

Dataset Dataset::open(const std::string& dir) {
    Dataset d;
    d.dir_ = dir;
    d.manifest_ = read_manifest((fs::path(dir) / "manifest.json").string());
    return d;
}

Dataset Dataset::create(const std::string& dir, DatasetManifest manifest) {
    fs::create_directories(dir);
    Dataset d;
    d.dir_ = dir;
    d.manifest_ = std::move(manifest);
    d.manifest_.scene_files.clear();
    return d;
}

AmodalScene Dataset::load_scene(size_t index) const {
    if (index >= manifest_.scene_files.size()) throw IoError("scene index out of range");
    AmodalScene scene = read_scene((fs::path(dir_) / manifest_.scene_files[index]).string());
    scene.n_stuff = manifest_.n_stuff;
    scene.n_thing = manifest_.n_thing;
    validate_scene(scene);  // full validation with vocabulary
    return scene;
}

void Dataset::append_scene(const AmodalScene& scene) {
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%05zu.apsc", manifest_.scene_files.size());
    write_scene(scene, (fs::path(dir_) / name).string());
    manifest_.scene_files.push_back(name);
}

void Dataset::finalize() { write_manifest(manifest_, (fs::path(dir_) / "manifest.json").string()); }

}  // namespace paps
