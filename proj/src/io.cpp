// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#include "splat4d/io.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace splat4d::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kFloatMagic[4] = {'S', '4', 'F', '1'};
constexpr char kIntMagic[4] = {'S', '4', 'I', '1'};
constexpr char kArchiveMagic[4] = {'S', '4', 'G', 'A'};
constexpr std::uint8_t kArchiveVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

/// Sequential reader with offset-carrying truncation errors.
class ByteReader {
public:
    ByteReader(const std::string& data, std::string name)
        : data_(data), name_(std::move(name)) {}

    void need(std::size_t n) const {
        if (offset_ + n > data_.size())
            throw std::runtime_error(name_ + ": truncated at byte offset " +
                                     std::to_string(offset_));
    }

    void bytes(char* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, data_.data() + offset_, n);
        offset_ += n;
    }

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(data_[offset_++]);
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[offset_ + i])) << (8 * i);
        offset_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[offset_ + i])) << (8 * i);
        offset_ += 8;
        return v;
    }

    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    std::size_t offset() const { return offset_; }
    std::size_t remaining() const { return data_.size() - offset_; }

private:
    const std::string& data_;
    std::string name_;
    std::size_t offset_ = 0;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open file: " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write file: " + path);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

template <typename T, typename PutFn>
void save_raster(const std::string& path, const Plane<T>& raster, const char* magic, PutFn put) {
    std::string out;
    out.reserve(16 + raster.size() * sizeof(T));
    out.append(magic, 4);
    std::string header;
    put_u32(header, static_cast<std::uint32_t>(raster.width()));
    put_u32(header, static_cast<std::uint32_t>(raster.height()));
    put_u32(header, static_cast<std::uint32_t>(raster.channels()));
    out += header;
    for (const T v : raster.raw())
        put(out, v);
    write_file(path, out);
}

template <typename T, typename GetFn>
Plane<T> load_raster(const std::string& path, const char* magic, GetFn get) {
    const std::string data = read_file(path);
    ByteReader r(data, path);
    char m[4];
    r.bytes(m, 4);
    if (std::memcmp(m, magic, 4) != 0)
        throw std::runtime_error(path + ": raster magic mismatch");
    const std::uint32_t w = r.u32();
    const std::uint32_t h = r.u32();
    const std::uint32_t c = r.u32();
    if (w == 0 || h == 0 || c == 0 || w > (1u << 20) || h > (1u << 20) || c > 4096)
        throw std::runtime_error(path + ": implausible raster dimensions");
    Plane<T> out(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c));
    for (auto& v : out.raw())
        v = get(r);
    if (r.remaining() != 0)
        throw std::runtime_error(path + ": trailing bytes at offset " +
                                 std::to_string(r.offset()));
    return out;
}

json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3)
        throw std::runtime_error("expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json quat_to_json(const Quat& q) { return json::array({q.w, q.x, q.y, q.z}); }

Quat quat_from_json(const json& j, const std::string& what, std::vector<std::string>* warnings) {
    if (!j.is_array() || j.size() != 4)
        throw std::runtime_error(what + ": expected a 4-element quaternion");
    Quat q{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    const double deviation = std::abs(q.norm() - 1.0);
    if (!(deviation <= 1e-3))
        throw std::runtime_error(what + ": quaternion norm off unit by more than 1e-3");
    if (deviation > 1e-9 && warnings)
        warnings->push_back(what + ": quaternion renormalized (|norm - 1| = " +
                            std::to_string(deviation) + ")");
    return q.normalized();
}

json se3_to_json(const geom::SE3& t) {
    return {{"q", quat_to_json(mat_to_quat(t.rotation))}, {"t", vec3_to_json(t.translation)}};
}

geom::SE3 se3_from_json(const json& j, const std::string& what,
                        std::vector<std::string>* warnings) {
    return geom::se3_from_quat(quat_from_json(j.at("q"), what, warnings),
                               vec3_from_json(j.at("t")));
}

json camera_to_json(const geom::CameraEntry& cam) {
    return {{"id", cam.id},
            {"fx", cam.intrinsics.fx},
            {"fy", cam.intrinsics.fy},
            {"cx", cam.intrinsics.cx},
            {"cy", cam.intrinsics.cy},
            {"width", cam.intrinsics.width},
            {"height", cam.intrinsics.height},
            {"extrinsic", se3_to_json(cam.extrinsic)}};
}

geom::CameraEntry camera_from_json(const json& j, std::vector<std::string>* warnings) {
    geom::CameraEntry cam;
    cam.id = j.at("id").get<std::string>();
    cam.intrinsics.fx = j.at("fx").get<double>();
    cam.intrinsics.fy = j.at("fy").get<double>();
    cam.intrinsics.cx = j.at("cx").get<double>();
    cam.intrinsics.cy = j.at("cy").get<double>();
    cam.intrinsics.width = j.at("width").get<int>();
    cam.intrinsics.height = j.at("height").get<int>();
    cam.extrinsic = se3_from_json(j.at("extrinsic"), "camera '" + cam.id + "' extrinsic", warnings);
    return cam;
}

json load_json_file(const std::string& path, const char* expected_format) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    if (j.value("format", "") != expected_format)
        throw std::runtime_error(path + ": expected format '" + expected_format + "'");
    if (j.value("version", 0) != 1)
        throw std::runtime_error(path + ": unsupported format version");
    return j;
}

void write_json_file(const std::string& path, const json& j) {
    write_file(path, j.dump(2) + "\n");
}

} // namespace

void save_float_raster(const std::string& path, const FloatRaster& raster) {
    save_raster(path, raster, kFloatMagic, [](std::string& out, float v) { put_f32(out, v); });
}

FloatRaster load_float_raster(const std::string& path) {
    return load_raster<float>(path, kFloatMagic, [](ByteReader& r) { return r.f32(); });
}

void save_int_raster(const std::string& path, const IntRaster& raster) {
    save_raster(path, raster, kIntMagic, [](std::string& out, std::int32_t v) {
        put_u32(out, static_cast<std::uint32_t>(v));
    });
}

IntRaster load_int_raster(const std::string& path) {
    return load_raster<std::int32_t>(
        path, kIntMagic, [](ByteReader& r) { return static_cast<std::int32_t>(r.u32()); });
}

FloatRaster to_float_raster(const Plane<double>& plane) {
    FloatRaster out(plane.width(), plane.height(), plane.channels());
    for (std::size_t i = 0; i < plane.raw().size(); ++i)
        out.raw()[i] = static_cast<float>(plane.raw()[i]);
    return out;
}

Plane<double> to_double_plane(const FloatRaster& raster) {
    Plane<double> out(raster.width(), raster.height(), raster.channels());
    for (std::size_t i = 0; i < raster.raw().size(); ++i)
        out.raw()[i] = raster.raw()[i];
    return out;
}

void save_image_ppm(const std::string& path, const Image& image) {
    if (image.channels() != 3)
        throw std::invalid_argument("save_image_ppm: expected a 3-channel image");
    std::string out = "P6\n" + std::to_string(image.width()) + " " +
                      std::to_string(image.height()) + "\n255\n";
    out.reserve(out.size() + image.pixel_count() * 3);
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(image.at(x, y, c), 0.0, 1.0);
                const int q = static_cast<int>(std::floor(v * 255.0 + 0.5));
                out.push_back(static_cast<char>(std::clamp(q, 0, 255)));
            }
    write_file(path, out);
}

Image load_image_ppm(const std::string& path) {
    const std::string data = read_file(path);
    std::size_t pos = 0;
    auto token = [&]() -> std::string {
        while (pos < data.size()) {
            if (std::isspace(static_cast<unsigned char>(data[pos]))) {
                ++pos;
            } else if (data[pos] == '#') {
                while (pos < data.size() && data[pos] != '\n')
                    ++pos;
            } else {
                break;
            }
        }
        const std::size_t start = pos;
        while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos])))
            ++pos;
        if (start == pos)
            throw std::runtime_error(path + ": truncated PPM header");
        return data.substr(start, pos - start);
    };

    if (token() != "P6")
        throw std::runtime_error(path + ": not a binary PPM (P6) file");
    const int w = std::stoi(token());
    const int h = std::stoi(token());
    const int maxval = std::stoi(token());
    if (w < 1 || h < 1 || maxval != 255)
        throw std::runtime_error(path + ": unsupported PPM geometry");
    ++pos; // single whitespace after maxval
    const std::size_t need = static_cast<std::size_t>(w) * h * 3;
    if (data.size() - pos < need)
        throw std::runtime_error(path + ": truncated at byte offset " + std::to_string(data.size()));

    Image out(w, h, 3);
    for (std::size_t i = 0; i < need; ++i)
        out.raw()[i] = static_cast<unsigned char>(data[pos + i]) / 255.0;
    return out;
}

void save_gaussians(const std::string& path, const std::vector<gauss::Gaussian4D>& gaussians,
                    int sh_degree) {
    if (sh_degree < 0 || sh_degree > gauss::kMaxShDegree)
        throw std::invalid_argument("save_gaussians: unsupported SH degree");
    const std::size_t n_sh = static_cast<std::size_t>(3 * gauss::sh_coeff_count(sh_degree));
    std::string out;
    out.reserve(20 + gaussians.size() * ((16 + n_sh) * 8 + 1));
    out.append(kArchiveMagic, 4);
    out.push_back(static_cast<char>(kArchiveVersion));
    out.push_back(8); // scalar width
    out.push_back(0);
    out.push_back(0);
    put_u32(out, static_cast<std::uint32_t>(sh_degree));
    put_u64(out, gaussians.size());

    for (const auto& g : gaussians) {
        if (g.sh.size() != n_sh)
            throw std::invalid_argument("save_gaussians: kernel SH degree mismatch");
        put_f64(out, g.center.x);
        put_f64(out, g.center.y);
        put_f64(out, g.center.z);
        put_f64(out, g.rotation.w);
        put_f64(out, g.rotation.x);
        put_f64(out, g.rotation.y);
        put_f64(out, g.rotation.z);
        put_f64(out, g.scale.x);
        put_f64(out, g.scale.y);
        put_f64(out, g.scale.z);
        put_f64(out, g.opacity);
        for (const double v : g.sh)
            put_f64(out, v);
        put_f64(out, g.velocity.x);
        put_f64(out, g.velocity.y);
        put_f64(out, g.velocity.z);
        out.push_back(g.dynamic ? 1 : 0);
        put_f64(out, g.t_start);
        put_f64(out, g.t_end);
    }
    write_file(path, out);
}

std::vector<gauss::Gaussian4D> load_gaussians(const std::string& path, int* sh_degree) {
    const std::string data = read_file(path);
    ByteReader r(data, path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kArchiveMagic, 4) != 0)
        throw std::runtime_error(path + ": not a Gaussian archive");
    const std::uint8_t version = r.u8();
    if (version != kArchiveVersion)
        throw std::runtime_error(path + ": archive version mismatch (got " +
                                 std::to_string(version) + ", expected " +
                                 std::to_string(kArchiveVersion) + ")");
    const std::uint8_t scalar_width = r.u8();
    if (scalar_width != 8)
        throw std::runtime_error(path + ": unsupported scalar width");
    r.u8();
    r.u8();
    const std::uint32_t degree = r.u32();
    if (degree > static_cast<std::uint32_t>(gauss::kMaxShDegree))
        throw std::runtime_error(path + ": unsupported SH degree in header");
    const std::uint64_t count = r.u64();
    const std::size_t n_sh = static_cast<std::size_t>(3 * gauss::sh_coeff_count(static_cast<int>(degree)));
    const std::size_t record = (16 + n_sh) * 8 + 1;
    if (r.remaining() != count * record)
        throw std::runtime_error(path + ": record payload size mismatch at byte offset " +
                                 std::to_string(r.offset()));

    std::vector<gauss::Gaussian4D> out(count);
    for (auto& g : out) {
        g.center = {r.f64(), r.f64(), r.f64()};
        g.rotation = {r.f64(), r.f64(), r.f64(), r.f64()};
        g.scale = {r.f64(), r.f64(), r.f64()};
        g.opacity = r.f64();
        g.sh.resize(n_sh);
        for (auto& v : g.sh)
            v = r.f64();
        g.velocity = {r.f64(), r.f64(), r.f64()};
        g.dynamic = r.u8() != 0;
        g.t_start = r.f64();
        g.t_end = r.f64();
        gauss::validate(g);
    }
    if (sh_degree)
        *sh_degree = static_cast<int>(degree);
    return out;
}

void save_synth_spec(const std::string& path, const synth::SynthSpec& spec) {
    json j;
    j["format"] = "splat4d-synth";
    j["version"] = 1;
    j["seed"] = spec.seed;
    j["ground"] = {{"extent", spec.ground_extent}, {"albedo", vec3_to_json(spec.ground_albedo)}};
    j["background"] = vec3_to_json(spec.background_albedo);
    j["kernel_scale"] = spec.kernel_scale;
    j["opacity_target"] = spec.opacity_target;
    j["sh_degree"] = spec.sh_degree;
    for (const auto& cam : spec.rig.cameras)
        j["cameras"].push_back(camera_to_json(cam));
    for (const auto& pose : spec.trajectory)
        j["trajectory"].push_back({{"time", pose.timestamp},
                                   {"q", quat_to_json(mat_to_quat(pose.pose.rotation))},
                                   {"t", vec3_to_json(pose.pose.translation)}});
    j["static_boxes"] = json::array();
    for (const auto& b : spec.static_boxes)
        j["static_boxes"].push_back({{"center", vec3_to_json(b.center)},
                                     {"size", vec3_to_json(b.size)},
                                     {"albedo", vec3_to_json(b.albedo)}});
    j["dynamic_boxes"] = json::array();
    for (const auto& b : spec.dynamic_boxes)
        j["dynamic_boxes"].push_back({{"center", vec3_to_json(b.center)},
                                      {"size", vec3_to_json(b.size)},
                                      {"albedo", vec3_to_json(b.albedo)},
                                      {"velocity", vec3_to_json(b.velocity)}});
    write_json_file(path, j);
}

synth::SynthSpec load_synth_spec(const std::string& path) {
    const json j = load_json_file(path, "splat4d-synth");
    synth::SynthSpec spec;
    std::vector<std::string> warnings;
    spec.seed = j.value("seed", 1ull);
    if (j.contains("ground")) {
        spec.ground_extent = j["ground"].value("extent", 0.0);
        if (j["ground"].contains("albedo"))
            spec.ground_albedo = vec3_from_json(j["ground"]["albedo"]);
    } else {
        spec.ground_extent = 0.0;
    }
    if (j.contains("background"))
        spec.background_albedo = vec3_from_json(j["background"]);
    spec.kernel_scale = j.value("kernel_scale", spec.kernel_scale);
    spec.opacity_target = j.value("opacity_target", spec.opacity_target);
    spec.sh_degree = j.value("sh_degree", 0);
    for (const auto& cam : j.at("cameras"))
        spec.rig.cameras.push_back(camera_from_json(cam, &warnings));
    geom::validate(spec.rig);
    for (const auto& pose : j.at("trajectory"))
        spec.trajectory.push_back(
            {pose.at("time").get<double>(),
             geom::se3_from_quat(quat_from_json(pose.at("q"), path + " trajectory", &warnings),
                                 vec3_from_json(pose.at("t")))});
    for (std::size_t i = 0; i + 1 < spec.trajectory.size(); ++i)
        if (!(spec.trajectory[i].timestamp < spec.trajectory[i + 1].timestamp))
            throw std::runtime_error(path + ": trajectory timestamps must increase strictly");
    for (const auto& b : j.value("static_boxes", json::array()))
        spec.static_boxes.push_back({vec3_from_json(b.at("center")), vec3_from_json(b.at("size")),
                                     vec3_from_json(b.at("albedo"))});
    for (const auto& b : j.value("dynamic_boxes", json::array()))
        spec.dynamic_boxes.push_back({vec3_from_json(b.at("center")), vec3_from_json(b.at("size")),
                                      vec3_from_json(b.at("albedo")),
                                      vec3_from_json(b.at("velocity"))});
    return spec;
}

std::string materialize_scene(const synth::SynthSpec& spec, const std::string& out_dir) {
    fs::create_directories(out_dir);
    json manifest;
    manifest["format"] = "splat4d-scene";
    manifest["version"] = 1;
    manifest["sh_degree"] = spec.sh_degree;
    for (const auto& cam : spec.rig.cameras)
        manifest["cameras"].push_back(camera_to_json(cam));

    char frame_name[32];
    for (std::size_t f = 0; f < spec.trajectory.size(); ++f) {
        const geom::EgoPose& ego = spec.trajectory[f];
        std::snprintf(frame_name, sizeof(frame_name), "frame_%03zu", f);
        fs::create_directories(fs::path(out_dir) / frame_name);

        json frame;
        frame["time"] = ego.timestamp;
        frame["ego"] = se3_to_json(ego.pose);
        bool tracks_written = false;
        for (const auto& cam : spec.rig.cameras) {
            const synth::FrameTruth truth = synth::generate_frame(spec, ego.timestamp, cam.id);
            const build::AttributeMaps attrs = synth::generate_attribute_maps(truth, cam, spec);
            const std::string rel = std::string(frame_name) + "/" + cam.id;
            const std::string base = out_dir + "/" + rel;
            save_image_ppm(base + ".ppm", truth.image);
            save_float_raster(base + "_depth.f32", to_float_raster(truth.depth));
            save_int_raster(base + "_mask.i32", truth.mask);
            save_float_raster(base + "_rotation.f32", to_float_raster(attrs.raw_rotation));
            save_float_raster(base + "_scale.f32", to_float_raster(attrs.raw_scale));
            save_float_raster(base + "_opacity.f32", to_float_raster(attrs.raw_opacity));
            save_float_raster(base + "_sh.f32", to_float_raster(attrs.raw_sh));
            frame["views"].push_back({{"camera", cam.id},
                                      {"image", rel + ".ppm"},
                                      {"depth", rel + "_depth.f32"},
                                      {"mask", rel + "_mask.i32"},
                                      {"rotation", rel + "_rotation.f32"},
                                      {"scale", rel + "_scale.f32"},
                                      {"opacity", rel + "_opacity.f32"},
                                      {"sh", rel + "_sh.f32"}});
            if (!tracks_written) {
                frame["tracks"] = json::array();
                for (const auto& [id, p] : truth.track_points)
                    frame["tracks"].push_back({{"id", id}, {"position", vec3_to_json(p)}});
                tracks_written = true;
            }
        }
        manifest["frames"].push_back(frame);
    }

    const std::string manifest_path = out_dir + "/scene.json";
    write_json_file(manifest_path, manifest);
    return manifest_path;
}

LoadedScene load_scene(const std::string& manifest_path) {
    const json j = load_json_file(manifest_path, "splat4d-scene");
    const fs::path root = fs::path(manifest_path).parent_path();

    LoadedScene scene;
    scene.sh_degree = j.value("sh_degree", 0);
    for (const auto& cam : j.at("cameras"))
        scene.rig.cameras.push_back(camera_from_json(cam, &scene.warnings));
    geom::validate(scene.rig);

    double prev_time = 0.0;
    bool first = true;
    for (const auto& frame_json : j.at("frames")) {
        fuse::ContextFrame frame;
        frame.ego.timestamp = frame_json.at("time").get<double>();
        frame.ego.pose = se3_from_json(frame_json.at("ego"), manifest_path + " ego pose",
                                       &scene.warnings);
        if (!first && !(frame.ego.timestamp > prev_time))
            throw std::runtime_error(manifest_path + ": frame timestamps must increase strictly");
        prev_time = frame.ego.timestamp;
        first = false;

        for (const auto& view_json : frame_json.at("views")) {
            fuse::ViewInput view;
            view.camera_id = view_json.at("camera").get<std::string>();
            const geom::CameraEntry& cam = scene.rig.find(view.camera_id);
            const int w = cam.intrinsics.width;
            const int h = cam.intrinsics.height;

            auto resolve = [&](const char* key) {
                return (root / view_json.at(key).get<std::string>()).string();
            };
            auto check_size = [&](int rw, int rh, const std::string& file) {
                if (rw != w || rh != h)
                    throw std::runtime_error(file + ": raster size " + std::to_string(rw) + "x" +
                                             std::to_string(rh) + " does not match camera '" +
                                             view.camera_id + "' (" + std::to_string(w) + "x" +
                                             std::to_string(h) + ")");
            };

            const std::string image_file = resolve("image");
            view.image = load_image_ppm(image_file);
            check_size(view.image.width(), view.image.height(), image_file);

            const std::string depth_file = resolve("depth");
            const FloatRaster depth_raw = load_float_raster(depth_file);
            check_size(depth_raw.width(), depth_raw.height(), depth_file);
            if (depth_raw.channels() != 1)
                throw std::runtime_error(depth_file + ": depth must have one channel");
            view.depth = build::clamp_depth(to_double_plane(depth_raw));

            const std::string mask_file = resolve("mask");
            view.mask = load_int_raster(mask_file);
            check_size(view.mask.width(), view.mask.height(), mask_file);
            if (view.mask.channels() != 1)
                throw std::runtime_error(mask_file + ": mask must have one channel");
            for (const auto id : view.mask.raw())
                if (id < 0)
                    throw std::runtime_error(mask_file + ": negative instance id");

            view.attrs.sh_degree = scene.sh_degree;
            const std::string rot_file = resolve("rotation");
            view.attrs.raw_rotation = to_double_plane(load_float_raster(rot_file));
            check_size(view.attrs.raw_rotation.width(), view.attrs.raw_rotation.height(), rot_file);
            const std::string scale_file = resolve("scale");
            view.attrs.raw_scale = to_double_plane(load_float_raster(scale_file));
            check_size(view.attrs.raw_scale.width(), view.attrs.raw_scale.height(), scale_file);
            const std::string opacity_file = resolve("opacity");
            view.attrs.raw_opacity = to_double_plane(load_float_raster(opacity_file));
            check_size(view.attrs.raw_opacity.width(), view.attrs.raw_opacity.height(), opacity_file);
            const std::string sh_file = resolve("sh");
            view.attrs.raw_sh = to_double_plane(load_float_raster(sh_file));
            check_size(view.attrs.raw_sh.width(), view.attrs.raw_sh.height(), sh_file);
            build::validate(view.attrs);

            frame.views.push_back(std::move(view));
        }

        for (const auto& track : frame_json.value("tracks", json::array()))
            frame.track_points.emplace_back(track.at("id").get<int>(),
                                            vec3_from_json(track.at("position")));
        scene.frames.push_back(std::move(frame));
    }
    if (scene.frames.empty())
        throw std::runtime_error(manifest_path + ": no frames");
    return scene;
}

void save_built_frames(const std::string& out_dir, const std::vector<fuse::ContextFrame>& frames,
                       fuse::FrameCache& cache, int sh_degree) {
    fs::create_directories(out_dir);
    json index;
    index["format"] = "splat4d-frames";
    index["version"] = 1;
    index["sh_degree"] = sh_degree;
    char name[64];
    for (std::size_t f = 0; f < frames.size(); ++f) {
        json frame;
        frame["time"] = frames[f].timestamp();
        frame["ego"] = se3_to_json(frames[f].ego.pose);
        const auto& per_camera = cache.flowed(f);
        for (std::size_t c = 0; c < per_camera.size(); ++c) {
            std::snprintf(name, sizeof(name), "frame_%03zu_%s.s4ga", f,
                          frames[f].views[c].camera_id.c_str());
            save_gaussians(out_dir + "/" + name, per_camera[c], sh_degree);
            frame["archives"].push_back({{"camera", frames[f].views[c].camera_id}, {"file", name}});
        }
        frame["flow"] = json::array();
        for (const auto& [id, v] : cache.velocities(f))
            frame["flow"].push_back({{"id", id}, {"velocity", vec3_to_json(v)}});
        index["frames"].push_back(frame);
    }
    write_json_file(out_dir + "/frames.json", index);
}

void save_scene4d(const std::string& out_dir, const gauss::Scene4D& scene, int sh_degree) {
    fs::create_directories(out_dir);
    json index;
    index["format"] = "splat4d-segments";
    index["version"] = 1;
    index["sh_degree"] = sh_degree;
    for (const auto& cam : scene.rig.cameras)
        index["cameras"].push_back(camera_to_json(cam));
    index["ego_poses"] = json::array();
    for (const auto& pose : scene.ego_poses)
        index["ego_poses"].push_back({{"time", pose.timestamp}, {"pose", se3_to_json(pose.pose)}});

    char name[64];
    index["segments"] = json::array();
    for (std::size_t s = 0; s < scene.segments.size(); ++s) {
        const auto& seg = scene.segments[s];
        std::snprintf(name, sizeof(name), "segment_%03zu.s4ga", s);
        save_gaussians(out_dir + "/" + name, seg.gaussians, sh_degree);
        json seg_json;
        seg_json["t_start"] = seg.t_start;
        seg_json["t_end"] = seg.t_end;
        seg_json["anchor"] = {{"time", seg.anchor_pose.timestamp},
                              {"pose", se3_to_json(seg.anchor_pose.pose)}};
        seg_json["file"] = name;
        seg_json["flow"] = json::array();
        for (const auto& [id, v] : seg.flow_provenance)
            seg_json["flow"].push_back({{"id", id}, {"velocity", vec3_to_json(v)}});
        index["segments"].push_back(seg_json);
    }
    write_json_file(out_dir + "/segments.json", index);
}

gauss::Scene4D load_scene4d(const std::string& segments_json_path) {
    const json j = load_json_file(segments_json_path, "splat4d-segments");
    const fs::path root = fs::path(segments_json_path).parent_path();

    gauss::Scene4D scene;
    std::vector<std::string> warnings;
    for (const auto& cam : j.at("cameras"))
        scene.rig.cameras.push_back(camera_from_json(cam, &warnings));
    for (const auto& pose : j.value("ego_poses", json::array()))
        scene.ego_poses.push_back({pose.at("time").get<double>(),
                                   se3_from_json(pose.at("pose"), "ego pose", &warnings)});

    for (const auto& seg_json : j.at("segments")) {
        gauss::SceneSegment seg;
        seg.t_start = seg_json.at("t_start").get<double>();
        seg.t_end = seg_json.at("t_end").get<double>();
        seg.anchor_pose.timestamp = seg_json.at("anchor").at("time").get<double>();
        seg.anchor_pose.pose =
            se3_from_json(seg_json.at("anchor").at("pose"), "segment anchor", &warnings);
        seg.gaussians = load_gaussians((root / seg_json.at("file").get<std::string>()).string());
        for (const auto& flow : seg_json.value("flow", json::array()))
            seg.flow_provenance[flow.at("id").get<int>()] = vec3_from_json(flow.at("velocity"));
        scene.segments.push_back(std::move(seg));
    }
    gauss::validate(scene);
    return scene;
}

} // namespace splat4d::io
