// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#include "splat4d/io.hpp"
#include "splat4d/photo.hpp"
#include "splat4d/render.hpp"
#include "splat4d/threading.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace splat4d;

namespace {

struct GlobalOptions {
    int threads = 0; // 0 = hardware concurrency
    std::uint64_t seed = 0;
    bool seed_set = false;
};

Vec3 parse_offset(const std::string& text) {
    // "dy=1.0" or "dx=0.5,dy=1.0,dz=0.0"
    Vec3 offset{};
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("bad --ego-offset component '" + item + "'");
        const std::string key = item.substr(0, eq);
        const double value = std::stod(item.substr(eq + 1));
        if (key == "dx")
            offset.x = value;
        else if (key == "dy")
            offset.y = value;
        else if (key == "dz")
            offset.z = value;
        else
            throw std::runtime_error("bad --ego-offset key '" + key + "' (use dx/dy/dz)");
    }
    return offset;
}

photo::LossWeights load_weights(const std::string& path) {
    photo::LossWeights w;
    if (path.empty())
        return w;
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open weights file: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    w.l1 = j.value("l1", w.l1);
    w.ssim = j.value("ssim", w.ssim);
    w.l2 = j.value("l2", w.l2);
    w.percep = j.value("percep", w.percep);
    w.scale = j.value("scale", w.scale);
    w.opacity = j.value("opacity", w.opacity);
    return w;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

int cmd_synth(const GlobalOptions& global, const std::string& spec_path,
              const std::string& out_dir) {
    synth::SynthSpec spec =
        spec_path.empty() ? synth::default_spec() : io::load_synth_spec(spec_path);
    if (global.seed_set)
        spec.seed = global.seed;
    const std::string manifest = io::materialize_scene(spec, out_dir);
    std::cout << "wrote " << manifest << "\n";
    return 0;
}

int cmd_build(const GlobalOptions&, const std::string& scene_path, const std::string& out_dir) {
    io::LoadedScene scene = io::load_scene(scene_path);
    for (const auto& w : scene.warnings)
        std::cerr << "warning: " << w << "\n";
    fuse::FrameCache cache(scene.frames, scene.rig);
    io::save_built_frames(out_dir, scene.frames, cache, scene.sh_degree);
    std::cout << "builds=" << cache.build_invocations() << " frames=" << scene.frames.size()
              << "\n";
    return 0;
}

int cmd_fuse(const GlobalOptions&, const std::string& scene_path, const std::string& frames_dir,
             const std::string& out_dir) {
    io::LoadedScene scene = io::load_scene(scene_path);
    for (const auto& w : scene.warnings)
        std::cerr << "warning: " << w << "\n";
    fuse::AggregateStats stats;
    fuse::FrameCache cache(scene.frames, scene.rig);
    gauss::Scene4D fused = fuse::aggregate_scene(cache, scene.frames, scene.rig, &stats);
    if (!frames_dir.empty())
        io::save_built_frames(frames_dir, scene.frames, cache, scene.sh_degree);
    io::save_scene4d(out_dir, fused, scene.sh_degree);
    std::cout << "builds=" << stats.build_invocations << " segments=" << fused.segments.size()
              << "\n";
    return 0;
}

int cmd_render(const GlobalOptions& global, const std::string& segments_path, double t,
               const std::string& camera_id, const std::string& offset_text,
               const std::string& background_text, const std::string& out_path,
               const std::string& depth_out, const std::string& alpha_out) {
    const fs::path p(segments_path);
    const std::string index =
        fs::is_directory(p) ? (p / "segments.json").string() : segments_path;
    gauss::Scene4D scene = io::load_scene4d(index);

    render::RenderRequest request;
    request.t = t;
    const geom::CameraEntry& cam = scene.rig.find(camera_id);
    request.intrinsics = cam.intrinsics;
    request.cam_to_ego = cam.extrinsic;
    geom::EgoPose ego = geom::interpolate_pose(scene.ego_poses, t);
    if (!offset_text.empty()) {
        const Vec3 offset = parse_offset(offset_text);
        request.ego_to_world = geom::compose(ego.pose, geom::SE3{Mat3::identity(), offset});
    } else {
        request.ego_to_world = ego.pose;
    }
    if (!background_text.empty()) {
        std::stringstream ss(background_text);
        std::string item;
        double rgb[3] = {0, 0, 0};
        for (int c = 0; c < 3 && std::getline(ss, item, ','); ++c)
            rgb[c] = std::stod(item);
        request.background = {rgb[0], rgb[1], rgb[2]};
    }

    render::RenderOutput out = render::render(scene, request, global.threads);
    io::save_image_ppm(out_path, out.rgb);
    if (!depth_out.empty())
        io::save_float_raster(depth_out, io::to_float_raster(out.depth));
    if (!alpha_out.empty())
        io::save_float_raster(alpha_out, io::to_float_raster(out.alpha));
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_warp_eval(const GlobalOptions&, const std::string& scene_path, int target, int source,
                  const std::string& camera_id, const std::string& weights_path,
                  const std::string& out_dir) {
    io::LoadedScene scene = io::load_scene(scene_path);
    for (const auto& w : scene.warnings)
        std::cerr << "warning: " << w << "\n";
    const int n = static_cast<int>(scene.frames.size());
    if (target < 0 || target >= n || source < 0 || source >= n)
        throw std::runtime_error("warp-eval: frame index out of range (have " +
                                 std::to_string(n) + " frames)");

    const std::string cam_id = camera_id.empty() ? scene.rig.cameras.front().id : camera_id;
    const geom::CameraEntry& cam = scene.rig.find(cam_id);
    auto view_of = [&](int frame) -> const fuse::ViewInput& {
        for (const auto& view : scene.frames[static_cast<std::size_t>(frame)].views)
            if (view.camera_id == cam_id)
                return view;
        throw std::runtime_error("warp-eval: frame " + std::to_string(frame) +
                                 " has no view from camera '" + cam_id + "'");
    };

    const fuse::ViewInput& target_view = view_of(target);
    const fuse::ViewInput& source_view = view_of(source);
    const geom::SE3 cam_to_world_t =
        geom::compose(scene.frames[static_cast<std::size_t>(target)].ego.pose, cam.extrinsic);
    const geom::SE3 cam_to_world_s =
        geom::compose(scene.frames[static_cast<std::size_t>(source)].ego.pose, cam.extrinsic);
    const geom::SE3 target_to_source = geom::compose(geom::inverse(cam_to_world_s), cam_to_world_t);

    const photo::WarpResult warp =
        photo::warp(source_view.image, target_view.depth, cam.intrinsics, target_to_source);

    const photo::LossWeights weights = load_weights(weights_path);
    photo::LossWeights l1_only = weights;
    l1_only.ssim = 0.0;
    photo::LossWeights ssim_only = weights;
    ssim_only.l1 = 0.0;
    const double l1_term =
        weights.l1 != 0.0
            ? photo::masked_photometric_loss(warp.warped, target_view.image, warp.mask, l1_only) /
                  weights.l1
            : 0.0;
    const double ssim_term =
        weights.ssim != 0.0
            ? photo::masked_photometric_loss(warp.warped, target_view.image, warp.mask, ssim_only) /
                  weights.ssim
            : 0.0;
    const double combined =
        photo::masked_photometric_loss(warp.warped, target_view.image, warp.mask, weights);

    fs::create_directories(out_dir);
    io::save_image_ppm(out_dir + "/warped.ppm", warp.warped);
    IntRaster mask_raster(warp.mask.width(), warp.mask.height(), 1);
    for (std::size_t i = 0; i < warp.mask.raw().size(); ++i)
        mask_raster.raw()[i] = warp.mask.raw()[i];
    io::save_int_raster(out_dir + "/mask.i32", mask_raster);

    std::string table = "l1,ssim,combined\n";
    table += format_double(l1_term) + "," + format_double(ssim_term) + "," +
             format_double(combined) + "\n";
    std::ofstream csv(out_dir + "/losses.csv", std::ios::trunc);
    csv << table;
    std::cout << table;
    return 0;
}

int cmd_metrics(const GlobalOptions&, const std::string& pred_dir, const std::string& gt_dir,
                const std::string& out_path) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(pred_dir))
        if (entry.path().extension() == ".ppm")
            names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    if (names.empty())
        throw std::runtime_error("metrics: no .ppm images in " + pred_dir);

    std::string table = "image,psnr,ssim\n";
    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (const auto& name : names) {
        const Image pred = io::load_image_ppm((fs::path(pred_dir) / name).string());
        const Image gt = io::load_image_ppm((fs::path(gt_dir) / name).string());
        const double p = photo::psnr(pred, gt);
        const double s = photo::ssim(pred, gt);
        psnr_sum += p;
        ssim_sum += s;
        table += name + "," + format_double(p) + "," + format_double(s) + "\n";
    }
    const double n = static_cast<double>(names.size());
    table += "mean," + format_double(psnr_sum / n) + "," + format_double(ssim_sum / n) + "\n";
    std::cout << table;
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::trunc);
        out << table;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"splat4d: feed-forward 4D Gaussian splatting scene engine"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand name

    GlobalOptions global;
    app.add_option("--threads", global.threads, "worker threads (default: all cores)");
    auto* seed_opt = app.add_option("--seed", global.seed, "override the synthetic scene seed");

    std::string spec_path, out_dir, scene_path, frames_dir, segments_path, camera_id;
    std::string offset_text, background_text, out_path, depth_out, alpha_out, weights_path;
    std::string pred_dir, gt_dir;
    double time = 0.0;
    int target_frame = 0, source_frame = 0;

    auto* synth_cmd = app.add_subcommand("synth", "materialize a synthetic scene");
    synth_cmd->add_option("--spec", spec_path, "synthetic scene spec (JSON); built-in default if omitted");
    synth_cmd->add_option("--out", out_dir, "output directory")->required();

    auto* build_cmd = app.add_subcommand("build", "per-frame Gaussian construction with flow applied");
    build_cmd->add_option("--scene", scene_path, "scene manifest")->required();
    build_cmd->add_option("--out", out_dir, "output directory for frame archives")->required();

    auto* fuse_cmd = app.add_subcommand("fuse", "alignment + fusion + aggregation with caching");
    fuse_cmd->add_option("--scene", scene_path, "scene manifest")->required();
    fuse_cmd->add_option("--frames", frames_dir, "directory for per-frame archives");
    fuse_cmd->add_option("--out", out_dir, "output directory for segments")->required();

    auto* render_cmd = app.add_subcommand("render", "time-conditioned render");
    render_cmd->add_option("--segments", segments_path, "segments directory or segments.json")->required();
    render_cmd->add_option("--time", time, "query time, seconds")->required();
    render_cmd->add_option("--camera", camera_id, "camera id")->required();
    render_cmd->add_option("--ego-offset", offset_text, "lateral pose offset, e.g. dy=1.0");
    render_cmd->add_option("--background", background_text, "background color r,g,b");
    render_cmd->add_option("--out", out_path, "output image (PPM)")->required();
    render_cmd->add_option("--depth-out", depth_out, "optional depth raster output");
    render_cmd->add_option("--alpha-out", alpha_out, "optional alpha raster output");

    auto* warp_cmd = app.add_subcommand("warp-eval", "projection-loss pipeline evaluation");
    warp_cmd->add_option("--scene", scene_path, "scene manifest")->required();
    warp_cmd->add_option("--target", target_frame, "target context frame index")->required();
    warp_cmd->add_option("--source", source_frame, "source context frame index")->required();
    warp_cmd->add_option("--camera", camera_id, "camera id (default: first)");
    warp_cmd->add_option("--weights", weights_path, "loss weights (JSON)");
    warp_cmd->add_option("--out", out_dir, "output directory")->required();

    auto* metrics_cmd = app.add_subcommand("metrics", "PSNR/SSIM table for matching images");
    metrics_cmd->add_option("--pred", pred_dir, "predicted images directory")->required();
    metrics_cmd->add_option("--gt", gt_dir, "ground-truth images directory")->required();
    metrics_cmd->add_option("--out", out_path, "also write the table to this file");

    CLI11_PARSE(app, argc, argv);
    global.seed_set = seed_opt->count() > 0;

    try {
        if (synth_cmd->parsed())
            return cmd_synth(global, spec_path, out_dir);
        if (build_cmd->parsed())
            return cmd_build(global, scene_path, out_dir);
        if (fuse_cmd->parsed())
            return cmd_fuse(global, scene_path, frames_dir, out_dir);
        if (render_cmd->parsed())
            return cmd_render(global, segments_path, time, camera_id, offset_text,
                              background_text, out_path, depth_out, alpha_out);
        if (warp_cmd->parsed())
            return cmd_warp_eval(global, scene_path, target_frame, source_frame, camera_id,
                                 weights_path, out_dir);
        if (metrics_cmd->parsed())
            return cmd_metrics(global, pred_dir, gt_dir, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
