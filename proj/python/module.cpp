// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#include "splat4d/fuse.hpp"
#include "splat4d/io.hpp"
#include "splat4d/photo.hpp"
#include "splat4d/render.hpp"
#include "splat4d/synth.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace splat4d;

namespace {

Image image_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 3 || arr.shape(2) != 3)
        throw std::invalid_argument("expected an (H, W, 3) array");
    Image img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)), 3);
    std::memcpy(img.data(), arr.data(), sizeof(double) * img.size());
    return img;
}

py::array_t<double> array_from_image(const Image& img) {
    py::array_t<double> arr({img.height(), img.width(), img.channels()});
    std::memcpy(arr.mutable_data(), img.data(), sizeof(double) * img.size());
    return arr;
}

py::array_t<double> array_from_plane(const Plane<double>& plane) {
    py::array_t<double> arr({plane.height(), plane.width()});
    std::memcpy(arr.mutable_data(), plane.data(), sizeof(double) * plane.size());
    return arr;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Feed-forward 4D Gaussian splatting scene engine";

    m.def(
        "backproject",
        [](double u, double v, double depth, double fx, double fy, double cx, double cy, int w,
           int h) {
            const Vec3 p = geom::backproject(u, v, depth, {fx, fy, cx, cy, w, h});
            return py::make_tuple(p.x, p.y, p.z);
        },
        py::arg("u"), py::arg("v"), py::arg("depth"), py::arg("fx"), py::arg("fy"), py::arg("cx"),
        py::arg("cy"), py::arg("width"), py::arg("height"),
        "Pixel + depth to a camera-frame 3D point");

    m.def(
        "project",
        [](double x, double y, double z, double fx, double fy, double cx, double cy, int w,
           int h) {
            const geom::Projected p = geom::project({x, y, z}, {fx, fy, cx, cy, w, h});
            return py::make_tuple(p.u, p.v, p.depth);
        },
        py::arg("x"), py::arg("y"), py::arg("z"), py::arg("fx"), py::arg("fy"), py::arg("cx"),
        py::arg("cy"), py::arg("width"), py::arg("height"),
        "Camera-frame 3D point to pixel coordinates and depth");

    m.def(
        "normalize_to_grid",
        [](double u, double v, int w, int h) {
            const Vec2 g = geom::normalize_to_grid(u, v, w, h);
            return py::make_tuple(g.x, g.y);
        },
        py::arg("u"), py::arg("v"), py::arg("width"), py::arg("height"));

    m.def(
        "psnr",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
            return photo::psnr(image_from_array(a), image_from_array(b));
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "ssim",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
            return photo::ssim(image_from_array(a), image_from_array(b));
        },
        py::arg("a"), py::arg("b"));

    py::class_<synth::SynthSpec>(m, "SynthSpec")
        .def_property_readonly("camera_ids",
                               [](const synth::SynthSpec& s) {
                                   std::vector<std::string> ids;
                                   for (const auto& cam : s.rig.cameras)
                                       ids.push_back(cam.id);
                                   return ids;
                               })
        .def_property_readonly("frame_times", [](const synth::SynthSpec& s) {
            std::vector<double> times;
            for (const auto& pose : s.trajectory)
                times.push_back(pose.timestamp);
            return times;
        });

    m.def("default_spec", &synth::default_spec, "Built-in two-frame synthetic scene");
    m.def("load_synth_spec", &io::load_synth_spec, py::arg("path"));
    m.def("materialize_scene", &io::materialize_scene, py::arg("spec"), py::arg("out_dir"),
          "Write the scene (manifest + rasters) to disk; returns the manifest path");

    py::class_<io::LoadedScene>(m, "LoadedScene")
        .def_property_readonly("frame_count",
                               [](const io::LoadedScene& s) { return s.frames.size(); })
        .def_property_readonly("warnings", [](const io::LoadedScene& s) { return s.warnings; });

    m.def("load_scene", &io::load_scene, py::arg("manifest_path"));

    py::class_<gauss::Scene4D>(m, "Scene4D")
        .def_property_readonly("segment_count",
                               [](const gauss::Scene4D& s) { return s.segments.size(); })
        .def_property_readonly("kernel_count",
                               [](const gauss::Scene4D& s) {
                                   std::size_t n = 0;
                                   for (const auto& seg : s.segments)
                                       n += seg.gaussians.size();
                                   return n;
                               })
        .def_property_readonly("t_begin", &gauss::Scene4D::t_begin)
        .def_property_readonly("t_end", &gauss::Scene4D::t_end);

    m.def(
        "aggregate",
        [](const io::LoadedScene& scene) {
            fuse::AggregateStats stats;
            gauss::Scene4D fused = fuse::aggregate_scene(scene.frames, scene.rig, &stats);
            return py::make_tuple(std::move(fused), stats.build_invocations);
        },
        py::arg("scene"), "Build + fuse all context frames; returns (scene4d, build_count)");

    m.def("load_scene4d", &io::load_scene4d, py::arg("segments_json_path"));
    m.def("save_scene4d", &io::save_scene4d, py::arg("out_dir"), py::arg("scene"),
          py::arg("sh_degree"));

    m.def(
        "render",
        [](const gauss::Scene4D& scene, double t, const std::string& camera_id,
           std::tuple<double, double, double> ego_offset,
           std::tuple<double, double, double> background, int threads) {
            render::RenderRequest req;
            req.t = t;
            const geom::CameraEntry& cam = scene.rig.find(camera_id);
            req.intrinsics = cam.intrinsics;
            req.cam_to_ego = cam.extrinsic;
            const geom::EgoPose ego = geom::interpolate_pose(scene.ego_poses, t);
            const Vec3 offset{std::get<0>(ego_offset), std::get<1>(ego_offset),
                              std::get<2>(ego_offset)};
            req.ego_to_world = geom::compose(ego.pose, geom::SE3{Mat3::identity(), offset});
            req.background = {std::get<0>(background), std::get<1>(background),
                              std::get<2>(background)};
            const render::RenderOutput out = render::render(scene, req, threads);
            return py::make_tuple(array_from_image(out.rgb), array_from_plane(out.alpha),
                                  array_from_plane(out.depth));
        },
        py::arg("scene"), py::arg("t"), py::arg("camera_id"),
        py::arg("ego_offset") = std::make_tuple(0.0, 0.0, 0.0),
        py::arg("background") = std::make_tuple(0.0, 0.0, 0.0), py::arg("threads") = 0,
        "Render (rgb, alpha, depth) arrays at time t from the given camera");
}
