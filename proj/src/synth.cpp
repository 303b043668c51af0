// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#include "splat4d/synth.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace splat4d::synth {

namespace {

struct Hit {
    double depth = std::numeric_limits<double>::infinity();
    Vec3 albedo{};
    int instance_id = 0;
    bool valid = false;
};

// Slab test against an axis-aligned box; ray parameter equals camera z-depth
// because the direction is unnormalized with dir_cam.z = 1.
bool intersect_aabb(const Vec3& origin, const Vec3& dir, const Vec3& lo, const Vec3& hi,
                    double& s_out) {
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    const double o[3] = {origin.x, origin.y, origin.z};
    const double d[3] = {dir.x, dir.y, dir.z};
    const double mn[3] = {lo.x, lo.y, lo.z};
    const double mx[3] = {hi.x, hi.y, hi.z};
    for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
            if (o[a] < mn[a] || o[a] > mx[a])
                return false;
            continue;
        }
        double t0 = (mn[a] - o[a]) / d[a];
        double t1 = (mx[a] - o[a]) / d[a];
        if (t0 > t1)
            std::swap(t0, t1);
        t_near = std::max(t_near, t0);
        t_far = std::min(t_far, t1);
        if (t_near > t_far)
            return false;
    }
    if (t_far <= 1e-9)
        return false;
    s_out = t_near > 1e-9 ? t_near : t_far;
    return true;
}

} // namespace

geom::EgoPose ego_at(const SynthSpec& spec, double t) {
    return geom::interpolate_pose(spec.trajectory, t);
}

FrameTruth generate_frame(const SynthSpec& spec, double t, const std::string& camera_id) {
    const geom::CameraEntry& cam = spec.rig.find(camera_id);
    const geom::EgoPose ego = ego_at(spec, t);
    const geom::SE3 cam_to_world = geom::compose(ego.pose, cam.extrinsic);
    const Vec3 origin = cam_to_world.translation;
    const double t0 = spec.trajectory.front().timestamp;

    const int w = cam.intrinsics.width;
    const int h = cam.intrinsics.height;
    FrameTruth out;
    out.image = Image(w, h, 3);
    out.depth = build::DepthMap(w, h, 1);
    out.mask = dynamics::InstanceMask(w, h, 1, 0);

    std::vector<std::pair<Vec3, Vec3>> dyn_bounds; // lo, hi at time t
    for (const auto& box : spec.dynamic_boxes) {
        const Vec3 c = box.center + box.velocity * (t - t0);
        dyn_bounds.emplace_back(c - box.size * 0.5, c + box.size * 0.5);
        out.track_points.emplace_back(static_cast<int>(out.track_points.size()) + 1, c);
    }

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Vec3 dir_cam{(x - cam.intrinsics.cx) / cam.intrinsics.fx,
                               (y - cam.intrinsics.cy) / cam.intrinsics.fy, 1.0};
            const Vec3 dir = cam_to_world.rotation * dir_cam;

            Hit best;
            if (spec.ground_extent > 0.0 && dir.z != 0.0) {
                const double s = -origin.z / dir.z;
                if (s > 1e-9) {
                    const Vec3 p = origin + dir * s;
                    if (std::abs(p.x) <= spec.ground_extent && std::abs(p.y) <= spec.ground_extent &&
                        s < best.depth) {
                        best = {s, spec.ground_albedo, 0, true};
                    }
                }
            }
            for (const auto& box : spec.static_boxes) {
                double s;
                if (intersect_aabb(origin, dir, box.center - box.size * 0.5,
                                   box.center + box.size * 0.5, s) &&
                    s < best.depth)
                    best = {s, box.albedo, 0, true};
            }
            for (std::size_t i = 0; i < dyn_bounds.size(); ++i) {
                double s;
                if (intersect_aabb(origin, dir, dyn_bounds[i].first, dyn_bounds[i].second, s) &&
                    s < best.depth)
                    best = {s, spec.dynamic_boxes[i].albedo, static_cast<int>(i) + 1, true};
            }

            const Vec3 albedo = best.valid ? best.albedo : spec.background_albedo;
            const double depth =
                best.valid ? std::clamp(best.depth, build::kDepthMin, build::kDepthMax)
                           : build::kDepthMax;
            out.image.at(x, y, 0) = albedo.x;
            out.image.at(x, y, 1) = albedo.y;
            out.image.at(x, y, 2) = albedo.z;
            out.depth.at(x, y) = depth;
            out.mask.at(x, y) = best.valid ? best.instance_id : 0;
        }
    }
    return out;
}

build::AttributeMaps generate_attribute_maps(const FrameTruth& truth,
                                             const geom::CameraEntry& cam,
                                             const SynthSpec& spec) {
    const int w = truth.depth.width();
    const int h = truth.depth.height();
    build::AttributeMaps attrs;
    attrs.sh_degree = spec.sh_degree;
    attrs.raw_rotation = Plane<double>(w, h, 4, 0.0);
    attrs.raw_scale = Plane<double>(w, h, 3, 0.0);
    attrs.raw_opacity = Plane<double>(w, h, 1, build::logit(spec.opacity_target));
    attrs.raw_sh = Plane<double>(w, h, 3 * gauss::sh_coeff_count(spec.sh_degree), 0.0);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            attrs.raw_rotation.at(x, y, 0) = 1.0; // identity quaternion
            const double sigma = spec.kernel_scale * truth.depth.at(x, y) / cam.intrinsics.fx;
            const double raw = std::log(std::clamp(sigma, build::kScaleMin, build::kScaleMax));
            for (int c = 0; c < 3; ++c)
                attrs.raw_scale.at(x, y, c) = raw;
            for (int c = 0; c < 3; ++c)
                attrs.raw_sh.at(x, y, c) = gauss::sh_dc_from_value(truth.image.at(x, y, c));
        }
    }
    return attrs;
}

SynthSpec default_spec() {
    SynthSpec spec;
    spec.seed = 1;

    geom::CameraEntry front;
    front.id = "front";
    front.intrinsics = {370.0, 370.0, 258.5, 139.5, 518, 280};
    // Camera axes (x right, y down, z forward) to ego axes (x forward,
    // y left, z up), mounted 1.2 m ahead and 1.6 m up.
    front.extrinsic.rotation.m = {0, 0, 1, -1, 0, 0, 0, -1, 0};
    front.extrinsic.translation = {1.2, 0.0, 1.6};
    spec.rig.cameras.push_back(front);

    spec.trajectory.push_back({0.0, geom::SE3::identity()});
    spec.trajectory.push_back({0.5, {Mat3::identity(), {4.0, 0.0, 0.0}}});

    spec.static_boxes.push_back({{14.0, -4.5, 1.0}, {3.0, 2.0, 2.0}, {0.62, 0.40, 0.34}});
    spec.static_boxes.push_back({{22.0, 5.0, 1.25}, {4.0, 3.0, 2.5}, {0.34, 0.44, 0.58}});
    spec.dynamic_boxes.push_back(
        {{16.0, 1.8, 0.9}, {3.6, 1.8, 1.8}, {0.72, 0.66, 0.28}, {4.0, 0.0, 0.0}});
    return spec;
}

} // namespace splat4d::synth
