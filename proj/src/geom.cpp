// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#include "splat4d/geom.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace splat4d::geom {

SE3 compose(const SE3& a, const SE3& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

SE3 inverse(const SE3& t) {
    const Mat3 rt = t.rotation.transposed();
    return {rt, -(rt * t.translation)};
}

SE3 se3_from_quat(const Quat& q, const Vec3& t) {
    return {quat_to_mat(q.normalized()), t};
}

void validate(const Intrinsics& k) {
    if (!(k.fx > 0.0) || !(k.fy > 0.0))
        throw std::invalid_argument("Intrinsics: focal lengths must be positive");
    if (k.width < 1 || k.height < 1)
        throw std::invalid_argument("Intrinsics: raster size must be positive");
    if (!(k.cx >= 0.0 && k.cx < k.width) || !(k.cy >= 0.0 && k.cy < k.height))
        throw std::invalid_argument("Intrinsics: principal point outside the raster");
}

const CameraEntry& CameraRig::find(const std::string& id) const {
    for (const auto& cam : cameras)
        if (cam.id == id)
            return cam;
    throw std::invalid_argument("CameraRig: unknown camera id '" + id + "'");
}

bool CameraRig::has(const std::string& id) const {
    for (const auto& cam : cameras)
        if (cam.id == id)
            return true;
    return false;
}

void validate(const CameraRig& rig) {
    std::unordered_set<std::string> seen;
    for (const auto& cam : rig.cameras) {
        if (!seen.insert(cam.id).second)
            throw std::invalid_argument("CameraRig: duplicate camera id '" + cam.id + "'");
        validate(cam.intrinsics);
    }
}

EgoPose interpolate_pose(const std::vector<EgoPose>& poses, double t) {
    if (poses.empty())
        throw std::out_of_range("interpolate_pose: empty pose list");
    if (t < poses.front().timestamp || t > poses.back().timestamp)
        throw std::out_of_range("interpolate_pose: time outside the covered span");
    for (const auto& p : poses)
        if (p.timestamp == t)
            return p;
    std::size_t i = 1;
    while (i + 1 < poses.size() && poses[i].timestamp < t)
        ++i;
    const EgoPose& a = poses[i - 1];
    const EgoPose& b = poses[i];
    const double s = (t - a.timestamp) / (b.timestamp - a.timestamp);
    EgoPose out;
    out.timestamp = t;
    out.pose.translation = a.pose.translation + (b.pose.translation - a.pose.translation) * s;
    out.pose.rotation =
        quat_to_mat(slerp(mat_to_quat(a.pose.rotation), mat_to_quat(b.pose.rotation), s));
    return out;
}

Vec3 backproject(double u, double v, double depth, const Intrinsics& k) {
    if (!(depth > 0.0))
        throw std::domain_error("backproject: depth must be positive");
    if (!std::isfinite(u) || !std::isfinite(v))
        throw std::domain_error("backproject: pixel coordinates must be finite");
    return {(u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth};
}

Projected project(const Vec3& p, const Intrinsics& k) {
    if (!(p.z > 1e-9))
        throw std::domain_error("project: point is behind the camera");
    return {k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy, p.z};
}

Vec2 normalize_to_grid(double u, double v, int width, int height) {
    if (width < 2 || height < 2)
        throw std::invalid_argument("normalize_to_grid: raster must be at least 2x2");
    return {2.0 * u / (width - 1) - 1.0, 2.0 * v / (height - 1) - 1.0};
}

} // namespace splat4d::geom
