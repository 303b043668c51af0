// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splat4d/linalg.hpp"

#include <string>
#include <vector>

namespace splat4d::geom {

/// Rigid transform. Camera frame convention throughout: x right, y down,
/// z forward. Ego/world frames: x forward, y left, z up.
struct SE3 {
    Mat3 rotation = Mat3::identity();
    Vec3 translation{};

    static SE3 identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

    bool operator==(const SE3& o) const = default;
};

SE3 compose(const SE3& a, const SE3& b);
SE3 inverse(const SE3& t);
SE3 se3_from_quat(const Quat& q, const Vec3& t);

/// Pinhole intrinsics, zero skew, no distortion.
struct Intrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;
};

/// Throws std::invalid_argument if the invariants do not hold.
void validate(const Intrinsics& k);

struct CameraEntry {
    std::string id;
    Intrinsics intrinsics;
    SE3 extrinsic; // camera -> ego, fixed over time
};

struct CameraRig {
    std::vector<CameraEntry> cameras;

    const CameraEntry& find(const std::string& id) const;
    bool has(const std::string& id) const;
};

/// Throws std::invalid_argument on duplicate camera ids or bad intrinsics.
void validate(const CameraRig& rig);

/// Ego-vehicle pose at a timestamp; maps the vehicle's local frame to world.
struct EgoPose {
    double timestamp = 0.0;
    SE3 pose;
};

/// Pose at time t from a time-sorted list: exact at waypoints, linear
/// translation + slerp rotation in between. Throws std::out_of_range for
/// t outside the covered span.
EgoPose interpolate_pose(const std::vector<EgoPose>& poses, double t);

/// Pixel (u, v) with depth d to the camera-frame point
/// ((u - cx) d / fx, (v - cy) d / fy, d). Throws std::domain_error for d <= 0.
Vec3 backproject(double u, double v, double depth, const Intrinsics& k);

struct Projected {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;
};

/// Camera-frame point to pixel coordinates and depth = z.
/// Throws std::domain_error when z <= 1e-9 (behind the camera).
Projected project(const Vec3& p, const Intrinsics& k);

/// Affine map of pixel coordinates to [-1, 1], pixel-center convention:
/// pixel 0 maps to -1 and pixel (extent - 1) maps to +1. Out-of-range input
/// simply yields |g| > 1. Requires width, height >= 2.
Vec2 normalize_to_grid(double u, double v, int width, int height);

} // namespace splat4d::geom
