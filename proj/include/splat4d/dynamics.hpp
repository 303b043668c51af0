// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splat4d/gauss.hpp"
#include "splat4d/plane.hpp"

#include <map>
#include <optional>

namespace splat4d::dynamics {

/// H x W integer raster: 0 = static background, k > 0 = dynamic instance k.
using InstanceMask = Plane<std::int32_t>;

/// Annotated object positions (world frame) at the two context times.
struct ObjectTrack {
    int instance_id = 0;
    Vec3 position_t0{};
    Vec3 position_t1{};
};

/// Per-pixel rigid velocity, m/s, expressed in the ego frame the flow was
/// estimated for. Every pixel of one instance carries the identical vector;
/// background pixels carry zero.
struct VelocityFlow {
    Plane<double> flow; // 3 channels

    Vec3 at(int x, int y) const {
        return {flow.at(x, y, 0), flow.at(x, y, 1), flow.at(x, y, 2)};
    }
};

/// Throws std::invalid_argument if the per-instance constancy or the zero
/// background is violated.
void validate(const VelocityFlow& flow, const InstanceMask& mask);

/// Both track positions moved into the ego frame of the anchor pose, their
/// difference divided by dt. Throws std::domain_error for dt <= 0.
Vec3 velocity_from_track(const ObjectTrack& track, const geom::EgoPose& ego_anchor, double dt);

/// Instance centroid displacement between the two frames' Gaussian lists,
/// with the later centroid first moved into the earlier ego frame.
/// Throws std::invalid_argument if the instance is absent in either frame.
Vec3 velocity_from_centroids(const InstanceMask& mask_t0, const InstanceMask& mask_t1,
                             const std::vector<gauss::Gaussian4D>& g_t0,
                             const std::vector<gauss::Gaussian4D>& g_t1,
                             const geom::SE3& t1_to_t0, double dt, int instance_id);

/// Constant-per-instance raster, zero on background. Every instance id in
/// the mask must have a velocity entry.
VelocityFlow rasterize_flow(const std::map<int, Vec3>& velocities, const InstanceMask& mask);

/// Stamps flow[p] and dynamic = (mask[p] > 0) onto the Gaussian at the
/// pixel's flat index. All other fields are untouched.
void apply_flow(std::vector<gauss::Gaussian4D>& gaussians, const VelocityFlow& flow,
                const InstanceMask& mask);

/// Velocity source priority: annotated track when present, centroid
/// fallback when the instance exists in both frames, zero otherwise.
/// Output vectors live in the ego frame of the earlier frame. Accepts the
/// per-camera masks and built lists of both frames so centroids can pool
/// every view of an instance.
std::map<int, Vec3> estimate_instance_velocities(
    const std::vector<const InstanceMask*>& masks_t0,
    const std::vector<const InstanceMask*>& masks_t1,
    const std::vector<const std::vector<gauss::Gaussian4D>*>& g_t0,
    const std::vector<const std::vector<gauss::Gaussian4D>*>& g_t1,
    const std::vector<ObjectTrack>& tracks, const geom::EgoPose& ego_t0,
    const geom::EgoPose& ego_t1);

} // namespace splat4d::dynamics
