// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splat4d/geom.hpp"

#include <map>
#include <vector>

namespace splat4d::gauss {

/// One 4D kernel. The center lives in the anchor ego frame of the segment
/// that owns it and moves linearly: center_at(t) = center + velocity * (t - t_start).
/// sh holds 3 * (degree+1)^2 coefficients, coefficient-major with RGB
/// channels contiguous: sh[coeff * 3 + channel].
struct Gaussian4D {
    Vec3 center{};
    Quat rotation{};
    Vec3 scale{1.0, 1.0, 1.0}; // per-axis std-dev, meters
    double opacity = 1.0;
    std::vector<double> sh;
    Vec3 velocity{};
    bool dynamic = false;
    double t_start = 0.0;
    double t_end = 0.0;

    int sh_degree() const;
    bool operator==(const Gaussian4D& o) const = default;
};

/// Invariant check used at I/O boundaries; throws std::invalid_argument.
void validate(const Gaussian4D& g);

/// Center at time t under the linear-motion law.
/// Throws std::out_of_range when t is outside [t_start, t_end].
Vec3 center_at(const Gaussian4D& g, double t);

/// Fused kernel set for one time interval, anchored at the ego pose of
/// t_start. flow_provenance records the per-instance velocity field the
/// segment was fused with (empty for all-static segments).
struct SceneSegment {
    double t_start = 0.0;
    double t_end = 0.0;
    geom::EgoPose anchor_pose;
    std::vector<Gaussian4D> gaussians;
    std::map<int, Vec3> flow_provenance;
};

void validate(const SceneSegment& seg);

/// Ordered, contiguous segments covering the scene timeline plus the rig
/// and the per-timestamp ego poses they were built from.
struct Scene4D {
    std::vector<SceneSegment> segments;
    geom::CameraRig rig;
    std::vector<geom::EgoPose> ego_poses;

    double t_begin() const { return segments.front().t_start; }
    double t_end() const { return segments.back().t_end; }
};

void validate(const Scene4D& scene);

constexpr int kMaxShDegree = 3;

inline int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// Evaluates the real SH basis up to the stored degree along view_dir
/// (unit vector, checked to 1e-6), adds the 0.5 offset, clamps to [0,1].
/// Throws std::invalid_argument for degree > 3.
Vec3 sh_to_rgb(const std::vector<double>& sh, const Vec3& view_dir);

/// Rotates SH coefficients so evaluation commutes with rotating the view
/// direction: sh_to_rgb(rotate_sh(sh, R), R * d) == sh_to_rgb(sh, d).
/// Exact for degrees 0 and 1; throws std::invalid_argument for degree >= 2.
std::vector<double> rotate_sh(const std::vector<double>& sh, const Mat3& r);

/// Degree-0 coefficient that evaluates back to the given channel value.
double sh_dc_from_value(double value);

} // namespace splat4d::gauss
