// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splat4d/gauss.hpp"
#include "splat4d/plane.hpp"

namespace splat4d::render {

/// Time-conditioned view request. The viewer pose may be any SE3, e.g. the
/// recorded ego pose displaced laterally. Output size comes from the
/// intrinsics.
struct RenderRequest {
    double t = 0.0;
    geom::Intrinsics intrinsics;
    geom::SE3 cam_to_ego;
    geom::SE3 ego_to_world;
    Vec3 background{0.0, 0.0, 0.0};
};

struct RenderDiagnostics {
    std::size_t singular_skipped = 0;  // det(cov2d) <= 0 after dilation
    std::size_t nonfinite_skipped = 0;
    std::size_t behind_camera = 0;
};

struct RenderOutput {
    Image rgb;             // 3 channels, [0,1]
    Plane<double> alpha;   // accumulated opacity, [0,1]
    Plane<double> depth;   // alpha-weighted expected depth, meters
    RenderDiagnostics diagnostics;
};

/// A kernel advanced to the query time and expressed in the world frame.
struct TimedKernel {
    Vec3 center;
    Quat rotation;
    Vec3 scale;
    double opacity = 0.0;
    std::vector<double> sh;
};

/// Picks the owning segment (half-open intervals, closed final end), applies
/// the linear motion law, and moves centers, rotations, and SH (degrees 0-1;
/// higher bands pass through) into the world frame via the anchor pose.
/// Throws std::out_of_range when t falls outside the timeline.
std::vector<TimedKernel> select_and_advance(const gauss::Scene4D& scene, double t);

/// EWA splatting with front-to-back alpha compositing. Covariance is
/// projected through the perspective Jacobian and dilated by 0.3 px^2,
/// kernels sort by view depth (ties by index), per-pixel alpha clips at
/// 0.999 and drops below 1/255, compositing stops once transmittance falls
/// under 1e-4, and the background fills the remainder. Splat bounds are
/// sized so the 1/255 floor, not the bound, decides every pixel; output is
/// bit-identical for any thread count.
RenderOutput rasterize(const std::vector<TimedKernel>& kernels, const RenderRequest& request,
                       int threads = 0);

RenderOutput render(const gauss::Scene4D& scene, const RenderRequest& request, int threads = 0);

} // namespace splat4d::render
