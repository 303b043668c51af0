// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splat4d/gauss.hpp"
#include "splat4d/plane.hpp"

namespace splat4d::build {

/// Depth clamp range, meters.
constexpr double kDepthMin = 1.5;
constexpr double kDepthMax = 110.0;

constexpr double kScaleMin = 1e-4;
constexpr double kScaleMax = 50.0;

using DepthMap = Plane<double>; // H x W, meters

/// Pre-activation per-pixel attribute rasters. All planes share one H x W.
/// raw_sh carries 3 * (degree+1)^2 channels, coefficient-major.
struct AttributeMaps {
    Plane<double> raw_rotation; // 4 channels, quaternion (w,x,y,z) before normalization
    Plane<double> raw_scale;    // 3 channels, log std-dev
    Plane<double> raw_opacity;  // 1 channel, logit
    Plane<double> raw_sh;
    int sh_degree = 0;
};

/// Throws std::invalid_argument when the planes disagree in shape.
void validate(const AttributeMaps& attrs);

/// Clamps every value into [1.5, 110] m. NaN or infinite entries raise
/// std::domain_error naming the offending pixel.
DepthMap clamp_depth(const DepthMap& depth);

struct ActivatedAttributes {
    Quat rotation;
    Vec3 scale;
    double opacity = 0.0;
    std::vector<double> sh;
};

/// sigmoid opacity, exp scale clamped to [1e-4, 50] m, normalized quaternion
/// (zero norm falls back to identity), SH passed through. Total function:
/// every raw input maps to a valid attribute set.
ActivatedAttributes activate_attributes(const AttributeMaps& attrs, int x, int y);

double sigmoid(double v);
double logit(double p);

/// One Gaussian per pixel, flat index v * W + u, center backprojected
/// through the clamped depth and moved into the frame's ego frame by the
/// camera extrinsic. The degree-0 SH coefficients come from the image
/// pixel; higher bands come from raw_sh. Attribute rasters are interpreted
/// in the ego frame of the frame's timestamp. Everything starts static.
std::vector<gauss::Gaussian4D> build_frame_gaussians(const Image& image,
                                                     const DepthMap& depth,
                                                     const AttributeMaps& attrs,
                                                     const geom::CameraEntry& cam,
                                                     double t_start, double t_end);

} // namespace splat4d::build
