// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splat4d/build.hpp"
#include "splat4d/dynamics.hpp"
#include "splat4d/geom.hpp"

#include <string>

namespace splat4d::synth {

struct BoxSpec {
    Vec3 center{};
    Vec3 size{};   // full extents; a zero-size axis makes a flat panel
    Vec3 albedo{};
};

struct DynamicBoxSpec {
    Vec3 center{}; // at the trajectory start time
    Vec3 size{};
    Vec3 albedo{};
    Vec3 velocity{}; // m/s, world frame
};

/// Procedural driving-like scene: flat-shaded ground plane at world z = 0,
/// axis-aligned static boxes, and constant-velocity dynamic boxes. Fully
/// analytic, so rendered depth, masks and tracks are exact.
struct SynthSpec {
    std::uint64_t seed = 1;
    double ground_extent = 60.0; // half-size of the ground square; <= 0 disables it
    Vec3 ground_albedo{0.42, 0.42, 0.44};
    Vec3 background_albedo{0.55, 0.62, 0.70};
    std::vector<BoxSpec> static_boxes;
    std::vector<DynamicBoxSpec> dynamic_boxes;
    geom::CameraRig rig;
    std::vector<geom::EgoPose> trajectory;
    double kernel_scale = 0.45;  // screen-space std-dev per pixel footprint
    double opacity_target = 0.99;
    int sh_degree = 0;
};

/// Interpolated ego pose (linear translation, slerp rotation) at any time
/// inside the trajectory span.
geom::EgoPose ego_at(const SynthSpec& spec, double t);

struct FrameTruth {
    Image image;
    build::DepthMap depth;        // exact hit depth, background at the clamp maximum
    dynamics::InstanceMask mask;  // dynamic instance ids, 1-based
    std::vector<std::pair<int, Vec3>> track_points; // id -> exact world center at t
};

/// Ray-cast ground truth for one camera at time t.
/// Throws std::out_of_range when t lies outside the trajectory span.
FrameTruth generate_frame(const SynthSpec& spec, double t, const std::string& camera_id);

/// Raw attribute maps whose activation reproduces the oracle's intended
/// attributes: opacity near the target, near-isotropic scales proportional
/// to depth times the pixel footprint, degree-0 SH from the albedo image.
build::AttributeMaps generate_attribute_maps(const FrameTruth& truth,
                                             const geom::CameraEntry& cam,
                                             const SynthSpec& spec);

/// The built-in two-frame scene used when no spec file is given.
SynthSpec default_spec();

} // namespace splat4d::synth
