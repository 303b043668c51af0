// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splat4d/build.hpp"
#include "splat4d/dynamics.hpp"
#include "splat4d/gauss.hpp"

#include <map>
#include <optional>
#include <vector>

namespace splat4d::fuse {

/// Aligns the later frame's kernels into the earlier frame's ego frame and
/// time, then concatenates. Step 1 (spatial): apply T = inverse(ego_t0) o
/// ego_t1 to centers, rotations, SH, and velocities. Step 2 (temporal):
/// rewind dynamic centers by velocity * (t1 - t0). The order is load-bearing:
/// velocities only live in the earlier ego frame after Step 1.
gauss::SceneSegment align_and_fuse(const std::vector<gauss::Gaussian4D>& g_t0,
                                   const std::vector<gauss::Gaussian4D>& g_t1,
                                   const geom::EgoPose& ego_t0, const geom::EgoPose& ego_t1,
                                   const std::map<int, Vec3>& flow_provenance,
                                   double t0, double t1);

/// One camera's worth of a context frame.
struct ViewInput {
    std::string camera_id;
    Image image;
    build::DepthMap depth; // clamped on ingest
    build::AttributeMaps attrs;
    dynamics::InstanceMask mask;
};

/// Everything observed at one context timestamp.
struct ContextFrame {
    geom::EgoPose ego;
    std::vector<ViewInput> views;
    std::vector<std::pair<int, Vec3>> track_points; // instance id -> world position

    double timestamp() const { return ego.timestamp; }
};

struct AggregateStats {
    std::size_t build_invocations = 0;
    std::size_t cache_hits = 0;
};

/// Memoizes per-frame build results so adjacent segments share them.
/// Population is single-threaded; the stored frames are immutable afterwards
/// and safe for concurrent readers.
class FrameCache {
public:
    FrameCache(const std::vector<ContextFrame>& frames, const geom::CameraRig& rig);

    /// Built-and-flow-applied kernel lists of frame i, one per camera,
    /// anchored in frame i's ego frame with span [t_i, t_{i+1}].
    const std::vector<std::vector<gauss::Gaussian4D>>& flowed(std::size_t frame_index);

    /// Velocity field (instance id -> m/s in frame i's ego frame) frame i
    /// was flow-applied with.
    const std::map<int, Vec3>& velocities(std::size_t frame_index);

    std::size_t build_invocations() const { return build_invocations_; }
    std::size_t cache_hits() const { return cache_hits_; }

private:
    struct RawFrame {
        std::vector<std::vector<gauss::Gaussian4D>> per_camera;
    };

    const RawFrame& raw(std::size_t frame_index);

    const std::vector<ContextFrame>& frames_;
    const geom::CameraRig& rig_;
    std::vector<std::optional<RawFrame>> raw_frames_;
    std::vector<std::optional<std::vector<std::vector<gauss::Gaussian4D>>>> flowed_frames_;
    std::vector<std::optional<std::map<int, Vec3>>> velocities_;
    std::size_t build_invocations_ = 0;
    std::size_t cache_hits_ = 0;
};

/// N context frames into N-1 contiguous segments. Each frame is built once;
/// both segments touching it reuse the cached result. Requires >= 2 frames
/// with strictly increasing timestamps.
gauss::Scene4D aggregate_scene(const std::vector<ContextFrame>& frames,
                               const geom::CameraRig& rig, AggregateStats* stats = nullptr);

/// Same, driving a caller-owned cache so other outputs can reuse it.
gauss::Scene4D aggregate_scene(FrameCache& cache, const std::vector<ContextFrame>& frames,
                               const geom::CameraRig& rig, AggregateStats* stats = nullptr);

} // namespace splat4d::fuse
