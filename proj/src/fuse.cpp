// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#include "splat4d/fuse.hpp"

#include <stdexcept>

namespace splat4d::fuse {

gauss::SceneSegment align_and_fuse(const std::vector<gauss::Gaussian4D>& g_t0,
                                   const std::vector<gauss::Gaussian4D>& g_t1,
                                   const geom::EgoPose& ego_t0, const geom::EgoPose& ego_t1,
                                   const std::map<int, Vec3>& flow_provenance,
                                   double t0, double t1) {
    if (!(t0 < t1))
        throw std::invalid_argument("align_and_fuse: segment times not increasing");
    if (ego_t0.timestamp != t0 || ego_t1.timestamp != t1)
        throw std::invalid_argument("align_and_fuse: ego pose timestamps do not match the segment");

    gauss::SceneSegment seg;
    seg.t_start = t0;
    seg.t_end = t1;
    seg.anchor_pose = ego_t0;
    seg.flow_provenance = flow_provenance;
    seg.gaussians.reserve(g_t0.size() + g_t1.size());

    for (const auto& g : g_t0) {
        gauss::Gaussian4D out = g;
        out.t_start = t0;
        out.t_end = t1;
        seg.gaussians.push_back(std::move(out));
    }

    const geom::SE3 t1_to_t0 = geom::compose(geom::inverse(ego_t0.pose), ego_t1.pose);
    const Quat rot_q = mat_to_quat(t1_to_t0.rotation);
    const bool identity_rot = t1_to_t0.rotation == Mat3::identity();
    const double dt = t1 - t0;

    for (const auto& g : g_t1) {
        gauss::Gaussian4D out = g;
        // Step 1: spatial alignment into t0's ego frame.
        out.center = t1_to_t0.apply(g.center);
        if (!identity_rot) {
            out.rotation = (rot_q * g.rotation).normalized();
            out.sh = gauss::rotate_sh(g.sh, t1_to_t0.rotation);
            out.velocity = t1_to_t0.rotation * g.velocity;
        }
        // Step 2: temporal alignment, rewinding dynamic centers to t0.
        if (out.dynamic)
            out.center = out.center - out.velocity * dt;
        out.t_start = t0;
        out.t_end = t1;
        seg.gaussians.push_back(std::move(out));
    }
    return seg;
}

FrameCache::FrameCache(const std::vector<ContextFrame>& frames, const geom::CameraRig& rig)
    : frames_(frames), rig_(rig), raw_frames_(frames.size()), flowed_frames_(frames.size()),
      velocities_(frames.size()) {
    if (frames.size() < 2)
        throw std::invalid_argument("FrameCache: need at least 2 context frames");
}

const FrameCache::RawFrame& FrameCache::raw(std::size_t frame_index) {
    auto& slot = raw_frames_[frame_index];
    if (slot)
        return *slot;

    const ContextFrame& frame = frames_[frame_index];
    const double t_start = frame.timestamp();
    const double t_end = frame_index + 1 < frames_.size()
                             ? frames_[frame_index + 1].timestamp()
                             : frame.timestamp() + (frame.timestamp() -
                                                    frames_[frame_index - 1].timestamp());
    RawFrame built;
    built.per_camera.reserve(frame.views.size());
    for (const auto& view : frame.views)
        built.per_camera.push_back(build::build_frame_gaussians(
            view.image, view.depth, view.attrs, rig_.find(view.camera_id), t_start, t_end));
    ++build_invocations_;
    slot = std::move(built);
    return *slot;
}

const std::map<int, Vec3>& FrameCache::velocities(std::size_t frame_index) {
    auto& slot = velocities_[frame_index];
    if (slot)
        return *slot;

    // Frame i pairs with frame i+1; the last frame reuses the preceding
    // pair and rotates the field into its own ego frame.
    const bool last = frame_index + 1 == frames_.size();
    const std::size_t i0 = last ? frame_index - 1 : frame_index;
    const std::size_t i1 = i0 + 1;
    const ContextFrame& f0 = frames_[i0];
    const ContextFrame& f1 = frames_[i1];

    std::vector<const dynamics::InstanceMask*> masks0, masks1;
    std::vector<const std::vector<gauss::Gaussian4D>*> lists0, lists1;
    const RawFrame& r0 = raw(i0);
    const RawFrame& r1 = raw(i1);
    for (std::size_t c = 0; c < f0.views.size(); ++c) {
        masks0.push_back(&f0.views[c].mask);
        lists0.push_back(&r0.per_camera[c]);
    }
    for (std::size_t c = 0; c < f1.views.size(); ++c) {
        masks1.push_back(&f1.views[c].mask);
        lists1.push_back(&r1.per_camera[c]);
    }

    std::vector<dynamics::ObjectTrack> tracks;
    for (const auto& [id, p0] : f0.track_points)
        for (const auto& [id1, p1] : f1.track_points)
            if (id == id1)
                tracks.push_back({id, p0, p1});

    std::map<int, Vec3> vel =
        dynamics::estimate_instance_velocities(masks0, masks1, lists0, lists1, tracks, f0.ego, f1.ego);

    if (last) {
        // Restrict to instances visible in the last frame and express the
        // vectors in its ego frame.
        const Mat3 into_last =
            geom::compose(geom::inverse(frames_[frame_index].ego.pose), f0.ego.pose).rotation;
        std::map<int, Vec3> rotated;
        for (const auto& view : frames_[frame_index].views)
            for (const auto id : view.mask.raw())
                if (id > 0 && !rotated.count(id)) {
                    auto it = vel.find(id);
                    rotated[id] = it != vel.end() ? into_last * it->second : Vec3{};
                }
        slot = std::move(rotated);
    } else {
        slot = std::move(vel);
    }
    return *slot;
}

const std::vector<std::vector<gauss::Gaussian4D>>& FrameCache::flowed(std::size_t frame_index) {
    auto& slot = flowed_frames_[frame_index];
    if (slot) {
        ++cache_hits_;
        return *slot;
    }

    const std::map<int, Vec3>& vel = velocities(frame_index);
    std::vector<std::vector<gauss::Gaussian4D>> flowed = raw(frame_index).per_camera;
    const ContextFrame& frame = frames_[frame_index];
    for (std::size_t c = 0; c < frame.views.size(); ++c) {
        const dynamics::InstanceMask& mask = frame.views[c].mask;
        dynamics::VelocityFlow flow = dynamics::rasterize_flow(vel, mask);
        dynamics::apply_flow(flowed[c], flow, mask);
    }
    slot = std::move(flowed);
    return *slot;
}

gauss::Scene4D aggregate_scene(const std::vector<ContextFrame>& frames,
                               const geom::CameraRig& rig, AggregateStats* stats) {
    FrameCache cache(frames, rig);
    return aggregate_scene(cache, frames, rig, stats);
}

gauss::Scene4D aggregate_scene(FrameCache& cache, const std::vector<ContextFrame>& frames,
                               const geom::CameraRig& rig, AggregateStats* stats) {
    if (frames.size() < 2)
        throw std::invalid_argument("aggregate_scene: need at least 2 context frames");
    for (std::size_t i = 0; i + 1 < frames.size(); ++i)
        if (!(frames[i].timestamp() < frames[i + 1].timestamp()))
            throw std::invalid_argument("aggregate_scene: timestamps must be strictly increasing");

    gauss::Scene4D scene;
    scene.rig = rig;
    for (const auto& frame : frames)
        scene.ego_poses.push_back(frame.ego);

    for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
        std::vector<gauss::Gaussian4D> g0, g1;
        for (const auto& per_cam : cache.flowed(k))
            g0.insert(g0.end(), per_cam.begin(), per_cam.end());
        for (const auto& per_cam : cache.flowed(k + 1))
            g1.insert(g1.end(), per_cam.begin(), per_cam.end());
        scene.segments.push_back(align_and_fuse(g0, g1, frames[k].ego, frames[k + 1].ego,
                                                cache.velocities(k), frames[k].timestamp(),
                                                frames[k + 1].timestamp()));
    }

    if (stats) {
        stats->build_invocations = cache.build_invocations();
        stats->cache_hits = cache.cache_hits();
    }
    return scene;
}

} // namespace splat4d::fuse
