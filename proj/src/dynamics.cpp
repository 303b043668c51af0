// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#include "splat4d/dynamics.hpp"

#include <set>
#include <stdexcept>
#include <string>

namespace splat4d::dynamics {

namespace {

struct CentroidAccumulator {
    Vec3 sum{};
    std::size_t count = 0;

    void add(const Vec3& p) {
        sum += p;
        ++count;
    }
    Vec3 mean() const { return sum / static_cast<double>(count); }
};

void accumulate_instance(const InstanceMask& mask, const std::vector<gauss::Gaussian4D>& gaussians,
                         int instance_id, CentroidAccumulator& acc) {
    if (gaussians.size() != mask.pixel_count())
        throw std::invalid_argument("dynamics: Gaussian list length does not match the mask");
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.at(x, y) == instance_id)
                acc.add(gaussians[static_cast<std::size_t>(y) * mask.width() + x].center);
}

} // namespace

void validate(const VelocityFlow& flow, const InstanceMask& mask) {
    if (flow.flow.width() != mask.width() || flow.flow.height() != mask.height() ||
        flow.flow.channels() != 3)
        throw std::invalid_argument("VelocityFlow: raster shape mismatch");
    std::map<int, Vec3> seen;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            const int id = mask.at(x, y);
            const Vec3 v = flow.at(x, y);
            if (id == 0) {
                if (v.x != 0.0 || v.y != 0.0 || v.z != 0.0)
                    throw std::invalid_argument("VelocityFlow: nonzero velocity on background");
            } else {
                auto [it, inserted] = seen.emplace(id, v);
                if (!inserted && !(it->second == v))
                    throw std::invalid_argument("VelocityFlow: instance " + std::to_string(id) +
                                                " carries more than one velocity");
            }
        }
    }
}

Vec3 velocity_from_track(const ObjectTrack& track, const geom::EgoPose& ego_anchor, double dt) {
    if (!(dt > 0.0))
        throw std::domain_error("velocity_from_track: dt must be positive");
    const geom::SE3 world_to_ego = geom::inverse(ego_anchor.pose);
    const Vec3 p0 = world_to_ego.apply(track.position_t0);
    const Vec3 p1 = world_to_ego.apply(track.position_t1);
    return (p1 - p0) / dt;
}

Vec3 velocity_from_centroids(const InstanceMask& mask_t0, const InstanceMask& mask_t1,
                             const std::vector<gauss::Gaussian4D>& g_t0,
                             const std::vector<gauss::Gaussian4D>& g_t1,
                             const geom::SE3& t1_to_t0, double dt, int instance_id) {
    if (!(dt > 0.0))
        throw std::domain_error("velocity_from_centroids: dt must be positive");
    CentroidAccumulator acc0, acc1;
    accumulate_instance(mask_t0, g_t0, instance_id, acc0);
    accumulate_instance(mask_t1, g_t1, instance_id, acc1);
    if (acc0.count == 0 || acc1.count == 0)
        throw std::invalid_argument("velocity_from_centroids: instance " +
                                    std::to_string(instance_id) + " missing in " +
                                    (acc0.count == 0 ? "the earlier" : "the later") + " frame");
    return (t1_to_t0.apply(acc1.mean()) - acc0.mean()) / dt;
}

VelocityFlow rasterize_flow(const std::map<int, Vec3>& velocities, const InstanceMask& mask) {
    VelocityFlow out{Plane<double>(mask.width(), mask.height(), 3, 0.0)};
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            const int id = mask.at(x, y);
            if (id == 0)
                continue;
            auto it = velocities.find(id);
            if (it == velocities.end())
                throw std::invalid_argument("rasterize_flow: no velocity for instance " +
                                            std::to_string(id));
            out.flow.at(x, y, 0) = it->second.x;
            out.flow.at(x, y, 1) = it->second.y;
            out.flow.at(x, y, 2) = it->second.z;
        }
    }
    return out;
}

void apply_flow(std::vector<gauss::Gaussian4D>& gaussians, const VelocityFlow& flow,
                const InstanceMask& mask) {
    if (flow.flow.width() != mask.width() || flow.flow.height() != mask.height())
        throw std::invalid_argument("apply_flow: flow and mask shape mismatch");
    if (gaussians.size() != mask.pixel_count())
        throw std::invalid_argument("apply_flow: Gaussian list length does not match the raster");
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.at(x, y) <= 0)
                continue;
            gauss::Gaussian4D& g = gaussians[static_cast<std::size_t>(y) * mask.width() + x];
            g.velocity = flow.at(x, y);
            g.dynamic = true;
        }
    }
}

std::map<int, Vec3> estimate_instance_velocities(
    const std::vector<const InstanceMask*>& masks_t0,
    const std::vector<const InstanceMask*>& masks_t1,
    const std::vector<const std::vector<gauss::Gaussian4D>*>& g_t0,
    const std::vector<const std::vector<gauss::Gaussian4D>*>& g_t1,
    const std::vector<ObjectTrack>& tracks, const geom::EgoPose& ego_t0,
    const geom::EgoPose& ego_t1) {
    const double dt = ego_t1.timestamp - ego_t0.timestamp;
    if (!(dt > 0.0))
        throw std::domain_error("estimate_instance_velocities: frames not in time order");

    std::set<int> ids;
    for (const auto* m : masks_t0)
        for (const auto v : m->raw())
            if (v > 0)
                ids.insert(v);

    std::map<int, Vec3> tracked;
    for (const auto& t : tracks)
        tracked[t.instance_id] = velocity_from_track(t, ego_t0, dt);

    const geom::SE3 t1_to_t0 = geom::compose(geom::inverse(ego_t0.pose), ego_t1.pose);

    std::map<int, Vec3> out;
    for (int id : ids) {
        if (auto it = tracked.find(id); it != tracked.end()) {
            out[id] = it->second;
            continue;
        }
        CentroidAccumulator acc0, acc1;
        for (std::size_t cam = 0; cam < masks_t0.size(); ++cam)
            accumulate_instance(*masks_t0[cam], *g_t0[cam], id, acc0);
        for (std::size_t cam = 0; cam < masks_t1.size(); ++cam)
            accumulate_instance(*masks_t1[cam], *g_t1[cam], id, acc1);
        if (acc0.count == 0 || acc1.count == 0) {
            out[id] = Vec3{}; // seen in one frame only
            continue;
        }
        out[id] = (t1_to_t0.apply(acc1.mean()) - acc0.mean()) / dt;
    }
    return out;
}

} // namespace splat4d::dynamics
