// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#include "splat4d/render.hpp"

#include "splat4d/threading.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace splat4d::render {

namespace {

constexpr double kDilation = 0.3;        // px^2 added to both 2D variances
constexpr double kAlphaClip = 0.999;
constexpr double kAlphaFloor = 1.0 / 255.0;
constexpr double kTransmittanceStop = 1e-4;
constexpr int kTileSize = 16;

struct Splat {
    double u = 0.0, v = 0.0;    // projected mean, pixel coords
    double z = 0.0;             // view depth
    double ia = 0.0, ib = 0.0, ic = 0.0; // inverse 2D covariance [ia ib; ib ic]
    double opacity = 0.0;
    Vec3 color{};
    int x0 = 0, x1 = 0, y0 = 0, y1 = 0; // affected pixel range, half-open
};

Mat3 covariance_world(const TimedKernel& k) {
    const Mat3 r = quat_to_mat(k.rotation);
    Mat3 m = r;
    for (int row = 0; row < 3; ++row) {
        m(row, 0) *= k.scale.x;
        m(row, 1) *= k.scale.y;
        m(row, 2) *= k.scale.z;
    }
    return m * m.transposed();
}

} // namespace

std::vector<TimedKernel> select_and_advance(const gauss::Scene4D& scene, double t) {
    if (scene.segments.empty())
        throw std::out_of_range("select_and_advance: empty scene");
    if (t < scene.t_begin() || t > scene.t_end())
        throw std::out_of_range("select_and_advance: time outside the scene timeline");

    // Half-open ownership; the final segment also owns its end time.
    const gauss::SceneSegment* owner = &scene.segments.back();
    for (const auto& seg : scene.segments) {
        if (t >= seg.t_start && t < seg.t_end) {
            owner = &seg;
            break;
        }
    }

    const geom::SE3& anchor = owner->anchor_pose.pose;
    const bool identity_rot = anchor.rotation == Mat3::identity();
    const bool identity_pose = identity_rot && anchor.translation == Vec3{};
    const Quat anchor_q = mat_to_quat(anchor.rotation);

    std::vector<TimedKernel> out;
    out.reserve(owner->gaussians.size());
    for (const auto& g : owner->gaussians) {
        TimedKernel k;
        const Vec3 c = gauss::center_at(g, t);
        k.center = identity_pose ? c : anchor.apply(c);
        k.rotation = identity_rot ? g.rotation : (anchor_q * g.rotation).normalized();
        k.scale = g.scale;
        k.opacity = g.opacity;
        if (!identity_rot && g.sh_degree() == 1)
            k.sh = gauss::rotate_sh(g.sh, anchor.rotation);
        else
            k.sh = g.sh;
        out.push_back(std::move(k));
    }
    return out;
}

RenderOutput rasterize(const std::vector<TimedKernel>& kernels, const RenderRequest& request,
                       int threads) {
    geom::validate(request.intrinsics);
    const geom::Intrinsics& k = request.intrinsics;
    const int w = k.width;
    const int h = k.height;
    if (threads <= 0)
        threads = default_thread_count();

    RenderOutput out;
    out.rgb = Image(w, h, 3);
    out.alpha = Plane<double>(w, h, 1, 0.0);
    out.depth = Plane<double>(w, h, 1, 0.0);

    const geom::SE3 cam_to_world = geom::compose(request.ego_to_world, request.cam_to_ego);
    const geom::SE3 world_to_cam = geom::inverse(cam_to_world);
    const Vec3 cam_origin = cam_to_world.translation;

    // Project every kernel to a screen-space splat.
    std::vector<Splat> splats(kernels.size());
    std::vector<std::uint8_t> alive(kernels.size(), 0);
    std::vector<std::size_t> singular(threads > 0 ? static_cast<std::size_t>(threads) : 1, 0);
    std::vector<std::size_t> nonfinite(singular.size(), 0);
    std::vector<std::size_t> behind(singular.size(), 0);

    {
        const std::size_t workers = std::max(1, threads);
        const std::size_t chunk = (kernels.size() + workers - 1) / std::max<std::size_t>(workers, 1);
        parallel_for(kernels.size(), threads, [&](std::size_t begin, std::size_t end) {
            const std::size_t slot = chunk > 0 ? begin / chunk : 0;
            for (std::size_t i = begin; i < end; ++i) {
                const TimedKernel& g = kernels[i];
                if (!std::isfinite(g.center.x) || !std::isfinite(g.center.y) ||
                    !std::isfinite(g.center.z) || !std::isfinite(g.opacity)) {
                    ++nonfinite[slot];
                    continue;
                }
                const Vec3 p = world_to_cam.apply(g.center);
                if (p.z <= 1e-9) {
                    ++behind[slot];
                    continue;
                }
                if (g.opacity * 255.0 <= 1.0)
                    continue; // can never pass the alpha floor

                const Mat3 cov_w = covariance_world(g);
                const Mat3 rw = world_to_cam.rotation;
                const Mat3 cov_c = rw * cov_w * rw.transposed();

                const double iz = 1.0 / p.z;
                const double j00 = k.fx * iz;
                const double j02 = -k.fx * p.x * iz * iz;
                const double j11 = k.fy * iz;
                const double j12 = -k.fy * p.y * iz * iz;

                // sigma2d = J * cov_c * J^T, J = [j00 0 j02; 0 j11 j12]
                const double t00 = j00 * cov_c(0, 0) + j02 * cov_c(2, 0);
                const double t02 = j00 * cov_c(0, 2) + j02 * cov_c(2, 2);
                const double t10 = j11 * cov_c(1, 0) + j12 * cov_c(2, 0);
                const double t11 = j11 * cov_c(1, 1) + j12 * cov_c(2, 1);
                const double t12 = j11 * cov_c(1, 2) + j12 * cov_c(2, 2);
                const double a = t00 * j00 + t02 * j02 + kDilation;
                const double b = t10 * j00 + t12 * j02;
                const double c = t11 * j11 + t12 * j12 + kDilation;

                const double det = a * c - b * b;
                if (!(det > 0.0) || !std::isfinite(det)) {
                    ++singular[slot];
                    continue;
                }

                Splat s;
                s.u = k.fx * p.x * iz + k.cx;
                s.v = k.fy * p.y * iz + k.cy;
                s.z = p.z;
                const double inv_det = 1.0 / det;
                s.ia = c * inv_det;
                s.ib = -b * inv_det;
                s.ic = a * inv_det;
                s.opacity = g.opacity;

                // The alpha floor zeroes everything past q = 2 ln(255 a), so a
                // box at that radius loses nothing relative to an unbounded splat.
                const double q_cut = 2.0 * std::log(255.0 * std::min(g.opacity, 1.0));
                const double rx = std::sqrt(q_cut * a);
                const double ry = std::sqrt(q_cut * c);
                s.x0 = std::max(0, static_cast<int>(std::ceil(s.u - rx)));
                s.x1 = std::min(w, static_cast<int>(std::floor(s.u + rx)) + 1);
                s.y0 = std::max(0, static_cast<int>(std::ceil(s.v - ry)));
                s.y1 = std::min(h, static_cast<int>(std::floor(s.v + ry)) + 1);
                if (s.x0 >= s.x1 || s.y0 >= s.y1)
                    continue;

                Vec3 dir = g.center - cam_origin;
                const double dn = dir.norm();
                dir = dn > 1e-12 ? dir / dn : Vec3{0.0, 0.0, 1.0};
                s.color = gauss::sh_to_rgb(g.sh, dir);

                splats[i] = s;
                alive[i] = 1;
            }
        });
    }
    out.diagnostics.singular_skipped = std::accumulate(singular.begin(), singular.end(), std::size_t{0});
    out.diagnostics.nonfinite_skipped = std::accumulate(nonfinite.begin(), nonfinite.end(), std::size_t{0});
    out.diagnostics.behind_camera = std::accumulate(behind.begin(), behind.end(), std::size_t{0});

    // Front-to-back order, ties broken by kernel index for determinism.
    std::vector<std::uint32_t> order;
    order.reserve(kernels.size());
    for (std::uint32_t i = 0; i < kernels.size(); ++i)
        if (alive[i])
            order.push_back(i);
    std::sort(order.begin(), order.end(), [&](std::uint32_t lhs, std::uint32_t rhs) {
        if (splats[lhs].z != splats[rhs].z)
            return splats[lhs].z < splats[rhs].z;
        return lhs < rhs;
    });

    // Bin splats into tiles, preserving the global sort order per tile.
    const int tiles_x = (w + kTileSize - 1) / kTileSize;
    const int tiles_y = (h + kTileSize - 1) / kTileSize;
    std::vector<std::vector<std::uint32_t>> tile_bins(
        static_cast<std::size_t>(tiles_x) * tiles_y);
    for (const std::uint32_t idx : order) {
        const Splat& s = splats[idx];
        const int tx0 = s.x0 / kTileSize;
        const int tx1 = (s.x1 - 1) / kTileSize;
        const int ty0 = s.y0 / kTileSize;
        const int ty1 = (s.y1 - 1) / kTileSize;
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx)
                tile_bins[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(idx);
    }

    parallel_for(tile_bins.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t tile = begin; tile < end; ++tile) {
            const int tx = static_cast<int>(tile % tiles_x);
            const int ty = static_cast<int>(tile / tiles_x);
            const int px0 = tx * kTileSize;
            const int px1 = std::min(w, px0 + kTileSize);
            const int py0 = ty * kTileSize;
            const int py1 = std::min(h, py0 + kTileSize);
            const auto& bin = tile_bins[tile];

            for (int py = py0; py < py1; ++py) {
                for (int px = px0; px < px1; ++px) {
                    double cr = 0.0, cg = 0.0, cb = 0.0, cd = 0.0;
                    double transmittance = 1.0;
                    for (const std::uint32_t idx : bin) {
                        const Splat& s = splats[idx];
                        if (px < s.x0 || px >= s.x1 || py < s.y0 || py >= s.y1)
                            continue;
                        const double dx = px - s.u;
                        const double dy = py - s.v;
                        const double q = s.ia * dx * dx + 2.0 * s.ib * dx * dy + s.ic * dy * dy;
                        double alpha = s.opacity * std::exp(-0.5 * q);
                        if (alpha > kAlphaClip)
                            alpha = kAlphaClip;
                        if (alpha < kAlphaFloor)
                            continue;
                        const double weight = alpha * transmittance;
                        cr += weight * s.color.x;
                        cg += weight * s.color.y;
                        cb += weight * s.color.z;
                        cd += weight * s.z;
                        transmittance *= 1.0 - alpha;
                        if (transmittance < kTransmittanceStop)
                            break;
                    }
                    const double alpha_px = 1.0 - transmittance;
                    out.rgb.at(px, py, 0) = cr + transmittance * request.background.x;
                    out.rgb.at(px, py, 1) = cg + transmittance * request.background.y;
                    out.rgb.at(px, py, 2) = cb + transmittance * request.background.z;
                    out.alpha.at(px, py) = alpha_px;
                    out.depth.at(px, py) = cd / std::max(alpha_px, 1e-8);
                }
            }
        }
    });

    return out;
}

RenderOutput render(const gauss::Scene4D& scene, const RenderRequest& request, int threads) {
    return rasterize(select_and_advance(scene, request.t), request, threads);
}

} // namespace splat4d::render
