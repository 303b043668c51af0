// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#include "splat4d/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace splat4d::gauss {

namespace {

constexpr double kShC0 = 0.28209479177387814;
constexpr double kShC1 = 0.4886025119029199;
constexpr double kShC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                             -1.0925484305920792, 0.5462742152960396};
constexpr double kShC3[7] = {-0.5900435899266435, 2.890611442640554,  -0.4570457994644658,
                             0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                             -0.5900435899266435};

int degree_from_size(std::size_t sh_size) {
    if (sh_size % 3 != 0)
        throw std::invalid_argument("sh: coefficient count must be a multiple of 3");
    const std::size_t n = sh_size / 3;
    for (int deg = 0; deg <= kMaxShDegree; ++deg)
        if (n == static_cast<std::size_t>(sh_coeff_count(deg)))
            return deg;
    throw std::invalid_argument("sh: unsupported degree (coefficient count " +
                                std::to_string(n) + ")");
}

} // namespace

int Gaussian4D::sh_degree() const { return degree_from_size(sh.size()); }

void validate(const Gaussian4D& g) {
    if (!(g.opacity >= 0.0 && g.opacity <= 1.0))
        throw std::invalid_argument("Gaussian4D: opacity outside [0,1]");
    if (!(g.scale.x > 0.0 && g.scale.y > 0.0 && g.scale.z > 0.0))
        throw std::invalid_argument("Gaussian4D: scale components must be positive");
    if (std::abs(g.rotation.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("Gaussian4D: rotation quaternion not unit");
    if (!g.dynamic && (g.velocity.x != 0.0 || g.velocity.y != 0.0 || g.velocity.z != 0.0))
        throw std::invalid_argument("Gaussian4D: static kernel with nonzero velocity");
    if (!(g.t_start < g.t_end))
        throw std::invalid_argument("Gaussian4D: t_start must precede t_end");
    degree_from_size(g.sh.size());
}

Vec3 center_at(const Gaussian4D& g, double t) {
    if (t < g.t_start || t > g.t_end)
        throw std::out_of_range("center_at: time outside the kernel's segment");
    return g.center + g.velocity * (t - g.t_start);
}

void validate(const SceneSegment& seg) {
    if (!(seg.t_start < seg.t_end))
        throw std::invalid_argument("SceneSegment: t_start must precede t_end");
    for (const auto& g : seg.gaussians) {
        validate(g);
        if (g.t_start != seg.t_start || g.t_end != seg.t_end)
            throw std::invalid_argument("SceneSegment: member kernel time span mismatch");
    }
}

void validate(const Scene4D& scene) {
    if (scene.segments.empty())
        throw std::invalid_argument("Scene4D: no segments");
    geom::validate(scene.rig);
    for (std::size_t i = 0; i < scene.segments.size(); ++i) {
        validate(scene.segments[i]);
        if (i + 1 < scene.segments.size() &&
            scene.segments[i].t_end != scene.segments[i + 1].t_start)
            throw std::invalid_argument("Scene4D: segments not contiguous");
    }
}

Vec3 sh_to_rgb(const std::vector<double>& sh, const Vec3& view_dir) {
    const int deg = degree_from_size(sh.size());
    if (std::abs(view_dir.norm() - 1.0) > 1e-6)
        throw std::invalid_argument("sh_to_rgb: view direction must be unit length");

    const double x = view_dir.x, y = view_dir.y, z = view_dir.z;
    double rgb[3];
    for (int c = 0; c < 3; ++c)
        rgb[c] = kShC0 * sh[static_cast<std::size_t>(c)];

    if (deg >= 1) {
        for (int c = 0; c < 3; ++c) {
            rgb[c] += -kShC1 * y * sh[static_cast<std::size_t>(1 * 3 + c)] +
                      kShC1 * z * sh[static_cast<std::size_t>(2 * 3 + c)] -
                      kShC1 * x * sh[static_cast<std::size_t>(3 * 3 + c)];
        }
    }
    if (deg >= 2) {
        const double xx = x * x, yy = y * y, zz = z * z;
        const double xy = x * y, yz = y * z, xz = x * z;
        const double basis[5] = {xy, yz, 2.0 * zz - xx - yy, xz, xx - yy};
        for (int k = 0; k < 5; ++k)
            for (int c = 0; c < 3; ++c)
                rgb[c] += kShC2[k] * basis[k] * sh[static_cast<std::size_t>((4 + k) * 3 + c)];
    }
    if (deg >= 3) {
        const double xx = x * x, yy = y * y, zz = z * z;
        const double basis[7] = {y * (3.0 * xx - yy),
                                 x * y * z,
                                 y * (4.0 * zz - xx - yy),
                                 z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
                                 x * (4.0 * zz - xx - yy),
                                 z * (xx - yy),
                                 x * (xx - 3.0 * yy)};
        for (int k = 0; k < 7; ++k)
            for (int c = 0; c < 3; ++c)
                rgb[c] += kShC3[k] * basis[k] * sh[static_cast<std::size_t>((9 + k) * 3 + c)];
    }

    Vec3 out{rgb[0] + 0.5, rgb[1] + 0.5, rgb[2] + 0.5};
    out.x = std::clamp(out.x, 0.0, 1.0);
    out.y = std::clamp(out.y, 0.0, 1.0);
    out.z = std::clamp(out.z, 0.0, 1.0);
    return out;
}

std::vector<double> rotate_sh(const std::vector<double>& sh, const Mat3& r) {
    const int deg = degree_from_size(sh.size());
    if (deg >= 2)
        throw std::invalid_argument("rotate_sh: degrees >= 2 are not supported");
    if (deg == 0)
        return sh;

    // The degree-1 band evaluates to a linear form a . d; rotating the
    // coefficients is rotating that vector, up to the basis permutation.
    std::vector<double> out = sh;
    for (int c = 0; c < 3; ++c) {
        const double c1 = sh[static_cast<std::size_t>(1 * 3 + c)];
        const double c2 = sh[static_cast<std::size_t>(2 * 3 + c)];
        const double c3 = sh[static_cast<std::size_t>(3 * 3 + c)];
        const Vec3 a{-c3, -c1, c2};
        const Vec3 ar = r * a;
        out[static_cast<std::size_t>(1 * 3 + c)] = -ar.y;
        out[static_cast<std::size_t>(2 * 3 + c)] = ar.z;
        out[static_cast<std::size_t>(3 * 3 + c)] = -ar.x;
    }
    return out;
}

double sh_dc_from_value(double value) { return (value - 0.5) / kShC0; }

} // namespace splat4d::gauss
