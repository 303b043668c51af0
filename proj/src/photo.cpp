// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#include "splat4d/photo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace splat4d::photo {

namespace {

constexpr int kWindowRadius = 5; // 11x11 window
constexpr double kWindowSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

// Reflected (border-101) index: ...cba|abc|cba...
int reflect(int i, int n) {
    if (i < 0)
        return -i;
    if (i >= n)
        return 2 * n - 2 - i;
    return i;
}

std::array<double, 2 * kWindowRadius + 1> gaussian_window() {
    std::array<double, 2 * kWindowRadius + 1> w{};
    double sum = 0.0;
    for (int i = -kWindowRadius; i <= kWindowRadius; ++i) {
        w[static_cast<std::size_t>(i + kWindowRadius)] =
            std::exp(-(i * i) / (2.0 * kWindowSigma * kWindowSigma));
        sum += w[static_cast<std::size_t>(i + kWindowRadius)];
    }
    for (auto& v : w)
        v /= sum;
    return w;
}

// Separable Gaussian blur of one channel with reflected borders.
Plane<double> blur(const Plane<double>& in) {
    const auto w = gaussian_window();
    const int width = in.width(), height = in.height();
    Plane<double> tmp(width, height, 1, 0.0);
    Plane<double> out(width, height, 1, 0.0);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double acc = 0.0;
            for (int i = -kWindowRadius; i <= kWindowRadius; ++i)
                acc += w[static_cast<std::size_t>(i + kWindowRadius)] * in.at(reflect(x + i, width), y);
            tmp.at(x, y) = acc;
        }
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double acc = 0.0;
            for (int i = -kWindowRadius; i <= kWindowRadius; ++i)
                acc += w[static_cast<std::size_t>(i + kWindowRadius)] * tmp.at(x, reflect(y + i, height));
            out.at(x, y) = acc;
        }
    return out;
}

void check_images(const Image& a, const Image& b, const char* who) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(who) + ": image shapes differ");
    if (a.channels() != 3)
        throw std::invalid_argument(std::string(who) + ": expected 3-channel images");
}

} // namespace

Vec3 bilinear_sample(const Image& image, double x, double y) {
    const int w = image.width(), h = image.height();
    const double xc = std::clamp(x, 0.0, static_cast<double>(w - 1));
    const double yc = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int x0 = static_cast<int>(std::floor(xc));
    const int y0 = static_cast<int>(std::floor(yc));
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = xc - x0;
    const double fy = yc - y0;

    Vec3 out;
    for (int c = 0; c < 3; ++c) {
        const double top = image.at(x0, y0, c) * (1.0 - fx) + image.at(x1, y0, c) * fx;
        const double bot = image.at(x0, y1, c) * (1.0 - fx) + image.at(x1, y1, c) * fx;
        (c == 0 ? out.x : c == 1 ? out.y : out.z) = top * (1.0 - fy) + bot * fy;
    }
    return out;
}

WarpResult warp(const Image& source, const build::DepthMap& target_depth,
                const geom::Intrinsics& k, const geom::SE3& target_to_source) {
    const int w = target_depth.width(), h = target_depth.height();
    if (source.width() != w || source.height() != h || source.channels() != 3)
        throw std::invalid_argument("warp: source image and target depth shapes differ");
    if (k.width != w || k.height != h)
        throw std::invalid_argument("warp: intrinsics raster size mismatch");

    WarpResult out;
    out.warped = Image(w, h, 3, 0.0);
    out.mask = Plane<std::uint8_t>(w, h, 1, 0);
    out.grid = Plane<double>(w, h, 2, 0.0);

    const bool identity = target_to_source == geom::SE3::identity();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (identity) {
                // Backprojection followed by projection is the identity map,
                // so the chain lands exactly on the pixel's own center.
                const Vec2 g = geom::normalize_to_grid(x, y, w, h);
                out.grid.at(x, y, 0) = g.x;
                out.grid.at(x, y, 1) = g.y;
                out.mask.at(x, y) = 1;
                for (int c = 0; c < 3; ++c)
                    out.warped.at(x, y, c) = source.at(x, y, c);
                continue;
            }

            const Vec3 p_target = geom::backproject(x, y, target_depth.at(x, y), k);
            const Vec3 p_source = target_to_source.apply(p_target);
            if (!(p_source.z > 1e-9)) {
                out.grid.at(x, y, 0) = nan;
                out.grid.at(x, y, 1) = nan;
                continue;
            }
            const double u = k.fx * p_source.x / p_source.z + k.cx;
            const double v = k.fy * p_source.y / p_source.z + k.cy;
            const Vec2 g = geom::normalize_to_grid(u, v, w, h);
            out.grid.at(x, y, 0) = g.x;
            out.grid.at(x, y, 1) = g.y;
            const bool valid = std::isfinite(g.x) && std::isfinite(g.y) && std::abs(g.x) <= 1.0 &&
                               std::abs(g.y) <= 1.0;
            if (!valid)
                continue;
            out.mask.at(x, y) = 1;
            const Vec3 rgb = bilinear_sample(source, u, v);
            out.warped.at(x, y, 0) = rgb.x;
            out.warped.at(x, y, 1) = rgb.y;
            out.warped.at(x, y, 2) = rgb.z;
        }
    }
    return out;
}

Plane<double> ssim_map(const Image& a, const Image& b) {
    check_images(a, b, "ssim_map");
    const int w = a.width(), h = a.height();
    if (w < 2 * kWindowRadius + 1 || h < 2 * kWindowRadius + 1)
        throw std::invalid_argument("ssim_map: image smaller than the 11x11 window");

    Plane<double> map(w, h, 1, 0.0);
    Plane<double> ca(w, h, 1), cb(w, h, 1), caa(w, h, 1), cbb(w, h, 1), cab(w, h, 1);
    for (int channel = 0; channel < 3; ++channel) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double va = a.at(x, y, channel);
                const double vb = b.at(x, y, channel);
                ca.at(x, y) = va;
                cb.at(x, y) = vb;
                caa.at(x, y) = va * va;
                cbb.at(x, y) = vb * vb;
                cab.at(x, y) = va * vb;
            }
        const Plane<double> mu_a = blur(ca);
        const Plane<double> mu_b = blur(cb);
        const Plane<double> m_aa = blur(caa);
        const Plane<double> m_bb = blur(cbb);
        const Plane<double> m_ab = blur(cab);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double ma = mu_a.at(x, y);
                const double mb = mu_b.at(x, y);
                const double var_a = m_aa.at(x, y) - ma * ma;
                const double var_b = m_bb.at(x, y) - mb * mb;
                const double cov = m_ab.at(x, y) - ma * mb;
                const double num = (2.0 * ma * mb + kC1) * (2.0 * cov + kC2);
                const double den = (ma * ma + mb * mb + kC1) * (var_a + var_b + kC2);
                map.at(x, y) += num / den;
            }
    }
    for (auto& v : map.raw())
        v /= 3.0;
    return map;
}

double ssim(const Image& a, const Image& b) {
    const Plane<double> map = ssim_map(a, b);
    double sum = 0.0;
    for (const double v : map.raw())
        sum += v;
    return sum / static_cast<double>(map.pixel_count());
}

double psnr(const Image& a, const Image& b) {
    check_images(a, b, "psnr");
    double se = 0.0;
    for (std::size_t i = 0; i < a.raw().size(); ++i) {
        const double d = a.raw()[i] - b.raw()[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.raw().size());
    if (mse == 0.0)
        return 99.0;
    return std::min(10.0 * std::log10(1.0 / mse), 99.0);
}

double masked_photometric_loss(const Image& warped, const Image& target,
                               const Plane<std::uint8_t>& mask, const LossWeights& weights) {
    check_images(warped, target, "masked_photometric_loss");
    if (mask.width() != warped.width() || mask.height() != warped.height())
        throw std::invalid_argument("masked_photometric_loss: mask shape mismatch");
    const int w = warped.width(), h = warped.height();

    double l1_sum = 0.0;
    double mask_sum = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y))
                continue;
            double diff = 0.0;
            for (int c = 0; c < 3; ++c)
                diff += std::abs(warped.at(x, y, c) - target.at(x, y, c));
            l1_sum += diff / 3.0;
            mask_sum += 1.0;
        }
    const double l1 = l1_sum / (mask_sum + kMaskEpsilon);

    double ssim_term = 0.0;
    if (weights.ssim != 0.0) {
        const Plane<double> map = ssim_map(warped, target);
        // Erode the mask by the window support so no invalid pixel reaches
        // any window that contributes to the term.
        double term_sum = 0.0;
        double eroded_sum = 0.0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                bool inside = true;
                for (int dy = -kWindowRadius; inside && dy <= kWindowRadius; ++dy)
                    for (int dx = -kWindowRadius; dx <= kWindowRadius; ++dx)
                        if (!mask.at(reflect(x + dx, w), reflect(y + dy, h))) {
                            inside = false;
                            break;
                        }
                if (!inside)
                    continue;
                term_sum += 1.0 - map.at(x, y);
                eroded_sum += 1.0;
            }
        ssim_term = term_sum / (eroded_sum + kMaskEpsilon);
    }

    return weights.l1 * l1 + weights.ssim * ssim_term;
}

double norm_loss(const std::vector<gauss::Gaussian4D>& gaussians, const LossWeights& weights) {
    if (gaussians.empty())
        throw std::invalid_argument("norm_loss: empty kernel list");
    double scale_sum = 0.0;
    double opacity_sum = 0.0;
    for (const auto& g : gaussians) {
        scale_sum += g.scale.norm();
        opacity_sum += std::abs(g.opacity);
    }
    const double n = static_cast<double>(gaussians.size());
    return weights.scale * (scale_sum / n) + weights.opacity * (opacity_sum / n);
}

double l2_render_loss(const Image& rendered, const Image& target) {
    check_images(rendered, target, "l2_render_loss");
    double se = 0.0;
    for (std::size_t i = 0; i < rendered.raw().size(); ++i) {
        const double d = rendered.raw()[i] - target.raw()[i];
        se += d * d;
    }
    return se / static_cast<double>(rendered.raw().size());
}

double total_loss(const Image& rendered, const Image& target, const Image& warped,
                  const Image& warp_target, const Plane<std::uint8_t>& warp_mask,
                  const std::vector<gauss::Gaussian4D>& gaussians, const LossWeights& weights,
                  const PerceptualLoss& perceptual) {
    if (weights.percep != 0.0 && !perceptual)
        throw std::invalid_argument("total_loss: nonzero perceptual weight without a plugin");
    double render_term = weights.l2 * l2_render_loss(rendered, target);
    if (perceptual && weights.percep != 0.0)
        render_term += weights.percep * perceptual(rendered, target);
    const double project_term = masked_photometric_loss(warped, warp_target, warp_mask, weights);
    return render_term + project_term + norm_loss(gaussians, weights);
}

} // namespace splat4d::photo
