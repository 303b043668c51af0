// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splat4d/build.hpp"
#include "splat4d/gauss.hpp"
#include "splat4d/plane.hpp"

#include <functional>

namespace splat4d::photo {

constexpr double kMaskEpsilon = 1e-8;

/// Warp of a source image into a target view.
/// mask[p] = 1 exactly when grid[p] is finite and inside [-1,1]^2.
struct WarpResult {
    Image warped;              // 3 channels; zero where invalid
    Plane<std::uint8_t> mask;  // {0,1}
    Plane<double> grid;        // 2 channels, normalized sample coords
};

/// Per-pixel geometric chain: backproject through the target depth, move by
/// the target-to-source transform, project into the source view, normalize,
/// and bilinearly sample the source (pixel-center convention). Pixels that
/// land outside the source or behind its camera are masked out. An exactly
/// identity transform short-circuits to the identity warp, which is the
/// exact value of the chain.
WarpResult warp(const Image& source, const build::DepthMap& target_depth,
                const geom::Intrinsics& k, const geom::SE3& target_to_source);

/// Bilinear sample with clamp-to-edge, integer coordinates at pixel centers.
Vec3 bilinear_sample(const Image& image, double x, double y);

struct LossWeights {
    double l1 = 0.85;
    double ssim = 0.15;
    double l2 = 1.0;
    double percep = 0.05;
    double scale = 0.01;
    double opacity = 0.01;
};

/// Masked L1 plus masked SSIM complement. The L1 term averages channel-mean
/// absolute differences over valid pixels with the 1e-8 guard; the SSIM term
/// averages (1 - SSIM) under the mask eroded by the 11x11 window support so
/// no invalid pixel leaks into any window.
double masked_photometric_loss(const Image& warped, const Image& target,
                               const Plane<std::uint8_t>& mask, const LossWeights& weights);

/// SSIM with an 11x11 Gaussian window (sigma 1.5), C1 = 0.01^2, C2 = 0.03^2,
/// reflected borders; channel maps averaged. Symmetric in (a, b).
/// Throws std::invalid_argument if the image is smaller than the window.
Plane<double> ssim_map(const Image& a, const Image& b);

/// Global mean of the SSIM map.
double ssim(const Image& a, const Image& b);

/// 10 log10(1 / MSE) for images in [0,1], capped at 99 dB.
double psnr(const Image& a, const Image& b);

/// lambda_scale * mean ||scale||_2 + lambda_opacity * mean |opacity|.
/// Throws std::invalid_argument on an empty list.
double norm_loss(const std::vector<gauss::Gaussian4D>& gaussians, const LossWeights& weights);

/// Mean squared error over all pixels and channels.
double l2_render_loss(const Image& rendered, const Image& target);

using PerceptualLoss = std::function<double(const Image&, const Image&)>;

/// render + project + norm total. A nonzero perceptual weight requires a
/// plugin; none ships here.
double total_loss(const Image& rendered, const Image& target, const Image& warped,
                  const Image& warp_target, const Plane<std::uint8_t>& warp_mask,
                  const std::vector<gauss::Gaussian4D>& gaussians, const LossWeights& weights,
                  const PerceptualLoss& perceptual = nullptr);

} // namespace splat4d::photo
