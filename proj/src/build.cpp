// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#include "splat4d/build.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace splat4d::build {

void validate(const AttributeMaps& attrs) {
    const int w = attrs.raw_rotation.width();
    const int h = attrs.raw_rotation.height();
    if (attrs.raw_rotation.channels() != 4)
        throw std::invalid_argument("AttributeMaps: raw_rotation must have 4 channels");
    if (attrs.raw_scale.width() != w || attrs.raw_scale.height() != h ||
        attrs.raw_scale.channels() != 3)
        throw std::invalid_argument("AttributeMaps: raw_scale shape mismatch");
    if (attrs.raw_opacity.width() != w || attrs.raw_opacity.height() != h ||
        attrs.raw_opacity.channels() != 1)
        throw std::invalid_argument("AttributeMaps: raw_opacity shape mismatch");
    const int sh_channels = 3 * gauss::sh_coeff_count(attrs.sh_degree);
    if (attrs.raw_sh.width() != w || attrs.raw_sh.height() != h ||
        attrs.raw_sh.channels() != sh_channels)
        throw std::invalid_argument("AttributeMaps: raw_sh shape mismatch");
}

DepthMap clamp_depth(const DepthMap& depth) {
    DepthMap out = depth;
    for (int y = 0; y < depth.height(); ++y) {
        for (int x = 0; x < depth.width(); ++x) {
            const double v = depth.at(x, y);
            if (!std::isfinite(v))
                throw std::domain_error("clamp_depth: non-finite depth at pixel (" +
                                        std::to_string(x) + ", " + std::to_string(y) + ")");
            out.at(x, y) = std::min(std::max(v, kDepthMin), kDepthMax);
        }
    }
    return out;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

ActivatedAttributes activate_attributes(const AttributeMaps& attrs, int x, int y) {
    ActivatedAttributes out;
    out.opacity = sigmoid(attrs.raw_opacity.at(x, y));

    for (int c = 0; c < 3; ++c) {
        double s = std::exp(attrs.raw_scale.at(x, y, c));
        s = std::min(std::max(s, kScaleMin), kScaleMax);
        (c == 0 ? out.scale.x : c == 1 ? out.scale.y : out.scale.z) = s;
    }

    Quat q{attrs.raw_rotation.at(x, y, 0), attrs.raw_rotation.at(x, y, 1),
           attrs.raw_rotation.at(x, y, 2), attrs.raw_rotation.at(x, y, 3)};
    const double n = q.norm();
    out.rotation = (n > 0.0 && std::isfinite(n)) ? q.normalized() : Quat{};

    const int sh_channels = attrs.raw_sh.channels();
    out.sh.resize(static_cast<std::size_t>(sh_channels));
    for (int c = 0; c < sh_channels; ++c)
        out.sh[static_cast<std::size_t>(c)] = attrs.raw_sh.at(x, y, c);
    return out;
}

std::vector<gauss::Gaussian4D> build_frame_gaussians(const Image& image,
                                                     const DepthMap& depth,
                                                     const AttributeMaps& attrs,
                                                     const geom::CameraEntry& cam,
                                                     double t_start, double t_end) {
    validate(attrs);
    const int w = depth.width();
    const int h = depth.height();
    if (image.width() != w || image.height() != h || image.channels() != 3)
        throw std::invalid_argument("build_frame_gaussians: image shape mismatch");
    if (attrs.raw_opacity.width() != w || attrs.raw_opacity.height() != h)
        throw std::invalid_argument("build_frame_gaussians: attribute shape mismatch");
    if (cam.intrinsics.width != w || cam.intrinsics.height != h)
        throw std::invalid_argument("build_frame_gaussians: intrinsics raster size mismatch");

    std::vector<gauss::Gaussian4D> out(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            gauss::Gaussian4D& g = out[static_cast<std::size_t>(y) * w + x];
            ActivatedAttributes a = activate_attributes(attrs, x, y);
            g.rotation = a.rotation;
            g.scale = a.scale;
            g.opacity = a.opacity;
            g.sh = std::move(a.sh);
            for (int c = 0; c < 3; ++c)
                g.sh[static_cast<std::size_t>(c)] = gauss::sh_dc_from_value(image.at(x, y, c));

            const Vec3 p_cam = geom::backproject(x, y, depth.at(x, y), cam.intrinsics);
            g.center = cam.extrinsic.apply(p_cam);
            g.velocity = {};
            g.dynamic = false;
            g.t_start = t_start;
            g.t_end = t_end;
        }
    }
    return out;
}

} // namespace splat4d::build
