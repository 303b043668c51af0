// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#include "splat4d/render.hpp"

#include "splat4d/fuse.hpp"

#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <limits>
#include <random>

using namespace splat4d;
using namespace splat4d::render;

namespace {

RenderRequest axis_request(int w, int h, double f = 60.0) {
    RenderRequest req;
    // integer principal point so the axis kernel peaks on a pixel center
    req.intrinsics = {f, f, w / 2.0, h / 2.0, w, h};
    req.cam_to_ego = geom::SE3::identity();
    req.ego_to_world = geom::SE3::identity();
    req.background = {0.1, 0.2, 0.3};
    return req;
}

TimedKernel iso_kernel(const Vec3& center, double scale, double opacity, double gray = 0.5) {
    TimedKernel k;
    k.center = center;
    k.scale = {scale, scale, scale};
    k.opacity = opacity;
    k.sh.assign(3, gauss::sh_dc_from_value(gray));
    return k;
}

gauss::Gaussian4D seg_kernel(const Vec3& center, double t0, double t1) {
    gauss::Gaussian4D g;
    g.center = center;
    g.scale = {0.1, 0.1, 0.1};
    g.opacity = 0.9;
    g.sh.assign(3, 0.0);
    g.t_start = t0;
    g.t_end = t1;
    return g;
}

gauss::Scene4D two_segment_scene() {
    gauss::Scene4D scene;
    scene.rig.cameras.push_back(
        {"cam", {60.0, 60.0, 15.5, 11.5, 32, 24}, geom::SE3::identity()});
    gauss::SceneSegment a;
    a.t_start = 0.0;
    a.t_end = 0.5;
    a.anchor_pose = {0.0, geom::SE3::identity()};
    a.gaussians.push_back(seg_kernel({0.0, 0.0, 5.0}, 0.0, 0.5));
    gauss::SceneSegment b;
    b.t_start = 0.5;
    b.t_end = 1.0;
    b.anchor_pose = {0.5, geom::SE3::identity()};
    b.gaussians.push_back(seg_kernel({1.0, 0.0, 5.0}, 0.5, 1.0));
    scene.segments = {a, b};
    scene.ego_poses = {{0.0, geom::SE3::identity()}, {1.0, geom::SE3::identity()}};
    return scene;
}

} // namespace

TEST_CASE("empty kernel list renders the background with zero alpha") {
    const RenderRequest req = axis_request(16, 12);
    const RenderOutput out = rasterize({}, req);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 16; ++x) {
            CHECK(out.rgb.at(x, y, 0) == req.background.x);
            CHECK(out.rgb.at(x, y, 1) == req.background.y);
            CHECK(out.rgb.at(x, y, 2) == req.background.z);
            CHECK(out.alpha.at(x, y) == 0.0);
        }
}

TEST_CASE("single kernel footprint matches the analytic projected Gaussian") {
    const int w = 64, h = 48;
    const double f = 60.0;
    const RenderRequest req = axis_request(w, h, f);
    const double z0 = 10.0, s = 0.4;
    const TimedKernel kernel = iso_kernel({0.0, 0.0, z0}, s, 1.0);
    const RenderOutput out = rasterize({kernel}, req);

    // Independent per-pixel law: an isotropic kernel on the optical axis
    // projects to variance (f s / z)^2 + dilation in both directions.
    const double sigma2 = (f * s / z0) * (f * s / z0) + 0.3;
    const double cx = req.intrinsics.cx, cy = req.intrinsics.cy;
    double max_err = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double q = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / sigma2;
            double alpha = std::exp(-0.5 * q);
            if (alpha > 0.999)
                alpha = 0.999;
            if (alpha < 1.0 / 255.0)
                alpha = 0.0;
            max_err = std::max(max_err, std::abs(out.alpha.at(x, y) - alpha));
        }
    CHECK(max_err < 1e-4);

    // response at the principal point is the clipped alpha
    CHECK(out.alpha.at(32, 24) == doctest::Approx(0.999).epsilon(1e-12));
}

TEST_CASE("two-kernel compositing matches the closed form") {
    const int w = 32, h = 24;
    const RenderRequest req = axis_request(w, h);
    const double c_front = 0.9, c_back = 0.3;
    TimedKernel front = iso_kernel({0.0, 0.0, 5.0}, 0.5, 0.8, c_front);
    TimedKernel back = iso_kernel({0.0, 0.0, 10.0}, 1.0, 0.6, c_back);
    const RenderOutput out = rasterize({back, front}, req); // input order must not matter

    const int cx = 15, cy = 11;
    // not the principal point; evaluate both alphas analytically
    const double sig_front = (60.0 * 0.5 / 5.0) * (60.0 * 0.5 / 5.0) + 0.3;
    const double sig_back = (60.0 * 1.0 / 10.0) * (60.0 * 1.0 / 10.0) + 0.3;
    const double du = cx - req.intrinsics.cx, dv = cy - req.intrinsics.cy;
    const double q = du * du + dv * dv;
    const double a1 = std::min(0.8 * std::exp(-0.5 * q / sig_front), 0.999);
    const double a2 = std::min(0.6 * std::exp(-0.5 * q / sig_back), 0.999);

    const double expect =
        c_front * a1 + c_back * a2 * (1.0 - a1) + req.background.x * (1.0 - a1) * (1.0 - a2);
    CHECK(std::abs(out.rgb.at(cx, cy, 0) - expect) < 1e-9);
    CHECK(std::abs(out.alpha.at(cx, cy) - (1.0 - (1.0 - a1) * (1.0 - a2))) < 1e-9);
}

TEST_CASE("depth of a single opaque kernel equals its view z") {
    const RenderRequest req = axis_request(32, 24);
    const RenderOutput out = rasterize({iso_kernel({0.0, 0.0, 7.25}, 0.5, 1.0)}, req);
    CHECK(std::abs(out.depth.at(15, 11) - 7.25) < 1e-3);
}

TEST_CASE("alpha never increases when a kernel is removed") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> pos(-3.0, 3.0);
    std::uniform_real_distribution<double> depth(3.0, 20.0);
    std::uniform_real_distribution<double> opac(0.05, 0.5);
    std::uniform_real_distribution<double> sc(0.05, 0.3);

    const RenderRequest req = axis_request(48, 32);
    int trials = 0;
    while (trials < 200) {
        std::vector<TimedKernel> kernels;
        for (int i = 0; i < 30; ++i)
            kernels.push_back(iso_kernel({pos(rng), pos(rng) * 0.6, depth(rng)}, sc(rng), opac(rng)));
        const RenderOutput base = rasterize(kernels, req);

        // stay out of the early-termination regime so the product is complete
        double max_alpha = 0.0;
        for (const double a : base.alpha.raw())
            max_alpha = std::max(max_alpha, a);
        if (max_alpha > 1.0 - 2e-4)
            continue;

        std::uniform_int_distribution<std::size_t> pick(0, kernels.size() - 1);
        for (int d = 0; d < 10 && trials < 200; ++d, ++trials) {
            std::vector<TimedKernel> reduced = kernels;
            reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(pick(rng)));
            const RenderOutput less = rasterize(reduced, req);
            for (std::size_t i = 0; i < base.alpha.raw().size(); ++i)
                CHECK(less.alpha.raw()[i] <= base.alpha.raw()[i] + 1e-12);
        }
    }
}

TEST_CASE("renders are bit-identical across thread counts") {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> pos(-4.0, 4.0);
    std::uniform_real_distribution<double> depth(2.0, 30.0);
    std::uniform_real_distribution<double> opac(0.1, 1.0);
    std::vector<TimedKernel> kernels;
    for (int i = 0; i < 500; ++i)
        kernels.push_back(iso_kernel({pos(rng), pos(rng), depth(rng)}, 0.2, opac(rng)));

    const RenderRequest req = axis_request(96, 64);
    const RenderOutput t1 = rasterize(kernels, req, 1);
    const RenderOutput t2 = rasterize(kernels, req, 2);
    const RenderOutput t8 = rasterize(kernels, req, 8);
    CHECK(t1.rgb == t2.rgb);
    CHECK(t1.rgb == t8.rgb);
    CHECK(t1.alpha == t2.alpha);
    CHECK(t1.alpha == t8.alpha);
    CHECK(t1.depth == t8.depth);
}

TEST_CASE("diagnostics count skipped kernels") {
    const RenderRequest req = axis_request(16, 12);
    TimedKernel behind = iso_kernel({0.0, 0.0, -5.0}, 0.5, 1.0);
    TimedKernel nan = iso_kernel({std::numeric_limits<double>::quiet_NaN(), 0.0, 5.0}, 0.5, 1.0);
    const RenderOutput out = rasterize({behind, nan}, req);
    CHECK(out.diagnostics.behind_camera == 1);
    CHECK(out.diagnostics.nonfinite_skipped == 1);
}

TEST_CASE("select_and_advance picks the owning segment") {
    const gauss::Scene4D scene = two_segment_scene();

    SUBCASE("segment start keeps initial positions") {
        const auto kernels = select_and_advance(scene, 0.0);
        REQUIRE(kernels.size() == 1);
        CHECK(kernels[0].center == Vec3{0.0, 0.0, 5.0});
    }
    SUBCASE("half-open boundary belongs to the later segment") {
        const auto kernels = select_and_advance(scene, 0.5);
        CHECK(kernels[0].center == Vec3{1.0, 0.0, 5.0});
    }
    SUBCASE("closed global end selects the final segment") {
        CHECK_NOTHROW(select_and_advance(scene, 1.0));
    }
    SUBCASE("outside the timeline") {
        CHECK_THROWS_AS(select_and_advance(scene, 1.5), std::out_of_range);
        CHECK_THROWS_AS(select_and_advance(scene, -0.1), std::out_of_range);
    }
}

TEST_CASE("select_and_advance advances dynamic kernels linearly") {
    gauss::Scene4D scene = two_segment_scene();
    scene.segments[0].gaussians[0].dynamic = true;
    scene.segments[0].gaussians[0].velocity = {4.0, 0.0, 0.0};

    const auto kernels = select_and_advance(scene, 0.25);
    const Vec3 oracle = gauss::center_at(scene.segments[0].gaussians[0], 0.25);
    CHECK((kernels[0].center - oracle).norm() == 0.0);
    CHECK(kernels[0].center.x == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("select_and_advance moves kernels into the world frame") {
    gauss::Scene4D scene = two_segment_scene();
    scene.segments[0].anchor_pose.pose = {rot_z(3.14159265358979323846 / 2), {10.0, 0.0, 0.0}};
    const auto kernels = select_and_advance(scene, 0.0);
    // (0,0,5) rotated by +90 deg about z then shifted: (10, 0, 5)
    CHECK(kernels[0].center.x == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(kernels[0].center.y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(kernels[0].center.z == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("fused earlier frame renders bit-exactly as the raw frame") {
    std::vector<gauss::Gaussian4D> g0, g1;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> pos(-2.0, 2.0);
    for (int i = 0; i < 20; ++i) {
        gauss::Gaussian4D g = seg_kernel({pos(rng), pos(rng), 5.0 + i * 0.3}, 0.0, 0.5);
        g.opacity = 0.4 + 0.02 * i;
        g0.push_back(g);
        g1.push_back(seg_kernel({pos(rng), pos(rng), 8.0}, 0.5, 1.0));
    }
    geom::EgoPose ego0{0.0, geom::SE3::identity()};
    geom::EgoPose ego1{0.5, {Mat3::identity(), {1.0, 0.0, 0.0}}};

    gauss::Scene4D scene;
    scene.rig.cameras.push_back({"cam", {60.0, 60.0, 15.5, 11.5, 32, 24}, geom::SE3::identity()});
    scene.segments.push_back(fuse::align_and_fuse(g0, g1, ego0, ego1, {}, 0.0, 0.5));
    scene.ego_poses = {ego0, ego1};

    // keep only the kernels that came from the earlier frame
    scene.segments[0].gaussians.resize(g0.size());

    RenderRequest req = axis_request(32, 24);
    req.t = 0.0;
    const RenderOutput fused_render = render::render(scene, req);

    std::vector<TimedKernel> raw;
    for (const auto& g : g0) {
        TimedKernel k;
        k.center = g.center;
        k.rotation = g.rotation;
        k.scale = g.scale;
        k.opacity = g.opacity;
        k.sh = g.sh;
        raw.push_back(k);
    }
    const RenderOutput direct = rasterize(raw, req);
    CHECK(fused_render.rgb == direct.rgb);
    CHECK(fused_render.alpha == direct.alpha);
    CHECK(fused_render.depth == direct.depth);
}

TEST_CASE("camera facing away sees only background") {
    gauss::Scene4D scene = two_segment_scene();
    RenderRequest req = axis_request(16, 12);
    req.t = 0.0;
    req.ego_to_world = {rot_y(3.14159265358979323846), {}}; // turn around
    const RenderOutput out = render::render(scene, req);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 16; ++x)
            CHECK(out.rgb.at(x, y, 0) == req.background.x);
    CHECK(out.diagnostics.behind_camera == 1);
}
