// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#include "splat4d/photo.hpp"

#include "splat4d/synth.hpp"

#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

using namespace splat4d;
using namespace splat4d::photo;

namespace {

Image constant_image(int w, int h, double v) { return Image(w, h, 3, v); }

Plane<std::uint8_t> full_mask(int w, int h) { return Plane<std::uint8_t>(w, h, 1, 1); }

geom::Intrinsics small_k(int w, int h) { return {80.0, 80.0, (w - 1) / 2.0, (h - 1) / 2.0, w, h}; }

synth::SynthSpec static_scene(int w, int h) {
    synth::SynthSpec spec;
    geom::CameraEntry cam;
    cam.id = "front";
    cam.intrinsics = {120.0, 120.0, (w - 1) / 2.0, (h - 1) / 2.0, w, h};
    cam.extrinsic.rotation.m = {0, 0, 1, -1, 0, 0, 0, -1, 0};
    cam.extrinsic.translation = {1.2, 0.0, 1.6};
    spec.rig.cameras.push_back(cam);
    spec.trajectory.push_back({0.0, geom::SE3::identity()});
    spec.trajectory.push_back({0.5, {Mat3::identity(), {1.0, 0.0, 0.0}}});
    spec.static_boxes.push_back({{14.0, -3.0, 1.0}, {3.0, 2.0, 2.0}, {0.62, 0.40, 0.34}});
    spec.static_boxes.push_back({{20.0, 4.0, 1.25}, {4.0, 3.0, 2.5}, {0.34, 0.44, 0.58}});
    return spec;
}

} // namespace

TEST_CASE("identity warp reproduces the source bit-exactly with a full mask") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> v(0.0, 1.0);
    const int w = 23, h = 17;
    Image source(w, h, 3);
    for (auto& p : source.raw())
        p = v(rng);
    build::DepthMap depth(w, h, 1, 7.5);

    const WarpResult result = warp(source, depth, small_k(w, h), geom::SE3::identity());
    CHECK(result.warped == source);
    for (const auto m : result.mask.raw())
        CHECK(m == 1);
    // grid invariant: every masked pixel has finite in-range coordinates
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            CHECK(std::abs(result.grid.at(x, y, 0)) <= 1.0);
            CHECK(std::abs(result.grid.at(x, y, 1)) <= 1.0);
        }
}

TEST_CASE("general path agrees with the identity short-circuit to float precision") {
    const int w = 23, h = 17;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> v(0.0, 1.0);
    Image source(w, h, 3);
    for (auto& p : source.raw())
        p = v(rng);
    build::DepthMap depth(w, h, 1, 7.5);

    // A transform that is numerically the identity but not bitwise equal:
    // rotate by an angle whose matrix is not exactly I.
    geom::SE3 nearly;
    nearly.rotation = rot_z(1e-300);
    const WarpResult result = warp(source, depth, small_k(w, h), nearly);
    for (std::size_t i = 0; i < source.raw().size(); ++i)
        CHECK(result.warped.raw()[i] == doctest::Approx(source.raw()[i]).epsilon(1e-9));
}

TEST_CASE("pixels projecting outside the source are masked out") {
    const int w = 16, h = 12;
    Image source = constant_image(w, h, 0.5);
    build::DepthMap depth(w, h, 1, 5.0);
    // a large lateral shift pushes most pixels out of bounds
    geom::SE3 shift{Mat3::identity(), {1000.0, 0.0, 0.0}};
    const WarpResult result = warp(source, depth, small_k(w, h), shift);
    for (const auto m : result.mask.raw())
        CHECK(m == 0);
    // mask invariant: grid is out of range wherever the mask is zero
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double gx = result.grid.at(x, y, 0);
            const double gy = result.grid.at(x, y, 1);
            CHECK((!std::isfinite(gx) || std::abs(gx) > 1.0 || std::abs(gy) > 1.0));
        }
}

TEST_CASE("points landing behind the source camera are masked out") {
    const int w = 16, h = 12;
    Image source = constant_image(w, h, 0.5);
    build::DepthMap depth(w, h, 1, 5.0);
    geom::SE3 back{Mat3::identity(), {0.0, 0.0, -100.0}};
    const WarpResult result = warp(source, depth, small_k(w, h), back);
    for (const auto m : result.mask.raw())
        CHECK(m == 0);
}

TEST_CASE("warp against the synthetic oracle at a known ego translation") {
    const int w = 160, h = 96;
    const synth::SynthSpec spec = static_scene(w, h);
    const synth::FrameTruth target = synth::generate_frame(spec, 0.0, "front");
    const synth::FrameTruth source = synth::generate_frame(spec, 0.5, "front");
    const geom::CameraEntry& cam = spec.rig.cameras.front();

    const geom::SE3 cam_to_world_t = geom::compose(synth::ego_at(spec, 0.0).pose, cam.extrinsic);
    const geom::SE3 cam_to_world_s = geom::compose(synth::ego_at(spec, 0.5).pose, cam.extrinsic);
    const geom::SE3 t_to_s = geom::compose(geom::inverse(cam_to_world_s), cam_to_world_t);

    const WarpResult result = warp(source.image, target.depth, cam.intrinsics, t_to_s);

    std::size_t masked = 0, close = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!result.mask.at(x, y))
                continue;
            ++masked;
            double err = 0.0;
            for (int c = 0; c < 3; ++c)
                err = std::max(err, std::abs(result.warped.at(x, y, c) - target.image.at(x, y, c)));
            if (err < 2.0 / 255.0)
                ++close;
        }
    REQUIRE(masked > 0);
    CHECK(static_cast<double>(close) / static_cast<double>(masked) >= 0.95);
}

TEST_CASE("masked loss basics") {
    const int w = 32, h = 24;
    LossWeights weights;
    weights.l1 = 0.85;
    weights.ssim = 0.15;

    SUBCASE("identical images, full mask") {
        const Image a = constant_image(w, h, 0.3);
        CHECK(masked_photometric_loss(a, a, full_mask(w, h), weights) == 0.0);
    }
    SUBCASE("all-zero mask hits the epsilon guard") {
        const Image a = constant_image(w, h, 0.3);
        const Image b = constant_image(w, h, 0.9);
        Plane<std::uint8_t> none(w, h, 1, 0);
        CHECK(masked_photometric_loss(a, b, none, weights) == 0.0);
    }
    SUBCASE("constant offset closed form") {
        const Image a = constant_image(w, h, 0.4);
        const Image b = constant_image(w, h, 0.5);
        LossWeights l1_only;
        l1_only.l1 = 0.85;
        l1_only.ssim = 0.0;
        // the epsilon guard in the denominator shifts the value by ~1e-11
        const double loss = masked_photometric_loss(b, a, full_mask(w, h), l1_only);
        CHECK(loss == doctest::Approx(0.085).epsilon(1e-9));
    }
}

TEST_CASE("masked-out pixels cannot influence the loss") {
    const int w = 32, h = 24;
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> v(0.0, 1.0);
    Image warped(w, h, 3), target(w, h, 3);
    for (auto& p : warped.raw())
        p = v(rng);
    for (auto& p : target.raw())
        p = v(rng);
    Plane<std::uint8_t> mask(w, h, 1, 1);
    for (int y = 8; y < 16; ++y)
        for (int x = 4; x < 20; ++x)
            mask.at(x, y) = 0;

    LossWeights weights;
    const double before = masked_photometric_loss(warped, target, mask, weights);

    // scribble over every masked-out pixel
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (!mask.at(x, y))
                for (int c = 0; c < 3; ++c)
                    warped.at(x, y, c) = v(rng);
    const double after = masked_photometric_loss(warped, target, mask, weights);
    CHECK(before == after); // bit-exact
}

TEST_CASE("ssim self-identity, closed form, and symmetry") {
    const int w = 24, h = 16;
    SUBCASE("identical images give a map of ones") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> v(0.0, 1.0);
        Image a(w, h, 3);
        for (auto& p : a.raw())
            p = v(rng);
        const Plane<double> map = ssim_map(a, a);
        for (const double m : map.raw())
            CHECK(m == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("constant images follow the stabilizer formula") {
        const Image zero = constant_image(w, h, 0.0);
        const Image one = constant_image(w, h, 1.0);
        const double c1 = 0.01 * 0.01;
        const double expected = c1 / (1.0 + c1); // (2*0*1+C1)C2 / ((0+1+C1)(0+0+C2))
        const Plane<double> map = ssim_map(zero, one);
        for (const double m : map.raw())
            CHECK(m == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("argument order does not matter, bit for bit") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> v(0.0, 1.0);
        Image a(w, h, 3), b(w, h, 3);
        for (auto& p : a.raw())
            p = v(rng);
        for (auto& p : b.raw())
            p = v(rng);
        CHECK(ssim_map(a, b) == ssim_map(b, a));
    }
    SUBCASE("images smaller than the window are rejected") {
        const Image tiny = constant_image(8, 8, 0.5);
        CHECK_THROWS_AS(ssim_map(tiny, tiny), std::invalid_argument);
    }
}

TEST_CASE("psnr closed forms") {
    const int w = 64, h = 64;
    const Image a = constant_image(w, h, 0.25);

    SUBCASE("identical images hit the cap") {
        CHECK(psnr(a, a) == 99.0);
    }
    SUBCASE("uniform 0.1 error is 20 dB") {
        const Image b = constant_image(w, h, 0.35);
        CHECK(std::abs(psnr(a, b) - 20.0) < 1e-9);
    }
    SUBCASE("uniform 0.5 error is 10 log10 4") {
        const Image b = constant_image(w, h, 0.75);
        CHECK(std::abs(psnr(a, b) - 10.0 * std::log10(4.0)) < 1e-12);
    }
    SUBCASE("vanishing error also caps") {
        Image b = a;
        b.at(0, 0, 0) += 1e-9;
        CHECK(psnr(a, b) == 99.0);
    }
}

TEST_CASE("norm_loss closed forms with the default weights") {
    LossWeights weights; // scale = opacity = 0.01
    gauss::Gaussian4D g;
    g.sh.assign(3, 0.0);
    g.t_start = 0.0;
    g.t_end = 1.0;

    SUBCASE("unit scale vector, zero opacity") {
        g.scale = {1.0, 0.0, 0.0};
        g.opacity = 0.0;
        std::vector<gauss::Gaussian4D> list(4, g);
        CHECK(std::abs(norm_loss(list, weights) - 0.01) < 1e-12);
    }
    SUBCASE("epsilon scales") {
        g.scale = {1e-4, 1e-4, 1e-4};
        g.opacity = 0.0;
        std::vector<gauss::Gaussian4D> list(3, g);
        CHECK(std::abs(norm_loss(list, weights) - 0.01 * std::sqrt(3.0) * 1e-4) < 1e-12);
    }
    SUBCASE("unit opacity and unit scales") {
        g.scale = {1.0, 1.0, 1.0};
        g.opacity = 1.0;
        std::vector<gauss::Gaussian4D> list(2, g);
        CHECK(std::abs(norm_loss(list, weights) - (0.01 * std::sqrt(3.0) + 0.01)) < 1e-12);
    }
    SUBCASE("empty list") {
        CHECK_THROWS_AS(norm_loss({}, weights), std::invalid_argument);
    }
}

TEST_CASE("l2 render loss closed forms") {
    const int w = 16, h = 16;
    const Image a = constant_image(w, h, 0.5);
    SUBCASE("identical") {
        CHECK(l2_render_loss(a, a) == 0.0);
    }
    SUBCASE("uniform offset") {
        const Image b = constant_image(w, h, 0.6);
        CHECK(l2_render_loss(a, b) == doctest::Approx(0.01).epsilon(1e-12));
    }
    SUBCASE("single differing pixel") {
        Image b = a;
        b.at(3, 5, 1) += 1.0;
        CHECK(l2_render_loss(a, b) == doctest::Approx(1.0 / (3.0 * w * h)).epsilon(1e-12));
    }
}

TEST_CASE("total loss wires the terms together") {
    const int w = 24, h = 16;
    const Image img = constant_image(w, h, 0.5);
    gauss::Gaussian4D g;
    g.sh.assign(3, 0.0);
    g.scale = {1.0, 1.0, 1.0};
    g.opacity = 1.0;
    g.t_start = 0.0;
    g.t_end = 1.0;
    std::vector<gauss::Gaussian4D> list{g};

    LossWeights weights;
    weights.percep = 0.05;
    CHECK_THROWS_AS(total_loss(img, img, img, img, full_mask(w, h), list, weights),
                    std::invalid_argument);

    weights.percep = 0.0;
    const double expect = norm_loss(list, weights);
    CHECK(total_loss(img, img, img, img, full_mask(w, h), list, weights) ==
          doctest::Approx(expect).epsilon(1e-12));

    weights.percep = 0.05;
    bool called = false;
    const double with_plugin = total_loss(img, img, img, img, full_mask(w, h), list, weights,
                                          [&](const Image&, const Image&) {
                                              called = true;
                                              return 2.0;
                                          });
    CHECK(called);
    CHECK(with_plugin == doctest::Approx(expect + 0.05 * 2.0).epsilon(1e-12));
}
