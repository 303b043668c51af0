// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#include "splat4d/geom.hpp"

#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

using namespace splat4d;
using namespace splat4d::geom;

namespace {

constexpr double kPi = 3.14159265358979323846;

SE3 random_se3(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    std::uniform_real_distribution<double> shift(-50.0, 50.0);
    SE3 t;
    t.rotation = rot_z(angle(rng)) * rot_y(angle(rng)) * rot_x(angle(rng));
    t.translation = {shift(rng), shift(rng), shift(rng)};
    return t;
}

double max_abs_diff(const Mat3& a, const Mat3& b) {
    double m = 0.0;
    for (int i = 0; i < 9; ++i)
        m = std::max(m, std::abs(a.m[static_cast<std::size_t>(i)] - b.m[static_cast<std::size_t>(i)]));
    return m;
}

} // namespace

TEST_CASE("backproject principal ray") {
    Intrinsics k{1.0, 1.0, 0.0, 0.0, 4, 4};
    const Vec3 p = backproject(0.0, 0.0, 5.0, k);
    CHECK(p.x == 0.0);
    CHECK(p.y == 0.0);
    CHECK(p.z == 5.0);
}

TEST_CASE("backproject matches an independent linear solve") {
    // Solving K x = [u d, v d, d]^T for K = [[100,0,50],[0,100,25],[0,0,1]],
    // pixel (150,125), depth 10 gives (10,10,10).
    Intrinsics k{100.0, 100.0, 50.0, 25.0, 200, 100};
    const Vec3 p = backproject(150.0, 125.0, 10.0, k);
    CHECK(p.x == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(p.y == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(p.z == 10.0);
}

TEST_CASE("backproject rejects degenerate depth") {
    Intrinsics k{1.0, 1.0, 0.0, 0.0, 4, 4};
    CHECK_THROWS_AS(backproject(0.0, 0.0, 0.0, k), std::domain_error);
    CHECK_THROWS_AS(backproject(0.0, 0.0, -2.0, k), std::domain_error);
}

TEST_CASE("project inverts backproject") {
    Intrinsics k{100.0, 100.0, 50.0, 25.0, 200, 100};
    const Projected uv = project({10.0, 10.0, 10.0}, k);
    CHECK(uv.u == doctest::Approx(150.0).epsilon(1e-12));
    CHECK(uv.v == doctest::Approx(125.0).epsilon(1e-12));
    CHECK(uv.depth == 10.0);

    Intrinsics unit{1.0, 1.0, 0.0, 0.0, 4, 4};
    const Projected origin = project({0.0, 0.0, 5.0}, unit);
    CHECK(origin.u == 0.0);
    CHECK(origin.v == 0.0);
}

TEST_CASE("project rejects points behind the camera") {
    Intrinsics k{1.0, 1.0, 0.0, 0.0, 4, 4};
    CHECK_THROWS_AS(project({0.0, 0.0, -1.0}, k), std::domain_error);
    CHECK_THROWS_AS(project({0.0, 0.0, 0.0}, k), std::domain_error);
}

TEST_CASE("project-backproject round trip at random intrinsics") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> focal(50.0, 2000.0);
    std::uniform_real_distribution<double> depth(1.5, 110.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        Intrinsics k;
        k.width = 640;
        k.height = 480;
        k.fx = focal(rng);
        k.fy = focal(rng);
        k.cx = unit(rng) * (k.width - 1);
        k.cy = unit(rng) * (k.height - 1);
        const double u = unit(rng) * (k.width - 1);
        const double v = unit(rng) * (k.height - 1);
        const double d = depth(rng);
        const Projected round = project(backproject(u, v, d, k), k);
        CHECK(std::abs(round.u - u) < 1e-6);
        CHECK(std::abs(round.v - v) < 1e-6);
        CHECK(std::abs(round.depth - d) < 1e-6);
    }
}

TEST_CASE("SE3 group laws on random samples") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        const SE3 a = random_se3(rng);
        const SE3 b = random_se3(rng);
        const SE3 c = random_se3(rng);

        // rotations stay orthonormal with unit determinant
        const Mat3 gram = a.rotation.transposed() * a.rotation;
        CHECK(max_abs_diff(gram, Mat3::identity()) < 1e-9);
        CHECK(a.rotation.det() == doctest::Approx(1.0).epsilon(1e-9));

        // identity and inverse laws
        const SE3 id = compose(a, inverse(a));
        CHECK(max_abs_diff(id.rotation, Mat3::identity()) < 1e-9);
        CHECK(id.translation.norm() < 1e-9);
        const SE3 same = compose(SE3::identity(), a);
        CHECK(max_abs_diff(same.rotation, a.rotation) < 1e-9);

        // associativity, checked through the action on a point
        const Vec3 p{1.0, -2.0, 3.0};
        const Vec3 left = compose(compose(a, b), c).apply(p);
        const Vec3 right = compose(a, compose(b, c)).apply(p);
        CHECK((left - right).norm() < 1e-9);

        // compose agrees with sequential application
        const Vec3 composed = compose(a, b).apply(p);
        const Vec3 sequential = a.apply(b.apply(p));
        CHECK((composed - sequential).norm() < 1e-9);
    }
}

TEST_CASE("two quarter turns flip the x axis") {
    const SE3 quarter{rot_z(kPi / 2), {}};
    const Vec3 flipped = compose(quarter, quarter).apply({1.0, 0.0, 0.0});
    CHECK(flipped.x == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(flipped.y) < 1e-12);
}

TEST_CASE("quaternion round trip") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const Mat3 r = random_se3(rng).rotation;
        CHECK(max_abs_diff(quat_to_mat(mat_to_quat(r)), r) < 1e-12);
    }
}

TEST_CASE("normalize_to_grid maps edges and midpoint") {
    CHECK(normalize_to_grid(0.0, 0.0, 518, 280).x == -1.0);
    CHECK(normalize_to_grid(517.0, 0.0, 518, 280).x == 1.0);
    CHECK(normalize_to_grid(258.5, 0.0, 518, 280).x == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(normalize_to_grid(0.0, 279.0, 518, 280).y == 1.0);
}

TEST_CASE("normalize_to_grid is strictly monotone") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> coord(-100.0, 700.0);
    for (int i = 0; i < 500; ++i) {
        double u0 = coord(rng), u1 = coord(rng);
        if (u0 == u1)
            continue;
        if (u0 > u1)
            std::swap(u0, u1);
        CHECK(normalize_to_grid(u0, 0.0, 518, 280).x < normalize_to_grid(u1, 0.0, 518, 280).x);
    }
}

TEST_CASE("camera rig lookup and validation") {
    CameraRig rig;
    rig.cameras.push_back({"front", {370.0, 370.0, 258.5, 139.5, 518, 280}, SE3::identity()});
    CHECK(rig.has("front"));
    CHECK_FALSE(rig.has("rear"));
    CHECK_THROWS_AS(rig.find("rear"), std::invalid_argument);

    rig.cameras.push_back({"front", {370.0, 370.0, 258.5, 139.5, 518, 280}, SE3::identity()});
    CHECK_THROWS_AS(validate(rig), std::invalid_argument);
}

TEST_CASE("intrinsics invariants") {
    CHECK_THROWS_AS(validate(Intrinsics{0.0, 1.0, 0.0, 0.0, 4, 4}), std::invalid_argument);
    CHECK_THROWS_AS(validate(Intrinsics{1.0, 1.0, 4.0, 0.0, 4, 4}), std::invalid_argument);
    CHECK_NOTHROW(validate(Intrinsics{1.0, 1.0, 3.9, 0.0, 4, 4}));
}

TEST_CASE("pose interpolation hits waypoints and midpoints") {
    std::vector<EgoPose> poses;
    poses.push_back({0.0, SE3::identity()});
    poses.push_back({1.0, {rot_z(kPi / 2), {4.0, 0.0, 0.0}}});

    const EgoPose at0 = interpolate_pose(poses, 0.0);
    CHECK(at0.pose.translation.norm() == 0.0);
    const EgoPose mid = interpolate_pose(poses, 0.5);
    CHECK(mid.pose.translation.x == doctest::Approx(2.0));
    CHECK(max_abs_diff(mid.pose.rotation, rot_z(kPi / 4)) < 1e-9);
    CHECK_THROWS_AS(interpolate_pose(poses, 1.5), std::out_of_range);
}
