#include "nlmvs/errors.hpp"
#include "nlmvs/metrics.hpp"

#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace nlmvs;
using namespace test_support;

TEST_CASE("depth error closed forms") {
    DepthMap gt(8, 8, 1, 3.0f);
    Mask mask(8, 8, true);
    const double diag = 2.0;

    CHECK(depth_error(gt, gt, mask, diag) == doctest::Approx(0.0));

    DepthMap off(8, 8, 1, 3.0f + 0.01f * 2.0f);
    CHECK(depth_error(off, gt, mask, diag) == doctest::Approx(1.0).epsilon(1e-4));

    // percentage metrics are invariant to a global scale
    const double s = 7.0;
    DepthMap gts(8, 8, 1, 3.0f * 7.0f), offs(8, 8, 1, (3.0f + 0.02f) * 7.0f);
    DepthMap off2(8, 8, 1, 3.0f + 0.02f);
    CHECK(depth_error(offs, gts, mask, diag * s) ==
          doctest::Approx(depth_error(off2, gt, mask, diag)).epsilon(1e-4));

    CHECK(depth_below(gt, gt, mask, diag, 2.0) == doctest::Approx(1.0));
    DepthMap half(8, 8, 1, 3.0f);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 8; ++x) half.at(x, y, 0) = 3.0f + 0.1f * 2.0f; // 10% error
    CHECK(depth_below(half, gt, mask, diag, 2.0) == doctest::Approx(0.5));

    Mask empty(8, 8, false);
    CHECK_THROWS_AS(depth_error(gt, gt, empty, diag), Error);
}

TEST_CASE("normal error closed forms") {
    NormalMap gt(4, 4, 3);
    Mask mask(4, 4, true);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) gt.set_rgb(x, y, {0, 0, -1});

    CHECK(normal_error(gt, gt, mask) == doctest::Approx(0.0));

    Mat3 tilt = Mat3::rotation_axis_angle(Vec3{1, 0, 0}, deg2rad(10.0));
    NormalMap tilted(4, 4, 3);
    NormalMap antipodal(4, 4, 3);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            Vec3 t = tilt * Vec3{0, 0, -1};
            tilted.set_rgb(x, y, {t.x, t.y, t.z});
            antipodal.set_rgb(x, y, {0, 0, 1});
        }
    CHECK(normal_error(tilted, gt, mask) == doctest::Approx(10.0).epsilon(1e-4));
    CHECK(normal_error(antipodal, gt, mask) == doctest::Approx(180.0).epsilon(1e-6));

    CHECK(normal_below(tilted, gt, mask, 17.0) == doctest::Approx(1.0));
    CHECK(normal_below(tilted, gt, mask, 5.0) == doctest::Approx(0.0));

    Mask empty(4, 4, false);
    CHECK_THROWS_AS(normal_error(gt, gt, empty), Error);
}

TEST_CASE("point-to-mesh distance closed forms and brute-force oracle") {
    TriangleMesh sphere = TriangleMesh::make_sphere(Vec3{0, 0, 0}, 1.0, 16);
    const double diag = 2.0 * std::sqrt(3.0);

    SUBCASE("points sampled on the mesh itself score zero") {
        OrientedPointCloud on;
        for (size_t i = 0; i < sphere.triangle_count(); i += 37) {
            const Triangle& t = sphere.triangles()[i];
            Vec3 c = (t.a + t.b + t.c) / 3.0;
            on.push_back({c, t.normal(), std::nullopt});
        }
        REQUIRE(!on.empty());
        CHECK(point_to_mesh_rms(on, sphere, diag) < 1e-6);
    }

    SUBCASE("a constant displacement along plane normals scores exactly") {
        TriangleMesh plane({{Vec3{-5, -5, 0}, Vec3{5, -5, 0}, Vec3{5, 5, 0}},
                            {Vec3{-5, -5, 0}, Vec3{5, 5, 0}, Vec3{-5, 5, 0}}});
        OrientedPointCloud cloud;
        double d = 0.01 * diag;
        for (double x = -2; x <= 2; x += 0.5)
            for (double y = -2; y <= 2; y += 0.5)
                cloud.push_back({Vec3{x, y, d}, Vec3{0, 0, 1}, std::nullopt});
        CHECK(point_to_mesh_rms(cloud, plane, diag) == doctest::Approx(1.0).epsilon(1e-6));
    }

    SUBCASE("grid-accelerated distance equals the brute-force oracle") {
        std::mt19937 rng(17);
        std::uniform_real_distribution<double> u(-1.4, 1.4);
        for (int i = 0; i < 1000; ++i) {
            Vec3 p{u(rng), u(rng), u(rng)};
            CHECK(sphere.distance_to(p) == doctest::Approx(sphere.distance_to_brute(p)).epsilon(1e-9));
        }
    }

    SUBCASE("empty cloud is rejected") {
        CHECK_THROWS_AS(point_to_mesh_rms({}, sphere, diag), Error);
    }
}

TEST_CASE("eval report renders text and csv") {
    EvalReport r;
    r.depth_mae_pct = 1.25;
    r.normal_mae_deg = 9.5;
    r.frac_depth_below_2pct = 0.8;
    r.frac_normal_below_17deg = 0.75;
    r.frac_normal_below_19deg = 0.85;

    std::string text = r.to_text();
    CHECK(text.find("1.25") != std::string::npos);
    CHECK(text.find("9.5") != std::string::npos);

    std::string csv = r.to_csv();
    CHECK(csv.find(',') != std::string::npos);
    CHECK(csv.find("1.25") != std::string::npos);
}
