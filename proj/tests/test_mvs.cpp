#include "nlmvs/errors.hpp"
#include "nlmvs/mvs.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace nlmvs;
using namespace test_support;

namespace {

// Smooth world-space texture for the plane-sweep fixtures.
Rgb plane_texture(double wx, double wy) {
    return {0.5 + 0.4 * std::sin(8.0 * wx) * std::cos(5.0 * wy),
            0.5 + 0.4 * std::sin(6.0 * wx + 1.0),
            0.5 + 0.4 * std::cos(9.0 * wy + 2.0)};
}

Camera axis_aligned_camera(double eye_x, int size, double fx, double cx) {
    Camera cam;
    cam.width = cam.height = size;
    cam.fx = cam.fy = fx;
    cam.cx = cx;
    cam.cy = size / 2.0;
    cam.R = Mat3::identity();
    cam.t = Vec3{-eye_x, 0, 3.0}; // eye (eye_x, 0, -3), looking along +z
    return cam;
}

/// View of the textured plane z = 0, colors sampled where each pixel-center
/// ray meets the plane. Depth along the optical axis is 3 everywhere.
ViewData plane_view(const Camera& cam) {
    ViewData v;
    v.camera = cam;
    v.image = HdrImage(cam.width, cam.height, 3);
    v.mask = Mask(cam.width, cam.height, true);
    v.density.width = cam.width;
    v.density.height = cam.height;
    v.density.pixels.assign(static_cast<size_t>(cam.width) * cam.height, {});
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            Vec3 p = cam.backproject_world(x + 0.5, y + 0.5, 3.0);
            v.image.set_rgb(x, y, plane_texture(p.x, p.y));
        }
    return v;
}

int argmax_depth(const CostVolumes& vol, int x, int y) {
    int best = -1;
    float bp = -1;
    for (int d = 0; d < vol.depth_count; ++d)
        if (vol.prob[vol.idx(d, x, y)] > bp) {
            bp = vol.prob[vol.idx(d, x, y)];
            best = d;
        }
    return best;
}

Camera rigidly_moved(const Camera& cam, const Mat3& rot, const Vec3& shift) {
    Camera out = cam;
    out.R = cam.R * rot.transposed();
    out.t = cam.t - out.R * shift;
    return out;
}

} // namespace

TEST_CASE("density rotation basics") {
    NormalDensityField f;
    f.width = 1;
    f.height = 1;
    f.pixels = {{{Vec3{0, 0, 1}, 0.7}, {normalized(Vec3{0.3, 0.1, 0.9}), 0.3}}};

    NormalDensityField same = rotate_densities(f, Mat3::identity());
    CHECK(angle_deg(same.pixels[0][0].dir, f.pixels[0][0].dir) < 1e-9);

    Mat3 r = Mat3::rotation_axis_angle(normalized(Vec3{1, 2, 3}), 0.7);
    NormalDensityField back = rotate_densities(rotate_densities(f, r), r.transposed());
    for (size_t i = 0; i < 2; ++i) {
        CHECK(back.pixels[0][i].dir.x == doctest::Approx(f.pixels[0][i].dir.x).epsilon(1e-6));
        CHECK(back.pixels[0][i].dir.y == doctest::Approx(f.pixels[0][i].dir.y).epsilon(1e-6));
        CHECK(back.pixels[0][i].dir.z == doctest::Approx(f.pixels[0][i].dir.z).epsilon(1e-6));
        CHECK(back.pixels[0][i].prob == f.pixels[0][i].prob);
    }

    // right-handed quarter turn about x: +z maps to -y
    Mat3 qx = Mat3::rotation_axis_angle(Vec3{1, 0, 0}, kPi / 2.0);
    NormalDensityField turned = rotate_densities(f, qx);
    CHECK(turned.pixels[0][0].dir.x == doctest::Approx(0.0));
    CHECK(turned.pixels[0][0].dir.y == doctest::Approx(-1.0));
    CHECK(turned.pixels[0][0].dir.z == doctest::Approx(0.0).epsilon(1e-12));

    Mat3 not_rot;
    not_rot(0, 0) = 2.0;
    CHECK_THROWS_AS(rotate_densities(f, not_rot), Error);
}

TEST_CASE("hypothesis exactly on the plane has zero photometric cost") {
    // baseline chosen so the disparity at depth 3 is exactly 4 pixels
    const double fx = 100.0;
    ViewData ref = plane_view(axis_aligned_camera(0.0, 32, fx, 16.0));
    ViewData src = plane_view(axis_aligned_camera(3.0 * 4.0 / fx, 32, fx, 16.0));

    DepthHypothesisRange range(2.0, 4.0, 4); // depths 2, 2.4, 3, 4
    CHECK(range.depth(2) == doctest::Approx(3.0).epsilon(1e-12));
    CostVolumeParams cp;
    cp.beta_normal = 0.0;
    CostVolumes vol = build_cost_volume(ref, {src}, range, cp);

    int x = 16, y = 16;
    REQUIRE(vol.valid[vol.idx(2, x, y)]);
    CHECK(vol.cost[vol.idx(2, x, y)] < 1e-6);
    CHECK(argmax_depth(vol, x, y) == 2);
}

TEST_CASE("textured plane sweep recovers depth for nearly all pixels") {
    const double fx = 100.0;
    const int size = 32;
    const double baseline = 3.02; // ~1.2 px of disparity per hypothesis step
    ViewData ref = plane_view(axis_aligned_camera(0.0, size, fx, 16.0));
    Camera src_cam = axis_aligned_camera(baseline, size, fx, 16.0 + fx * baseline / 3.0);
    ViewData src = plane_view(src_cam);

    DepthHypothesisRange range(2.0, 4.0, 64);
    CostVolumeParams cp;
    cp.beta_normal = 0.0;
    CostVolumes vol = build_cost_volume(ref, {src}, range, cp);

    // probabilities sum to 1 over depth for unmasked pixels
    for (int y = 0; y < size; y += 7)
        for (int x = 0; x < size; x += 5) {
            if (!vol.mask.at(x, y)) continue;
            double sum = 0;
            for (int d = 0; d < vol.depth_count; ++d) sum += vol.prob[vol.idx(d, x, y)];
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
        }

    int total = 0, good = 0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            if (!vol.mask.at(x, y)) continue;
            ++total;
            int k = argmax_depth(vol, x, y);
            if (std::abs(range.depth(k) - 3.0) <= range.step(k) + 1e-12) ++good;
        }
    REQUIRE(total > 500);
    CHECK(good >= 0.99 * total);

    SUBCASE("a source view that never sees the hypotheses changes nothing") {
        Camera behind = axis_aligned_camera(0.0, size, fx, 16.0);
        behind.t = Vec3{0, 0, -10}; // eye (0,0,10): the plane is behind it
        ViewData blind = plane_view(axis_aligned_camera(0.0, size, fx, 16.0));
        blind.camera = behind;
        CostVolumes vol2 = build_cost_volume(ref, {src, blind}, range, cp);
        for (size_t i = 0; i < vol.cost.size(); ++i) CHECK(vol2.cost[i] == vol.cost[i]);
    }

    SUBCASE("low softmax temperature decodes to the argmin-cost depth") {
        CostVolumeParams sharp = cp;
        sharp.tau = 1e-3;
        CostVolumes vs = build_cost_volume(ref, {src}, range, sharp);
        DepthNormalMaps maps = decode_depth_normal(vs);
        for (int y = 0; y < size; y += 3)
            for (int x = 0; x < size; x += 3) {
                if (!maps.mask.at(x, y)) continue;
                int k = argmax_depth(vs, x, y);
                CHECK(std::abs(maps.depth.at(x, y, 0) - range.depth(k)) <=
                      range.step(k) + 1e-9);
            }
    }

    SUBCASE("rigid motion of the whole rig leaves decoded depth unchanged") {
        Mat3 rot = Mat3::rotation_axis_angle(normalized(Vec3{0.3, 1, 0.2}), 0.6);
        Vec3 shift{0.4, -0.2, 0.9};
        ViewData ref2 = ref, src2 = src;
        ref2.camera = rigidly_moved(ref.camera, rot, shift);
        src2.camera = rigidly_moved(src.camera, rot, shift);
        CostVolumes vol2 = build_cost_volume(ref2, {src2}, range, cp);
        DepthNormalMaps a = decode_depth_normal(vol);
        DepthNormalMaps b = decode_depth_normal(vol2);
        for (int y = 0; y < size; y += 3)
            for (int x = 0; x < size; x += 3) {
                if (!a.mask.at(x, y)) continue;
                REQUIRE(b.mask.at(x, y));
                CHECK(b.depth.at(x, y, 0) ==
                      doctest::Approx(a.depth.at(x, y, 0)).epsilon(1e-4));
            }
    }

    SUBCASE("filtering is identity at radius 0 / window 1 and never hurts here") {
        FilterParams id;
        id.radius = 0;
        id.depth_window = 1;
        CostVolumes same = filter_cost_volume(vol, ref.image, id);
        for (size_t i = 0; i < vol.cost.size(); ++i) CHECK(same.cost[i] == vol.cost[i]);

        CostVolumes filtered = filter_cost_volume(vol, ref.image, FilterParams{});
        auto mean_err = [&](const CostVolumes& v) {
            DepthNormalMaps m = decode_depth_normal(v);
            double sum = 0;
            int n = 0;
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x)
                    if (m.mask.at(x, y)) {
                        sum += std::abs(m.depth.at(x, y, 0) - 3.0);
                        ++n;
                    }
            return sum / n;
        };
        CHECK(mean_err(filtered) <= mean_err(vol) + 1e-6);
    }

    SUBCASE("a cost impulse is attenuated by the depth box window") {
        FilterParams fp;
        fp.radius = 0;
        fp.depth_window = 3;
        CostVolumes base = filter_cost_volume(vol, ref.image, fp);

        CostVolumes noisy = vol;
        size_t cell = vol.idx(30, 16, 16);
        REQUIRE(vol.valid[cell]);
        REQUIRE(vol.valid[vol.idx(29, 16, 16)]);
        REQUIRE(vol.valid[vol.idx(31, 16, 16)]);
        const float impulse = 6.0f;
        noisy.cost[cell] += impulse;
        CostVolumes out = filter_cost_volume(noisy, ref.image, fp);
        float delta = out.cost[cell] - base.cost[cell];
        CHECK(delta == doctest::Approx(impulse / 3.0).epsilon(1e-4));
    }
}

TEST_CASE("expectation decoding closed forms") {
    CostVolumes vol;
    vol.depth_count = 3;
    vol.width = vol.height = 1;
    vol.range = DepthHypothesisRange(1.0, 4.0, 3); // depths 1, 1.6, 4
    vol.cost.assign(3, 0.f);
    vol.prob.assign(3, 0.f);
    vol.normal.assign(9, 0.f);
    vol.valid.assign(3, 1);
    vol.mask = Mask(1, 1, true);
    auto set_normal = [&](int d, const Vec3& n) {
        vol.normal[d * 3 + 0] = static_cast<float>(n.x);
        vol.normal[d * 3 + 1] = static_cast<float>(n.y);
        vol.normal[d * 3 + 2] = static_cast<float>(n.z);
    };

    SUBCASE("one-hot probability is a delta expectation") {
        vol.prob = {0.f, 1.f, 0.f};
        Vec3 n = normalized(Vec3{0.2, -0.1, -1});
        set_normal(1, n);
        DepthNormalMaps m = decode_depth_normal(vol);
        CHECK(m.depth.at(0, 0, 0) == doctest::Approx(vol.range.depth(1)).epsilon(1e-6));
        CHECK(angle_deg({m.normal.rgb(0, 0).r, m.normal.rgb(0, 0).g, m.normal.rgb(0, 0).b}, n) <
              1e-3);
    }

    SUBCASE("uniform probability over two hypotheses averages their depths") {
        vol.prob = {0.5f, 0.f, 0.5f};
        set_normal(0, Vec3{0, 0, -1});
        set_normal(2, Vec3{0, 0, -1});
        DepthNormalMaps m = decode_depth_normal(vol);
        CHECK(m.depth.at(0, 0, 0) ==
              doctest::Approx(0.5 * (vol.range.depth(0) + vol.range.depth(2))).epsilon(1e-6));
    }

    SUBCASE("opposite tilts cancel to the frontal normal") {
        vol.prob = {0.5f, 0.f, 0.5f};
        set_normal(0, normalized(Vec3{0.6, 0, -0.8}));
        set_normal(2, normalized(Vec3{-0.6, 0, -0.8}));
        DepthNormalMaps m = decode_depth_normal(vol);
        Rgb n = m.normal.rgb(0, 0);
        CHECK(n.r == doctest::Approx(0.0).epsilon(1e-6));
        CHECK(n.g == doctest::Approx(0.0).epsilon(1e-6));
        CHECK(n.b == doctest::Approx(-1.0).epsilon(1e-6));
    }

    SUBCASE("degenerate normal sum masks the pixel") {
        vol.prob = {0.5f, 0.f, 0.5f};
        set_normal(0, Vec3{0, 0, 1});
        set_normal(2, Vec3{0, 0, -1});
        DepthNormalMaps m = decode_depth_normal(vol);
        CHECK_FALSE(m.mask.at(0, 0));
    }
}

TEST_CASE("depth-derived normals match analytic planes") {
    Camera cam;
    cam.width = cam.height = 64;
    cam.fx = cam.fy = 100.0;
    cam.cx = cam.cy = 32.0;
    Mask mask(64, 64, true);

    SUBCASE("constant depth gives the frontal normal") {
        DepthMap depth(64, 64, 1, 3.0f);
        NormalMap n = depth_to_normal(depth, mask, cam);
        Rgb c = n.rgb(32, 32);
        CHECK(c.r == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(c.g == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(c.b == doctest::Approx(-1.0).epsilon(1e-9));
    }

    SUBCASE("slanted plane normal within half a degree away from borders") {
        Vec3 pn = normalized(Vec3{0.3, -0.2, -1.0});
        double hh = pn.z * 3.0; // plane through (0,0,3) in the camera frame
        DepthMap depth(64, 64, 1);
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) {
                double denom =
                    pn.x * (x + 0.5 - cam.cx) / cam.fx + pn.y * (y + 0.5 - cam.cy) / cam.fy + pn.z;
                depth.at(x, y, 0) = static_cast<float>(hh / denom);
            }
        Mask nm;
        NormalMap n = depth_to_normal(depth, mask, cam, &nm);
        for (int y = 2; y < 62; y += 5)
            for (int x = 2; x < 62; x += 5) {
                REQUIRE(nm.at(x, y));
                Rgb c = n.rgb(x, y);
                CHECK(angle_deg({c.r, c.g, c.b}, pn) < 0.5);
            }
    }
}

TEST_CASE("sphere ground truth is self-consistent under eq. 7") {
    EnvironmentMap env = EnvironmentMap::constant(16, 8, Rgb{1, 1, 1});
    LambertianBrdf brdf(Rgb{0.5, 0.5, 0.5});
    const int size = 256;
    Camera cam = look_at(Vec3{0, 0, -3}, Vec3{0, 0, 0}, size);
    auto views = render_sphere_views({cam}, brdf, env);
    const RenderResult& r = views[0].r;

    // interior = mask eroded by one pixel
    Mask interior(size, size);
    for (int y = 1; y < size - 1; ++y)
        for (int x = 1; x < size - 1; ++x) {
            bool all = true;
            for (int dy = -1; dy <= 1 && all; ++dy)
                for (int dx = -1; dx <= 1 && all; ++dx)
                    if (!r.mask.at(x + dx, y + dy)) all = false;
            interior.set(x, y, all);
        }

    NormalMap gt_cam = to_camera_frame(r.normal, cam);
    Mask nm;
    NormalMap derived = depth_to_normal(r.depth, interior, cam, &nm);
    int total = 0, close = 0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            if (!interior.at(x, y) || !nm.at(x, y)) continue;
            ++total;
            Rgb a = gt_cam.rgb(x, y), b = derived.rgb(x, y);
            if (angle_deg({a.r, a.g, a.b}, {b.r, b.g, b.b}) <= 3.0) ++close;
        }
    REQUIRE(total > 10000);
    CHECK(close >= 0.9 * total);

    CHECK(consistency_score(gt_cam, r.depth, interior, cam) <= 3.0);

    SUBCASE("consistency closed forms") {
        // identical maps score zero; a constant 10-degree tilt scores 10
        NormalMap self = depth_to_normal(r.depth, interior, cam);
        CHECK(consistency_score(self, r.depth, interior, cam) == doctest::Approx(0.0));

        // tilt each normal about an axis perpendicular to it: exactly 10 degrees
        NormalMap tilted(size, size, 3);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                Rgb c = self.rgb(x, y);
                Vec3 n{c.r, c.g, c.b};
                Vec3 ref_axis = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
                Vec3 axis = norm(n) > 0 ? normalized(cross(n, ref_axis)) : Vec3{0, 1, 0};
                Vec3 t = Mat3::rotation_axis_angle(axis, deg2rad(10.0)) * n;
                tilted.set_rgb(x, y, {t.x, t.y, t.z});
            }
        CHECK(consistency_score(tilted, r.depth, interior, cam) ==
              doctest::Approx(10.0).epsilon(1e-3));

        Mask empty(size, size, false);
        CHECK_THROWS_AS(consistency_score(self, r.depth, empty, cam), Error);
    }
}

TEST_CASE("invalid configurations are rejected") {
    CHECK_THROWS_AS(DepthHypothesisRange(4.0, 2.0, 8), Error);
    CHECK_THROWS_AS(DepthHypothesisRange(0.0, 2.0, 8), Error);
    CHECK_THROWS_AS(DepthHypothesisRange(1.0, 2.0, 1), Error);

    ViewData ref = plane_view(axis_aligned_camera(0.0, 8, 50.0, 4.0));
    CHECK_THROWS_AS(build_cost_volume(ref, {}, DepthHypothesisRange(2, 4, 8), CostVolumeParams{}),
                    Error);
}
