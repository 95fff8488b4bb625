#include "nlmvs/errors.hpp"
#include "nlmvs/pfm.hpp"
#include "nlmvs/scene.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

using namespace nlmvs;
using namespace test_support;

namespace {

void write_bytes(const std::string& path, const void* data, size_t n) {
    std::ofstream out(path, std::ios::binary);
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

} // namespace

TEST_CASE("pfm float round trip is bitwise") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<float> u(0.f, 100.f);
    for (int channels : {1, 3}) {
        HdrImage img(7, 5, channels);
        for (float& v : img.data()) v = u(rng);
        std::string path = temp_path("roundtrip.pfm");
        write_pfm(img, path);
        HdrImage back = read_pfm(path);
        std::remove(path.c_str());
        REQUIRE(back.width() == 7);
        REQUIRE(back.height() == 5);
        REQUIRE(back.channels() == channels);
        CHECK(std::memcmp(back.data().data(), img.data().data(),
                          img.data().size() * sizeof(float)) == 0);
    }
}

TEST_CASE("pfm header arithmetic: little-endian 2x2 color") {
    // "PF\n2 2\n-1.0\n" + 48 payload bytes, bottom row first
    std::string path = temp_path("little.pfm");
    {
        std::ofstream out(path, std::ios::binary);
        out << "PF\n2 2\n-1.0\n";
        float rows[2][2][3] = {
            {{10, 11, 12}, {13, 14, 15}}, // bottom image row (y = 1)
            {{0, 1, 2}, {3, 4, 5}},       // top image row (y = 0)
        };
        out.write(reinterpret_cast<const char*>(rows), sizeof(rows));
    }
    HdrImage img = read_pfm(path);
    std::remove(path.c_str());
    REQUIRE(img.width() == 2);
    REQUIRE(img.height() == 2);
    REQUIRE(img.channels() == 3);
    CHECK(img.at(0, 0, 0) == 0.f);
    CHECK(img.at(1, 0, 2) == 5.f);
    CHECK(img.at(0, 1, 0) == 10.f);
    CHECK(img.at(1, 1, 1) == 14.f);
}

TEST_CASE("pfm big-endian scale byte-swaps against a scalar reference") {
    std::string path = temp_path("big.pfm");
    const float values[3] = {1.5f, -2.25f, 1000.0f};
    {
        std::ofstream out(path, std::ios::binary);
        out << "Pf\n3 1\n1.0\n"; // positive scale: big-endian payload
        for (float v : values) {
            unsigned char b[4];
            std::memcpy(b, &v, 4);
            std::swap(b[0], b[3]); // this platform is little-endian
            std::swap(b[1], b[2]);
            out.write(reinterpret_cast<const char*>(b), 4);
        }
    }
    HdrImage img = read_pfm(path);
    std::remove(path.c_str());
    REQUIRE(img.width() == 3);
    REQUIRE(img.channels() == 1);
    for (int x = 0; x < 3; ++x) CHECK(img.at(x, 0, 0) == values[x]);
}

TEST_CASE("malformed pfm inputs are rejected") {
    std::string path = temp_path("bad.pfm");

    write_bytes(path, "P6\n2 2\n255\n", 11);
    CHECK_THROWS_AS(read_pfm(path), Error);

    // truncated payload
    {
        std::ofstream out(path, std::ios::binary);
        out << "PF\n2 2\n-1.0\n";
        float f = 1.f;
        out.write(reinterpret_cast<const char*>(&f), 4);
    }
    CHECK_THROWS_AS(read_pfm(path), Error);

    // non-finite values
    {
        std::ofstream out(path, std::ios::binary);
        out << "Pf\n1 1\n-1.0\n";
        float f = std::numeric_limits<float>::quiet_NaN();
        out.write(reinterpret_cast<const char*>(&f), 4);
    }
    CHECK_THROWS_AS(read_pfm(path), Error);
    std::remove(path.c_str());

    CHECK_THROWS_AS(read_pfm(temp_path("does_not_exist.pfm")), Error);
}

TEST_CASE("pgm mask round trip") {
    Mask m(5, 3);
    m.set(0, 0, true);
    m.set(4, 2, true);
    m.set(2, 1, true);
    std::string path = temp_path("mask.pgm");
    write_pgm_mask(m, path);
    Mask back = read_pgm_mask(path);
    std::remove(path.c_str());
    REQUIRE(back.width() == 5);
    REQUIRE(back.height() == 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 5; ++x) CHECK(back.at(x, y) == m.at(x, y));
}

TEST_CASE("merl loader applies per-channel scales and rejects bad headers") {
    const size_t samples = MerlBrdf::kSamplesPerChannel;
    std::string path = temp_path("synthetic.merl");

    {
        std::ofstream out(path, std::ios::binary);
        int32_t dims[3] = {90, 90, 180};
        out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
        std::vector<double> payload(3 * samples, 1500.0);
        payload[5] = -1.0; // invalid entry, must be zeroed
        out.write(reinterpret_cast<const char*>(payload.data()),
                  static_cast<std::streamsize>(payload.size() * 8));
    }
    MerlBrdf brdf = MerlBrdf::load(path);
    const auto& t = brdf.table();
    REQUIRE(t.size() == 3 * samples);
    CHECK(t[0] == doctest::Approx(1.0).epsilon(1e-6));               // red: 1/1500
    CHECK(t[samples] == doctest::Approx(1.15).epsilon(1e-6));        // green: 1.15/1500
    CHECK(t[2 * samples] == doctest::Approx(1.66).epsilon(1e-6));    // blue: 1.66/1500
    CHECK(t[5] == 0.f);

    {
        std::ofstream out(path, std::ios::binary);
        int32_t dims[3] = {90, 90, 90};
        out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    }
    CHECK_THROWS_AS(MerlBrdf::load(path), Error);

    {
        std::ofstream out(path, std::ios::binary);
        int32_t dims[3] = {90, 90, 180};
        out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
        double d = 1.0;
        out.write(reinterpret_cast<const char*>(&d), 8); // short payload
    }
    CHECK_THROWS_AS(MerlBrdf::load(path), Error);
    std::remove(path.c_str());
}

TEST_CASE("scene generation geometry and round trip") {
    namespace fs = std::filesystem;
    std::string dir = temp_path("scene_gen");
    fs::remove_all(dir);

    EnvironmentMap env = EnvironmentMap::constant(16, 8, Rgb{1, 1, 1});
    LambertianBrdf brdf(Rgb{0.5, 0.5, 0.5});
    GenerateOptions opts;
    opts.n_views = 10;
    opts.image_size = 128;
    opts.elevation_deg = 0.0;
    opts.jitter_deg = 0.0;
    SceneDescription scene = generate_scene(opts, brdf, env, dir);
    REQUIRE(scene.views.size() == 10);

    // zero jitter, zero elevation: camera azimuths exactly 36 degrees apart
    for (int i = 0; i < 10; ++i) {
        Vec3 c = scene.views[i].camera.center();
        CHECK(norm(c) == doctest::Approx(opts.ring_radius).epsilon(1e-9));
        double az = std::atan2(c.x, c.z);
        double want = 2.0 * kPi * i / 10;
        if (want > kPi) want -= 2.0 * kPi;
        CHECK(std::abs(std::remainder(az - want, 2.0 * kPi)) < 1e-9);
    }

    // projected silhouette area within 2% of the analytic disk: a unit sphere
    // seen on-axis at distance d subtends sin(theta) = 1/d and projects to a
    // disk of pixel radius fx * tan(theta)
    REQUIRE(scene.views[0].mask_path.has_value());
    Mask mask = read_pgm_mask(*scene.views[0].mask_path);
    const Camera& cam = scene.views[0].camera;
    double sin_t = 1.0 / opts.ring_radius;
    double tan_t = sin_t / std::sqrt(1.0 - sin_t * sin_t);
    double pix_radius = cam.fx * tan_t;
    double analytic = kPi * pix_radius * pix_radius;
    CHECK(double(mask.count()) == doctest::Approx(analytic).epsilon(0.02));

    // reloading reproduces the camera matrices exactly
    SceneDescription again = SceneDescription::load(dir + "/scene.json");
    REQUIRE(again.views.size() == scene.views.size());
    for (size_t i = 0; i < scene.views.size(); ++i) {
        const Camera &a = scene.views[i].camera, &b = again.views[i].camera;
        CHECK(a.fx == b.fx);
        CHECK(a.cx == b.cx);
        for (int k = 0; k < 9; ++k) CHECK(a.R.m[k] == b.R.m[k]);
        CHECK(a.t.x == b.t.x);
        CHECK(a.t.y == b.t.y);
        CHECK(a.t.z == b.t.z);
    }
    CHECK(again.bbox_diagonal() == doctest::Approx(scene.bbox_diagonal()));

    fs::remove_all(dir);
}
