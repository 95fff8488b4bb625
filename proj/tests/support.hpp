#pragma once

// Shared fixtures: small rendered scenes, ring cameras, temp files.

#include "nlmvs/envmap.hpp"
#include "nlmvs/reflectance.hpp"
#include "nlmvs/render.hpp"
#include "nlmvs/sfs.hpp"
#include "nlmvs/shapes.hpp"

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

namespace test_support {

using namespace nlmvs;

inline Camera look_at(const Vec3& eye, const Vec3& target, int size, double fov_deg = 47.0) {
    Vec3 fwd = normalized(target - eye);
    Vec3 up{0, 1, 0};
    Vec3 right = normalized(cross(fwd, up));
    Vec3 down = cross(fwd, right);
    Camera cam;
    cam.width = cam.height = size;
    double f = 0.5 * size / std::tan(deg2rad(fov_deg) / 2.0);
    cam.fx = cam.fy = f;
    cam.cx = cam.cy = size / 2.0;
    for (int c = 0; c < 3; ++c) {
        cam.R(0, c) = right[c];
        cam.R(1, c) = down[c];
        cam.R(2, c) = fwd[c];
    }
    cam.t = cam.R * (-eye);
    return cam;
}

/// Cameras spread over an azimuth arc at radius r, alternating +/- elevation.
inline std::vector<Camera> arc_cameras(int n, double radius, double arc_deg, double elev_deg,
                                       int size) {
    std::vector<Camera> cams;
    for (int i = 0; i < n; ++i) {
        double az = arc_deg >= 360.0 ? 2.0 * kPi * i / n
                    : n > 1          ? deg2rad(arc_deg) * (i / double(n - 1) - 0.5)
                                     : 0.0;
        double el = (i % 2 ? -1.0 : 1.0) * deg2rad(elev_deg);
        Vec3 eye{radius * std::cos(el) * std::sin(az), radius * std::sin(el),
                 radius * std::cos(el) * std::cos(az)};
        cams.push_back(look_at(eye, Vec3{0, 0, 0}, size));
    }
    return cams;
}

struct RenderedView {
    RenderResult r;
    Camera cam;
};

inline std::vector<RenderedView> render_sphere_views(const std::vector<Camera>& cams,
                                                     const Brdf& brdf,
                                                     const EnvironmentMap& env) {
    Sphere sphere(Vec3{0, 0, 0}, 1.0);
    std::vector<RenderedView> out;
    for (const auto& cam : cams) out.push_back({render_view(sphere, brdf, cam, env), cam});
    return out;
}

inline NormalDensityField view_density(const RenderedView& v, const EnvironmentMap& env,
                                       const Brdf& brdf, int levels = 4) {
    SfsParams sp;
    sp.levels = levels;
    sp.laplace.log_floor = std::log(1e-6 * std::fmax(1e-30f, v.r.image.max_value()));
    NormalSampleSet set = coarse_to_fine_search(v.r.image, v.r.mask, env, brdf, v.cam, sp);
    return aggregate_density(set, v.r.image, AggregateParams{});
}

/// Unique temp path, removed by the caller.
inline std::string temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "nlmvs_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

/// GT camera-frame normal map (render_view emits world-frame).
inline NormalMap to_camera_frame(const NormalMap& world, const Camera& cam) {
    NormalMap out(world.width(), world.height(), 3);
    for (int y = 0; y < world.height(); ++y)
        for (int x = 0; x < world.width(); ++x) {
            Rgb w = world.rgb(x, y);
            Vec3 c = cam.R * Vec3{w.r, w.g, w.b};
            out.set_rgb(x, y, {c.x, c.y, c.z});
        }
    return out;
}

} // namespace test_support
