#include "nlmvs/scene.hpp"

#include "nlmvs/errors.hpp"
#include "nlmvs/pfm.hpp"
#include "nlmvs/render.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <random>

namespace nlmvs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json mat3_to_json(const Mat3& m) {
    json rows = json::array();
    for (int r = 0; r < 3; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
    return rows;
}

Mat3 mat3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3)
        throw Error(ErrorCategory::Format, "scene: rotation must be a 3x3 array");
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
        if (!j[r].is_array() || j[r].size() != 3)
            throw Error(ErrorCategory::Format, "scene: rotation must be a 3x3 array");
        for (int c = 0; c < 3; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

json vec3_to_json(const Vec3& v) { return {v.x, v.y, v.z}; }

Vec3 vec3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3)
        throw Error(ErrorCategory::Format, "scene: expected 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::string resolve(const fs::path& base, const std::string& p) {
    fs::path q(p);
    return q.is_absolute() ? q.string() : (base / q).string();
}

} // namespace

SceneDescription SceneDescription::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::Io, "scene: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCategory::Format, std::string("scene: parse failed: ") + e.what());
    }
    if (j.value("schema", "") != kSchema)
        throw Error(ErrorCategory::Format, "scene: unsupported schema in " + path);

    fs::path base = fs::path(path).parent_path();
    SceneDescription s;
    s.env_map_path = resolve(base, j.at("env_map").get<std::string>());
    s.bbox_min = vec3_from_json(j.at("bbox").at("min"));
    s.bbox_max = vec3_from_json(j.at("bbox").at("max"));
    if (j.contains("up_axis")) s.up_axis = vec3_from_json(j["up_axis"]);
    if (j.contains("gt_mesh")) s.gt_mesh_path = resolve(base, j["gt_mesh"].get<std::string>());

    if (!j.contains("views") || !j["views"].is_array() || j["views"].empty())
        throw Error(ErrorCategory::Format, "scene: needs at least one view");
    for (const auto& jv : j["views"]) {
        ViewEntry v;
        v.image_path = resolve(base, jv.at("image").get<std::string>());
        const auto& k = jv.at("intrinsics");
        v.camera.fx = k.at("fx").get<double>();
        v.camera.fy = k.at("fy").get<double>();
        v.camera.cx = k.at("cx").get<double>();
        v.camera.cy = k.at("cy").get<double>();
        v.camera.width = jv.at("width").get<int>();
        v.camera.height = jv.at("height").get<int>();
        v.camera.R = mat3_from_json(jv.at("rotation"));
        v.camera.t = vec3_from_json(jv.at("translation"));
        if (!v.camera.valid_rotation(1e-6))
            throw Error(ErrorCategory::Format, "scene: rotation is not orthonormal");
        if (jv.contains("gt_depth")) v.gt_depth_path = resolve(base, jv["gt_depth"].get<std::string>());
        if (jv.contains("gt_normal"))
            v.gt_normal_path = resolve(base, jv["gt_normal"].get<std::string>());
        if (jv.contains("mask")) v.mask_path = resolve(base, jv["mask"].get<std::string>());
        s.views.push_back(std::move(v));
    }
    return s;
}

void SceneDescription::save(const std::string& path) const {
    fs::path base = fs::path(path).parent_path();
    auto relativize = [&](const std::string& p) {
        std::error_code ec;
        fs::path rel = fs::relative(p, base, ec);
        return ec ? p : rel.string();
    };

    json j;
    j["schema"] = kSchema;
    j["env_map"] = relativize(env_map_path);
    j["bbox"] = {{"min", vec3_to_json(bbox_min)}, {"max", vec3_to_json(bbox_max)}};
    j["up_axis"] = vec3_to_json(up_axis);
    if (gt_mesh_path) j["gt_mesh"] = relativize(*gt_mesh_path);
    j["views"] = json::array();
    for (const auto& v : views) {
        json jv;
        jv["image"] = relativize(v.image_path);
        jv["width"] = v.camera.width;
        jv["height"] = v.camera.height;
        jv["intrinsics"] = {{"fx", v.camera.fx},
                            {"fy", v.camera.fy},
                            {"cx", v.camera.cx},
                            {"cy", v.camera.cy}};
        jv["rotation"] = mat3_to_json(v.camera.R);
        jv["translation"] = vec3_to_json(v.camera.t);
        if (v.gt_depth_path) jv["gt_depth"] = relativize(*v.gt_depth_path);
        if (v.gt_normal_path) jv["gt_normal"] = relativize(*v.gt_normal_path);
        if (v.mask_path) jv["mask"] = relativize(*v.mask_path);
        j["views"].push_back(std::move(jv));
    }
    std::ofstream out(path);
    if (!out) throw Error(ErrorCategory::Io, "scene: cannot write " + path);
    out << j.dump(2) << "\n";
}

namespace {

Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_deg, int size) {
    Vec3 fwd = normalized(target - eye);
    Vec3 right = normalized(cross(fwd, up));
    Vec3 down = cross(fwd, right); // camera y points down
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

} // namespace

SceneDescription generate_scene(const GenerateOptions& opts, const Brdf& brdf,
                                const EnvironmentMap& env, const std::string& out_dir) {
    if (opts.n_views < 5) throw Error(ErrorCategory::Config, "generate: need at least 5 views");

    std::unique_ptr<Shape> shape;
    switch (opts.shape) {
        case GenerateOptions::ShapeKind::Sphere:
            shape = std::make_unique<Sphere>(Vec3{0, 0, 0}, 1.0);
            break;
        case GenerateOptions::ShapeKind::Superellipsoid:
            shape = std::make_unique<Superellipsoid>(Vec3{0, 0, 0}, Vec3{1, 1, 1},
                                                     opts.superellipsoid_exponent);
            break;
        case GenerateOptions::ShapeKind::Mesh:
            shape = std::make_unique<TriangleMesh>(TriangleMesh::load_obj(opts.mesh_path));
            break;
    }

    fs::create_directories(out_dir);
    fs::path base(out_dir);

    SceneDescription scene;
    shape->bounds(scene.bbox_min, scene.bbox_max);
    scene.up_axis = {0, 1, 0};
    scene.env_map_path = (base / "env.pfm").string();
    write_pfm(env.image(), scene.env_map_path);

    // ground-truth mesh for point-to-surface evaluation
    std::string mesh_path = (base / "gt_mesh.obj").string();
    switch (opts.shape) {
        case GenerateOptions::ShapeKind::Sphere:
            TriangleMesh::make_sphere(Vec3{0, 0, 0}, 1.0, 32).save_obj(mesh_path);
            break;
        case GenerateOptions::ShapeKind::Superellipsoid:
            TriangleMesh::make_superellipsoid(Vec3{0, 0, 0}, Vec3{1, 1, 1},
                                              opts.superellipsoid_exponent, 32)
                .save_obj(mesh_path);
            break;
        case GenerateOptions::ShapeKind::Mesh:
            mesh_path = opts.mesh_path;
            break;
    }
    scene.gt_mesh_path = mesh_path;

    std::mt19937 rng(opts.seed);
    std::uniform_real_distribution<double> jitter(-deg2rad(opts.jitter_deg),
                                                  deg2rad(opts.jitter_deg));

    const double fov = 2.0 * rad2deg(std::atan(1.3 / opts.ring_radius));
    for (int i = 0; i < opts.n_views; ++i) {
        double az = opts.arc_deg >= 360.0
                        ? 2.0 * kPi * i / opts.n_views
                        : deg2rad(opts.arc_deg) * (i / double(opts.n_views - 1) - 0.5);
        double el = (i % 2 ? -1.0 : 1.0) * deg2rad(opts.elevation_deg);
        if (opts.jitter_deg > 0) {
            az += jitter(rng);
            el += jitter(rng);
        }
        Vec3 eye{opts.ring_radius * std::cos(el) * std::sin(az), opts.ring_radius * std::sin(el),
                 opts.ring_radius * std::cos(el) * std::cos(az)};
        Camera cam = look_at(eye, Vec3{0, 0, 0}, Vec3{0, 1, 0}, fov, opts.image_size);

        RenderOptions ro;
        ro.orthographic_shading = opts.orthographic_shading;
        RenderResult r = render_view(*shape, brdf, cam, env, ro);

        std::string tag = std::to_string(i);
        ViewEntry v;
        v.camera = cam;
        v.image_path = (base / ("view" + tag + ".pfm")).string();
        v.gt_depth_path = (base / ("depth" + tag + ".pfm")).string();
        v.gt_normal_path = (base / ("normal" + tag + ".pfm")).string();
        v.mask_path = (base / ("mask" + tag + ".pgm")).string();
        write_pfm(r.image, v.image_path);
        write_pfm(r.depth, *v.gt_depth_path);
        write_pfm(r.normal, *v.gt_normal_path);
        write_pgm_mask(r.mask, *v.mask_path);
        scene.views.push_back(std::move(v));
    }
    scene.save((base / "scene.json").string());
    return SceneDescription::load((base / "scene.json").string());
}

} // namespace nlmvs
