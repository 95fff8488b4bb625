#pragma once

#include "nlmvs/brdf.hpp"
#include "nlmvs/camera.hpp"
#include "nlmvs/envmap.hpp"
#include "nlmvs/shapes.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nlmvs {

struct ViewEntry {
    std::string image_path;
    Camera camera;
    std::optional<std::string> gt_depth_path;
    std::optional<std::string> gt_normal_path;
    std::optional<std::string> mask_path;
};

/// On-disk scene schema "nlmvs-scene/1" (JSON). Relative paths resolve
/// against the scene file's directory.
struct SceneDescription {
    static constexpr const char* kSchema = "nlmvs-scene/1";

    std::vector<ViewEntry> views;
    std::string env_map_path;
    Vec3 bbox_min, bbox_max;
    Vec3 up_axis{0, 1, 0};
    std::optional<std::string> gt_mesh_path;

    double bbox_diagonal() const { return norm(bbox_max - bbox_min); }

    static SceneDescription load(const std::string& path);
    void save(const std::string& path) const;
};

struct GenerateOptions {
    enum class ShapeKind { Sphere, Superellipsoid, Mesh };

    ShapeKind shape = ShapeKind::Sphere;
    std::string mesh_path;          // for ShapeKind::Mesh
    double superellipsoid_exponent = 4.0;
    int n_views = 10;
    double ring_radius = 3.0;
    double arc_deg = 360.0;         // azimuth span; < 360 clusters views on one side
    double elevation_deg = 20.0;    // views alternate between +/- this elevation
    double jitter_deg = 0.0;        // uniform +/- jitter, azimuth and elevation
    int image_size = 128;
    uint32_t seed = 0;
    bool orthographic_shading = true;
};

/// Renders a camera-ring scene and writes images, ground truth, and the scene
/// file into out_dir. Returns the loaded-back description.
SceneDescription generate_scene(const GenerateOptions& opts, const Brdf& brdf,
                                const EnvironmentMap& env, const std::string& out_dir);

} // namespace nlmvs
