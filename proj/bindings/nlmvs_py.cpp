// Python bindings for the nlmvs core library.
//
// Images and masks cross the boundary as first-class objects with
// numpy() / from_numpy() converters so pipelines can stay in C++ types
// between stages and only materialize arrays when inspecting results.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nlmvs/brdf.hpp"
#include "nlmvs/camera.hpp"
#include "nlmvs/envmap.hpp"
#include "nlmvs/errors.hpp"
#include "nlmvs/fusion.hpp"
#include "nlmvs/image.hpp"
#include "nlmvs/math.hpp"
#include "nlmvs/metrics.hpp"
#include "nlmvs/mvs.hpp"
#include "nlmvs/parallel.hpp"
#include "nlmvs/pfm.hpp"
#include "nlmvs/reflectance.hpp"
#include "nlmvs/render.hpp"
#include "nlmvs/scene.hpp"
#include "nlmvs/sfs.hpp"
#include "nlmvs/shapes.hpp"

#include <cstring>
#include <sstream>

namespace py = pybind11;
using namespace nlmvs;

namespace {

py::array_t<float> image_to_numpy(const HdrImage& img) {
    if (img.empty()) return py::array_t<float>();
    std::vector<py::ssize_t> shape{img.height(), img.width()};
    if (img.channels() == 3) shape.push_back(3);
    py::array_t<float> out(shape);
    std::memcpy(out.mutable_data(), img.data().data(), img.data().size() * sizeof(float));
    return out;
}

HdrImage image_from_numpy(py::array_t<float, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 2 && arr.ndim() != 3)
        throw Error(ErrorCategory::Config, "expected a (H,W) or (H,W,3) array");
    int channels = arr.ndim() == 3 ? static_cast<int>(arr.shape(2)) : 1;
    if (arr.ndim() == 3 && channels != 3)
        throw Error(ErrorCategory::Config, "expected 3 channels in the last axis");
    HdrImage img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)), channels);
    std::memcpy(img.data().data(), arr.data(), img.data().size() * sizeof(float));
    return img;
}

py::array_t<bool> mask_to_numpy(const Mask& m) {
    if (m.empty()) return py::array_t<bool>();
    py::array_t<bool> out({m.height(), m.width()});
    auto* dst = out.mutable_data();
    for (size_t i = 0; i < m.data().size(); ++i) dst[i] = m.data()[i] != 0;
    return out;
}

Mask mask_from_numpy(py::array_t<bool, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 2) throw Error(ErrorCategory::Config, "expected a (H,W) boolean array");
    Mask m(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
    const bool* src = arr.data();
    for (size_t i = 0; i < m.data().size(); ++i) m.data()[i] = src[i] ? 1 : 0;
    return m;
}

py::array_t<double> mat3_to_numpy(const Mat3& m) {
    py::array_t<double> out({3, 3});
    std::memcpy(out.mutable_data(), m.m.data(), 9 * sizeof(double));
    return out;
}

Mat3 mat3_from_numpy(py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 2 || arr.shape(0) != 3 || arr.shape(1) != 3)
        throw Error(ErrorCategory::Config, "expected a 3x3 array");
    Mat3 m;
    std::memcpy(m.m.data(), arr.data(), 9 * sizeof(double));
    return m;
}

Vec3 vec3_from_seq(const py::sequence& s) {
    if (py::len(s) != 3) throw Error(ErrorCategory::Config, "expected a length-3 sequence");
    return {s[0].cast<double>(), s[1].cast<double>(), s[2].cast<double>()};
}

Rgb rgb_from_seq(const py::sequence& s) {
    if (py::len(s) != 3) throw Error(ErrorCategory::Config, "expected a length-3 sequence");
    return {s[0].cast<double>(), s[1].cast<double>(), s[2].cast<double>()};
}

template <typename T>
py::array_t<float> volume_slice(const CostVolumes& v, const std::vector<T>& data, int comps) {
    std::vector<py::ssize_t> shape{v.depth_count, v.height, v.width};
    if (comps > 1) shape.push_back(comps);
    py::array_t<float> out(shape);
    auto* dst = out.mutable_data();
    for (size_t i = 0; i < data.size(); ++i) dst[i] = static_cast<float>(data[i]);
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multi-view stereo toolkit for textureless, non-Lambertian surfaces "
              "under known illumination";

    py::register_exception<Error>(m, "NlmvsError");

    // ---- math -----------------------------------------------------------
    py::class_<Vec3>(m, "Vec3")
        .def(py::init<>())
        .def(py::init<double, double, double>(), py::arg("x"), py::arg("y"), py::arg("z"))
        .def(py::init(&vec3_from_seq))
        .def_readwrite("x", &Vec3::x)
        .def_readwrite("y", &Vec3::y)
        .def_readwrite("z", &Vec3::z)
        .def("__add__", [](const Vec3& a, const Vec3& b) { return a + b; })
        .def("__sub__", [](const Vec3& a, const Vec3& b) { return a - b; })
        .def("__neg__", [](const Vec3& a) { return -a; })
        .def("__mul__", [](const Vec3& a, double s) { return a * s; })
        .def("__rmul__", [](const Vec3& a, double s) { return a * s; })
        .def("__getitem__", [](const Vec3& a, int i) {
            if (i < 0 || i > 2) throw py::index_error();
            return a[i];
        })
        .def("__iter__",
             [](const Vec3& a) {
                 return py::iter(py::make_tuple(a.x, a.y, a.z));
             })
        .def("__repr__", [](const Vec3& a) {
            std::ostringstream os;
            os << "Vec3(" << a.x << ", " << a.y << ", " << a.z << ")";
            return os.str();
        });
    py::implicitly_convertible<py::sequence, Vec3>();

    py::class_<Rgb>(m, "Rgb")
        .def(py::init<>())
        .def(py::init<double, double, double>(), py::arg("r"), py::arg("g"), py::arg("b"))
        .def(py::init<double>(), py::arg("value"))
        .def(py::init(&rgb_from_seq))
        .def_readwrite("r", &Rgb::r)
        .def_readwrite("g", &Rgb::g)
        .def_readwrite("b", &Rgb::b)
        .def("max_channel", &Rgb::max_channel)
        .def("__getitem__", [](const Rgb& c, int i) {
            if (i < 0 || i > 2) throw py::index_error();
            return c[i];
        })
        .def("__iter__",
             [](const Rgb& c) {
                 return py::iter(py::make_tuple(c.r, c.g, c.b));
             })
        .def("__repr__", [](const Rgb& c) {
            std::ostringstream os;
            os << "Rgb(" << c.r << ", " << c.g << ", " << c.b << ")";
            return os.str();
        });
    py::implicitly_convertible<py::sequence, Rgb>();

    py::class_<Mat3>(m, "Mat3")
        .def(py::init<>())
        .def(py::init(&mat3_from_numpy))
        .def_static("identity", &Mat3::identity)
        .def_static("rotation_axis_angle", &Mat3::rotation_axis_angle, py::arg("axis"),
                    py::arg("angle_rad"))
        .def("numpy", &mat3_to_numpy)
        .def("transposed", &Mat3::transposed)
        .def("det", &Mat3::det)
        .def("is_rotation", &Mat3::is_rotation, py::arg("tol") = 1e-6)
        .def("__matmul__", [](const Mat3& a, const Mat3& b) { return a * b; })
        .def("__mul__", [](const Mat3& a, const Vec3& v) { return a * v; });

    m.def("dot", &dot);
    m.def("cross", &cross);
    m.def("norm", &norm);
    m.def("normalized", &normalized);
    m.def("angle_deg", &angle_deg, "Angle between two vectors in degrees");

    // ---- images and masks -------------------------------------------------
    py::class_<HdrImage>(m, "HdrImage")
        .def(py::init<>())
        .def(py::init<int, int, int, float>(), py::arg("width"), py::arg("height"),
             py::arg("channels"), py::arg("fill") = 0.f)
        .def_static("from_numpy", &image_from_numpy,
                    "Build from a float32 (H,W) or (H,W,3) array")
        .def("numpy", &image_to_numpy, "Copy out as a float32 (H,W) or (H,W,3) array")
        .def_property_readonly("width", &HdrImage::width)
        .def_property_readonly("height", &HdrImage::height)
        .def_property_readonly("channels", &HdrImage::channels)
        .def("max_value", &HdrImage::max_value)
        .def("rgb", &HdrImage::rgb, py::arg("x"), py::arg("y"))
        .def("set_rgb", &HdrImage::set_rgb, py::arg("x"), py::arg("y"), py::arg("value"));

    py::class_<Mask>(m, "Mask")
        .def(py::init<>())
        .def(py::init<int, int, bool>(), py::arg("width"), py::arg("height"),
             py::arg("fill") = false)
        .def_static("from_numpy", &mask_from_numpy, "Build from a boolean (H,W) array")
        .def("numpy", &mask_to_numpy, "Copy out as a boolean (H,W) array")
        .def_property_readonly("width", &Mask::width)
        .def_property_readonly("height", &Mask::height)
        .def("count", &Mask::count)
        .def("at", &Mask::at, py::arg("x"), py::arg("y"))
        .def("set", &Mask::set, py::arg("x"), py::arg("y"), py::arg("value"));

    m.def("read_pfm", &read_pfm, py::arg("path"));
    m.def("write_pfm", &write_pfm, py::arg("image"), py::arg("path"));
    m.def("read_pgm_mask", &read_pgm_mask, py::arg("path"));
    m.def("write_pgm_mask", &write_pgm_mask, py::arg("mask"), py::arg("path"));

    m.def("set_worker_count", &set_worker_count, py::arg("n"),
          "0 = hardware concurrency, 1 = sequential");
    m.def("worker_count", &worker_count);

    // ---- camera -----------------------------------------------------------
    py::class_<Camera>(m, "Camera")
        .def(py::init<>())
        .def_readwrite("fx", &Camera::fx)
        .def_readwrite("fy", &Camera::fy)
        .def_readwrite("cx", &Camera::cx)
        .def_readwrite("cy", &Camera::cy)
        .def_readwrite("R", &Camera::R)
        .def_readwrite("t", &Camera::t)
        .def_readwrite("width", &Camera::width)
        .def_readwrite("height", &Camera::height)
        .def("center", &Camera::center)
        .def("axis", &Camera::axis)
        .def("world_to_cam", &Camera::world_to_cam)
        .def("cam_to_world", &Camera::cam_to_world)
        .def("project",
             [](const Camera& c, const Vec3& world) -> py::object {
                 double px, py_, d;
                 if (!c.project(world, px, py_, d)) return py::none();
                 return py::make_tuple(px, py_, d);
             },
             "Returns (px, py, depth) or None when behind the camera")
        .def("backproject_world", &Camera::backproject_world, py::arg("px"), py::arg("py"),
             py::arg("depth"))
        .def("ray_dir_world", &Camera::ray_dir_world, py::arg("px"), py::arg("py"))
        .def("valid_rotation", &Camera::valid_rotation, py::arg("tol") = 1e-6);

    // ---- environment map ----------------------------------------------------
    py::class_<EnvironmentMap>(m, "EnvironmentMap")
        .def(py::init<HdrImage>(), py::arg("radiance"))
        .def_static("constant", &EnvironmentMap::constant, py::arg("width"), py::arg("height"),
                    py::arg("value"))
        .def_static("from_pfm", &EnvironmentMap::from_pfm, py::arg("path"))
        .def_property_readonly("width", &EnvironmentMap::width)
        .def_property_readonly("height", &EnvironmentMap::height)
        .def("image", &EnvironmentMap::image)
        .def("texel", &EnvironmentMap::texel, py::arg("u"), py::arg("v"))
        .def("set_texel", &EnvironmentMap::set_texel, py::arg("u"), py::arg("v"), py::arg("value"))
        .def("texel_direction", &EnvironmentMap::texel_direction, py::arg("u"), py::arg("v"))
        .def("texel_solid_angle", &EnvironmentMap::texel_solid_angle, py::arg("u"), py::arg("v"))
        .def("radiance", &EnvironmentMap::radiance, py::arg("dir"))
        .def("scaled", &EnvironmentMap::scaled, py::arg("s"))
        .def("rotated", &EnvironmentMap::rotated, py::arg("rot"))
        .def("upsampled", &EnvironmentMap::upsampled, py::arg("factor"));

    m.def("make_procedural_env", &make_procedural_env, py::arg("width"), py::arg("height"),
          py::arg("seed"), "Deterministic synthetic illumination");

    // ---- BRDFs ----------------------------------------------------------------
    py::class_<Brdf> brdf(m, "Brdf");
    brdf.def("eval", &Brdf::eval, py::arg("wi"), py::arg("wo"), py::arg("n"));

    py::enum_<Brdf::Kind>(brdf, "Kind")
        .value("Lambertian", Brdf::Kind::Lambertian)
        .value("Microfacet", Brdf::Kind::Microfacet)
        .value("MerlTabulated", Brdf::Kind::MerlTabulated);
    brdf.def_property_readonly("kind", &Brdf::kind);

    py::class_<LambertianBrdf, Brdf>(m, "LambertianBrdf")
        .def(py::init<const Rgb&>(), py::arg("albedo"))
        .def_property_readonly("albedo", &LambertianBrdf::albedo);

    py::class_<MicrofacetBrdf, Brdf>(m, "MicrofacetBrdf")
        .def(py::init<const Rgb&, const Rgb&, double>(), py::arg("diffuse"), py::arg("specular"),
             py::arg("roughness"))
        .def_property_readonly("diffuse", &MicrofacetBrdf::diffuse)
        .def_property_readonly("specular", &MicrofacetBrdf::specular)
        .def_property_readonly("roughness", &MicrofacetBrdf::roughness);

    py::class_<MerlBrdf, Brdf>(m, "MerlBrdf")
        .def_static("load", &MerlBrdf::load, py::arg("path"))
        .def("table", [](const MerlBrdf& b) {
            py::array_t<float> out({3, MerlBrdf::kThetaH, MerlBrdf::kThetaD, MerlBrdf::kPhiD});
            std::memcpy(out.mutable_data(), b.table().data(), b.table().size() * sizeof(float));
            return out;
        });

    // ---- shapes -------------------------------------------------------------
    py::class_<Shape> shape(m, "Shape");
    shape.def("bounds", [](const Shape& s) {
        Vec3 lo, hi;
        s.bounds(lo, hi);
        return py::make_tuple(lo, hi);
    });

    py::class_<Sphere, Shape>(m, "Sphere")
        .def(py::init<const Vec3&, double>(), py::arg("center"), py::arg("radius"))
        .def_property_readonly("center", &Sphere::center)
        .def_property_readonly("radius", &Sphere::radius);

    py::class_<Superellipsoid, Shape>(m, "Superellipsoid")
        .def(py::init<const Vec3&, const Vec3&, double>(), py::arg("center"), py::arg("radii"),
             py::arg("exponent"));

    py::class_<TriangleMesh, Shape>(m, "TriangleMesh")
        .def_static("load_obj", &TriangleMesh::load_obj, py::arg("path"))
        .def("save_obj", &TriangleMesh::save_obj, py::arg("path"))
        .def_static("make_sphere", &TriangleMesh::make_sphere, py::arg("center"),
                    py::arg("radius"), py::arg("subdiv"))
        .def_static("make_superellipsoid", &TriangleMesh::make_superellipsoid, py::arg("center"),
                    py::arg("radii"), py::arg("exponent"), py::arg("subdiv"))
        .def_property_readonly("triangle_count", &TriangleMesh::triangle_count)
        .def("distance_to", &TriangleMesh::distance_to, py::arg("p"));

    // ---- forward model ---------------------------------------------------------
    m.def("render_irradiance", &render_irradiance, py::arg("env"), py::arg("brdf"), py::arg("n"),
          py::arg("wo"),
          "Shading integral of illumination * BRDF * clamped cosine over the sphere");

    py::class_<RenderOptions>(m, "RenderOptions")
        .def(py::init<>())
        .def_readwrite("orthographic_shading", &RenderOptions::orthographic_shading);

    py::class_<RenderResult>(m, "RenderResult")
        .def_readonly("image", &RenderResult::image)
        .def_readonly("depth", &RenderResult::depth)
        .def_readonly("normal", &RenderResult::normal)
        .def_readonly("mask", &RenderResult::mask);

    m.def("render_view", &render_view, py::arg("shape"), py::arg("brdf"), py::arg("cam"),
          py::arg("env"), py::arg("opts") = RenderOptions{},
          "Shadowless direct-lighting render plus ground-truth depth/normal/mask");

    // ---- scene generation -------------------------------------------------------
    py::class_<ViewEntry>(m, "ViewEntry")
        .def_readwrite("image_path", &ViewEntry::image_path)
        .def_readwrite("camera", &ViewEntry::camera)
        .def_readwrite("gt_depth_path", &ViewEntry::gt_depth_path)
        .def_readwrite("gt_normal_path", &ViewEntry::gt_normal_path)
        .def_readwrite("mask_path", &ViewEntry::mask_path);

    py::class_<SceneDescription>(m, "SceneDescription")
        .def(py::init<>())
        .def_static("load", &SceneDescription::load, py::arg("path"))
        .def("save", &SceneDescription::save, py::arg("path"))
        .def_readwrite("views", &SceneDescription::views)
        .def_readwrite("env_map_path", &SceneDescription::env_map_path)
        .def_readwrite("bbox_min", &SceneDescription::bbox_min)
        .def_readwrite("bbox_max", &SceneDescription::bbox_max)
        .def_readwrite("up_axis", &SceneDescription::up_axis)
        .def_readwrite("gt_mesh_path", &SceneDescription::gt_mesh_path)
        .def("bbox_diagonal", &SceneDescription::bbox_diagonal);

    py::class_<GenerateOptions> gen(m, "GenerateOptions");
    py::enum_<GenerateOptions::ShapeKind>(gen, "ShapeKind")
        .value("Sphere", GenerateOptions::ShapeKind::Sphere)
        .value("Superellipsoid", GenerateOptions::ShapeKind::Superellipsoid)
        .value("Mesh", GenerateOptions::ShapeKind::Mesh);
    gen.def(py::init<>())
        .def_readwrite("shape", &GenerateOptions::shape)
        .def_readwrite("mesh_path", &GenerateOptions::mesh_path)
        .def_readwrite("superellipsoid_exponent", &GenerateOptions::superellipsoid_exponent)
        .def_readwrite("n_views", &GenerateOptions::n_views)
        .def_readwrite("ring_radius", &GenerateOptions::ring_radius)
        .def_readwrite("arc_deg", &GenerateOptions::arc_deg)
        .def_readwrite("elevation_deg", &GenerateOptions::elevation_deg)
        .def_readwrite("jitter_deg", &GenerateOptions::jitter_deg)
        .def_readwrite("image_size", &GenerateOptions::image_size)
        .def_readwrite("seed", &GenerateOptions::seed)
        .def_readwrite("orthographic_shading", &GenerateOptions::orthographic_shading);

    m.def("generate_scene", &generate_scene, py::arg("opts"), py::arg("brdf"), py::arg("env"),
          py::arg("out_dir"),
          "Renders a camera-ring scene and writes images, ground truth, and the scene file");

    // ---- per-pixel normal estimation ------------------------------------------------
    py::class_<HemiGrid>(m, "HemiGrid")
        .def_static("resolution_for_level", &HemiGrid::resolution_for_level, py::arg("level"))
        .def_static("active", &HemiGrid::active, py::arg("res"), py::arg("ix"), py::arg("iy"))
        .def_static("cell_normal", &HemiGrid::cell_normal, py::arg("res"), py::arg("ix"),
                    py::arg("iy"))
        .def_static("cell_diagonal_deg", &HemiGrid::cell_diagonal_deg, py::arg("res"));

    py::class_<LaplaceParams>(m, "LaplaceParams")
        .def(py::init<>())
        .def_readwrite("b", &LaplaceParams::b)
        .def_readwrite("log_floor", &LaplaceParams::log_floor);

    m.def("laplace_likelihood", &laplace_likelihood, py::arg("observed"), py::arg("predicted"),
          py::arg("params"));
    m.def("normal_likelihood", &normal_likelihood, py::arg("observed"), py::arg("env"),
          py::arg("brdf"), py::arg("wo"), py::arg("n"), py::arg("params"));

    py::class_<IrradianceTable>(m, "IrradianceTable")
        .def_static("build", &IrradianceTable::build, py::arg("env"), py::arg("brdf"),
                    py::arg("cam"), py::arg("resolutions"))
        .def("has", &IrradianceTable::has, py::arg("res"))
        .def("at", &IrradianceTable::at, py::arg("res"), py::arg("ix"), py::arg("iy"));

    py::class_<SfsParams>(m, "SfsParams")
        .def(py::init<>())
        .def_readwrite("levels", &SfsParams::levels)
        .def_readwrite("top_k", &SfsParams::top_k)
        .def_readwrite("subgrid", &SfsParams::subgrid)
        .def_readwrite("laplace", &SfsParams::laplace);

    py::class_<NormalSample>(m, "NormalSample")
        .def_readonly("dir", &NormalSample::dir)
        .def_readonly("likelihood", &NormalSample::likelihood)
        .def_readonly("prob", &NormalSample::prob)
        .def_readonly("cell_x", &NormalSample::cell_x)
        .def_readonly("cell_y", &NormalSample::cell_y);

    py::class_<NormalSampleSet>(m, "NormalSampleSet")
        .def_readonly("width", &NormalSampleSet::width)
        .def_readonly("height", &NormalSampleSet::height)
        .def_readonly("level", &NormalSampleSet::level)
        .def_readonly("mask", &NormalSampleSet::mask)
        .def("at", &NormalSampleSet::at, py::arg("x"), py::arg("y"),
             py::return_value_policy::copy);

    m.def("coarse_to_fine_search", &coarse_to_fine_search, py::arg("image"), py::arg("mask"),
          py::arg("env"), py::arg("brdf"), py::arg("cam"), py::arg("params"),
          "Coarse-to-fine likelihood search over the hemispherical grid (one view)");

    py::class_<DensitySample>(m, "DensitySample")
        .def_readonly("dir", &DensitySample::dir)
        .def_readonly("prob", &DensitySample::prob);

    py::class_<NormalDensityField>(m, "NormalDensityField")
        .def_readonly("width", &NormalDensityField::width)
        .def_readonly("height", &NormalDensityField::height)
        .def("at", &NormalDensityField::at, py::arg("x"), py::arg("y"),
             py::return_value_policy::copy)
        .def("save", &NormalDensityField::save, py::arg("path"))
        .def_static("load", &NormalDensityField::load, py::arg("path"));

    py::class_<AggregateParams>(m, "AggregateParams")
        .def(py::init<>())
        .def_readwrite("iters", &AggregateParams::iters)
        .def_readwrite("radius", &AggregateParams::radius)
        .def_readwrite("sigma_c_rel", &AggregateParams::sigma_c_rel);

    m.def("aggregate_density", &aggregate_density, py::arg("samples"), py::arg("image"),
          py::arg("params"), "Edge-aware contextual aggregation of per-pixel normal densities");
    m.def("apply_intensity_mask", &apply_intensity_mask, py::arg("image"), py::arg("mask"),
          py::arg("percentile"), "Drops pixels below an intensity percentile (shadow mask)");

    // ---- multi-view depth -----------------------------------------------------------
    py::class_<DepthHypothesisRange>(m, "DepthHypothesisRange")
        .def(py::init<double, double, int>(), py::arg("d_min"), py::arg("d_max"), py::arg("count"))
        .def_readonly("d_min", &DepthHypothesisRange::d_min)
        .def_readonly("d_max", &DepthHypothesisRange::d_max)
        .def_readonly("count", &DepthHypothesisRange::count)
        .def("depth", &DepthHypothesisRange::depth, py::arg("k"))
        .def("step", &DepthHypothesisRange::step, py::arg("k"));

    py::class_<ViewData>(m, "ViewData")
        .def(py::init<>())
        .def_readwrite("image", &ViewData::image)
        .def_readwrite("mask", &ViewData::mask)
        .def_readwrite("camera", &ViewData::camera)
        .def_readwrite("density", &ViewData::density);

    m.def("view_frame_rotation", &view_frame_rotation, py::arg("ref"), py::arg("src"),
          "Rotation taking src view-frame directions into the ref view frame");
    m.def("rotate_densities", &rotate_densities, py::arg("field"), py::arg("rot"));

    py::class_<CostVolumeParams>(m, "CostVolumeParams")
        .def(py::init<>())
        .def_readwrite("alpha_photo", &CostVolumeParams::alpha_photo)
        .def_readwrite("beta_normal", &CostVolumeParams::beta_normal)
        .def_readwrite("tau", &CostVolumeParams::tau)
        .def_readwrite("charbonnier_eps", &CostVolumeParams::charbonnier_eps)
        .def_readwrite("max_cost", &CostVolumeParams::max_cost)
        .def_readwrite("best_fraction", &CostVolumeParams::best_fraction)
        .def_readwrite("density_top_samples", &CostVolumeParams::density_top_samples)
        .def_readwrite("normal_top_cells", &CostVolumeParams::normal_top_cells)
        .def_readwrite("match_cone_deg", &CostVolumeParams::match_cone_deg)
        .def_readwrite("log_floor", &CostVolumeParams::log_floor)
        .def_readwrite("bbox_min", &CostVolumeParams::bbox_min)
        .def_readwrite("bbox_max", &CostVolumeParams::bbox_max);

    py::class_<CostVolumes>(m, "CostVolumes")
        .def_readonly("depth_count", &CostVolumes::depth_count)
        .def_readonly("width", &CostVolumes::width)
        .def_readonly("height", &CostVolumes::height)
        .def_readonly("range", &CostVolumes::range)
        .def_readonly("mask", &CostVolumes::mask)
        .def_readonly("tau", &CostVolumes::tau)
        .def("cost", [](const CostVolumes& v) { return volume_slice(v, v.cost, 1); },
             "Cost volume as a (D,H,W) array")
        .def("prob", [](const CostVolumes& v) { return volume_slice(v, v.prob, 1); },
             "Depth probabilities as a (D,H,W) array")
        .def("normal", [](const CostVolumes& v) { return volume_slice(v, v.normal, 3); },
             "Per-hypothesis normals as a (D,H,W,3) array, reference camera frame")
        .def("valid", [](const CostVolumes& v) {
            py::array_t<bool> out({v.depth_count, v.height, v.width});
            auto* dst = out.mutable_data();
            for (size_t i = 0; i < v.valid.size(); ++i) dst[i] = v.valid[i] != 0;
            return out;
        });

    m.def("build_cost_volume", &build_cost_volume, py::arg("ref"), py::arg("srcs"),
          py::arg("range"), py::arg("params"));

    py::class_<FilterParams>(m, "FilterParams")
        .def(py::init<>())
        .def_readwrite("radius", &FilterParams::radius)
        .def_readwrite("depth_window", &FilterParams::depth_window)
        .def_readwrite("sigma_c_rel", &FilterParams::sigma_c_rel);

    m.def("filter_cost_volume", &filter_cost_volume, py::arg("vol"), py::arg("guide"),
          py::arg("params"));

    py::class_<DepthNormalMaps>(m, "DepthNormalMaps")
        .def(py::init<>())
        .def_readwrite("depth", &DepthNormalMaps::depth)
        .def_readwrite("normal", &DepthNormalMaps::normal)
        .def_readwrite("mask", &DepthNormalMaps::mask);

    m.def("decode_depth_normal", &decode_depth_normal, py::arg("vol"),
          "Probability-weighted expectation over depth hypotheses");
    m.def("depth_to_normal",
          [](const DepthMap& depth, const Mask& mask, const Camera& cam) {
              Mask out_mask;
              NormalMap n = depth_to_normal(depth, mask, cam, &out_mask);
              return py::make_tuple(n, out_mask);
          },
          py::arg("depth"), py::arg("mask"), py::arg("cam"),
          "Normals from depth derivatives; returns (normal_map, mask)");
    m.def("consistency_score", &consistency_score, py::arg("normal"), py::arg("depth"),
          py::arg("mask"), py::arg("cam"),
          "Mean angular discrepancy (degrees) between normals and depth-derived normals");

    // ---- reflectance ----------------------------------------------------------------
    py::class_<BrdfParams> bparams(m, "BrdfParams");
    py::enum_<BrdfParams::Variant>(bparams, "Variant")
        .value("Lambertian", BrdfParams::Variant::Lambertian)
        .value("Microfacet", BrdfParams::Variant::Microfacet);
    bparams.def(py::init<>())
        .def_static("lambertian", &BrdfParams::lambertian, py::arg("albedo"))
        .def_static("microfacet", &BrdfParams::microfacet, py::arg("diffuse"), py::arg("specular"),
                    py::arg("roughness"))
        .def_readwrite("variant", &BrdfParams::variant)
        .def_readwrite("values", &BrdfParams::values)
        .def("lower_bounds", &BrdfParams::lower_bounds)
        .def("upper_bounds", &BrdfParams::upper_bounds)
        .def("make_brdf", &BrdfParams::make_brdf)
        .def("save", &BrdfParams::save, py::arg("path"))
        .def_static("load", &BrdfParams::load, py::arg("path"));

    py::class_<ReflectanceView>(m, "ReflectanceView")
        .def(py::init<>())
        .def_readwrite("image", &ReflectanceView::image)
        .def_readwrite("maps", &ReflectanceView::maps)
        .def_readwrite("camera", &ReflectanceView::camera);

    py::class_<ObjectiveParams>(m, "ObjectiveParams")
        .def(py::init<>())
        .def_readwrite("blur_sigma", &ObjectiveParams::blur_sigma)
        .def_readwrite("snap", &ObjectiveParams::snap)
        .def_readwrite("snap_cone_deg", &ObjectiveParams::snap_cone_deg)
        .def_readwrite("snap_samples", &ObjectiveParams::snap_samples)
        .def_readwrite("pixel_stride", &ObjectiveParams::pixel_stride)
        .def_readwrite("log_floor", &ObjectiveParams::log_floor);

    m.def("snapped_normal", &snapped_normal, py::arg("n_est"), py::arg("observed"), py::arg("env"),
          py::arg("brdf"), py::arg("wo"), py::arg("cone_deg"), py::arg("samples") = 64);
    m.def("reflectance_objective", &reflectance_objective, py::arg("params"), py::arg("views"),
          py::arg("env"), py::arg("objective"),
          "Blurred log-radiance consistency between observed and rendered views");

    py::class_<FitParams>(m, "FitParams")
        .def(py::init<>())
        .def_readwrite("budget", &FitParams::budget)
        .def_readwrite("objective", &FitParams::objective);

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("params", &FitResult::params)
        .def_readonly("objective", &FitResult::objective)
        .def_readonly("evals", &FitResult::evals);

    m.def("fit_reflectance", &fit_reflectance, py::arg("incumbent"), py::arg("views"),
          py::arg("env"), py::arg("fit"),
          "Derivative-free fit; never returns params worse than the incumbent");

    py::class_<JointView>(m, "JointView")
        .def(py::init<>())
        .def_readwrite("image", &JointView::image)
        .def_readwrite("mask", &JointView::mask)
        .def_readwrite("camera", &JointView::camera);

    py::class_<AlternateParams>(m, "AlternateParams")
        .def(py::init<>())
        .def_readwrite("rounds", &AlternateParams::rounds)
        .def_readwrite("sfs", &AlternateParams::sfs)
        .def_readwrite("aggregate", &AlternateParams::aggregate)
        .def_readwrite("cost", &AlternateParams::cost)
        .def_readwrite("filter", &AlternateParams::filter)
        .def_readwrite("range", &AlternateParams::range)
        .def_readwrite("fit", &AlternateParams::fit)
        .def_readwrite("initial", &AlternateParams::initial)
        .def_readwrite("fit_microfacet", &AlternateParams::fit_microfacet);

    py::class_<ObjectiveRecord>(m, "ObjectiveRecord")
        .def_readonly("round", &ObjectiveRecord::round)
        .def_readonly("phase", &ObjectiveRecord::phase)
        .def_readonly("value", &ObjectiveRecord::value);

    py::class_<AlternateResult>(m, "AlternateResult")
        .def_readonly("params", &AlternateResult::params)
        .def_readonly("maps", &AlternateResult::maps)
        .def_readonly("history", &AlternateResult::history);

    m.def("initialize_albedo", &initialize_albedo, py::arg("views"), py::arg("env"),
          "Median-radiance Lambertian initialization");
    m.def("alternate", &alternate, py::arg("views"), py::arg("env"), py::arg("params"),
          "Alternating geometry (per-pixel normals + plane sweep) and reflectance estimation");

    // ---- fusion ------------------------------------------------------------------------
    py::class_<OrientedPoint>(m, "OrientedPoint")
        .def(py::init<>())
        .def_readwrite("position", &OrientedPoint::position)
        .def_readwrite("normal", &OrientedPoint::normal)
        .def_readwrite("color", &OrientedPoint::color);

    py::class_<ViewNeighborhood>(m, "ViewNeighborhood")
        .def_readonly("reference", &ViewNeighborhood::reference)
        .def_property_readonly("sources", [](const ViewNeighborhood& n) {
            py::list out;
            for (int s : n.sources)
                if (s >= 0) out.append(s);
            return out;
        });

    m.def("select_neighbors", &select_neighbors, py::arg("poses"), py::arg("ref"),
          py::arg("up_axis"), "Four neighbors by signed azimuth about the up axis");

    py::class_<BackprojectOptions>(m, "BackprojectOptions")
        .def(py::init<>())
        .def_readwrite("stride", &BackprojectOptions::stride)
        .def_readwrite("min_confidence", &BackprojectOptions::min_confidence);

    m.def("backproject", &backproject, py::arg("maps"), py::arg("cam"),
          py::arg("opts") = BackprojectOptions{}, py::arg("max_prob") = nullptr,
          py::arg("color") = nullptr,
          "Unmasked pixels backprojected to world-frame oriented points");
    m.def("merge_clouds", &merge_clouds, py::arg("clouds"), py::arg("voxel"),
          "Voxel-grid fusion: per voxel centroid + normalized mean normal");
    m.def("write_ply", &write_ply, py::arg("cloud"), py::arg("path"));
    m.def("read_ply", &read_ply, py::arg("path"));
    m.def("cloud_positions",
          [](const OrientedPointCloud& cloud) {
              py::array_t<double> out({static_cast<py::ssize_t>(cloud.size()), py::ssize_t(3)});
              auto* dst = out.mutable_data();
              for (size_t i = 0; i < cloud.size(); ++i) {
                  dst[3 * i] = cloud[i].position.x;
                  dst[3 * i + 1] = cloud[i].position.y;
                  dst[3 * i + 2] = cloud[i].position.z;
              }
              return out;
          },
          py::arg("cloud"), "Positions of an oriented point cloud as an (N,3) array");
    m.def("cloud_normals",
          [](const OrientedPointCloud& cloud) {
              py::array_t<double> out({static_cast<py::ssize_t>(cloud.size()), py::ssize_t(3)});
              auto* dst = out.mutable_data();
              for (size_t i = 0; i < cloud.size(); ++i) {
                  dst[3 * i] = cloud[i].normal.x;
                  dst[3 * i + 1] = cloud[i].normal.y;
                  dst[3 * i + 2] = cloud[i].normal.z;
              }
              return out;
          },
          py::arg("cloud"), "Normals of an oriented point cloud as an (N,3) array");

    // ---- evaluation ----------------------------------------------------------------------
    py::class_<EvalReport>(m, "EvalReport")
        .def(py::init<>())
        .def_readwrite("depth_mae_pct", &EvalReport::depth_mae_pct)
        .def_readwrite("normal_mae_deg", &EvalReport::normal_mae_deg)
        .def_readwrite("frac_depth_below_2pct", &EvalReport::frac_depth_below_2pct)
        .def_readwrite("frac_normal_below_17deg", &EvalReport::frac_normal_below_17deg)
        .def_readwrite("frac_normal_below_19deg", &EvalReport::frac_normal_below_19deg)
        .def_readwrite("point_to_mesh_rms_pct", &EvalReport::point_to_mesh_rms_pct)
        .def("to_text", &EvalReport::to_text)
        .def("to_csv", &EvalReport::to_csv);

    m.def("depth_error", &depth_error, py::arg("est"), py::arg("gt"), py::arg("mask"),
          py::arg("bbox_diag"), "Mean |d_est - d_gt| / bbox_diag * 100 over the shared mask");
    m.def("depth_below", &depth_below, py::arg("est"), py::arg("gt"), py::arg("mask"),
          py::arg("bbox_diag"), py::arg("threshold_pct"));
    m.def("normal_error", &normal_error, py::arg("est"), py::arg("gt"), py::arg("mask"),
          "Mean angular error in degrees over the shared mask");
    m.def("normal_below", &normal_below, py::arg("est"), py::arg("gt"), py::arg("mask"),
          py::arg("threshold_deg"));
    m.def("point_to_mesh_rms", &point_to_mesh_rms, py::arg("cloud"), py::arg("gt_mesh"),
          py::arg("bbox_diag"), "RMS nearest-surface distance / bbox_diag * 100");
}
