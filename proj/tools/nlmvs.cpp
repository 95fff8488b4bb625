// nlmvs command-line pipeline: render / sfs / mvs / joint / fuse / eval.

#include "nlmvs/errors.hpp"
#include "nlmvs/fusion.hpp"
#include "nlmvs/metrics.hpp"
#include "nlmvs/mvs.hpp"
#include "nlmvs/parallel.hpp"
#include "nlmvs/pfm.hpp"
#include "nlmvs/reflectance.hpp"
#include "nlmvs/render.hpp"
#include "nlmvs/scene.hpp"
#include "nlmvs/sfs.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace nlmvs;

namespace {

constexpr const char* kVersion = "nlmvs 1.0.0";

class Manifest {
  public:
    void set(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
    void set(const std::string& key, const char* value) { entries_.emplace_back(key, value); }
    template <typename T>
    void set(const std::string& key, T value) {
        set(key, std::to_string(value));
    }

    void stage_begin(const std::string& name) {
        stage_name_ = name;
        stage_start_ = std::chrono::steady_clock::now();
    }
    void stage_end() {
        auto dt = std::chrono::steady_clock::now() - stage_start_;
        double s = std::chrono::duration<double>(dt).count();
        set("time_" + stage_name_ + "_s", s);
    }

    void write(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw Error(ErrorCategory::Io, "manifest: cannot write " + path);
        for (const auto& [k, v] : entries_) out << k << "=" << v << "\n";
    }

  private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::string stage_name_;
    std::chrono::steady_clock::time_point stage_start_;
};

struct CommonOpts {
    std::string out_dir;
    int workers = 0;
    uint32_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--out", c.out_dir, "Output directory")->required();
    cmd->add_option("--workers", c.workers, "Worker threads (0 = hardware, 1 = sequential)");
    cmd->add_option("--seed", c.seed, "Random seed");
}

void apply_common(CommonOpts& c, Manifest& m) {
    if (const char* e = std::getenv("NLMVS_OUT_DIR")) c.out_dir = e;
    if (const char* e = std::getenv("NLMVS_WORKERS")) c.workers = std::atoi(e);
    set_worker_count(c.workers);
    fs::create_directories(c.out_dir);
    m.set("version", kVersion);
    m.set("out", c.out_dir);
    m.set("workers", c.workers);
    m.set("seed", c.seed);
}

BrdfParams load_brdf_or(const std::string& file, const std::vector<double>& albedo) {
    if (!file.empty()) return BrdfParams::load(file);
    return BrdfParams::lambertian(Rgb{albedo[0], albedo[1], albedo[2]});
}

struct SfsCliOpts {
    double b = 0.1;
    int levels = 4;
    int top_k = 16;
    int aggregate_iters = 3;
    double mask_percentile = 0.0;
};

void add_sfs_opts(CLI::App* cmd, SfsCliOpts& o) {
    cmd->add_option("--b", o.b, "Laplace scale (log radiance)");
    cmd->add_option("--levels", o.levels, "Coarse-to-fine levels");
    cmd->add_option("--top-k", o.top_k, "Cells propagated between levels");
    cmd->add_option("--aggregate-iters", o.aggregate_iters, "Contextual aggregation iterations");
    cmd->add_option("--mask-percentile", o.mask_percentile,
                    "Drop pixels below this intensity percentile (0 = off)");
}

struct MvsCliOpts {
    double dmin = 0, dmax = 0;
    int num_hypotheses = 64;
    double alpha_photo = 1.0;
    double beta_normal = 2.0;
    double tau = 0.1;
    int filter_radius = 2;
};

void add_mvs_opts(CLI::App* cmd, MvsCliOpts& o) {
    cmd->add_option("--dmin", o.dmin, "Minimum depth hypothesis (0 = from bbox)");
    cmd->add_option("--dmax", o.dmax, "Maximum depth hypothesis (0 = from bbox)");
    cmd->add_option("--num-hypotheses", o.num_hypotheses, "Depth hypothesis count");
    cmd->add_option("--alpha-photo", o.alpha_photo, "Photometric cost weight");
    cmd->add_option("--beta-normal", o.beta_normal, "Normal-agreement cost weight");
    cmd->add_option("--tau", o.tau, "Softmax temperature");
    cmd->add_option("--filter-radius", o.filter_radius, "Cost aggregation radius (0 = off)");
}

struct LoadedView {
    HdrImage image;
    Mask mask;
    Camera camera;
};

LoadedView load_view(const ViewEntry& v) {
    LoadedView lv;
    lv.image = read_pfm(v.image_path);
    lv.camera = v.camera;
    if (v.mask_path)
        lv.mask = read_pgm_mask(*v.mask_path);
    else
        lv.mask = Mask(lv.image.width(), lv.image.height(), true);
    return lv;
}

DepthHypothesisRange range_from_scene(const SceneDescription& scene, const Camera& cam,
                                      const MvsCliOpts& o) {
    double dmin = o.dmin, dmax = o.dmax;
    if (dmin <= 0 || dmax <= 0) {
        // depth range covering the bbox corners in this view
        double lo = 1e30, hi = -1e30;
        for (int i = 0; i < 8; ++i) {
            Vec3 c{i & 1 ? scene.bbox_max.x : scene.bbox_min.x,
                   i & 2 ? scene.bbox_max.y : scene.bbox_min.y,
                   i & 4 ? scene.bbox_max.z : scene.bbox_min.z};
            double z = cam.world_to_cam(c).z;
            lo = std::min(lo, z);
            hi = std::max(hi, z);
        }
        if (dmin <= 0) dmin = std::max(1e-3, lo);
        if (dmax <= 0) dmax = hi;
    }
    return DepthHypothesisRange(dmin, dmax, o.num_hypotheses);
}

NormalDensityField compute_density(const LoadedView& lv, const EnvironmentMap& env,
                                   const Brdf& brdf, const SfsCliOpts& o) {
    SfsParams sp;
    sp.levels = o.levels;
    sp.top_k = o.top_k;
    sp.laplace.b = o.b;
    sp.laplace.log_floor = std::log(1e-6 * std::fmax(1e-30, lv.image.max_value()));
    Mask mask = apply_intensity_mask(lv.image, lv.mask, o.mask_percentile);
    NormalSampleSet set = coarse_to_fine_search(lv.image, mask, env, brdf, lv.camera, sp);
    AggregateParams ap;
    ap.iters = o.aggregate_iters;
    return aggregate_density(set, lv.image, ap);
}

struct MvsOutput {
    DepthNormalMaps maps;
    HdrImage max_prob;
};

MvsOutput run_mvs_for_ref(const SceneDescription& scene, const std::vector<LoadedView>& views,
                          const std::vector<NormalDensityField>& densities, int ref,
                          const std::vector<int>& sources, const MvsCliOpts& mo) {
    ViewData refdata{views[ref].image, views[ref].mask, views[ref].camera, densities[ref]};
    std::vector<ViewData> srcs;
    for (int s : sources) {
        ViewData sv{views[s].image, views[s].mask, views[s].camera,
                    rotate_densities(densities[s],
                                     view_frame_rotation(views[ref].camera, views[s].camera))};
        srcs.push_back(std::move(sv));
    }
    CostVolumeParams cp;
    cp.alpha_photo = mo.alpha_photo;
    cp.beta_normal = mo.beta_normal;
    cp.tau = mo.tau;
    Vec3 margin = (scene.bbox_max - scene.bbox_min) * 0.03;
    cp.bbox_min = scene.bbox_min - margin;
    cp.bbox_max = scene.bbox_max + margin;
    DepthHypothesisRange range = range_from_scene(scene, views[ref].camera, mo);
    CostVolumes vol = build_cost_volume(refdata, srcs, range, cp);
    FilterParams fp;
    fp.radius = mo.filter_radius;
    fp.depth_window = mo.filter_radius > 0 ? 3 : 1;
    vol = filter_cost_volume(vol, refdata.image, fp);

    MvsOutput out;
    out.maps = decode_depth_normal(vol);
    out.max_prob = HdrImage(vol.width, vol.height, 1);
    for (int y = 0; y < vol.height; ++y)
        for (int x = 0; x < vol.width; ++x) {
            float mp = 0;
            for (int d = 0; d < vol.depth_count; ++d)
                mp = std::max(mp, vol.prob[vol.idx(d, x, y)]);
            out.max_prob.at(x, y, 0) = mp;
        }
    return out;
}

std::vector<int> pick_sources(const SceneDescription& scene, int ref) {
    std::vector<int> sources;
    if (scene.views.size() >= 5) {
        std::vector<Camera> poses;
        for (const auto& v : scene.views) poses.push_back(v.camera);
        ViewNeighborhood nb = select_neighbors(poses, ref, scene.up_axis);
        sources.assign(nb.sources.begin(), nb.sources.end());
    } else {
        for (int i = 0; i < static_cast<int>(scene.views.size()); ++i)
            if (i != ref) sources.push_back(i);
    }
    return sources;
}

void write_maps(const fs::path& out, int ref, const DepthNormalMaps& maps,
                const HdrImage* max_prob) {
    std::string tag = std::to_string(ref);
    write_pfm(maps.depth, (out / ("depth" + tag + ".pfm")).string());
    write_pfm(maps.normal, (out / ("normal" + tag + ".pfm")).string());
    write_pgm_mask(maps.mask, (out / ("mask" + tag + ".pgm")).string());
    if (max_prob) write_pfm(*max_prob, (out / ("maxprob" + tag + ".pfm")).string());
}

// ---------------------------------------------------------------- render

int cmd_render(CLI::App& app) {
    auto* cmd = app.add_subcommand("render", "Generate a synthetic multi-view scene");
    auto opts = std::make_shared<CommonOpts>();
    add_common(cmd, *opts);

    auto shape = std::make_shared<std::string>("sphere");
    auto mesh = std::make_shared<std::string>();
    auto brdf_file = std::make_shared<std::string>();
    auto albedo = std::make_shared<std::vector<double>>(std::vector<double>{0.5, 0.5, 0.5});
    auto env_path = std::make_shared<std::string>();
    auto env_size = std::make_shared<int>(64);
    auto views = std::make_shared<int>(10);
    auto ring = std::make_shared<double>(3.0);
    auto arc = std::make_shared<double>(360.0);
    auto elevation = std::make_shared<double>(20.0);
    auto jitter = std::make_shared<double>(0.0);
    auto size = std::make_shared<int>(128);
    auto exponent = std::make_shared<double>(4.0);

    cmd->add_option("--shape", *shape, "sphere | superellipsoid | mesh")
        ->check(CLI::IsMember({"sphere", "superellipsoid", "mesh"}));
    cmd->add_option("--mesh", *mesh, "OBJ path for --shape mesh");
    cmd->add_option("--brdf", *brdf_file, "BRDF parameter file");
    cmd->add_option("--albedo", *albedo, "Lambertian albedo when no --brdf")->expected(3);
    cmd->add_option("--env", *env_path, "Environment map PFM (default: procedural)");
    cmd->add_option("--env-size", *env_size, "Procedural env width (height = width/2)");
    cmd->add_option("--views", *views, "Number of ring views");
    cmd->add_option("--ring-radius", *ring, "Camera ring radius");
    cmd->add_option("--arc", *arc, "Azimuth span of the views, degrees (360 = full ring)");
    cmd->add_option("--elevation", *elevation, "Alternating view elevation, degrees");
    cmd->add_option("--jitter", *jitter, "View placement jitter, degrees");
    cmd->add_option("--size", *size, "Image resolution");
    cmd->add_option("--exponent", *exponent, "Superellipsoid exponent");

    cmd->callback([=]() {
        Manifest m;
        apply_common(*opts, m);
        m.set("command", "render");
        m.set("shape", *shape);
        m.set("views", *views);
        m.set("ring_radius", *ring);
        m.set("jitter_deg", *jitter);
        m.set("image_size", *size);
        m.set("env", env_path->empty() ? "procedural" : *env_path);
        m.set("env_size", *env_size);
        m.set("brdf_file", brdf_file->empty() ? "(lambertian)" : *brdf_file);

        EnvironmentMap env = env_path->empty()
                                 ? make_procedural_env(*env_size, *env_size / 2, opts->seed)
                                 : EnvironmentMap::from_pfm(*env_path);
        BrdfParams params = load_brdf_or(*brdf_file, *albedo);
        params.save((fs::path(opts->out_dir) / "brdf_gt.txt").string());
        auto brdf = params.make_brdf();

        GenerateOptions g;
        g.shape = *shape == "sphere" ? GenerateOptions::ShapeKind::Sphere
                  : *shape == "mesh" ? GenerateOptions::ShapeKind::Mesh
                                     : GenerateOptions::ShapeKind::Superellipsoid;
        g.mesh_path = *mesh;
        g.superellipsoid_exponent = *exponent;
        g.n_views = *views;
        g.ring_radius = *ring;
        g.arc_deg = *arc;
        g.elevation_deg = *elevation;
        g.jitter_deg = *jitter;
        g.image_size = *size;
        g.seed = opts->seed;

        m.stage_begin("render");
        generate_scene(g, *brdf, env, opts->out_dir);
        m.stage_end();
        m.write((fs::path(opts->out_dir) / "manifest.txt").string());
    });
    return 0;
}

// ---------------------------------------------------------------- sfs

int cmd_sfs(CLI::App& app) {
    auto* cmd = app.add_subcommand("sfs", "Per-view surface normal densities");
    auto opts = std::make_shared<CommonOpts>();
    add_common(cmd, *opts);
    auto scene_path = std::make_shared<std::string>();
    auto view = std::make_shared<int>(0);
    auto brdf_file = std::make_shared<std::string>();
    auto albedo = std::make_shared<std::vector<double>>(std::vector<double>{0.5, 0.5, 0.5});
    auto so = std::make_shared<SfsCliOpts>();
    cmd->add_option("--scene", *scene_path, "Scene description")->required();
    cmd->add_option("--view", *view, "View index");
    cmd->add_option("--brdf", *brdf_file, "BRDF parameter file");
    cmd->add_option("--albedo", *albedo, "Lambertian albedo when no --brdf")->expected(3);
    add_sfs_opts(cmd, *so);

    cmd->callback([=]() {
        Manifest m;
        apply_common(*opts, m);
        m.set("command", "sfs");
        m.set("scene", *scene_path);
        m.set("view", *view);
        m.set("b", so->b);
        m.set("levels", so->levels);
        m.set("top_k", so->top_k);
        m.set("aggregate_iters", so->aggregate_iters);
        m.set("mask_percentile", so->mask_percentile);

        SceneDescription scene = SceneDescription::load(*scene_path);
        if (*view < 0 || *view >= static_cast<int>(scene.views.size()))
            throw Error(ErrorCategory::Config, "sfs: view index out of range");
        EnvironmentMap env = EnvironmentMap::from_pfm(scene.env_map_path);
        BrdfParams params = load_brdf_or(*brdf_file, *albedo);
        auto brdf = params.make_brdf();
        LoadedView lv = load_view(scene.views[*view]);

        m.stage_begin("sfs");
        NormalDensityField field = compute_density(lv, env, *brdf, *so);
        m.stage_end();

        fs::path out(opts->out_dir);
        field.save((out / ("density" + std::to_string(*view) + ".ndf")).string());

        // argmax normals, camera frame
        NormalMap nmap(field.width, field.height, 3);
        for (int y = 0; y < field.height; ++y)
            for (int x = 0; x < field.width; ++x) {
                const auto& px = field.at(x, y);
                if (px.empty()) continue;
                const DensitySample* best = &px[0];
                for (const auto& s : px)
                    if (s.prob > best->prob) best = &s;
                Vec3 n = view_to_cam(best->dir);
                nmap.set_rgb(x, y, {n.x, n.y, n.z});
            }
        write_pfm(nmap, (out / ("sfs_normal" + std::to_string(*view) + ".pfm")).string());
        m.write((out / "manifest.txt").string());
    });
    return 0;
}

// ---------------------------------------------------------------- mvs

int cmd_mvs(CLI::App& app) {
    auto* cmd = app.add_subcommand("mvs", "Plane-sweep depth and normals for one reference view");
    auto opts = std::make_shared<CommonOpts>();
    add_common(cmd, *opts);
    auto scene_path = std::make_shared<std::string>();
    auto ref = std::make_shared<int>(0);
    auto sources_opt = std::make_shared<std::vector<int>>();
    auto brdf_file = std::make_shared<std::string>();
    auto albedo = std::make_shared<std::vector<double>>(std::vector<double>{0.5, 0.5, 0.5});
    auto so = std::make_shared<SfsCliOpts>();
    auto mo = std::make_shared<MvsCliOpts>();
    cmd->add_option("--scene", *scene_path, "Scene description")->required();
    cmd->add_option("--ref", *ref, "Reference view index");
    cmd->add_option("--sources", *sources_opt, "Source view indices (default: neighbors)");
    cmd->add_option("--brdf", *brdf_file, "BRDF parameter file");
    cmd->add_option("--albedo", *albedo, "Lambertian albedo when no --brdf")->expected(3);
    add_sfs_opts(cmd, *so);
    add_mvs_opts(cmd, *mo);

    cmd->callback([=]() {
        Manifest m;
        apply_common(*opts, m);
        m.set("command", "mvs");
        m.set("scene", *scene_path);
        m.set("ref", *ref);
        m.set("b", so->b);
        m.set("levels", so->levels);
        m.set("num_hypotheses", mo->num_hypotheses);
        m.set("alpha_photo", mo->alpha_photo);
        m.set("beta_normal", mo->beta_normal);
        m.set("tau", mo->tau);
        m.set("filter_radius", mo->filter_radius);

        SceneDescription scene = SceneDescription::load(*scene_path);
        if (*ref < 0 || *ref >= static_cast<int>(scene.views.size()))
            throw Error(ErrorCategory::Config, "mvs: reference index out of range");
        EnvironmentMap env = EnvironmentMap::from_pfm(scene.env_map_path);
        BrdfParams params = load_brdf_or(*brdf_file, *albedo);
        auto brdf = params.make_brdf();

        std::vector<int> sources = sources_opt->empty() ? pick_sources(scene, *ref) : *sources_opt;
        std::string src_str;
        for (int s : sources) src_str += std::to_string(s) + " ";
        m.set("sources", src_str);

        std::vector<LoadedView> views(scene.views.size());
        std::vector<NormalDensityField> densities(scene.views.size());
        m.stage_begin("sfs");
        views[*ref] = load_view(scene.views[*ref]);
        densities[*ref] = compute_density(views[*ref], env, *brdf, *so);
        for (int s : sources) {
            views[s] = load_view(scene.views[s]);
            densities[s] = compute_density(views[s], env, *brdf, *so);
        }
        m.stage_end();

        m.stage_begin("mvs");
        MvsOutput out = run_mvs_for_ref(scene, views, densities, *ref, sources, *mo);
        m.stage_end();

        write_maps(opts->out_dir, *ref, out.maps, &out.max_prob);
        if (out.maps.mask.count() > 0) {
            double score = consistency_score(out.maps.normal, out.maps.depth, out.maps.mask,
                                             views[*ref].camera);
            m.set("consistency_deg", score);
        }
        m.write((fs::path(opts->out_dir) / "manifest.txt").string());
    });
    return 0;
}

// ---------------------------------------------------------------- joint

int cmd_joint(CLI::App& app) {
    auto* cmd = app.add_subcommand("joint", "Alternating shape and reflectance estimation");
    auto opts = std::make_shared<CommonOpts>();
    add_common(cmd, *opts);
    auto scene_path = std::make_shared<std::string>();
    auto so = std::make_shared<SfsCliOpts>();
    auto mo = std::make_shared<MvsCliOpts>();
    auto rounds = std::make_shared<int>(3);
    auto budget = std::make_shared<int>(200);
    auto blur_sigma = std::make_shared<double>(4.0);
    auto microfacet = std::make_shared<bool>(false);
    auto snap = std::make_shared<bool>(false);
    cmd->add_option("--scene", *scene_path, "Scene description")->required();
    cmd->add_option("--rounds", *rounds, "Alternation rounds");
    cmd->add_option("--budget", *budget, "Objective evaluations per reflectance fit");
    cmd->add_option("--blur-sigma", *blur_sigma, "Gaussian blur for the objective, pixels");
    cmd->add_flag("--microfacet", *microfacet, "Fit the microfacet family");
    cmd->add_flag("--snap", *snap, "Radiometric normal snapping in the objective");
    add_sfs_opts(cmd, *so);
    add_mvs_opts(cmd, *mo);

    cmd->callback([=]() {
        Manifest m;
        apply_common(*opts, m);
        m.set("command", "joint");
        m.set("scene", *scene_path);
        m.set("rounds", *rounds);
        m.set("budget", *budget);
        m.set("blur_sigma", *blur_sigma);
        m.set("microfacet", *microfacet ? 1 : 0);
        m.set("snap", *snap ? 1 : 0);
        m.set("b", so->b);
        m.set("levels", so->levels);
        m.set("num_hypotheses", mo->num_hypotheses);
        m.set("alpha_photo", mo->alpha_photo);
        m.set("beta_normal", mo->beta_normal);
        m.set("tau", mo->tau);
        m.set("filter_radius", mo->filter_radius);

        SceneDescription scene = SceneDescription::load(*scene_path);
        EnvironmentMap env = EnvironmentMap::from_pfm(scene.env_map_path);

        std::vector<JointView> views;
        for (const auto& v : scene.views) {
            LoadedView lv = load_view(v);
            views.push_back({std::move(lv.image), std::move(lv.mask), lv.camera});
        }

        AlternateParams ap;
        ap.rounds = *rounds;
        ap.sfs.levels = so->levels;
        ap.sfs.top_k = so->top_k;
        ap.sfs.laplace.b = so->b;
        ap.aggregate.iters = so->aggregate_iters;
        ap.cost.alpha_photo = mo->alpha_photo;
        ap.cost.beta_normal = mo->beta_normal;
        ap.cost.tau = mo->tau;
        Vec3 margin = (scene.bbox_max - scene.bbox_min) * 0.03;
        ap.cost.bbox_min = scene.bbox_min - margin;
        ap.cost.bbox_max = scene.bbox_max + margin;
        ap.filter.radius = mo->filter_radius;
        ap.filter.depth_window = mo->filter_radius > 0 ? 3 : 1;
        ap.range = range_from_scene(scene, views[0].camera, *mo);
        ap.fit.budget = *budget;
        ap.fit.objective.blur_sigma = *blur_sigma;
        ap.fit.objective.snap = *snap;
        ap.fit_microfacet = *microfacet;

        m.stage_begin("joint");
        AlternateResult result = alternate(views, env, ap);
        m.stage_end();

        fs::path out(opts->out_dir);
        result.params.save((out / "brdf.txt").string());
        {
            std::ofstream hist((out / "history.csv").string());
            hist << "round,phase,objective\n";
            for (const auto& r : result.history)
                hist << r.round << "," << r.phase << "," << r.value << "\n";
        }
        for (size_t i = 0; i < result.maps.size(); ++i)
            write_maps(out, static_cast<int>(i), result.maps[i], nullptr);
        m.write((out / "manifest.txt").string());
    });
    return 0;
}

// ---------------------------------------------------------------- fuse

int cmd_fuse(CLI::App& app) {
    auto* cmd = app.add_subcommand("fuse", "Whole-shape oriented point cloud");
    auto opts = std::make_shared<CommonOpts>();
    add_common(cmd, *opts);
    auto scene_path = std::make_shared<std::string>();
    auto brdf_file = std::make_shared<std::string>();
    auto albedo = std::make_shared<std::vector<double>>(std::vector<double>{0.5, 0.5, 0.5});
    auto so = std::make_shared<SfsCliOpts>();
    auto mo = std::make_shared<MvsCliOpts>();
    auto stride = std::make_shared<int>(1);
    auto voxel_rel = std::make_shared<double>(0.005);
    auto confidence = std::make_shared<double>(0.0);
    cmd->add_option("--scene", *scene_path, "Scene description")->required();
    cmd->add_option("--brdf", *brdf_file, "BRDF parameter file");
    cmd->add_option("--albedo", *albedo, "Lambertian albedo when no --brdf")->expected(3);
    cmd->add_option("--stride", *stride, "Backprojection pixel stride");
    cmd->add_option("--voxel", *voxel_rel, "Fusion voxel size, fraction of bbox diagonal");
    cmd->add_option("--confidence", *confidence,
                    "Minimum peak depth probability (0 = auto 2/D, negative = off)");
    add_sfs_opts(cmd, *so);
    add_mvs_opts(cmd, *mo);

    cmd->callback([=]() {
        Manifest m;
        apply_common(*opts, m);
        m.set("command", "fuse");
        m.set("scene", *scene_path);
        m.set("stride", *stride);
        m.set("voxel_rel", *voxel_rel);
        m.set("b", so->b);
        m.set("levels", so->levels);
        m.set("num_hypotheses", mo->num_hypotheses);
        m.set("alpha_photo", mo->alpha_photo);
        m.set("beta_normal", mo->beta_normal);
        m.set("tau", mo->tau);
        m.set("filter_radius", mo->filter_radius);

        SceneDescription scene = SceneDescription::load(*scene_path);
        EnvironmentMap env = EnvironmentMap::from_pfm(scene.env_map_path);
        BrdfParams params = load_brdf_or(*brdf_file, *albedo);
        auto brdf = params.make_brdf();

        double conf = *confidence == 0 ? 2.0 / mo->num_hypotheses : std::max(0.0, *confidence);
        m.set("confidence", conf);

        std::vector<LoadedView> views(scene.views.size());
        std::vector<NormalDensityField> densities(scene.views.size());
        m.stage_begin("sfs");
        for (size_t i = 0; i < scene.views.size(); ++i) {
            views[i] = load_view(scene.views[i]);
            densities[i] = compute_density(views[i], env, *brdf, *so);
        }
        m.stage_end();

        std::vector<OrientedPointCloud> clouds;
        m.stage_begin("mvs");
        for (int r = 0; r < static_cast<int>(scene.views.size()); ++r) {
            std::vector<int> sources = pick_sources(scene, r);
            MvsOutput out = run_mvs_for_ref(scene, views, densities, r, sources, *mo);
            write_maps(opts->out_dir, r, out.maps, &out.max_prob);
            BackprojectOptions bo;
            bo.stride = *stride;
            bo.min_confidence = conf;
            clouds.push_back(
                backproject(out.maps, views[r].camera, bo, &out.max_prob, &views[r].image));
        }
        m.stage_end();

        m.stage_begin("fuse");
        double voxel = *voxel_rel * scene.bbox_diagonal();
        OrientedPointCloud merged = merge_clouds(clouds, voxel);
        m.stage_end();
        m.set("points", merged.size());

        write_ply(merged, (fs::path(opts->out_dir) / "cloud.ply").string());
        m.write((fs::path(opts->out_dir) / "manifest.txt").string());
    });
    return 0;
}

// ---------------------------------------------------------------- eval

int cmd_eval(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "Evaluate maps and clouds against ground truth");
    auto opts = std::make_shared<CommonOpts>();
    add_common(cmd, *opts);
    auto scene_path = std::make_shared<std::string>();
    auto est_dir = std::make_shared<std::string>();
    auto ply_path = std::make_shared<std::string>();
    cmd->add_option("--scene", *scene_path, "Scene description with ground truth")->required();
    cmd->add_option("--est-dir", *est_dir, "Directory with depth<i>/normal<i>/mask<i> artifacts")
        ->required();
    cmd->add_option("--ply", *ply_path, "Point cloud to score against the ground-truth mesh");

    cmd->callback([=]() {
        Manifest m;
        apply_common(*opts, m);
        m.set("command", "eval");
        m.set("scene", *scene_path);
        m.set("est_dir", *est_dir);

        SceneDescription scene = SceneDescription::load(*scene_path);
        double diag = scene.bbox_diagonal();
        fs::path est(*est_dir);

        double depth_sum = 0, normal_sum = 0, d2_sum = 0, n17_sum = 0, n19_sum = 0;
        int evaluated = 0;
        for (int i = 0; i < static_cast<int>(scene.views.size()); ++i) {
            const auto& v = scene.views[i];
            std::string tag = std::to_string(i);
            fs::path dp = est / ("depth" + tag + ".pfm");
            if (!fs::exists(dp) || !v.gt_depth_path || !v.gt_normal_path) continue;

            DepthMap d_est = read_pfm(dp.string());
            NormalMap n_est = read_pfm((est / ("normal" + tag + ".pfm")).string());
            Mask m_est = read_pgm_mask((est / ("mask" + tag + ".pgm")).string());
            DepthMap d_gt = read_pfm(*v.gt_depth_path);
            NormalMap n_gt_world = read_pfm(*v.gt_normal_path);
            Mask m_gt = v.mask_path ? read_pgm_mask(*v.mask_path)
                                    : Mask(d_gt.width(), d_gt.height(), true);

            Mask shared(m_est.width(), m_est.height());
            for (int y = 0; y < shared.height(); ++y)
                for (int x = 0; x < shared.width(); ++x)
                    shared.set(x, y, m_est.at(x, y) && m_gt.at(x, y));
            if (shared.count() == 0) continue;

            // ground-truth normals are stored world-frame; estimates camera-frame
            NormalMap n_gt(n_gt_world.width(), n_gt_world.height(), 3);
            for (int y = 0; y < n_gt.height(); ++y)
                for (int x = 0; x < n_gt.width(); ++x) {
                    Rgb w = n_gt_world.rgb(x, y);
                    Vec3 c = v.camera.R * Vec3{w.r, w.g, w.b};
                    n_gt.set_rgb(x, y, {c.x, c.y, c.z});
                }

            depth_sum += depth_error(d_est, d_gt, shared, diag);
            normal_sum += normal_error(n_est, n_gt, shared);
            d2_sum += depth_below(d_est, d_gt, shared, diag, 2.0);
            n17_sum += normal_below(n_est, n_gt, shared, 17.0);
            n19_sum += normal_below(n_est, n_gt, shared, 19.0);
            ++evaluated;
        }
        if (evaluated == 0 && ply_path->empty())
            throw Error(ErrorCategory::Config, "eval: nothing to evaluate");

        EvalReport report;
        if (evaluated > 0) {
            report.depth_mae_pct = depth_sum / evaluated;
            report.normal_mae_deg = normal_sum / evaluated;
            report.frac_depth_below_2pct = d2_sum / evaluated;
            report.frac_normal_below_17deg = n17_sum / evaluated;
            report.frac_normal_below_19deg = n19_sum / evaluated;
        }
        if (!ply_path->empty()) {
            if (!scene.gt_mesh_path)
                throw Error(ErrorCategory::Config, "eval: scene has no ground-truth mesh");
            TriangleMesh mesh = TriangleMesh::load_obj(*scene.gt_mesh_path);
            OrientedPointCloud cloud = read_ply(*ply_path);
            report.point_to_mesh_rms_pct = point_to_mesh_rms(cloud, mesh, diag);
        }

        fs::path out(opts->out_dir);
        {
            std::ofstream txt((out / "report.txt").string());
            txt << report.to_text();
            std::ofstream csv((out / "report.csv").string());
            csv << report.to_csv();
        }
        std::cout << report.to_text();
        m.set("views_evaluated", evaluated);
        m.write((out / "manifest.txt").string());
    });
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-view stereo for textureless non-Lambertian objects under known illumination"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    cmd_render(app);
    cmd_sfs(app);
    cmd_mvs(app);
    cmd_joint(app);
    cmd_fuse(app);
    cmd_eval(app);

    try {
        CLI11_PARSE(app, argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.category()) {
            case ErrorCategory::Config: return 2;
            case ErrorCategory::Format: return 3;
            case ErrorCategory::Io: return 4;
            case ErrorCategory::Numeric: return 5;
        }
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
