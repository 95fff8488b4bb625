#pragma once

#include "nlmvs/brdf.hpp"
#include "nlmvs/camera.hpp"
#include "nlmvs/envmap.hpp"
#include "nlmvs/mvs.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nlmvs {

/// Bounded parameter vector for a parametric BRDF family.
struct BrdfParams {
    enum class Variant { Lambertian, Microfacet };

    Variant variant = Variant::Lambertian;
    // Lambertian: albedo rgb. Microfacet: diffuse rgb, specular rgb, roughness.
    std::vector<double> values;

    static BrdfParams lambertian(const Rgb& albedo);
    static BrdfParams microfacet(const Rgb& diffuse, const Rgb& specular, double roughness);

    std::vector<double> lower_bounds() const;
    std::vector<double> upper_bounds() const;
    std::unique_ptr<Brdf> make_brdf() const;

    void save(const std::string& path) const;
    static BrdfParams load(const std::string& path);
};

/// One view for reflectance estimation: observed image + current geometry.
struct ReflectanceView {
    HdrImage image;
    DepthNormalMaps maps;
    Camera camera;
};

/// Search within cone_deg of n_est (Fibonacci spiral) for the direction whose
/// rendered irradiance best matches I in summed absolute log residual; ties
/// broken by smallest angular deviation. All directions world frame.
Vec3 snapped_normal(const Vec3& n_est, const Rgb& observed, const EnvironmentMap& env,
                    const Brdf& brdf, const Vec3& wo, double cone_deg, int samples = 64);

struct ObjectiveParams {
    double blur_sigma = 4.0;  // pixels; 0 = none, infinity = image-mean comparison
    bool snap = false;
    double snap_cone_deg = 15.0;
    int snap_samples = 64;
    int pixel_stride = 1;     // evaluate every Nth pixel in x and y
    double log_floor = std::log(1e-9);
};

/// Blurred log-radiance consistency between observed and rendered views.
double reflectance_objective(const BrdfParams& params, const std::vector<ReflectanceView>& views,
                             const EnvironmentMap& env, const ObjectiveParams& obj);

struct FitParams {
    int budget = 300; // objective evaluations
    ObjectiveParams objective;
};

struct FitResult {
    BrdfParams params;
    double objective = 0;
    int evals = 0;
};

/// Derivative-free fit; never returns params worse than the incumbent.
FitResult fit_reflectance(const BrdfParams& incumbent, const std::vector<ReflectanceView>& views,
                          const EnvironmentMap& env, const FitParams& fit);

/// One calibrated input view for joint estimation.
struct JointView {
    HdrImage image;
    Mask mask;
    Camera camera;
};

struct AlternateParams {
    int rounds = 3;
    SfsParams sfs;
    AggregateParams aggregate;
    CostVolumeParams cost;
    FilterParams filter;
    DepthHypothesisRange range;
    FitParams fit;
    std::optional<BrdfParams> initial; // default: Lambertian from radiance medians
    bool fit_microfacet = false;       // promote to the microfacet family
};

struct ObjectiveRecord {
    int round;
    std::string phase;
    double value;
};

struct AlternateResult {
    BrdfParams params;
    std::vector<DepthNormalMaps> maps; // one per view
    std::vector<ObjectiveRecord> history;
};

/// Median-radiance Lambertian initialization.
BrdfParams initialize_albedo(const std::vector<JointView>& views, const EnvironmentMap& env);

/// Alternating geometry (sfs + mvs) and reflectance estimation.
AlternateResult alternate(const std::vector<JointView>& views, const EnvironmentMap& env,
                          const AlternateParams& params);

} // namespace nlmvs
