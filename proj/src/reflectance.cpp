#include "nlmvs/reflectance.hpp"

#include "nlmvs/errors.hpp"
#include "nlmvs/nelder_mead.hpp"
#include "nlmvs/parallel.hpp"
#include "nlmvs/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace nlmvs {

BrdfParams BrdfParams::lambertian(const Rgb& albedo) {
    return {Variant::Lambertian, {albedo.r, albedo.g, albedo.b}};
}

BrdfParams BrdfParams::microfacet(const Rgb& diffuse, const Rgb& specular, double roughness) {
    return {Variant::Microfacet,
            {diffuse.r, diffuse.g, diffuse.b, specular.r, specular.g, specular.b, roughness}};
}

std::vector<double> BrdfParams::lower_bounds() const {
    if (variant == Variant::Lambertian) return {0.0, 0.0, 0.0};
    return {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.01};
}

std::vector<double> BrdfParams::upper_bounds() const {
    if (variant == Variant::Lambertian) return {1.0, 1.0, 1.0};
    return {1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
}

std::unique_ptr<Brdf> BrdfParams::make_brdf() const {
    if (variant == Variant::Lambertian) {
        if (values.size() != 3) throw Error(ErrorCategory::Config, "brdf params: need 3 values");
        return std::make_unique<LambertianBrdf>(Rgb{values[0], values[1], values[2]});
    }
    if (values.size() != 7) throw Error(ErrorCategory::Config, "brdf params: need 7 values");
    return std::make_unique<MicrofacetBrdf>(Rgb{values[0], values[1], values[2]},
                                            Rgb{values[3], values[4], values[5]},
                                            std::max(0.01, values[6]));
}

void BrdfParams::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCategory::Io, "brdf params: cannot write " + path);
    if (variant == Variant::Lambertian) {
        out << "variant lambertian\n";
        out << "albedo " << values[0] << " " << values[1] << " " << values[2] << "\n";
    } else {
        out << "variant microfacet\n";
        out << "diffuse " << values[0] << " " << values[1] << " " << values[2] << "\n";
        out << "specular " << values[3] << " " << values[4] << " " << values[5] << "\n";
        out << "roughness " << values[6] << "\n";
    }
}

BrdfParams BrdfParams::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::Io, "brdf params: cannot open " + path);
    std::string key, variant;
    if (!(in >> key >> variant) || key != "variant")
        throw Error(ErrorCategory::Format, "brdf params: bad header in " + path);
    BrdfParams p;
    auto read3 = [&](const char* want) {
        std::string k;
        double a, b, c;
        if (!(in >> k >> a >> b >> c) || k != want)
            throw Error(ErrorCategory::Format, "brdf params: malformed " + path);
        p.values.push_back(a);
        p.values.push_back(b);
        p.values.push_back(c);
    };
    if (variant == "lambertian") {
        p.variant = Variant::Lambertian;
        read3("albedo");
    } else if (variant == "microfacet") {
        p.variant = Variant::Microfacet;
        read3("diffuse");
        read3("specular");
        std::string k;
        double r;
        if (!(in >> k >> r) || k != "roughness")
            throw Error(ErrorCategory::Format, "brdf params: malformed " + path);
        p.values.push_back(r);
    } else {
        throw Error(ErrorCategory::Format, "brdf params: unknown variant in " + path);
    }
    return p;
}

Vec3 snapped_normal(const Vec3& n_est, const Rgb& observed, const EnvironmentMap& env,
                    const Brdf& brdf, const Vec3& wo, double cone_deg, int samples) {
    if (cone_deg <= 0) return n_est;

    auto residual = [&](const Vec3& n) {
        Rgb e = render_irradiance(env, brdf, n, wo);
        double r = 0;
        for (int k = 0; k < 3; ++k) {
            double lo = observed[k] > 0 ? std::log(observed[k]) : std::log(1e-9);
            double le = e[k] > 0 ? std::log(e[k]) : std::log(1e-9);
            r += std::abs(lo - le);
        }
        return r;
    };

    // frame around n_est
    Vec3 t = std::abs(n_est.z) < 0.9 ? normalized(cross(Vec3{0, 0, 1}, n_est))
                                     : normalized(cross(Vec3{1, 0, 0}, n_est));
    Vec3 b = cross(n_est, t);

    Vec3 best_n = n_est;
    double best_r = residual(n_est);
    double best_dev = 0;
    if (!std::isfinite(best_r)) best_r = std::numeric_limits<double>::max();

    const double cone = deg2rad(cone_deg);
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < samples; ++i) {
        // spiral over the spherical cap, uniform in solid angle
        double frac = (i + 0.5) / samples;
        double cos_t = 1.0 - frac * (1.0 - std::cos(cone));
        double sin_t = std::sqrt(std::fmax(0.0, 1.0 - cos_t * cos_t));
        double phi = golden * i;
        Vec3 n = normalized(n_est * cos_t + t * (sin_t * std::cos(phi)) + b * (sin_t * std::sin(phi)));
        double r = residual(n);
        if (!std::isfinite(r)) continue;
        double dev = angle_deg(n, n_est);
        if (r < best_r - 1e-15 || (std::abs(r - best_r) <= 1e-15 && dev < best_dev)) {
            best_r = r;
            best_n = n;
            best_dev = dev;
        }
    }
    return best_n;
}

namespace {

/// Masked normalized Gaussian blur; sigma = infinity collapses to the mask mean.
HdrImage masked_blur(const HdrImage& img, const Mask& mask, double sigma) {
    const int w = img.width(), h = img.height(), ch = img.channels();
    if (sigma <= 0) return img;
    HdrImage out(w, h, ch);
    if (std::isinf(sigma)) {
        std::vector<double> mean(ch, 0.0);
        size_t n = 0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                if (!mask.at(x, y)) continue;
                for (int c = 0; c < ch; ++c) mean[c] += img.at(x, y, c);
                ++n;
            }
        if (n == 0) return out;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (mask.at(x, y))
                    for (int c = 0; c < ch; ++c)
                        out.at(x, y, c) = static_cast<float>(mean[c] / n);
        return out;
    }

    int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kern(2 * r + 1);
    for (int i = -r; i <= r; ++i) kern[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));

    // horizontal then vertical, normalizing by in-mask weight
    HdrImage tmp(w, h, ch);
    HdrImage wsum_h(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            double wsum = 0;
            std::vector<double> acc(ch, 0.0);
            for (int i = -r; i <= r; ++i) {
                int nx = x + i;
                if (nx < 0 || nx >= w || !mask.at(nx, y)) continue;
                wsum += kern[i + r];
                for (int c = 0; c < ch; ++c) acc[c] += kern[i + r] * img.at(nx, y, c);
            }
            for (int c = 0; c < ch; ++c) tmp.at(x, y, c) = static_cast<float>(acc[c]);
            wsum_h.at(x, y, 0) = static_cast<float>(wsum);
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            double wsum = 0;
            std::vector<double> acc(ch, 0.0);
            for (int i = -r; i <= r; ++i) {
                int ny = y + i;
                if (ny < 0 || ny >= h || !mask.at(x, ny)) continue;
                wsum += kern[i + r] * wsum_h.at(x, ny, 0);
                for (int c = 0; c < ch; ++c) acc[c] += kern[i + r] * tmp.at(x, ny, c);
            }
            if (wsum > 0)
                for (int c = 0; c < ch; ++c)
                    out.at(x, y, c) = static_cast<float>(acc[c] / wsum);
        }
    return out;
}

HdrImage render_with_geometry(const ReflectanceView& view, const Brdf& brdf,
                              const EnvironmentMap& env, const ObjectiveParams& obj, Mask& mask) {
    const Camera& cam = view.camera;
    const Mat3 cam_to_world = cam.R.transposed();
    const Vec3 wo = -cam.axis();
    const int w = view.image.width(), h = view.image.height();
    HdrImage rendered(w, h, 3);
    mask = Mask(w, h);

    parallel_for(0, static_cast<size_t>(h), [&](size_t yy) {
        int y = static_cast<int>(yy);
        if (obj.pixel_stride > 1 && y % obj.pixel_stride != 0) return;
        for (int x = 0; x < w; ++x) {
            if (obj.pixel_stride > 1 && x % obj.pixel_stride != 0) continue;
            if (!view.maps.mask.at(x, y)) continue;
            Rgb nc = view.maps.normal.rgb(x, y);
            Vec3 n_world = cam_to_world * Vec3{nc.r, nc.g, nc.b};
            if (obj.snap)
                n_world = snapped_normal(n_world, view.image.rgb(x, y), env, brdf, wo,
                                         obj.snap_cone_deg, obj.snap_samples);
            rendered.set_rgb(x, y, render_irradiance(env, brdf, n_world, wo));
            mask.set(x, y, true);
        }
    });
    return rendered;
}

} // namespace

double reflectance_objective(const BrdfParams& params, const std::vector<ReflectanceView>& views,
                             const EnvironmentMap& env, const ObjectiveParams& obj) {
    auto brdf = params.make_brdf();
    double total = 0;
    size_t count = 0;
    for (const auto& view : views) {
        Mask mask;
        HdrImage rendered = render_with_geometry(view, *brdf, env, obj, mask);
        if (mask.count() == 0) continue; // view fully masked, skipped

        HdrImage bi = masked_blur(view.image, mask, obj.blur_sigma);
        HdrImage br = masked_blur(rendered, mask, obj.blur_sigma);
        for (int y = 0; y < bi.height(); ++y)
            for (int x = 0; x < bi.width(); ++x) {
                if (!mask.at(x, y)) continue;
                Rgb a = bi.rgb(x, y), b = br.rgb(x, y);
                double e = 0;
                for (int k = 0; k < 3; ++k) {
                    double la = a[k] > 0 ? std::log(a[k]) : obj.log_floor;
                    double lb = b[k] > 0 ? std::log(b[k]) : obj.log_floor;
                    e += std::abs(la - lb);
                }
                total += e;
                ++count;
            }
    }
    if (count == 0) throw Error(ErrorCategory::Config, "objective: all views masked");
    return total / count;
}

FitResult fit_reflectance(const BrdfParams& incumbent, const std::vector<ReflectanceView>& views,
                          const EnvironmentMap& env, const FitParams& fit) {
    if (fit.budget < 1) {
        FitResult r;
        r.params = incumbent;
        r.objective = reflectance_objective(incumbent, views, env, fit.objective);
        return r;
    }

    double f0 = reflectance_objective(incumbent, views, env, fit.objective);

    NelderMeadOptions opts;
    opts.max_evals = fit.budget;
    auto f = [&](const std::vector<double>& x) {
        BrdfParams p{incumbent.variant, x};
        return reflectance_objective(p, views, env, fit.objective);
    };
    NelderMeadResult nm = nelder_mead(f, incumbent.values, incumbent.lower_bounds(),
                                      incumbent.upper_bounds(), opts);

    FitResult r;
    r.evals = nm.evals;
    if (nm.fx < f0) {
        r.params = BrdfParams{incumbent.variant, nm.x};
        r.objective = nm.fx;
    } else {
        r.params = incumbent;
        r.objective = f0;
    }
    return r;
}

BrdfParams initialize_albedo(const std::vector<JointView>& views, const EnvironmentMap& env) {
    std::vector<double> rad[3];
    double white[3] = {0, 0, 0};
    LambertianBrdf unit(Rgb{1.0});
    for (const auto& v : views) {
        Vec3 wo = -v.camera.axis();
        Rgb e = render_irradiance(env, unit, wo, wo); // facing the camera
        for (int k = 0; k < 3; ++k) white[k] += e[k] / views.size();
        for (int y = 0; y < v.image.height(); ++y)
            for (int x = 0; x < v.image.width(); ++x)
                if (v.mask.at(x, y))
                    for (int k = 0; k < 3; ++k) rad[k].push_back(v.image.rgb(x, y)[k]);
    }
    Rgb albedo{0.5};
    for (int k = 0; k < 3; ++k) {
        if (rad[k].empty() || white[k] <= 0) continue;
        size_t mid = rad[k].size() / 2;
        std::nth_element(rad[k].begin(), rad[k].begin() + mid, rad[k].end());
        albedo[k] = std::min(1.0, std::max(0.01, rad[k][mid] / white[k]));
    }
    return BrdfParams::lambertian(albedo);
}

AlternateResult alternate(const std::vector<JointView>& views, const EnvironmentMap& env,
                          const AlternateParams& params) {
    if (params.rounds < 1) throw Error(ErrorCategory::Config, "alternate: rounds must be >= 1");
    if (views.size() < 2) throw Error(ErrorCategory::Config, "alternate: need >= 2 views");

    AlternateResult result;
    result.params = params.initial ? *params.initial : initialize_albedo(views, env);
    if (params.fit_microfacet && result.params.variant == BrdfParams::Variant::Lambertian) {
        Rgb alb{result.params.values[0], result.params.values[1], result.params.values[2]};
        result.params = BrdfParams::microfacet(alb, Rgb{0.04}, 0.3);
    }

    double best_obj = std::numeric_limits<double>::max();
    BrdfParams best_params = result.params;
    std::vector<DepthNormalMaps> best_maps;
    int rising = 0;
    double prev_obj = std::numeric_limits<double>::max();

    for (int round = 0; round < params.rounds; ++round) {
        auto brdf = result.params.make_brdf();

        // geometry phase: per-view sfs densities, then plane sweep per view
        std::vector<ViewData> data(views.size());
        for (size_t i = 0; i < views.size(); ++i) {
            NormalSampleSet set = coarse_to_fine_search(views[i].image, views[i].mask, env, *brdf,
                                                        views[i].camera, params.sfs);
            data[i].image = views[i].image;
            data[i].mask = views[i].mask;
            data[i].camera = views[i].camera;
            data[i].density = aggregate_density(set, views[i].image, params.aggregate);
        }

        result.maps.assign(views.size(), {});
        for (size_t r = 0; r < views.size(); ++r) {
            std::vector<ViewData> srcs;
            for (size_t s = 0; s < views.size(); ++s) {
                if (s == r) continue;
                ViewData sv = data[s];
                sv.density =
                    rotate_densities(sv.density, view_frame_rotation(data[r].camera, sv.camera));
                srcs.push_back(std::move(sv));
            }
            CostVolumes vol = build_cost_volume(data[r], srcs, params.range, params.cost);
            vol = filter_cost_volume(vol, data[r].image, params.filter);
            result.maps[r] = decode_depth_normal(vol);
        }

        std::vector<ReflectanceView> rviews(views.size());
        for (size_t i = 0; i < views.size(); ++i)
            rviews[i] = {views[i].image, result.maps[i], views[i].camera};

        double geo_obj = reflectance_objective(result.params, rviews, env, params.fit.objective);
        result.history.push_back({round, "geometry", geo_obj});

        FitResult fr = fit_reflectance(result.params, rviews, env, params.fit);
        result.params = fr.params;
        result.history.push_back({round, "reflectance", fr.objective});

        if (fr.objective < best_obj) {
            best_obj = fr.objective;
            best_params = result.params;
            best_maps = result.maps;
        }
        if (fr.objective > prev_obj) {
            if (++rising >= 2) break; // diverging, keep the best round
        } else {
            rising = 0;
        }
        prev_obj = fr.objective;
    }

    result.params = best_params;
    if (!best_maps.empty()) result.maps = best_maps;
    return result;
}

} // namespace nlmvs
