#pragma once

#include "nlmvs/brdf.hpp"
#include "nlmvs/camera.hpp"
#include "nlmvs/envmap.hpp"
#include "nlmvs/image.hpp"

#include <string>
#include <vector>

namespace nlmvs {

/// Hemispherical normal grid: level l covers [-1,1]^2 of (n_x, n_y) in the
/// view frame at resolution (8 * 2^l)^2; a cell is active when its center
/// satisfies n_x^2 + n_y^2 < 1, and maps to the unit normal with n_z > 0.
struct HemiGrid {
    int level = 0;

    int resolution() const { return 8 << level; }
    static int resolution_for_level(int level) { return 8 << level; }

    static bool active(int res, int ix, int iy) {
        double nx = -1.0 + (2.0 * ix + 1.0) / res;
        double ny = -1.0 + (2.0 * iy + 1.0) / res;
        return nx * nx + ny * ny < 1.0;
    }
    static Vec3 cell_normal(int res, int ix, int iy) {
        double nx = -1.0 + (2.0 * ix + 1.0) / res;
        double ny = -1.0 + (2.0 * iy + 1.0) / res;
        double z2 = 1.0 - nx * nx - ny * ny;
        return {nx, ny, std::sqrt(std::fmax(0.0, z2))};
    }
    /// Cell of a view-frame normal at a given resolution.
    static void cell_of(int res, const Vec3& n_view, int& ix, int& iy) {
        ix = static_cast<int>((n_view.x + 1.0) * 0.5 * res);
        iy = static_cast<int>((n_view.y + 1.0) * 0.5 * res);
        ix = std::min(std::max(ix, 0), res - 1);
        iy = std::min(std::max(iy, 0), res - 1);
    }
    static double cell_diagonal_deg(int res) {
        // worst-case angular extent of a cell near the pole
        Vec3 a = cell_normal(res, res / 2, res / 2);
        Vec3 b = cell_normal(res, res / 2 + 1, res / 2 + 1);
        return angle_deg(a, b);
    }
};

/// Laplace observation model on log radiance.
struct LaplaceParams {
    double b = 0.1;        // scale, natural-log radiance units
    double log_floor = -30; // substitute for log of zero radiance
};

/// Product over channels of Laplace densities of log observed vs log predicted.
double laplace_likelihood(const Rgb& observed, const Rgb& predicted, const LaplaceParams& p);

/// p(I | n) with the irradiance predicted by render_irradiance (Eq. of the
/// forward model); all directions world-frame.
double normal_likelihood(const Rgb& observed, const EnvironmentMap& env, const Brdf& brdf,
                         const Vec3& wo, const Vec3& n, const LaplaceParams& p);

/// Precomputed forward-model irradiance over hemispherical grid cell centers,
/// per view. Shared across pixels: E depends only on the normal once the view
/// direction is fixed by the distant-camera approximation.
class IrradianceTable {
  public:
    /// Builds tables for every resolution in `resolutions` (each a power-of-two
    /// multiple of 8). cam fixes the view frame and the shading direction.
    static IrradianceTable build(const EnvironmentMap& env, const Brdf& brdf, const Camera& cam,
                                 const std::vector<int>& resolutions);

    bool has(int res) const;
    /// Irradiance at the center of active cell (ix,iy); zero for inactive.
    const Rgb& at(int res, int ix, int iy) const;

  private:
    struct Level {
        int res = 0;
        std::vector<Rgb> values;
    };
    std::vector<Level> levels_;
};

struct NormalSample {
    Vec3 dir;          // view frame, z > 0
    double likelihood; // observed p(I|n)
    double prob;       // refined, normalized per pixel
    int cell_x, cell_y; // cell at the sample's grid resolution
};

/// Per-pixel sampled normals with likelihoods at one coarse-to-fine stage.
struct NormalSampleSet {
    int width = 0, height = 0;
    int level = 0; // final stage level
    Mask mask;
    std::vector<std::vector<NormalSample>> pixels; // empty when masked
    std::vector<uint8_t> degenerate;               // all-zero likelihood mass

    const std::vector<NormalSample>& at(int x, int y) const {
        return pixels[static_cast<size_t>(y) * width + x];
    }
};

struct SfsParams {
    int levels = 4;        // level 0 .. levels-1; final grid (8*2^(levels-1))^2
    int top_k = 16;        // cells propagated between levels
    int subgrid = 4;       // level-0 within-cell brute force, subgrid x subgrid
    LaplaceParams laplace;
};

/// Coarse-to-fine likelihood search over the hemispherical grid (one view).
NormalSampleSet coarse_to_fine_search(const HdrImage& image, const Mask& mask,
                                      const EnvironmentMap& env, const Brdf& brdf,
                                      const Camera& cam, const SfsParams& params);

struct DensitySample {
    Vec3 dir;
    double prob;
};

/// Per-pixel unnormalized-then-normalized normal probability densities.
struct NormalDensityField {
    int width = 0, height = 0;
    std::vector<std::vector<DensitySample>> pixels;

    const std::vector<DensitySample>& at(int x, int y) const {
        return pixels[static_cast<size_t>(y) * width + x];
    }

    void save(const std::string& path) const;
    static NormalDensityField load(const std::string& path);
};

struct AggregateParams {
    int iters = 3;
    int radius = 2;          // 5x5 neighborhood
    double sigma_c_rel = 0.1; // color sigma as a fraction of image max
};

/// Edge-aware contextual aggregation: p_hat(n) = p(I|n) * g(n) with g the
/// iterated color-weighted neighborhood average of the current densities,
/// matched across pixels by grid cell.
NormalDensityField aggregate_density(const NormalSampleSet& samples, const HdrImage& image,
                                     const AggregateParams& params);

/// Intensity-percentile shadow mask: drops pixels whose max channel falls below
/// the given percentile of unmasked intensities. percentile <= 0 disables it.
Mask apply_intensity_mask(const HdrImage& image, const Mask& mask, double percentile);

} // namespace nlmvs
