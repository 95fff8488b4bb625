#pragma once

#include "nlmvs/camera.hpp"
#include "nlmvs/image.hpp"
#include "nlmvs/sfs.hpp"

#include <vector>

namespace nlmvs {

/// Depth hypotheses, uniform in inverse depth.
struct DepthHypothesisRange {
    double d_min = 0, d_max = 0;
    int count = 0;

    DepthHypothesisRange() = default;
    DepthHypothesisRange(double dmin, double dmax, int n);

    double depth(int k) const {
        double inv = 1.0 / d_min + (1.0 / d_max - 1.0 / d_min) * k / (count - 1);
        return 1.0 / inv;
    }
    /// Hypothesis spacing at hypothesis k (distance to the nearer neighbor).
    double step(int k) const {
        int j = k + 1 < count ? k + 1 : k - 1;
        return std::abs(depth(j) - depth(k));
    }
};

/// One calibrated view: radiance, mask, camera, and its normal density field
/// with sample directions already rotated into the reference view frame.
struct ViewData {
    HdrImage image;
    Mask mask;
    Camera camera;
    NormalDensityField density;
};

/// Rotation taking src view-frame directions into the ref view frame.
Mat3 view_frame_rotation(const Camera& ref, const Camera& src);

/// Rotates every sample direction; probabilities unchanged.
NormalDensityField rotate_densities(const NormalDensityField& field, const Mat3& rot);

struct CostVolumes {
    int depth_count = 0, width = 0, height = 0;
    DepthHypothesisRange range;
    std::vector<float> cost;    // D*H*W
    std::vector<float> prob;    // D*H*W, sums to 1 over d for unmasked pixels
    std::vector<float> normal;  // D*H*W*3, reference camera frame, unit
    std::vector<uint8_t> valid; // D*H*W, hypothesis had at least one source
    Mask mask;                  // pixels with any valid hypothesis
    double tau = 0.1;

    size_t idx(int d, int x, int y) const {
        return (static_cast<size_t>(d) * height + y) * width + x;
    }
};

struct CostVolumeParams {
    double alpha_photo = 1.0;
    double beta_normal = 2.0;
    double tau = 0.1;
    double charbonnier_eps = 1e-3;
    double max_cost = 10.0;
    double best_fraction = 0.75; // soft-min over sources
    int density_top_samples = 16;
    int normal_top_cells = 4;
    double match_cone_deg = 5.0; // max angle for nearest-cell density matching
    double log_floor = std::log(1e-6);
    // hypotheses outside this box are invalid; default accepts everything
    Vec3 bbox_min{-1e30, -1e30, -1e30};
    Vec3 bbox_max{1e30, 1e30, 1e30};
};

CostVolumes build_cost_volume(const ViewData& ref, const std::vector<ViewData>& srcs,
                              const DepthHypothesisRange& range, const CostVolumeParams& params);

struct FilterParams {
    int radius = 2;            // spatial, per depth slice
    int depth_window = 3;      // odd box along the depth axis; 1 = off
    double sigma_c_rel = 0.1;  // color sigma relative to guide max
};

/// Edge-aware cost aggregation per depth slice + box smoothing along depth;
/// probabilities re-derived by softmax at the volume's temperature.
CostVolumes filter_cost_volume(const CostVolumes& vol, const HdrImage& guide,
                               const FilterParams& params);

struct DepthNormalMaps {
    DepthMap depth;   // scene units along the reference optical axis
    NormalMap normal; // reference camera frame (x right, y down, z forward)
    Mask mask;
};

/// Probability-weighted expectation over depth hypotheses.
DepthNormalMaps decode_depth_normal(const CostVolumes& vol);

/// Normals from depth derivatives: backprojected tangents, central differences
/// where available, cross product oriented toward the camera.
NormalMap depth_to_normal(const DepthMap& depth, const Mask& mask, const Camera& cam,
                          Mask* out_mask = nullptr);

/// Mean angular discrepancy (degrees) between n_hat and depth-derived normals.
double consistency_score(const NormalMap& n_hat, const DepthMap& depth, const Mask& mask,
                         const Camera& cam);

} // namespace nlmvs
