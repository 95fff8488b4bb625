#pragma once

#include "nlmvs/fusion.hpp"
#include "nlmvs/image.hpp"
#include "nlmvs/shapes.hpp"

#include <string>

namespace nlmvs {

struct EvalReport {
    double depth_mae_pct = 0;       // % of bbox diagonal
    double normal_mae_deg = 0;
    double frac_depth_below_2pct = 0;
    double frac_normal_below_17deg = 0;
    double frac_normal_below_19deg = 0;
    double point_to_mesh_rms_pct = -1; // < 0 when not evaluated

    std::string to_text() const;
    std::string to_csv() const;
};

/// Mean |d_est - d_gt| / bbox_diag * 100 over the shared mask.
double depth_error(const DepthMap& est, const DepthMap& gt, const Mask& mask, double bbox_diag);
/// Fraction of shared-mask pixels with depth error below threshold_pct.
double depth_below(const DepthMap& est, const DepthMap& gt, const Mask& mask, double bbox_diag,
                   double threshold_pct);

/// Mean angular error in degrees over the shared mask.
double normal_error(const NormalMap& est, const NormalMap& gt, const Mask& mask);
double normal_below(const NormalMap& est, const NormalMap& gt, const Mask& mask,
                    double threshold_deg);

/// RMS nearest-point-on-triangle distance / bbox_diag * 100 (recon -> GT).
double point_to_mesh_rms(const OrientedPointCloud& cloud, const TriangleMesh& gt_mesh,
                         double bbox_diag);

} // namespace nlmvs
