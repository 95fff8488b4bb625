#include "nlmvs/metrics.hpp"

#include "nlmvs/errors.hpp"
#include "nlmvs/parallel.hpp"

#include <cmath>
#include <sstream>

namespace nlmvs {

namespace {

template <typename Fn>
double mean_over_mask(const Mask& mask, Fn&& per_pixel) {
    double sum = 0;
    size_t n = 0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.at(x, y)) continue;
            sum += per_pixel(x, y);
            ++n;
        }
    if (n == 0) throw Error(ErrorCategory::Config, "metrics: empty mask");
    return sum / n;
}

} // namespace

double depth_error(const DepthMap& est, const DepthMap& gt, const Mask& mask, double bbox_diag) {
    if (bbox_diag <= 0) throw Error(ErrorCategory::Config, "metrics: bbox diagonal must be > 0");
    return mean_over_mask(mask, [&](int x, int y) {
               return std::abs(est.at(x, y, 0) - gt.at(x, y, 0)) / bbox_diag;
           }) *
           100.0;
}

double depth_below(const DepthMap& est, const DepthMap& gt, const Mask& mask, double bbox_diag,
                   double threshold_pct) {
    return mean_over_mask(mask, [&](int x, int y) {
        double e = std::abs(est.at(x, y, 0) - gt.at(x, y, 0)) / bbox_diag * 100.0;
        return e < threshold_pct ? 1.0 : 0.0;
    });
}

double normal_error(const NormalMap& est, const NormalMap& gt, const Mask& mask) {
    return mean_over_mask(mask, [&](int x, int y) {
        Rgb a = est.rgb(x, y), b = gt.rgb(x, y);
        return angle_deg({a.r, a.g, a.b}, {b.r, b.g, b.b});
    });
}

double normal_below(const NormalMap& est, const NormalMap& gt, const Mask& mask,
                    double threshold_deg) {
    return mean_over_mask(mask, [&](int x, int y) {
        Rgb a = est.rgb(x, y), b = gt.rgb(x, y);
        return angle_deg({a.r, a.g, a.b}, {b.r, b.g, b.b}) < threshold_deg ? 1.0 : 0.0;
    });
}

double point_to_mesh_rms(const OrientedPointCloud& cloud, const TriangleMesh& gt_mesh,
                         double bbox_diag) {
    if (cloud.empty()) throw Error(ErrorCategory::Config, "metrics: empty cloud");
    if (bbox_diag <= 0) throw Error(ErrorCategory::Config, "metrics: bbox diagonal must be > 0");
    std::vector<double> d2(cloud.size());
    parallel_for(0, cloud.size(), [&](size_t i) {
        double d = gt_mesh.distance_to(cloud[i].position);
        d2[i] = d * d;
    });
    double sum = 0;
    for (double v : d2) sum += v;
    return std::sqrt(sum / cloud.size()) / bbox_diag * 100.0;
}

std::string EvalReport::to_text() const {
    std::ostringstream ss;
    ss << "depth MAE:            " << depth_mae_pct << " % of bbox diagonal\n";
    ss << "normal MAE:           " << normal_mae_deg << " deg\n";
    ss << "depth < 2%:           " << frac_depth_below_2pct * 100.0 << " % of pixels\n";
    ss << "normal < 17 deg:      " << frac_normal_below_17deg * 100.0 << " % of pixels\n";
    ss << "normal < 19 deg:      " << frac_normal_below_19deg * 100.0 << " % of pixels\n";
    if (point_to_mesh_rms_pct >= 0)
        ss << "point-to-mesh RMS:    " << point_to_mesh_rms_pct << " % of bbox diagonal\n";
    return ss.str();
}

std::string EvalReport::to_csv() const {
    std::ostringstream ss;
    ss << "depth_mae_pct,normal_mae_deg,frac_depth_below_2pct,frac_normal_below_17deg,"
          "frac_normal_below_19deg,point_to_mesh_rms_pct\n";
    ss << depth_mae_pct << "," << normal_mae_deg << "," << frac_depth_below_2pct << ","
       << frac_normal_below_17deg << "," << frac_normal_below_19deg << ","
       << point_to_mesh_rms_pct << "\n";
    return ss.str();
}

} // namespace nlmvs
