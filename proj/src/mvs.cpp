#include "nlmvs/mvs.hpp"

#include "nlmvs/errors.hpp"
#include "nlmvs/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace nlmvs {

DepthHypothesisRange::DepthHypothesisRange(double dmin, double dmax, int n)
    : d_min(dmin), d_max(dmax), count(n) {
    if (!(0 < dmin && dmin < dmax)) throw Error(ErrorCategory::Config, "depth range: need 0 < dmin < dmax");
    if (n < 2) throw Error(ErrorCategory::Config, "depth range: need >= 2 hypotheses");
}

Mat3 view_frame_rotation(const Camera& ref, const Camera& src) {
    Mat3 f = cam_view_flip();
    return f * ref.R * src.R.transposed() * f;
}

NormalDensityField rotate_densities(const NormalDensityField& field, const Mat3& rot) {
    if (!rot.is_rotation(1e-6)) throw Error(ErrorCategory::Config, "rotate_densities: not a rotation");
    NormalDensityField out = field;
    for (auto& px : out.pixels)
        for (auto& s : px) s.dir = rot * s.dir;
    return out;
}

namespace {

double charbonnier(double x, double eps) { return std::sqrt(x * x + eps * eps) - eps; }

double log_channel(double v, double floor_log) { return v > 0 ? std::log(v) : floor_log; }

/// Top-N samples by probability, renormalized.
std::vector<DensitySample> top_samples(const std::vector<DensitySample>& in, int n) {
    std::vector<DensitySample> s = in;
    std::sort(s.begin(), s.end(),
              [](const DensitySample& a, const DensitySample& b) { return a.prob > b.prob; });
    if (static_cast<int>(s.size()) > n) s.resize(n);
    double total = 0;
    for (const auto& v : s) total += v.prob;
    if (total > 0)
        for (auto& v : s) v.prob /= total;
    return s;
}

void softmax_volume(CostVolumes& vol) {
    parallel_for(0, static_cast<size_t>(vol.width) * vol.height, [&](size_t pi) {
        int y = static_cast<int>(pi) / vol.width;
        int x = static_cast<int>(pi) % vol.width;
        double cmin = std::numeric_limits<double>::max();
        bool any = false;
        for (int d = 0; d < vol.depth_count; ++d)
            if (vol.valid[vol.idx(d, x, y)]) {
                any = true;
                cmin = std::min(cmin, static_cast<double>(vol.cost[vol.idx(d, x, y)]));
            }
        if (!any) {
            vol.mask.set(x, y, false);
            for (int d = 0; d < vol.depth_count; ++d) vol.prob[vol.idx(d, x, y)] = 0;
            return;
        }
        double total = 0;
        for (int d = 0; d < vol.depth_count; ++d) {
            size_t i = vol.idx(d, x, y);
            double p = vol.valid[i] ? std::exp(-(vol.cost[i] - cmin) / vol.tau) : 0.0;
            vol.prob[i] = static_cast<float>(p);
            total += p;
        }
        for (int d = 0; d < vol.depth_count; ++d)
            vol.prob[vol.idx(d, x, y)] = static_cast<float>(vol.prob[vol.idx(d, x, y)] / total);
    });
}

} // namespace

CostVolumes build_cost_volume(const ViewData& ref, const std::vector<ViewData>& srcs,
                              const DepthHypothesisRange& range, const CostVolumeParams& params) {
    if (srcs.empty()) throw Error(ErrorCategory::Config, "cost volume: need >= 1 source view");

    const int w = ref.camera.width, h = ref.camera.height, D = range.count;
    CostVolumes vol;
    vol.depth_count = D;
    vol.width = w;
    vol.height = h;
    vol.range = range;
    vol.tau = params.tau;
    vol.cost.assign(static_cast<size_t>(D) * h * w, static_cast<float>(params.max_cost));
    vol.prob.assign(vol.cost.size(), 0.f);
    vol.normal.assign(vol.cost.size() * 3, 0.f);
    vol.valid.assign(vol.cost.size(), 0);
    vol.mask = ref.mask;

    // densities pruned to their strongest samples once, up front
    std::vector<std::vector<std::vector<DensitySample>>> pruned(srcs.size() + 1);
    auto prune_field = [&](const NormalDensityField& f) {
        std::vector<std::vector<DensitySample>> out(f.pixels.size());
        parallel_for(0, f.pixels.size(), [&](size_t i) {
            if (!f.pixels[i].empty()) out[i] = top_samples(f.pixels[i], params.density_top_samples);
        });
        return out;
    };
    pruned[0] = prune_field(ref.density);
    for (size_t s = 0; s < srcs.size(); ++s) pruned[s + 1] = prune_field(srcs[s].density);

    // dilated silhouettes for visual-hull carving: a hypothesis projecting
    // onto background in any source cannot be on the surface; one pixel of
    // slack absorbs rasterization of the mask boundary
    std::vector<Mask> dilated;
    for (const auto& src : srcs) {
        Mask d(src.mask.width(), src.mask.height());
        for (int y = 0; y < d.height(); ++y)
            for (int x = 0; x < d.width(); ++x) {
                bool on = false;
                for (int dy = -1; dy <= 1 && !on; ++dy)
                    for (int dx = -1; dx <= 1 && !on; ++dx) {
                        int nx = x + dx, ny = y + dy;
                        if (nx >= 0 && ny >= 0 && nx < d.width() && ny < d.height() &&
                            src.mask.at(nx, ny))
                            on = true;
                    }
                d.set(x, y, on);
            }
        dilated.push_back(std::move(d));
    }

    parallel_for(0, static_cast<size_t>(w) * h, [&](size_t pi) {
        int y = static_cast<int>(pi) / w;
        int x = static_cast<int>(pi) % w;
        if (!ref.mask.at(x, y)) return;
        const Rgb Iref = ref.image.rgb(x, y);
        const auto& ref_density = pruned[0][pi];

        std::vector<double> src_costs;
        std::vector<double> match_prob(ref_density.size());
        src_costs.reserve(srcs.size());

        for (int d = 0; d < D; ++d) {
            double depth = range.depth(d);
            Vec3 world = ref.camera.backproject_world(x + 0.5, y + 0.5, depth);
            if (world.x < params.bbox_min.x || world.y < params.bbox_min.y ||
                world.z < params.bbox_min.z || world.x > params.bbox_max.x ||
                world.y > params.bbox_max.y || world.z > params.bbox_max.z)
                continue;

            src_costs.clear();
            std::vector<double> q(ref_density.size());
            for (size_t i = 0; i < q.size(); ++i) q[i] = ref_density[i].prob;

            bool carved = false;
            for (size_t s = 0; s < srcs.size() && !carved; ++s) {
                const ViewData& src = srcs[s];
                double px, py, pd;
                if (!src.camera.project(world, px, py, pd)) continue;
                int sx = static_cast<int>(px), sy = static_cast<int>(py);
                if (sx < 0 || sy < 0 || sx >= src.camera.width || sy >= src.camera.height) continue;
                if (!dilated[s].at(sx, sy)) {
                    carved = true;
                    break;
                }
                if (!src.mask.at(sx, sy)) continue;

                Rgb Isrc = src.image.rgb(sx, sy);
                double photo = 0;
                for (int k = 0; k < 3; ++k)
                    photo += charbonnier(log_channel(Iref[k], params.log_floor) -
                                             log_channel(Isrc[k], params.log_floor),
                                         params.charbonnier_eps);
                photo /= 3.0;

                double normal_cost = 0;
                const auto& sd = pruned[s + 1][static_cast<size_t>(sy) * src.camera.width + sx];
                if (!ref_density.empty() && !sd.empty()) {
                    // Bhattacharyya coefficient, nearest-direction matching;
                    // a match farther than the cone counts as zero overlap
                    const double min_dot = std::cos(deg2rad(params.match_cone_deg));
                    double bc = 0;
                    for (size_t i = 0; i < ref_density.size(); ++i) {
                        double best = -2;
                        double bp = 0;
                        for (const auto& ss : sd) {
                            double dp = dot(ref_density[i].dir, ss.dir);
                            if (dp > best) {
                                best = dp;
                                bp = ss.prob;
                            }
                        }
                        if (best < min_dot) bp = 0;
                        bc += std::sqrt(ref_density[i].prob * bp);
                        match_prob[i] = bp;
                    }
                    normal_cost = 1.0 - std::fmin(1.0, bc);
                    for (size_t i = 0; i < q.size(); ++i) q[i] *= match_prob[i];
                }
                src_costs.push_back(params.alpha_photo * photo + params.beta_normal * normal_cost);
            }

            size_t ci = vol.idx(d, x, y);
            if (carved || src_costs.empty()) continue;

            std::sort(src_costs.begin(), src_costs.end());
            size_t keep = std::max<size_t>(
                1, static_cast<size_t>(std::ceil(params.best_fraction * src_costs.size())));
            double c = 0;
            for (size_t i = 0; i < keep; ++i) c += src_costs[i];
            c /= keep;
            vol.cost[ci] = static_cast<float>(c);
            vol.valid[ci] = 1;

            // normal hypothesis: weighted mean of the product density's top
            // cells; falls back to the reference density when the product
            // collapses to zero
            const std::vector<double>& weights = q;
            double qsum = 0;
            for (double v : weights) qsum += v;
            std::vector<size_t> order(weights.size());
            for (size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::sort(order.begin(), order.end(),
                      [&](size_t a, size_t b) { return weights[a] > weights[b]; });
            Vec3 nsum;
            int taken = 0;
            for (size_t oi = 0; oi < order.size() && taken < params.normal_top_cells; ++oi) {
                size_t i = order[oi];
                double wq = qsum > 0 ? weights[i] : ref_density[i].prob;
                if (wq <= 0) continue;
                nsum += ref_density[i].dir * wq;
                ++taken;
            }
            if (taken == 0 && !ref_density.empty()) nsum = ref_density[0].dir;
            Vec3 n_view = normalized(nsum);
            if (norm(n_view) == 0) n_view = Vec3{0, 0, 1};
            Vec3 n_cam = view_to_cam(n_view);
            vol.normal[ci * 3 + 0] = static_cast<float>(n_cam.x);
            vol.normal[ci * 3 + 1] = static_cast<float>(n_cam.y);
            vol.normal[ci * 3 + 2] = static_cast<float>(n_cam.z);
        }
    });

    softmax_volume(vol);
    return vol;
}

CostVolumes filter_cost_volume(const CostVolumes& vol, const HdrImage& guide,
                               const FilterParams& params) {
    if (params.radius < 0) throw Error(ErrorCategory::Config, "filter: radius must be >= 0");
    if (params.depth_window < 1 || params.depth_window % 2 == 0)
        throw Error(ErrorCategory::Config, "filter: depth window must be odd and >= 1");

    CostVolumes out = vol;
    const int w = vol.width, h = vol.height, D = vol.depth_count;

    if (params.radius > 0) {
        const double sigma = params.sigma_c_rel * std::fmax(1e-12, guide.max_value());
        const double inv_2s2 = 1.0 / (2.0 * sigma * sigma);
        parallel_for(0, static_cast<size_t>(D), [&](size_t dd) {
            int d = static_cast<int>(dd);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    if (!vol.valid[vol.idx(d, x, y)]) continue;
                    Rgb Ic = guide.rgb(x, y);
                    double acc = 0, wsum = 0;
                    for (int dy = -params.radius; dy <= params.radius; ++dy)
                        for (int dx = -params.radius; dx <= params.radius; ++dx) {
                            int nx = x + dx, ny = y + dy;
                            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                            size_t ni = vol.idx(d, nx, ny);
                            if (!vol.valid[ni]) continue;
                            Rgb diff = guide.rgb(nx, ny) - Ic;
                            double wgt = std::exp(
                                -(diff.r * diff.r + diff.g * diff.g + diff.b * diff.b) * inv_2s2);
                            acc += wgt * vol.cost[ni];
                            wsum += wgt;
                        }
                    out.cost[out.idx(d, x, y)] = static_cast<float>(acc / wsum);
                }
        });
    }

    if (params.depth_window > 1) {
        int r = params.depth_window / 2;
        std::vector<float> smoothed(out.cost.size());
        parallel_for(0, static_cast<size_t>(w) * h, [&](size_t pi) {
            int y = static_cast<int>(pi) / w;
            int x = static_cast<int>(pi) % w;
            for (int d = 0; d < D; ++d) {
                if (!vol.valid[vol.idx(d, x, y)]) {
                    smoothed[out.idx(d, x, y)] = out.cost[out.idx(d, x, y)];
                    continue;
                }
                double acc = 0;
                int n = 0;
                for (int k = -r; k <= r; ++k) {
                    int dk = d + k;
                    if (dk < 0 || dk >= D) continue;
                    if (!vol.valid[vol.idx(dk, x, y)]) continue;
                    acc += out.cost[out.idx(dk, x, y)];
                    ++n;
                }
                smoothed[out.idx(d, x, y)] = static_cast<float>(acc / n);
            }
        });
        out.cost = std::move(smoothed);
    }

    softmax_volume(out);
    return out;
}

DepthNormalMaps decode_depth_normal(const CostVolumes& vol) {
    DepthNormalMaps maps;
    maps.depth = DepthMap(vol.width, vol.height, 1);
    maps.normal = NormalMap(vol.width, vol.height, 3);
    maps.mask = vol.mask;

    parallel_for(0, static_cast<size_t>(vol.width) * vol.height, [&](size_t pi) {
        int y = static_cast<int>(pi) / vol.width;
        int x = static_cast<int>(pi) % vol.width;
        if (!vol.mask.at(x, y)) return;
        double dsum = 0;
        Vec3 nsum;
        for (int d = 0; d < vol.depth_count; ++d) {
            size_t i = vol.idx(d, x, y);
            double p = vol.prob[i];
            if (p <= 0) continue;
            dsum += p * vol.range.depth(d);
            nsum += Vec3{vol.normal[i * 3], vol.normal[i * 3 + 1], vol.normal[i * 3 + 2]} * p;
        }
        if (norm(nsum) < 1e-8) {
            maps.mask.set(x, y, false);
            return;
        }
        maps.depth.at(x, y, 0) = static_cast<float>(dsum);
        Vec3 n = normalized(nsum);
        maps.normal.set_rgb(x, y, {n.x, n.y, n.z});
    });
    return maps;
}

NormalMap depth_to_normal(const DepthMap& depth, const Mask& mask, const Camera& cam,
                          Mask* out_mask) {
    const int w = depth.width(), h = depth.height();
    NormalMap nmap(w, h, 3);
    Mask valid(w, h);

    auto point = [&](int x, int y) {
        return cam.backproject_cam(x + 0.5, y + 0.5, depth.at(x, y, 0));
    };
    auto ok = [&](int x, int y) { return x >= 0 && y >= 0 && x < w && y < h && mask.at(x, y); };

    parallel_for(0, static_cast<size_t>(w) * h, [&](size_t pi) {
        int y = static_cast<int>(pi) / w;
        int x = static_cast<int>(pi) % w;
        if (!mask.at(x, y)) return;

        // central differences where both neighbors exist, one-sided at borders
        Vec3 tx, ty;
        if (ok(x - 1, y) && ok(x + 1, y))
            tx = point(x + 1, y) - point(x - 1, y);
        else if (ok(x + 1, y))
            tx = point(x + 1, y) - point(x, y);
        else if (ok(x - 1, y))
            tx = point(x, y) - point(x - 1, y);
        else
            return;
        if (ok(x, y - 1) && ok(x, y + 1))
            ty = point(x, y + 1) - point(x, y - 1);
        else if (ok(x, y + 1))
            ty = point(x, y + 1) - point(x, y);
        else if (ok(x, y - 1))
            ty = point(x, y) - point(x, y - 1);
        else
            return;

        Vec3 n = cross(tx, ty);
        if (norm(n) < 1e-12) return;
        n = normalized(n);
        // orient toward the camera (ray direction has positive z)
        Vec3 ray = normalized(point(x, y));
        if (dot(n, ray) > 0) n = -n;
        nmap.set_rgb(x, y, {n.x, n.y, n.z});
        valid.set(x, y, true);
    });
    if (out_mask) *out_mask = valid;
    return nmap;
}

double consistency_score(const NormalMap& n_hat, const DepthMap& depth, const Mask& mask,
                         const Camera& cam) {
    Mask dmask;
    NormalMap nbar = depth_to_normal(depth, mask, cam, &dmask);
    double sum = 0;
    size_t n = 0;
    for (int y = 0; y < depth.height(); ++y)
        for (int x = 0; x < depth.width(); ++x) {
            if (!mask.at(x, y) || !dmask.at(x, y)) continue;
            Rgb a = n_hat.rgb(x, y), b = nbar.rgb(x, y);
            sum += angle_deg({a.r, a.g, a.b}, {b.r, b.g, b.b});
            ++n;
        }
    if (n == 0) throw Error(ErrorCategory::Config, "consistency: empty mask");
    return sum / n;
}

} // namespace nlmvs
