#include "nlmvs/sfs.hpp"

#include "nlmvs/errors.hpp"
#include "nlmvs/parallel.hpp"
#include "nlmvs/render.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <unordered_map>

namespace nlmvs {

double laplace_likelihood(const Rgb& observed, const Rgb& predicted, const LaplaceParams& p) {
    double lik = 1.0;
    for (int k = 0; k < 3; ++k) {
        double x = observed[k] > 0 ? std::log(observed[k]) : p.log_floor;
        double mu = predicted[k] > 0 ? std::log(predicted[k]) : p.log_floor;
        lik *= 1.0 / (2.0 * p.b) * std::exp(-std::abs(x - mu) / p.b);
    }
    return lik;
}

double normal_likelihood(const Rgb& observed, const EnvironmentMap& env, const Brdf& brdf,
                         const Vec3& wo, const Vec3& n, const LaplaceParams& p) {
    return laplace_likelihood(observed, render_irradiance(env, brdf, n, wo), p);
}

IrradianceTable IrradianceTable::build(const EnvironmentMap& env, const Brdf& brdf,
                                       const Camera& cam, const std::vector<int>& resolutions) {
    IrradianceTable table;
    const Mat3 cam_to_world = cam.R.transposed();
    const Vec3 wo_world = -cam.axis();
    for (int res : resolutions) {
        Level lvl;
        lvl.res = res;
        lvl.values.assign(static_cast<size_t>(res) * res, Rgb{});
        parallel_for(0, lvl.values.size(), [&](size_t i) {
            int iy = static_cast<int>(i) / res;
            int ix = static_cast<int>(i) % res;
            if (!HemiGrid::active(res, ix, iy)) return;
            Vec3 n_view = HemiGrid::cell_normal(res, ix, iy);
            Vec3 n_world = cam_to_world * view_to_cam(n_view);
            lvl.values[i] = render_irradiance(env, brdf, n_world, wo_world);
        });
        table.levels_.push_back(std::move(lvl));
    }
    return table;
}

bool IrradianceTable::has(int res) const {
    for (const auto& l : levels_)
        if (l.res == res) return true;
    return false;
}

const Rgb& IrradianceTable::at(int res, int ix, int iy) const {
    for (const auto& l : levels_)
        if (l.res == res) return l.values[static_cast<size_t>(iy) * res + ix];
    throw Error(ErrorCategory::Config, "irradiance table: resolution not built");
}

namespace {

struct Cell {
    int ix, iy;
    Vec3 dir;
    double likelihood;
};

} // namespace

NormalSampleSet coarse_to_fine_search(const HdrImage& image, const Mask& mask,
                                      const EnvironmentMap& env, const Brdf& brdf,
                                      const Camera& cam, const SfsParams& params) {
    if (params.levels < 1) throw Error(ErrorCategory::Config, "sfs: levels must be >= 1");
    if (params.subgrid < 1 || (params.subgrid & (params.subgrid - 1)) != 0)
        throw Error(ErrorCategory::Config, "sfs: subgrid must be a power of two");

    // Resolutions needed: every level grid plus the level-0 subgrid lattice,
    // which coincides with the grid at resolution 8 * subgrid.
    std::vector<int> resolutions;
    for (int l = 0; l < params.levels; ++l) resolutions.push_back(HemiGrid::resolution_for_level(l));
    int sub_res = 8 * params.subgrid;
    if (std::find(resolutions.begin(), resolutions.end(), sub_res) == resolutions.end())
        resolutions.push_back(sub_res);
    IrradianceTable table = IrradianceTable::build(env, brdf, cam, resolutions);

    NormalSampleSet out;
    out.width = image.width();
    out.height = image.height();
    out.level = params.levels - 1;
    out.mask = mask;
    out.pixels.assign(static_cast<size_t>(out.width) * out.height, {});
    out.degenerate.assign(out.pixels.size(), 0);

    parallel_for(0, out.pixels.size(), [&](size_t pi) {
        int y = static_cast<int>(pi) / out.width;
        int x = static_cast<int>(pi) % out.width;
        if (!mask.at(x, y)) return;
        const Rgb I = image.rgb(x, y);

        // level 0: every active 8x8 cell, maximized over its subgrid positions
        std::vector<Cell> cells;
        cells.reserve(64);
        for (int iy = 0; iy < 8; ++iy)
            for (int ix = 0; ix < 8; ++ix) {
                if (!HemiGrid::active(8, ix, iy)) continue;
                double best = -1.0;
                int bx = -1, by = -1;
                for (int sy = 0; sy < params.subgrid; ++sy)
                    for (int sx = 0; sx < params.subgrid; ++sx) {
                        int gx = ix * params.subgrid + sx;
                        int gy = iy * params.subgrid + sy;
                        if (!HemiGrid::active(sub_res, gx, gy)) continue;
                        double lik =
                            laplace_likelihood(I, table.at(sub_res, gx, gy), params.laplace);
                        if (lik > best) {
                            best = lik;
                            bx = gx;
                            by = gy;
                        }
                    }
                if (bx < 0) continue;
                cells.push_back({ix, iy, HemiGrid::cell_normal(sub_res, bx, by), best});
            }

        // refinement: children (2x2) of the top-K cells at doubled resolution
        for (int level = 1; level < params.levels; ++level) {
            int res = HemiGrid::resolution_for_level(level);
            std::vector<Cell> parents = cells;
            std::sort(parents.begin(), parents.end(),
                      [](const Cell& a, const Cell& b) { return a.likelihood > b.likelihood; });
            if (static_cast<int>(parents.size()) > params.top_k) parents.resize(params.top_k);

            // Intermediate levels rank each child by the best likelihood known
            // anywhere inside it (its sub-grid lattice cells), so a sharp peak
            // off the cell center cannot be pruned away. The final level keeps
            // the plain cell-center likelihood that feeds the densities.
            const bool last = level == params.levels - 1;
            const int factor = !last && sub_res > res ? sub_res / res : 1;
            std::vector<Cell> children;
            children.reserve(parents.size() * 4);
            for (const Cell& p : parents)
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        int cx = p.ix * 2 + dx, cy = p.iy * 2 + dy;
                        if (!HemiGrid::active(res, cx, cy)) continue;
                        double lik = laplace_likelihood(I, table.at(res, cx, cy), params.laplace);
                        for (int sy = 0; sy < factor; ++sy)
                            for (int sx = 0; sx < factor; ++sx) {
                                int gx = cx * factor + sx, gy = cy * factor + sy;
                                if (factor == 1 || !HemiGrid::active(sub_res, gx, gy)) continue;
                                lik = std::max(lik, laplace_likelihood(
                                                        I, table.at(sub_res, gx, gy), params.laplace));
                            }
                        children.push_back({cx, cy, HemiGrid::cell_normal(res, cx, cy), lik});
                    }
            if (children.empty()) break; // keep the previous stage
            cells = std::move(children);
        }

        double total = 0;
        for (const Cell& c : cells) total += c.likelihood;
        auto& px = out.pixels[pi];
        px.reserve(cells.size());
        bool degenerate = !(total > 0) || !std::isfinite(total);
        for (const Cell& c : cells) {
            NormalSample s;
            s.dir = c.dir;
            s.likelihood = c.likelihood;
            s.prob = degenerate ? 1.0 / cells.size() : c.likelihood / total;
            s.cell_x = c.ix;
            s.cell_y = c.iy;
            px.push_back(s);
        }
        if (degenerate) out.degenerate[pi] = 1;
    });
    return out;
}

NormalDensityField aggregate_density(const NormalSampleSet& samples, const HdrImage& image,
                                     const AggregateParams& params) {
    const int w = samples.width, h = samples.height;
    const int final_res = HemiGrid::resolution_for_level(samples.level);

    // densities indexed per pixel, probabilities keyed by final-level cell
    struct PixelDensity {
        std::vector<NormalSample> samples;
        std::unordered_map<int, double> by_cell;
    };
    std::vector<PixelDensity> cur(static_cast<size_t>(w) * h);
    for (size_t i = 0; i < cur.size(); ++i) {
        cur[i].samples = samples.pixels[i];
        for (const auto& s : cur[i].samples) {
            // samples carry cell indices at their own resolution; renormalize
            // into final-level cells for cross-pixel matching
            int ix, iy;
            HemiGrid::cell_of(final_res, s.dir, ix, iy);
            cur[i].by_cell[iy * final_res + ix] += s.prob;
        }
    }

    const double sigma = params.sigma_c_rel * std::fmax(1e-12, image.max_value());
    const double inv_2s2 = 1.0 / (2.0 * sigma * sigma);

    std::vector<std::vector<double>> g(cur.size());
    for (int iter = 0; iter < params.iters; ++iter) {
        std::vector<PixelDensity> next(cur.size());
        parallel_for(0, cur.size(), [&](size_t pi) {
            int y = static_cast<int>(pi) / w;
            int x = static_cast<int>(pi) % w;
            if (!samples.mask.at(x, y)) return;
            auto& px = next[pi];
            px.samples = cur[pi].samples;
            const Rgb Ic = image.rgb(x, y);

            std::vector<double> gg(px.samples.size(), 0.0);
            double wsum = 0;
            bool any_neighbor = false;
            for (int dy = -params.radius; dy <= params.radius; ++dy)
                for (int dx = -params.radius; dx <= params.radius; ++dx) {
                    int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    if (!samples.mask.at(nx, ny)) continue;
                    if (dx != 0 || dy != 0) any_neighbor = true;
                    Rgb In = image.rgb(nx, ny);
                    Rgb d = In - Ic;
                    double wgt = std::exp(-(d.r * d.r + d.g * d.g + d.b * d.b) * inv_2s2);
                    wsum += wgt;
                    const auto& nb = cur[static_cast<size_t>(ny) * w + nx].by_cell;
                    for (size_t si = 0; si < px.samples.size(); ++si) {
                        int cx, cy;
                        HemiGrid::cell_of(final_res, px.samples[si].dir, cx, cy);
                        auto it = nb.find(cy * final_res + cx);
                        if (it != nb.end()) gg[si] += wgt * it->second;
                    }
                }
            if (!any_neighbor) {
                std::fill(gg.begin(), gg.end(), 1.0); // isolated pixel
            } else {
                for (double& v : gg) v /= wsum;
            }

            double total = 0;
            for (size_t si = 0; si < px.samples.size(); ++si) {
                px.samples[si].prob = px.samples[si].likelihood * gg[si];
                total += px.samples[si].prob;
            }
            if (total > 0) {
                for (auto& s : px.samples) s.prob /= total;
            } else {
                for (auto& s : px.samples) s.prob = 1.0 / px.samples.size();
            }
            for (const auto& s : px.samples) {
                int cx, cy;
                HemiGrid::cell_of(final_res, s.dir, cx, cy);
                px.by_cell[cy * final_res + cx] += s.prob;
            }
        });
        cur = std::move(next);
    }

    NormalDensityField field;
    field.width = w;
    field.height = h;
    field.pixels.assign(cur.size(), {});
    for (size_t i = 0; i < cur.size(); ++i) {
        double total = 0;
        for (const auto& s : cur[i].samples) total += s.prob;
        if (cur[i].samples.empty()) continue;
        for (const auto& s : cur[i].samples) {
            double p = total > 0 ? s.prob / total : 1.0 / cur[i].samples.size();
            field.pixels[i].push_back({s.dir, p});
        }
    }
    return field;
}

Mask apply_intensity_mask(const HdrImage& image, const Mask& mask, double percentile) {
    if (percentile <= 0) return mask;
    std::vector<float> vals;
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            if (mask.at(x, y))
                vals.push_back(static_cast<float>(image.rgb(x, y).max_channel()));
    if (vals.empty()) return mask;
    size_t k = static_cast<size_t>(percentile / 100.0 * vals.size());
    k = std::min(k, vals.size() - 1);
    std::nth_element(vals.begin(), vals.begin() + k, vals.end());
    float thresh = vals[k];
    Mask out = mask;
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            if (mask.at(x, y) && image.rgb(x, y).max_channel() < thresh) out.set(x, y, false);
    return out;
}

namespace {
constexpr uint32_t kDensityMagic = 0x4E444631; // "NDF1"
}

void NormalDensityField::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::Io, "density: cannot write " + path);
    uint32_t spp = 0;
    for (const auto& px : pixels) spp = std::max<uint32_t>(spp, static_cast<uint32_t>(px.size()));
    uint32_t header[4] = {kDensityMagic, static_cast<uint32_t>(width),
                          static_cast<uint32_t>(height), spp};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    std::vector<float> rec(4 * spp);
    for (const auto& px : pixels) {
        std::fill(rec.begin(), rec.end(), 0.f);
        for (size_t i = 0; i < px.size(); ++i) {
            rec[4 * i + 0] = static_cast<float>(px[i].dir.x);
            rec[4 * i + 1] = static_cast<float>(px[i].dir.y);
            rec[4 * i + 2] = static_cast<float>(px[i].dir.z);
            rec[4 * i + 3] = static_cast<float>(px[i].prob);
        }
        out.write(reinterpret_cast<const char*>(rec.data()),
                  static_cast<std::streamsize>(rec.size() * 4));
    }
    if (!out) throw Error(ErrorCategory::Io, "density: short write to " + path);
}

NormalDensityField NormalDensityField::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCategory::Io, "density: cannot open " + path);
    uint32_t header[4];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in || header[0] != kDensityMagic)
        throw Error(ErrorCategory::Format, "density: bad magic in " + path);
    NormalDensityField f;
    f.width = static_cast<int>(header[1]);
    f.height = static_cast<int>(header[2]);
    uint32_t spp = header[3];
    if (f.width <= 0 || f.height <= 0)
        throw Error(ErrorCategory::Format, "density: bad dimensions in " + path);
    f.pixels.assign(static_cast<size_t>(f.width) * f.height, {});
    std::vector<float> rec(4 * spp);
    for (auto& px : f.pixels) {
        in.read(reinterpret_cast<char*>(rec.data()), static_cast<std::streamsize>(rec.size() * 4));
        if (static_cast<size_t>(in.gcount()) != rec.size() * 4)
            throw Error(ErrorCategory::Format, "density: truncated payload in " + path);
        for (uint32_t i = 0; i < spp; ++i) {
            float p = rec[4 * i + 3];
            Vec3 d{rec[4 * i], rec[4 * i + 1], rec[4 * i + 2]};
            if (p <= 0 && norm(d) == 0) continue; // padding
            if (!std::isfinite(p) || p < 0)
                throw Error(ErrorCategory::Format, "density: bad probability in " + path);
            px.push_back({d, p});
        }
    }
    return f;
}

} // namespace nlmvs
