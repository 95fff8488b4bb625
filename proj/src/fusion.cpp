#include "nlmvs/fusion.hpp"

#include "nlmvs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace nlmvs {

ViewNeighborhood select_neighbors(const std::vector<Camera>& poses, int ref, const Vec3& up_axis) {
    if (poses.size() < 5) throw Error(ErrorCategory::Config, "neighbors: need >= 5 views");
    if (ref < 0 || ref >= static_cast<int>(poses.size()))
        throw Error(ErrorCategory::Config, "neighbors: reference out of range");
    for (size_t i = 0; i < poses.size(); ++i)
        for (size_t j = i + 1; j < poses.size(); ++j)
            if (norm(poses[i].center() - poses[j].center()) < 1e-12)
                throw Error(ErrorCategory::Config, "neighbors: duplicate camera centers");

    // azimuth of each optical axis about the up axis
    Vec3 up = normalized(up_axis);
    Vec3 seed = std::abs(up.y) < 0.9 ? Vec3{0, 1, 0} : Vec3{0, 0, 1};
    Vec3 e1 = normalized(cross(seed, up));
    Vec3 e2 = cross(up, e1);
    auto azimuth = [&](const Camera& c) {
        Vec3 a = c.axis();
        return std::atan2(dot(a, e2), dot(a, e1));
    };

    double ref_az = azimuth(poses[ref]);
    struct Cand {
        int id;
        double delta; // signed azimuth difference in (-pi, pi]
    };
    std::vector<Cand> left, right;
    for (int i = 0; i < static_cast<int>(poses.size()); ++i) {
        if (i == ref) continue;
        double d = azimuth(poses[i]) - ref_az;
        while (d <= -kPi) d += 2 * kPi;
        while (d > kPi) d -= 2 * kPi;
        (d >= 0 ? right : left).push_back({i, d});
    }
    auto by_abs = [](const Cand& a, const Cand& b) { return std::abs(a.delta) < std::abs(b.delta); };
    std::sort(left.begin(), left.end(), by_abs);
    std::sort(right.begin(), right.end(), by_abs);

    ViewNeighborhood nb;
    nb.reference = ref;
    size_t li = 0, ri = 0;
    int take_left = 2, take_right = 2;
    // shift deficits to the populated side
    if (static_cast<int>(left.size()) < take_left) {
        take_right += take_left - static_cast<int>(left.size());
        take_left = static_cast<int>(left.size());
    }
    if (static_cast<int>(right.size()) < take_right) {
        take_left += take_right - static_cast<int>(right.size());
        take_right = static_cast<int>(right.size());
        take_left = std::min<int>(take_left, static_cast<int>(left.size()));
    }
    int slot = 0;
    for (int k = 0; k < take_right && ri < right.size(); ++k) nb.sources[slot++] = right[ri++].id;
    for (int k = 0; k < take_left && li < left.size(); ++k) nb.sources[slot++] = left[li++].id;
    if (slot < 4) throw Error(ErrorCategory::Config, "neighbors: fewer than 4 usable views");
    return nb;
}

OrientedPointCloud backproject(const DepthNormalMaps& maps, const Camera& cam,
                               const BackprojectOptions& opts, const HdrImage* max_prob,
                               const HdrImage* color) {
    if (opts.stride < 1) throw Error(ErrorCategory::Config, "backproject: stride must be >= 1");
    OrientedPointCloud cloud;
    const Mat3 cam_to_world = cam.R.transposed();
    const Vec3 center = cam.center();
    for (int y = 0; y < maps.depth.height(); y += opts.stride)
        for (int x = 0; x < maps.depth.width(); x += opts.stride) {
            if (!maps.mask.at(x, y)) continue;
            if (max_prob && opts.min_confidence > 0 &&
                max_prob->at(x, y, 0) < opts.min_confidence)
                continue;
            double d = maps.depth.at(x, y, 0);
            OrientedPoint p;
            p.position = cam.backproject_world(x + 0.5, y + 0.5, d);
            Rgb nc = maps.normal.rgb(x, y);
            Vec3 n = cam_to_world * Vec3{nc.r, nc.g, nc.b};
            // re-orient flipped normals toward the camera
            if (dot(n, center - p.position) < 0) n = -n;
            p.normal = normalized(n);
            if (color) p.color = color->rgb(x, y);
            cloud.push_back(p);
        }
    return cloud;
}

OrientedPointCloud merge_clouds(const std::vector<OrientedPointCloud>& clouds, double voxel) {
    if (voxel <= 0) throw Error(ErrorCategory::Config, "merge: voxel must be > 0");

    struct Bin {
        Vec3 pos_sum, n_sum;
        Rgb color_sum;
        size_t count = 0, color_count = 0;
    };
    // ordered map keeps output deterministic
    std::map<std::array<int64_t, 3>, Bin> bins;
    for (const auto& cloud : clouds)
        for (const auto& p : cloud) {
            std::array<int64_t, 3> key{static_cast<int64_t>(std::floor(p.position.x / voxel)),
                                       static_cast<int64_t>(std::floor(p.position.y / voxel)),
                                       static_cast<int64_t>(std::floor(p.position.z / voxel))};
            Bin& b = bins[key];
            b.pos_sum += p.position;
            b.n_sum += p.normal;
            b.count++;
            if (p.color) {
                b.color_sum += *p.color;
                b.color_count++;
            }
        }

    OrientedPointCloud out;
    out.reserve(bins.size());
    for (const auto& [key, b] : bins) {
        Vec3 mean_n = b.n_sum / static_cast<double>(b.count);
        if (norm(mean_n) < 0.3) continue; // views disagree on orientation
        OrientedPoint p;
        p.position = b.pos_sum / static_cast<double>(b.count);
        p.normal = normalized(mean_n);
        if (b.color_count > 0) p.color = b.color_sum / static_cast<double>(b.color_count);
        out.push_back(p);
    }
    return out;
}

void write_ply(const OrientedPointCloud& cloud, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::Io, "ply: cannot write " + path);
    bool has_color = !cloud.empty() && cloud.front().color.has_value();

    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << cloud.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    out << "property float nx\nproperty float ny\nproperty float nz\n";
    if (has_color)
        out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "end_header\n";

    for (const auto& p : cloud) {
        float v[6] = {static_cast<float>(p.position.x), static_cast<float>(p.position.y),
                      static_cast<float>(p.position.z), static_cast<float>(p.normal.x),
                      static_cast<float>(p.normal.y), static_cast<float>(p.normal.z)};
        out.write(reinterpret_cast<const char*>(v), sizeof(v));
        if (has_color) {
            auto q = [](double c) {
                return static_cast<uint8_t>(std::min(255.0, std::max(0.0, c * 255.0 + 0.5)));
            };
            Rgb c = p.color.value_or(Rgb{0.0});
            uint8_t rgb[3] = {q(c.r), q(c.g), q(c.b)};
            out.write(reinterpret_cast<const char*>(rgb), 3);
        }
    }
    if (!out) throw Error(ErrorCategory::Io, "ply: short write to " + path);
}

OrientedPointCloud read_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCategory::Io, "ply: cannot open " + path);
    std::string line;
    size_t count = 0;
    bool has_color = false;
    if (!std::getline(in, line) || line != "ply")
        throw Error(ErrorCategory::Format, "ply: bad magic in " + path);
    while (std::getline(in, line)) {
        if (line == "end_header") break;
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "element") {
            std::string name;
            ss >> name >> count;
            if (name != "vertex")
                throw Error(ErrorCategory::Format, "ply: unsupported element in " + path);
        } else if (tok == "property") {
            std::string type, name;
            ss >> type >> name;
            if (name == "red") has_color = true;
        } else if (tok == "format" && line != "format binary_little_endian 1.0") {
            throw Error(ErrorCategory::Format, "ply: unsupported format in " + path);
        }
    }
    OrientedPointCloud cloud(count);
    for (auto& p : cloud) {
        float v[6];
        in.read(reinterpret_cast<char*>(v), sizeof(v));
        if (!in) throw Error(ErrorCategory::Format, "ply: truncated payload in " + path);
        p.position = {v[0], v[1], v[2]};
        p.normal = {v[3], v[4], v[5]};
        if (has_color) {
            uint8_t rgb[3];
            in.read(reinterpret_cast<char*>(rgb), 3);
            p.color = Rgb{rgb[0] / 255.0, rgb[1] / 255.0, rgb[2] / 255.0};
        }
    }
    return cloud;
}

} // namespace nlmvs
