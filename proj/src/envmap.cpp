#include "nlmvs/envmap.hpp"

#include "nlmvs/errors.hpp"
#include "nlmvs/pfm.hpp"

#include <cmath>

namespace nlmvs {

EnvironmentMap::EnvironmentMap(HdrImage radiance) : img_(std::move(radiance)) {
    if (img_.channels() != 3)
        throw Error(ErrorCategory::Format, "envmap: expected 3-channel radiance");
    for (float v : img_.data())
        if (!(v >= 0.f) || !std::isfinite(v))
            throw Error(ErrorCategory::Format, "envmap: radiance must be finite and >= 0");
}

EnvironmentMap EnvironmentMap::constant(int width, int height, const Rgb& value) {
    HdrImage img(width, height, 3);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) img.set_rgb(x, y, value);
    return EnvironmentMap(std::move(img));
}

EnvironmentMap EnvironmentMap::from_pfm(const std::string& path) {
    return EnvironmentMap(read_pfm(path));
}

Vec3 EnvironmentMap::texel_direction(int u, int v) const {
    double uu = (u + 0.5) / width();
    double vv = (v + 0.5) / height();
    double phi = (uu - 0.5) * 2.0 * kPi; // [-pi, pi)
    double theta = vv * kPi;             // [0, pi]
    double st = std::sin(theta);
    return {st * std::sin(phi), std::cos(theta), -st * std::cos(phi)};
}

double EnvironmentMap::texel_solid_angle(int u, int v) const {
    (void)u;
    double theta = (v + 0.5) / height() * kPi;
    return std::sin(theta) * (2.0 * kPi / width()) * (kPi / height());
}

Rgb EnvironmentMap::radiance(const Vec3& dir) const {
    Vec3 d = normalized(dir);
    double theta = std::acos(std::fmin(1.0, std::fmax(-1.0, d.y)));
    double phi = std::atan2(d.x, -d.z);
    double uu = phi / (2.0 * kPi) + 0.5;
    double vv = theta / kPi;
    int u = static_cast<int>(uu * width());
    int v = static_cast<int>(vv * height());
    u = std::min(std::max(u, 0), width() - 1);
    v = std::min(std::max(v, 0), height() - 1);
    return texel(u, v);
}

EnvironmentMap EnvironmentMap::scaled(double s) const {
    HdrImage img = img_;
    for (float& v : img.data()) v = static_cast<float>(v * s);
    return EnvironmentMap(std::move(img));
}

EnvironmentMap EnvironmentMap::rotated(const Mat3& rot) const {
    Mat3 inv = rot.transposed();
    HdrImage img(width(), height(), 3);
    // area resample: average the source radiance over each destination texel,
    // weighting sub-directions by their share of the texel's solid angle
    const int ss = 4;
    for (int v = 0; v < height(); ++v)
        for (int u = 0; u < width(); ++u) {
            Rgb acc{0.0};
            double wsum = 0;
            for (int sv = 0; sv < ss; ++sv)
                for (int su = 0; su < ss; ++su) {
                    double uu = (u + (su + 0.5) / ss) / width();
                    double vv = (v + (sv + 0.5) / ss) / height();
                    double phi = (uu - 0.5) * 2.0 * kPi;
                    double theta = vv * kPi;
                    double st = std::sin(theta);
                    Vec3 dir{st * std::sin(phi), std::cos(theta), -st * std::cos(phi)};
                    acc = acc + radiance(inv * dir) * st;
                    wsum += st;
                }
            if (wsum > 0) acc = acc * (1.0 / wsum);
            img.set_rgb(u, v, acc);
        }
    return EnvironmentMap(std::move(img));
}

EnvironmentMap EnvironmentMap::upsampled(int factor) const {
    HdrImage img(width() * factor, height() * factor, 3);
    for (int v = 0; v < img.height(); ++v)
        for (int u = 0; u < img.width(); ++u)
            img.set_rgb(u, v, texel(u / factor, v / factor));
    return EnvironmentMap(std::move(img));
}

EnvironmentMap make_procedural_env(int width, int height, uint32_t seed) {
    // xorshift-style mixing keeps this reproducible across platforms
    auto hash01 = [](uint32_t x) {
        x ^= x >> 16;
        x *= 0x7feb352dU;
        x ^= x >> 15;
        x *= 0x846ca68bU;
        x ^= x >> 16;
        return (x & 0xFFFFFF) / double(0x1000000);
    };

    struct Blob {
        Vec3 dir;
        Rgb color;
        double sharpness;
    };
    std::vector<Blob> blobs;
    const int n_blobs = 4;
    for (int i = 0; i < n_blobs; ++i) {
        uint32_t base = seed * 1013904223U + 97U * i;
        double theta = std::acos(2.0 * hash01(base + 1) - 1.0);
        double phi = 2.0 * kPi * hash01(base + 2);
        Blob b;
        b.dir = {std::sin(theta) * std::sin(phi), std::cos(theta), -std::sin(theta) * std::cos(phi)};
        b.color = {2.0 + 8.0 * hash01(base + 3), 2.0 + 8.0 * hash01(base + 4),
                   2.0 + 8.0 * hash01(base + 5)};
        b.sharpness = 20.0 + 60.0 * hash01(base + 6);
        blobs.push_back(b);
    }

    HdrImage img(width, height, 3);
    EnvironmentMap probe = EnvironmentMap::constant(width, height, Rgb{0.0});
    for (int v = 0; v < height; ++v)
        for (int u = 0; u < width; ++u) {
            Vec3 d = probe.texel_direction(u, v);
            double elev = 0.5 * (d.y + 1.0);
            Rgb c{0.10 + 0.35 * elev, 0.12 + 0.30 * elev, 0.15 + 0.40 * elev};
            for (const auto& b : blobs) {
                double w = std::exp(b.sharpness * (dot(d, b.dir) - 1.0));
                c += b.color * w;
            }
            img.set_rgb(u, v, c);
        }
    return EnvironmentMap(std::move(img));
}

} // namespace nlmvs
