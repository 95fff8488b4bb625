#include "nlmvs/brdf.hpp"

#include "nlmvs/errors.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>

namespace nlmvs {

namespace {

bool above_horizon(const Vec3& wi, const Vec3& wo, const Vec3& n) {
    return dot(wi, n) > 0 && dot(wo, n) > 0;
}

} // namespace

Rgb LambertianBrdf::eval(const Vec3& wi, const Vec3& wo, const Vec3& n) const {
    if (!above_horizon(wi, wo, n)) return Rgb{0.0};
    return albedo_ / kPi;
}

MicrofacetBrdf::MicrofacetBrdf(const Rgb& diffuse, const Rgb& specular, double roughness)
    : diffuse_(diffuse), specular_(specular), roughness_(roughness) {
    if (!(roughness > 0.0 && roughness <= 1.0))
        throw Error(ErrorCategory::Config, "microfacet: roughness must be in (0,1]");
}

Rgb MicrofacetBrdf::eval(const Vec3& wi, const Vec3& wo, const Vec3& n) const {
    double ci = dot(wi, n), co = dot(wo, n);
    if (ci <= 0 || co <= 0) return Rgb{0.0};

    Vec3 h = normalized(wi + wo);
    double ch = std::fmax(0.0, dot(h, n));
    double a2 = roughness_ * roughness_;

    double denom = ch * ch * (a2 - 1.0) + 1.0;
    double d = a2 / (kPi * denom * denom);

    auto g1 = [a2](double c) { return 2.0 * c / (c + std::sqrt(a2 + (1.0 - a2) * c * c)); };
    double g = g1(ci) * g1(co);

    double fw = std::pow(1.0 - std::fmax(0.0, dot(wi, h)), 5.0);
    Rgb f = specular_ + (Rgb{1.0} - specular_) * fw;

    double spec_scale = d * g / (4.0 * ci * co);
    return diffuse_ / kPi + f * spec_scale;
}

MerlBrdf::MerlBrdf(std::vector<float> table) : table_(std::move(table)) {
    if (table_.size() != 3 * kSamplesPerChannel)
        throw Error(ErrorCategory::Format, "merl: wrong table size");
}

MerlBrdf MerlBrdf::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCategory::Io, "merl: cannot open " + path);

    int32_t dims[3];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in) throw Error(ErrorCategory::Format, "merl: truncated header in " + path);
    if (dims[0] != kThetaH || dims[1] != kThetaD || dims[2] != kPhiD)
        throw Error(ErrorCategory::Format, "merl: unexpected dimensions in " + path);

    const size_t count = 3 * kSamplesPerChannel;
    std::vector<double> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * 8));
    if (static_cast<size_t>(in.gcount()) != count * 8)
        throw Error(ErrorCategory::Format, "merl: short payload in " + path);

    const double scale[3] = {1.0 / 1500.0, 1.15 / 1500.0, 1.66 / 1500.0};
    std::vector<float> table(count);
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < kSamplesPerChannel; ++i) {
            double v = raw[c * kSamplesPerChannel + i];
            // negative entries mark invalid samples
            table[c * kSamplesPerChannel + i] =
                v < 0 ? 0.f : static_cast<float>(v * scale[c]);
        }
    return MerlBrdf(std::move(table));
}

Rgb MerlBrdf::eval(const Vec3& wi, const Vec3& wo, const Vec3& n) const {
    if (!above_horizon(wi, wo, n)) return Rgb{0.0};

    // Local frame with n as z; the table is isotropic so any tangent works.
    Vec3 t = std::abs(n.z) < 0.9 ? normalized(cross(Vec3{0, 0, 1}, n))
                                 : normalized(cross(Vec3{1, 0, 0}, n));
    Vec3 b = cross(n, t);
    auto to_local = [&](const Vec3& v) { return Vec3{dot(v, t), dot(v, b), dot(v, n)}; };
    Vec3 li = to_local(wi), lo = to_local(wo);

    Vec3 h = normalized(li + lo);
    double theta_h = std::acos(std::fmin(1.0, std::fmax(-1.0, h.z)));
    double phi_h = std::atan2(h.y, h.x);

    // Rotate wi into the half-vector frame to get the difference angles.
    Mat3 rz = Mat3::rotation_axis_angle({0, 0, 1}, -phi_h);
    Mat3 ry = Mat3::rotation_axis_angle({0, 1, 0}, -theta_h);
    Vec3 d = ry * (rz * li);
    double theta_d = std::acos(std::fmin(1.0, std::fmax(-1.0, d.z)));
    double phi_d = std::atan2(d.y, d.x);
    if (phi_d < 0) phi_d += kPi; // reciprocity folds phi_d into [0, pi)

    // theta_h uses the square-root warp of the original database.
    int ih = static_cast<int>(std::sqrt(theta_h / (kPi / 2.0)) * kThetaH);
    int id = static_cast<int>(theta_d / (kPi / 2.0) * kThetaD);
    int ip = static_cast<int>(phi_d / kPi * kPhiD);
    ih = std::min(std::max(ih, 0), kThetaH - 1);
    id = std::min(std::max(id, 0), kThetaD - 1);
    ip = std::min(std::max(ip, 0), kPhiD - 1);

    size_t idx = (static_cast<size_t>(ih) * kThetaD + id) * kPhiD + ip;
    return {table_[idx], table_[kSamplesPerChannel + idx], table_[2 * kSamplesPerChannel + idx]};
}

} // namespace nlmvs
