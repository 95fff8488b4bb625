#pragma once

#include "nlmvs/math.hpp"

#include <memory>
#include <string>
#include <vector>

namespace nlmvs {

/// Homogeneous surface reflectance rho(wi, wo, n). All directions unit length,
/// in one common frame, pointing away from the surface. Evaluation is 0 when
/// either direction falls below the horizon of n.
class Brdf {
  public:
    enum class Kind { Lambertian, Microfacet, MerlTabulated };

    virtual ~Brdf() = default;
    virtual Kind kind() const = 0;
    virtual Rgb eval(const Vec3& wi, const Vec3& wo, const Vec3& n) const = 0;
    virtual std::unique_ptr<Brdf> clone() const = 0;
};

class LambertianBrdf final : public Brdf {
  public:
    explicit LambertianBrdf(const Rgb& albedo) : albedo_(albedo) {}

    Kind kind() const override { return Kind::Lambertian; }
    Rgb eval(const Vec3& wi, const Vec3& wo, const Vec3& n) const override;
    std::unique_ptr<Brdf> clone() const override { return std::make_unique<LambertianBrdf>(*this); }

    const Rgb& albedo() const { return albedo_; }

  private:
    Rgb albedo_;
};

/// Single-lobe microfacet model on top of a Lambertian base:
///   rho = diffuse/pi + F(wi.h) D(h) G(wi, wo) / (4 (n.wi)(n.wo))
/// with D the GGX normal distribution with roughness alpha,
///   D(h) = alpha^2 / (pi ((n.h)^2 (alpha^2 - 1) + 1)^2),
/// G the separable Smith GGX shadowing,
///   G1(v) = 2 (n.v) / ((n.v) + sqrt(alpha^2 + (1 - alpha^2) (n.v)^2)),
/// and F the Schlick Fresnel with F0 = specular,
///   F(c) = F0 + (1 - F0) (1 - c)^5.
class MicrofacetBrdf final : public Brdf {
  public:
    MicrofacetBrdf(const Rgb& diffuse, const Rgb& specular, double roughness);

    Kind kind() const override { return Kind::Microfacet; }
    Rgb eval(const Vec3& wi, const Vec3& wo, const Vec3& n) const override;
    std::unique_ptr<Brdf> clone() const override { return std::make_unique<MicrofacetBrdf>(*this); }

    const Rgb& diffuse() const { return diffuse_; }
    const Rgb& specular() const { return specular_; }
    double roughness() const { return roughness_; }

  private:
    Rgb diffuse_, specular_;
    double roughness_;
};

/// MERL measured BRDF: 90x90x180x3 table indexed by the half-angle
/// parameterization (theta_h, theta_d, phi_d), nearest-neighbor lookup.
class MerlBrdf final : public Brdf {
  public:
    static constexpr int kThetaH = 90;
    static constexpr int kThetaD = 90;
    static constexpr int kPhiD = 180;
    static constexpr size_t kSamplesPerChannel =
        static_cast<size_t>(kThetaH) * kThetaD * kPhiD;

    /// Table already scaled per channel, invalid (negative) entries zeroed.
    explicit MerlBrdf(std::vector<float> table);

    static MerlBrdf load(const std::string& path);

    Kind kind() const override { return Kind::MerlTabulated; }
    Rgb eval(const Vec3& wi, const Vec3& wo, const Vec3& n) const override;
    std::unique_ptr<Brdf> clone() const override { return std::make_unique<MerlBrdf>(*this); }

    const std::vector<float>& table() const { return table_; }

  private:
    std::vector<float> table_; // red plane, green plane, blue plane
};

} // namespace nlmvs
