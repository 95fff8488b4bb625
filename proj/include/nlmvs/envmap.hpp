#pragma once

#include "nlmvs/image.hpp"
#include "nlmvs/math.hpp"

#include <string>
#include <vector>

namespace nlmvs {

/// Equirectangular (lat-long) radiance map in the world frame.
/// u in [0,1) maps to azimuth phi in [-pi,pi), v in [0,1] to polar theta in [0,pi]
/// measured from the world +y axis (up). Direction at (phi, theta):
///   d = (sin(theta)sin(phi), cos(theta), -sin(theta)cos(phi))
/// so (u,v)=(0.5,0.5) looks down -z at the horizon.
class EnvironmentMap {
  public:
    EnvironmentMap() = default;
    explicit EnvironmentMap(HdrImage radiance);

    static EnvironmentMap constant(int width, int height, const Rgb& value);
    static EnvironmentMap from_pfm(const std::string& path);

    int width() const { return img_.width(); }
    int height() const { return img_.height(); }
    const HdrImage& image() const { return img_; }

    Rgb texel(int u, int v) const { return img_.rgb(u, v); }
    void set_texel(int u, int v, const Rgb& value) { img_.set_rgb(u, v, value); }

    /// World direction at the center of texel (u,v).
    Vec3 texel_direction(int u, int v) const;
    /// Solid angle of texel (u,v): sin(theta) * (2*pi/W) * (pi/H).
    double texel_solid_angle(int u, int v) const;
    /// Bilinear-free nearest lookup for a world direction.
    Rgb radiance(const Vec3& dir) const;

    EnvironmentMap scaled(double s) const;
    /// Resampled copy rotated so that new(d) = old(R^T d).
    EnvironmentMap rotated(const Mat3& rot) const;
    /// Nearest-texel upsampling by an integer factor (quadrature refinement oracle).
    EnvironmentMap upsampled(int factor) const;

  private:
    HdrImage img_;
};

/// Deterministic synthetic illumination: an elevation gradient plus a few
/// bright colored Gaussian blobs. Structured enough for shading cues.
EnvironmentMap make_procedural_env(int width, int height, uint32_t seed);

} // namespace nlmvs
