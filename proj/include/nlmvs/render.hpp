#pragma once

#include "nlmvs/brdf.hpp"
#include "nlmvs/camera.hpp"
#include "nlmvs/envmap.hpp"
#include "nlmvs/image.hpp"
#include "nlmvs/shapes.hpp"

namespace nlmvs {

/// Shading integral of illumination * BRDF * clamped cosine over the sphere,
/// evaluated by full-texel summation with sin(theta) solid-angle weights.
/// All directions in the world frame; wo points from surface to viewer.
Rgb render_irradiance(const EnvironmentMap& env, const Brdf& brdf, const Vec3& n, const Vec3& wo);

struct RenderResult {
    HdrImage image;   // 3-channel radiance
    DepthMap depth;   // 1-channel, distance along the optical axis
    NormalMap normal; // 3-channel, world frame
    Mask mask;
};

struct RenderOptions {
    /// Distant-camera shading: wo is the constant optical axis per view.
    /// When false, wo is the per-pixel perspective view direction.
    bool orthographic_shading = true;
};

/// Shadowless direct-lighting render plus ground-truth depth/normal/mask.
RenderResult render_view(const Shape& shape, const Brdf& brdf, const Camera& cam,
                         const EnvironmentMap& env, const RenderOptions& opts = {});

} // namespace nlmvs
