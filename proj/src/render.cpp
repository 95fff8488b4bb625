#include "nlmvs/render.hpp"

#include "nlmvs/parallel.hpp"

namespace nlmvs {

Rgb render_irradiance(const EnvironmentMap& env, const Brdf& brdf, const Vec3& n, const Vec3& wo) {
    Rgb sum;
    for (int v = 0; v < env.height(); ++v) {
        double dw_row = env.texel_solid_angle(0, v);
        for (int u = 0; u < env.width(); ++u) {
            Vec3 wi = env.texel_direction(u, v);
            double cosi = dot(wi, n);
            if (cosi <= 0) continue;
            Rgb rho = brdf.eval(wi, wo, n);
            if (rho.r == 0 && rho.g == 0 && rho.b == 0) continue;
            sum += env.texel(u, v) * rho * (cosi * dw_row);
        }
    }
    return sum;
}

RenderResult render_view(const Shape& shape, const Brdf& brdf, const Camera& cam,
                         const EnvironmentMap& env, const RenderOptions& opts) {
    RenderResult out;
    out.image = HdrImage(cam.width, cam.height, 3);
    out.depth = DepthMap(cam.width, cam.height, 1);
    out.normal = NormalMap(cam.width, cam.height, 3);
    out.mask = Mask(cam.width, cam.height);

    const Vec3 origin = cam.center();
    const Vec3 wo_axis = -cam.axis(); // surface toward camera

    parallel_for(0, static_cast<size_t>(cam.height), [&](size_t yy) {
        int y = static_cast<int>(yy);
        for (int x = 0; x < cam.width; ++x) {
            Vec3 dir = cam.ray_dir_world(x + 0.5, y + 0.5);
            RayHit hit;
            if (!shape.intersect(origin, dir, hit)) continue;
            Vec3 wo = opts.orthographic_shading ? wo_axis : normalized(origin - hit.position);
            Rgb radiance = render_irradiance(env, brdf, hit.normal, wo);
            out.image.set_rgb(x, y, radiance);
            // depth along the optical axis, not along the ray
            Vec3 pc = cam.world_to_cam(hit.position);
            out.depth.at(x, y, 0) = static_cast<float>(pc.z);
            out.normal.set_rgb(x, y, {hit.normal.x, hit.normal.y, hit.normal.z});
            out.mask.set(x, y, true);
        }
    });
    return out;
}

} // namespace nlmvs
