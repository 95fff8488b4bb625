#pragma once

#include "nlmvs/math.hpp"

namespace nlmvs {

/// Pinhole camera. Camera frame: x right, y down, z forward (into the scene).
/// R maps world to camera, X_cam = R * X_world + t.
struct Camera {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    Mat3 R;
    Vec3 t;
    int width = 0, height = 0;

    Vec3 world_to_cam(const Vec3& p) const { return R * p + t; }
    Vec3 cam_to_world(const Vec3& p) const { return R.transposed() * (p - t); }
    Vec3 center() const { return R.transposed() * (-t); }
    /// Optical axis in world coordinates (camera +z).
    Vec3 axis() const { return R.transposed() * Vec3{0, 0, 1}; }

    /// Projects a world point; returns false when behind the camera.
    bool project(const Vec3& world, double& px, double& py, double& depth) const {
        Vec3 c = world_to_cam(world);
        if (c.z <= 0) return false;
        px = fx * c.x / c.z + cx;
        py = fy * c.y / c.z + cy;
        depth = c.z;
        return true;
    }

    /// Camera-frame point of pixel (px,py) at depth d along the optical axis.
    Vec3 backproject_cam(double px, double py, double d) const {
        return {(px - cx) / fx * d, (py - cy) / fy * d, d};
    }
    Vec3 backproject_world(double px, double py, double d) const {
        return cam_to_world(backproject_cam(px, py, d));
    }

    /// World-frame ray direction through pixel center (px,py).
    Vec3 ray_dir_world(double px, double py) const {
        return normalized(R.transposed() * Vec3{(px - cx) / fx, (py - cy) / fy, 1.0});
    }

    bool valid_rotation(double tol = 1e-6) const { return R.is_rotation(tol); }
};

/// Rotation by pi about x: maps the camera frame (y down, z forward) to the
/// shading/view frame (y up, z toward the viewer) used by the hemispherical
/// normal grids. Its own inverse.
inline Vec3 cam_to_view(const Vec3& v) { return {v.x, -v.y, -v.z}; }
inline Vec3 view_to_cam(const Vec3& v) { return {v.x, -v.y, -v.z}; }

inline Mat3 cam_view_flip() {
    Mat3 f;
    f(0, 0) = 1;
    f(1, 1) = -1;
    f(2, 2) = -1;
    return f;
}

} // namespace nlmvs
