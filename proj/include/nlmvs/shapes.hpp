#pragma once

#include "nlmvs/math.hpp"

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace nlmvs {

struct RayHit {
    double t = 0;      // distance along the (unit) ray direction
    Vec3 position;     // world frame
    Vec3 normal;       // world frame, unit, outward
};

/// Closed surface supporting ray queries, used by the renderer.
class Shape {
  public:
    virtual ~Shape() = default;
    /// First intersection with ray origin + t*dir, t > 1e-9. dir unit.
    virtual bool intersect(const Vec3& origin, const Vec3& dir, RayHit& hit) const = 0;
    virtual void bounds(Vec3& lo, Vec3& hi) const = 0;
    virtual std::unique_ptr<Shape> clone() const = 0;
};

class Sphere final : public Shape {
  public:
    Sphere(const Vec3& center, double radius) : center_(center), radius_(radius) {}

    bool intersect(const Vec3& origin, const Vec3& dir, RayHit& hit) const override;
    void bounds(Vec3& lo, Vec3& hi) const override;
    std::unique_ptr<Shape> clone() const override { return std::make_unique<Sphere>(*this); }

    const Vec3& center() const { return center_; }
    double radius() const { return radius_; }

  private:
    Vec3 center_;
    double radius_;
};

/// Implicit |x/a|^r + |y/b|^r + |z/c|^r = 1; r=2 is an ellipsoid, larger r
/// approaches a box. Intersection by bounding-sphere bracketing + bisection.
class Superellipsoid final : public Shape {
  public:
    Superellipsoid(const Vec3& center, const Vec3& radii, double exponent);

    bool intersect(const Vec3& origin, const Vec3& dir, RayHit& hit) const override;
    void bounds(Vec3& lo, Vec3& hi) const override;
    std::unique_ptr<Shape> clone() const override { return std::make_unique<Superellipsoid>(*this); }

  private:
    double implicit(const Vec3& p) const;
    Vec3 gradient(const Vec3& p) const;

    Vec3 center_, radii_;
    double exponent_;
};

struct Triangle {
    Vec3 a, b, c;
    Vec3 normal() const { return normalized(cross(b - a, c - a)); }
};

/// Triangle soup with a uniform-grid index for closest-point and ray queries.
class TriangleMesh final : public Shape {
  public:
    explicit TriangleMesh(std::vector<Triangle> tris);

    static TriangleMesh load_obj(const std::string& path);
    void save_obj(const std::string& path) const;
    static TriangleMesh make_sphere(const Vec3& center, double radius, int subdiv);
    static TriangleMesh make_superellipsoid(const Vec3& center, const Vec3& radii, double exponent,
                                            int subdiv);

    bool intersect(const Vec3& origin, const Vec3& dir, RayHit& hit) const override;
    void bounds(Vec3& lo, Vec3& hi) const override;
    std::unique_ptr<Shape> clone() const override { return std::make_unique<TriangleMesh>(*this); }

    size_t triangle_count() const { return tris_.size(); }
    const std::vector<Triangle>& triangles() const { return tris_; }

    /// Distance to the nearest point on any triangle, grid-accelerated.
    double distance_to(const Vec3& p) const;
    /// Brute-force variant, the test oracle for distance_to.
    double distance_to_brute(const Vec3& p) const;

  private:
    std::vector<Triangle> tris_;
    Vec3 lo_, hi_;
    int nx_ = 0, ny_ = 0, nz_ = 0;
    double cell_ = 0;
    std::vector<std::vector<int>> cells_;

    void build_grid();
    int cell_index(int ix, int iy, int iz) const { return (iz * ny_ + iy) * nx_ + ix; }
};

/// Closest point on triangle abc to p.
Vec3 closest_point_on_triangle(const Vec3& p, const Triangle& tri);
bool ray_triangle(const Vec3& origin, const Vec3& dir, const Triangle& tri, double& t);

} // namespace nlmvs
