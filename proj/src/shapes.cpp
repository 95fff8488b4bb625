#include "nlmvs/shapes.hpp"

#include "nlmvs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace nlmvs {

bool Sphere::intersect(const Vec3& origin, const Vec3& dir, RayHit& hit) const {
    Vec3 oc = origin - center_;
    double b = dot(oc, dir);
    double c = dot(oc, oc) - radius_ * radius_;
    double disc = b * b - c;
    if (disc < 0) return false;
    double s = std::sqrt(disc);
    double t = -b - s;
    if (t <= 1e-9) t = -b + s;
    if (t <= 1e-9) return false;
    hit.t = t;
    hit.position = origin + dir * t;
    hit.normal = normalized(hit.position - center_);
    return true;
}

void Sphere::bounds(Vec3& lo, Vec3& hi) const {
    lo = center_ - Vec3{radius_, radius_, radius_};
    hi = center_ + Vec3{radius_, radius_, radius_};
}

Superellipsoid::Superellipsoid(const Vec3& center, const Vec3& radii, double exponent)
    : center_(center), radii_(radii), exponent_(exponent) {
    if (exponent < 1.0) throw Error(ErrorCategory::Config, "superellipsoid: exponent must be >= 1");
    if (radii.x <= 0 || radii.y <= 0 || radii.z <= 0)
        throw Error(ErrorCategory::Config, "superellipsoid: radii must be positive");
}

double Superellipsoid::implicit(const Vec3& p) const {
    Vec3 q = p - center_;
    return std::pow(std::abs(q.x / radii_.x), exponent_) +
           std::pow(std::abs(q.y / radii_.y), exponent_) +
           std::pow(std::abs(q.z / radii_.z), exponent_) - 1.0;
}

Vec3 Superellipsoid::gradient(const Vec3& p) const {
    const double h = 1e-6 * std::max({radii_.x, radii_.y, radii_.z});
    return {(implicit(p + Vec3{h, 0, 0}) - implicit(p - Vec3{h, 0, 0})) / (2 * h),
            (implicit(p + Vec3{0, h, 0}) - implicit(p - Vec3{0, h, 0})) / (2 * h),
            (implicit(p + Vec3{0, 0, h}) - implicit(p - Vec3{0, 0, h})) / (2 * h)};
}

bool Superellipsoid::intersect(const Vec3& origin, const Vec3& dir, RayHit& hit) const {
    double rb = std::max({radii_.x, radii_.y, radii_.z});
    Sphere bound(center_, rb * 1.0001);
    RayHit bh;
    if (!bound.intersect(origin, dir, bh)) return false;
    double t0 = std::max(1e-9, bh.t);
    double t1 = t0 + 2.0 * rb * 1.0001;

    // march to bracket the first sign change, then bisect
    const int steps = 512;
    double dt = (t1 - t0) / steps;
    double prev_t = t0, prev_f = implicit(origin + dir * t0);
    if (prev_f <= 0) return false; // origin inside
    bool found = false;
    double lo = 0, hi = 0;
    for (int i = 1; i <= steps; ++i) {
        double t = t0 + i * dt;
        double f = implicit(origin + dir * t);
        if (f <= 0) {
            lo = prev_t;
            hi = t;
            found = true;
            break;
        }
        prev_t = t;
        prev_f = f;
    }
    if (!found) return false;
    for (int i = 0; i < 60; ++i) {
        double mid = 0.5 * (lo + hi);
        if (implicit(origin + dir * mid) > 0)
            lo = mid;
        else
            hi = mid;
    }
    hit.t = 0.5 * (lo + hi);
    hit.position = origin + dir * hit.t;
    hit.normal = normalized(gradient(hit.position));
    return true;
}

void Superellipsoid::bounds(Vec3& lo, Vec3& hi) const {
    lo = center_ - radii_;
    hi = center_ + radii_;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Triangle& tri) {
    // Ericson, Real-Time Collision Detection, 5.1.5
    Vec3 ab = tri.b - tri.a, ac = tri.c - tri.a, ap = p - tri.a;
    double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0 && d2 <= 0) return tri.a;

    Vec3 bp = p - tri.b;
    double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0 && d4 <= d3) return tri.b;

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) return tri.a + ab * (d1 / (d1 - d3));

    Vec3 cp = p - tri.c;
    double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0 && d5 <= d6) return tri.c;

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) return tri.a + ac * (d2 / (d2 - d6));

    double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
        return tri.b + (tri.c - tri.b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));

    double denom = 1.0 / (va + vb + vc);
    return tri.a + ab * (vb * denom) + ac * (vc * denom);
}

bool ray_triangle(const Vec3& origin, const Vec3& dir, const Triangle& tri, double& t) {
    // Moeller-Trumbore
    Vec3 e1 = tri.b - tri.a, e2 = tri.c - tri.a;
    Vec3 pv = cross(dir, e2);
    double det = dot(e1, pv);
    if (std::abs(det) < 1e-14) return false;
    double inv = 1.0 / det;
    Vec3 tv = origin - tri.a;
    double u = dot(tv, pv) * inv;
    if (u < 0 || u > 1) return false;
    Vec3 qv = cross(tv, e1);
    double v = dot(dir, qv) * inv;
    if (v < 0 || u + v > 1) return false;
    double tt = dot(e2, qv) * inv;
    if (tt <= 1e-9) return false;
    t = tt;
    return true;
}

TriangleMesh::TriangleMesh(std::vector<Triangle> tris) : tris_(std::move(tris)) {
    if (tris_.empty()) throw Error(ErrorCategory::Config, "mesh: no triangles");
    build_grid();
}

void TriangleMesh::build_grid() {
    lo_ = Vec3{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
               std::numeric_limits<double>::max()};
    hi_ = lo_ * -1.0;
    for (const auto& t : tris_)
        for (const Vec3* v : {&t.a, &t.b, &t.c}) {
            lo_.x = std::min(lo_.x, v->x);
            lo_.y = std::min(lo_.y, v->y);
            lo_.z = std::min(lo_.z, v->z);
            hi_.x = std::max(hi_.x, v->x);
            hi_.y = std::max(hi_.y, v->y);
            hi_.z = std::max(hi_.z, v->z);
        }
    Vec3 ext = hi_ - lo_;
    double diag = norm(ext);
    if (diag <= 0) throw Error(ErrorCategory::Config, "mesh: degenerate bounds");
    int target = static_cast<int>(std::cbrt(static_cast<double>(tris_.size()))) + 1;
    target = std::min(std::max(target, 1), 64);
    cell_ = std::max({ext.x, ext.y, ext.z}) / target;
    nx_ = std::max(1, static_cast<int>(std::ceil(ext.x / cell_)));
    ny_ = std::max(1, static_cast<int>(std::ceil(ext.y / cell_)));
    nz_ = std::max(1, static_cast<int>(std::ceil(ext.z / cell_)));
    cells_.assign(static_cast<size_t>(nx_) * ny_ * nz_, {});
    for (size_t i = 0; i < tris_.size(); ++i) {
        const auto& t = tris_[i];
        Vec3 tlo{std::min({t.a.x, t.b.x, t.c.x}), std::min({t.a.y, t.b.y, t.c.y}),
                 std::min({t.a.z, t.b.z, t.c.z})};
        Vec3 thi{std::max({t.a.x, t.b.x, t.c.x}), std::max({t.a.y, t.b.y, t.c.y}),
                 std::max({t.a.z, t.b.z, t.c.z})};
        auto clampi = [](int v, int n) { return std::min(std::max(v, 0), n - 1); };
        int x0 = clampi(static_cast<int>((tlo.x - lo_.x) / cell_), nx_);
        int x1 = clampi(static_cast<int>((thi.x - lo_.x) / cell_), nx_);
        int y0 = clampi(static_cast<int>((tlo.y - lo_.y) / cell_), ny_);
        int y1 = clampi(static_cast<int>((thi.y - lo_.y) / cell_), ny_);
        int z0 = clampi(static_cast<int>((tlo.z - lo_.z) / cell_), nz_);
        int z1 = clampi(static_cast<int>((thi.z - lo_.z) / cell_), nz_);
        for (int z = z0; z <= z1; ++z)
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x)
                    cells_[cell_index(x, y, z)].push_back(static_cast<int>(i));
    }
}

bool TriangleMesh::intersect(const Vec3& origin, const Vec3& dir, RayHit& hit) const {
    double best = std::numeric_limits<double>::max();
    int best_i = -1;
    for (size_t i = 0; i < tris_.size(); ++i) {
        double t;
        if (ray_triangle(origin, dir, tris_[i], t) && t < best) {
            best = t;
            best_i = static_cast<int>(i);
        }
    }
    if (best_i < 0) return false;
    hit.t = best;
    hit.position = origin + dir * best;
    Vec3 n = tris_[best_i].normal();
    if (dot(n, dir) > 0) n = -n;
    hit.normal = n;
    return true;
}

void TriangleMesh::bounds(Vec3& lo, Vec3& hi) const {
    lo = lo_;
    hi = hi_;
}

double TriangleMesh::distance_to_brute(const Vec3& p) const {
    double best = std::numeric_limits<double>::max();
    for (const auto& t : tris_) best = std::min(best, norm(p - closest_point_on_triangle(p, t)));
    return best;
}

double TriangleMesh::distance_to(const Vec3& p) const {
    auto clampi = [](int v, int n) { return std::min(std::max(v, 0), n - 1); };
    int px = clampi(static_cast<int>((p.x - lo_.x) / cell_), nx_);
    int py = clampi(static_cast<int>((p.y - lo_.y) / cell_), ny_);
    int pz = clampi(static_cast<int>((p.z - lo_.z) / cell_), nz_);

    double best = std::numeric_limits<double>::max();
    int max_ring = std::max({nx_, ny_, nz_});
    for (int ring = 0; ring <= max_ring; ++ring) {
        // cells whose nearest corner is farther than the incumbent cannot improve it
        if (best < std::numeric_limits<double>::max() &&
            (ring - 1) * cell_ > best)
            break;
        bool any = false;
        int x0 = px - ring, x1 = px + ring;
        int y0 = py - ring, y1 = py + ring;
        int z0 = pz - ring, z1 = pz + ring;
        for (int z = z0; z <= z1; ++z) {
            if (z < 0 || z >= nz_) continue;
            for (int y = y0; y <= y1; ++y) {
                if (y < 0 || y >= ny_) continue;
                for (int x = x0; x <= x1; ++x) {
                    if (x < 0 || x >= nx_) continue;
                    bool shell = (x == x0 || x == x1 || y == y0 || y == y1 || z == z0 || z == z1);
                    if (!shell) continue;
                    any = true;
                    for (int ti : cells_[cell_index(x, y, z)]) {
                        double d = norm(p - closest_point_on_triangle(p, tris_[ti]));
                        best = std::min(best, d);
                    }
                }
            }
        }
        if (!any && ring > 0 && best < std::numeric_limits<double>::max()) break;
    }
    return best;
}

TriangleMesh TriangleMesh::load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::Io, "obj: cannot open " + path);
    std::vector<Vec3> verts;
    std::vector<Triangle> tris;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ss >> v.x >> v.y >> v.z))
                throw Error(ErrorCategory::Format, "obj: malformed vertex in " + path);
            verts.push_back(v);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string fv;
            while (ss >> fv) {
                size_t slash = fv.find('/');
                int i = std::stoi(slash == std::string::npos ? fv : fv.substr(0, slash));
                if (i < 0) i = static_cast<int>(verts.size()) + i + 1;
                if (i < 1 || i > static_cast<int>(verts.size()))
                    throw Error(ErrorCategory::Format, "obj: face index out of range in " + path);
                idx.push_back(i - 1);
            }
            for (size_t k = 2; k < idx.size(); ++k)
                tris.push_back({verts[idx[0]], verts[idx[k - 1]], verts[idx[k]]});
        }
    }
    if (tris.empty()) throw Error(ErrorCategory::Format, "obj: no faces in " + path);
    return TriangleMesh(std::move(tris));
}

void TriangleMesh::save_obj(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCategory::Io, "obj: cannot write " + path);
    for (const auto& t : tris_)
        for (const Vec3* v : {&t.a, &t.b, &t.c})
            out << "v " << v->x << " " << v->y << " " << v->z << "\n";
    for (size_t i = 0; i < tris_.size(); ++i)
        out << "f " << 3 * i + 1 << " " << 3 * i + 2 << " " << 3 * i + 3 << "\n";
}

TriangleMesh TriangleMesh::make_superellipsoid(const Vec3& center, const Vec3& radii,
                                               double exponent, int subdiv) {
    // parameterization x = a*s(sin t)*s(cos p), y = b*s(sin t)*s(sin p),
    // z = c*s(cos t) with s(w) = sgn(w)|w|^(2/r) satisfies the implicit form
    double e = 2.0 / exponent;
    auto s = [e](double w) { return (w < 0 ? -1.0 : 1.0) * std::pow(std::abs(w), e); };
    int nu = 4 * subdiv, nv = 2 * subdiv;
    auto vert = [&](int i, int j) {
        double theta = kPi * j / nv;
        double phi = 2 * kPi * i / nu;
        return center + Vec3{radii.x * s(std::sin(theta)) * s(std::cos(phi)),
                             radii.y * s(std::sin(theta)) * s(std::sin(phi)),
                             radii.z * s(std::cos(theta))};
    };
    std::vector<Triangle> tris;
    for (int j = 0; j < nv; ++j)
        for (int i = 0; i < nu; ++i) {
            Vec3 a = vert(i, j), b = vert(i + 1, j), c = vert(i + 1, j + 1), d = vert(i, j + 1);
            if (j > 0) tris.push_back({a, b, c});
            if (j < nv - 1) tris.push_back({a, c, d});
        }
    return TriangleMesh(std::move(tris));
}

TriangleMesh TriangleMesh::make_sphere(const Vec3& center, double radius, int subdiv) {
    // lat-long tessellation
    int nu = 4 * subdiv, nv = 2 * subdiv;
    auto vert = [&](int i, int j) {
        double theta = kPi * j / nv;
        double phi = 2 * kPi * i / nu;
        return center + Vec3{radius * std::sin(theta) * std::cos(phi), radius * std::cos(theta),
                             radius * std::sin(theta) * std::sin(phi)};
    };
    std::vector<Triangle> tris;
    for (int j = 0; j < nv; ++j)
        for (int i = 0; i < nu; ++i) {
            Vec3 a = vert(i, j), b = vert(i + 1, j), c = vert(i + 1, j + 1), d = vert(i, j + 1);
            if (j > 0) tris.push_back({a, b, c});
            if (j < nv - 1) tris.push_back({a, c, d});
        }
    return TriangleMesh(std::move(tris));
}

} // namespace nlmvs
