#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>

namespace nlmvs {

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3& v) {
    double n = norm(v);
    return n > 0 ? v / n : Vec3{0, 0, 0};
}

/// Unit 3-vector in a stated frame. Construction normalizes.
struct Direction {
    Vec3 v{0, 0, 1};

    Direction() = default;
    explicit Direction(const Vec3& u) : v(normalized(u)) {}
    Direction(double x, double y, double z) : v(normalized(Vec3{x, y, z})) {}

    operator const Vec3&() const { return v; }
    double x() const { return v.x; }
    double y() const { return v.y; }
    double z() const { return v.z; }
};

inline double angle_deg(const Vec3& a, const Vec3& b) {
    double c = dot(normalized(a), normalized(b));
    c = std::fmin(1.0, std::fmax(-1.0, c));
    return rad2deg(std::acos(c));
}

/// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return Mat3{}; }

    double operator()(int r, int c) const { return m[r * 3 + c]; }
    double& operator()(int r, int c) { return m[r * 3 + c]; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }
    double det() const {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }

    static Mat3 rotation_axis_angle(const Vec3& axis, double angle_rad) {
        Vec3 a = normalized(axis);
        double c = std::cos(angle_rad), s = std::sin(angle_rad), t = 1 - c;
        Mat3 r;
        r(0, 0) = t * a.x * a.x + c;
        r(0, 1) = t * a.x * a.y - s * a.z;
        r(0, 2) = t * a.x * a.z + s * a.y;
        r(1, 0) = t * a.x * a.y + s * a.z;
        r(1, 1) = t * a.y * a.y + c;
        r(1, 2) = t * a.y * a.z - s * a.x;
        r(2, 0) = t * a.x * a.z - s * a.y;
        r(2, 1) = t * a.y * a.z + s * a.x;
        r(2, 2) = t * a.z * a.z + c;
        return r;
    }

    bool is_rotation(double tol = 1e-6) const {
        Mat3 rtr = transposed() * (*this);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double want = (i == j) ? 1.0 : 0.0;
                if (std::abs(rtr(i, j) - want) > tol) return false;
            }
        return std::abs(det() - 1.0) < 10 * tol;
    }
};

struct Rgb {
    double r = 0, g = 0, b = 0;

    Rgb() = default;
    Rgb(double r_, double g_, double b_) : r(r_), g(g_), b(b_) {}
    explicit Rgb(double v) : r(v), g(v), b(v) {}

    Rgb operator+(const Rgb& o) const { return {r + o.r, g + o.g, b + o.b}; }
    Rgb operator-(const Rgb& o) const { return {r - o.r, g - o.g, b - o.b}; }
    Rgb operator*(double s) const { return {r * s, g * s, b * s}; }
    Rgb operator*(const Rgb& o) const { return {r * o.r, g * o.g, b * o.b}; }
    Rgb operator/(double s) const { return {r / s, g / s, b / s}; }
    Rgb& operator+=(const Rgb& o) { r += o.r; g += o.g; b += o.b; return *this; }

    double operator[](int i) const { return i == 0 ? r : (i == 1 ? g : b); }
    double& operator[](int i) { return i == 0 ? r : (i == 1 ? g : b); }

    double max_channel() const { return std::fmax(r, std::fmax(g, b)); }
    bool all_finite() const { return std::isfinite(r) && std::isfinite(g) && std::isfinite(b); }
};

} // namespace nlmvs
