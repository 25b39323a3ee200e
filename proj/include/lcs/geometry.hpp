#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include "lcs/error.hpp"

namespace lcs {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(Vec2 o) noexcept { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) noexcept { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) noexcept { x *= s; y *= s; return *this; }

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator-(Vec2 a) noexcept { return {-a.x, -a.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) noexcept { return {s * a.x, s * a.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) noexcept { return {s * a.x, s * a.y}; }
    friend constexpr Vec2 operator/(Vec2 a, double s) noexcept { return {a.x / s, a.y / s}; }
    friend constexpr bool operator==(Vec2, Vec2) noexcept = default;
};

constexpr double dot(Vec2 a, Vec2 b) noexcept { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) noexcept { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) noexcept { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) noexcept { return norm(a - b); }
/// Counter-clockwise rotation by 90 degrees.
constexpr Vec2 rot90(Vec2 a) noexcept { return {-a.y, a.x}; }
inline Vec2 normalized(Vec2 a) noexcept { return a / norm(a); }
inline bool is_finite(Vec2 a) noexcept { return std::isfinite(a.x) && std::isfinite(a.y); }

/// Picks the representative of the axis spanned by `a` with nonnegative first
/// component (nonnegative second component when the first is zero).
constexpr Vec2 canonical_axis(Vec2 a) noexcept {
    if (a.x < 0.0 || (a.x == 0.0 && a.y < 0.0)) return -a;
    return a;
}

/// Row-major 2x2 matrix.
struct Mat2 {
    double a = 0.0, b = 0.0;
    double c = 0.0, d = 0.0;

    static constexpr Mat2 identity() noexcept { return {1.0, 0.0, 0.0, 1.0}; }
    static constexpr Mat2 from_columns(Vec2 c0, Vec2 c1) noexcept { return {c0.x, c1.x, c0.y, c1.y}; }

    constexpr Vec2 col0() const noexcept { return {a, c}; }
    constexpr Vec2 col1() const noexcept { return {b, d}; }
    constexpr double det() const noexcept { return a * d - b * c; }
    constexpr Mat2 transposed() const noexcept { return {a, c, b, d}; }

    friend constexpr Vec2 operator*(const Mat2& m, Vec2 v) noexcept {
        return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
    }
    friend constexpr Mat2 operator*(const Mat2& m, const Mat2& n) noexcept {
        return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d,
                m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
    }
    friend constexpr Mat2 operator-(const Mat2& m, const Mat2& n) noexcept {
        return {m.a - n.a, m.b - n.b, m.c - n.c, m.d - n.d};
    }
    friend constexpr bool operator==(const Mat2&, const Mat2&) noexcept = default;
};

/// Frobenius norm.
inline double frobenius(const Mat2& m) noexcept {
    return std::sqrt(m.a * m.a + m.b * m.b + m.c * m.c + m.d * m.d);
}

inline bool is_finite(const Mat2& m) noexcept {
    return std::isfinite(m.a) && std::isfinite(m.b) && std::isfinite(m.c) && std::isfinite(m.d);
}

/// Uniform rectangular grid of seed points.
///
/// Non-periodic axes place `n` nodes on the closed interval [min, max].  A
/// periodic axis tiles one period: nodes sit at min + i*(max-min)/n, the
/// endpoint `max` being the image of `min`.
struct GridSpec {
    double x_min = 0.0, x_max = 1.0;
    double y_min = 0.0, y_max = 1.0;
    std::size_t nx = 2, ny = 2;
    bool periodic_x = false;
    bool periodic_y = false;

    double hx() const noexcept {
        return (x_max - x_min) / static_cast<double>(periodic_x ? nx : nx - 1);
    }
    double hy() const noexcept {
        return (y_max - y_min) / static_cast<double>(periodic_y ? ny : ny - 1);
    }
    double h() const noexcept { return std::min(hx(), hy()); }
    std::size_t size() const noexcept { return nx * ny; }
    std::size_t index(std::size_t i, std::size_t j) const noexcept { return j * nx + i; }
    Vec2 point(std::size_t i, std::size_t j) const noexcept {
        return {x_min + static_cast<double>(i) * hx(), y_min + static_cast<double>(j) * hy()};
    }
    Vec2 point(std::size_t k) const noexcept { return point(k % nx, k / nx); }

    void validate() const {
        if (nx < 2 || ny < 2) throw ConfigError("grid needs at least 2 nodes per axis");
        if (!(x_max > x_min) || !(y_max > y_min))
            throw ConfigError("grid bounds must satisfy min < max");
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

} // namespace lcs
