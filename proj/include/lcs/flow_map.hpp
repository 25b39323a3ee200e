#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lcs/binary_io.hpp"
#include "lcs/error.hpp"
#include "lcs/geometry.hpp"
#include "lcs/ode.hpp"
#include "lcs/parallel.hpp"

namespace lcs {

enum class GradientMethod : std::uint8_t { none = 0, main_grid = 1, aux_grid = 2 };

inline std::string_view to_string(GradientMethod m) noexcept {
    switch (m) {
    case GradientMethod::none: return "none";
    case GradientMethod::main_grid: return "main";
    case GradientMethod::aux_grid: return "aux";
    }
    return "none";
}

/// Advected grid positions F(x) and, once computed, deformation gradients DF(x).
struct FlowMapGrid {
    GridSpec spec;
    double t_a = 0.0;
    double t_b = 0.0;
    GradientMethod method = GradientMethod::none;
    double rho = 0.0;
    double tol = 1e-8;
    std::vector<Vec2> positions;
    std::vector<Mat2> gradients;
    /// 1 where the entry is valid; trajectories that left the domain and
    /// gradients with a masked neighbour are 0.
    std::vector<std::uint8_t> mask;

    double duration() const noexcept { return std::abs(t_b - t_a); }
    bool has_gradients() const noexcept { return method != GradientMethod::none; }
    bool valid(std::size_t k) const noexcept { return mask[k] != 0; }
    std::size_t masked_count() const noexcept {
        std::size_t n = 0;
        for (auto m : mask) n += m == 0;
        return n;
    }
};

/// Default auxiliary-grid offset: one hundredth of the grid spacing.
inline double default_aux_offset(const GridSpec& spec) noexcept { return 1e-2 * spec.h(); }

template <class Field>
FlowMapGrid compute_flow_map_grid(const Field& field, const GridSpec& spec, double t_a, double t_b,
                                  double tol = 1e-8) {
    spec.validate();
    FlowMapGrid out;
    out.spec = spec;
    out.t_a = t_a;
    out.t_b = t_b;
    out.tol = tol;
    out.positions.resize(spec.size());
    out.mask.assign(spec.size(), 0);
    parallel_for(spec.size(), [&](std::size_t k) {
        const auto r = advect_point(field, spec.point(k), t_a, t_b, tol);
        out.positions[k] = r.positions[0];
        out.mask[k] = r.ok() && is_finite(r.positions[0]) ? 1 : 0;
    });
    return out;
}

namespace detail {
inline bool acceptable_gradient(const Mat2& m) noexcept { return is_finite(m) && m.det() > 0.0; }
} // namespace detail

/// Central differences of neighbouring advected positions; one-sided on
/// non-periodic boundaries, wrapped (with the period added) on periodic grids.
inline FlowMapGrid deformation_gradient_main(FlowMapGrid fmg) {
    const auto& g = fmg.spec;
    const double lx = g.x_max - g.x_min, ly = g.y_max - g.y_min;
    fmg.gradients.assign(g.size(), Mat2{});
    std::vector<std::uint8_t> mask(g.size(), 0);

    // Neighbour position along an axis with the periodic image shift applied.
    auto neighbour = [&](std::size_t i, std::size_t j, long di, long dj, bool& ok) -> Vec2 {
        long ii = static_cast<long>(i) + di, jj = static_cast<long>(j) + dj;
        Vec2 shift{};
        const long nx = static_cast<long>(g.nx), ny = static_cast<long>(g.ny);
        if (ii < 0) { ii += nx; shift.x -= lx; }
        if (ii >= nx) { ii -= nx; shift.x += lx; }
        if (jj < 0) { jj += ny; shift.y -= ly; }
        if (jj >= ny) { jj -= ny; shift.y += ly; }
        const std::size_t k = g.index(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj));
        ok = ok && fmg.mask[k] != 0;
        return fmg.positions[k] + shift;
    };

    parallel_for(g.size(), [&](std::size_t k) {
        const std::size_t i = k % g.nx, j = k / g.nx;
        bool ok = fmg.mask[k] != 0;
        Vec2 col[2];
        for (int axis = 0; axis < 2; ++axis) {
            const bool periodic = axis == 0 ? g.periodic_x : g.periodic_y;
            const std::size_t idx = axis == 0 ? i : j;
            const std::size_t n = axis == 0 ? g.nx : g.ny;
            const double h = axis == 0 ? g.hx() : g.hy();
            const long dx = axis == 0 ? 1 : 0, dy = axis == 0 ? 0 : 1;
            if (periodic || (idx > 0 && idx + 1 < n)) {
                col[axis] = (neighbour(i, j, dx, dy, ok) - neighbour(i, j, -dx, -dy, ok)) / (2.0 * h);
            } else if (idx == 0) {
                col[axis] = (neighbour(i, j, dx, dy, ok) - fmg.positions[k]) / h;
            } else {
                col[axis] = (fmg.positions[k] - neighbour(i, j, -dx, -dy, ok)) / h;
            }
        }
        const Mat2 df = Mat2::from_columns(col[0], col[1]);
        fmg.gradients[k] = df;
        mask[k] = ok && detail::acceptable_gradient(df) ? 1 : 0;
    });
    fmg.mask = std::move(mask);
    fmg.method = GradientMethod::main_grid;
    fmg.rho = 0.0;
    return fmg;
}

struct PointGradient {
    Vec2 position;
    Mat2 gradient;
    bool ok = false;
};

/// Flow map and its gradient at one point from four auxiliary neighbours at
/// distance rho, integrated together with the centre on a shared step sequence.
template <class Field>
PointGradient aux_gradient_at(const Field& field, Vec2 x, double t_a, double t_b, double tol, double rho) {
    const std::array<Vec2, 4> offsets{Vec2{rho, 0.0}, Vec2{-rho, 0.0}, Vec2{0.0, rho}, Vec2{0.0, -rho}};
    OdeOptions opt = OdeOptions::tolerance(tol);
    opt.difference_scale = rho;
    const auto r = advect_offsets<5>(field, x, offsets, t_a, t_b, opt);
    PointGradient pg;
    pg.position = r.positions[0];
    // A motionless stencil stays exactly at the identity.
    auto moved = [&](std::size_t k) { return r.positions[k] - offsets[k - 1]; };
    const Vec2 c0 = Vec2{1.0, 0.0} + (moved(1) - moved(2)) / (2.0 * rho);
    const Vec2 c1 = Vec2{0.0, 1.0} + (moved(3) - moved(4)) / (2.0 * rho);
    pg.gradient = Mat2::from_columns(c0, c1);
    pg.ok = r.ok() && is_finite(pg.position) && detail::acceptable_gradient(pg.gradient);
    return pg;
}

/// Deformation gradients by finite differencing on an auxiliary grid.  A
/// non-positive rho selects default_aux_offset(spec).
template <class Field>
FlowMapGrid deformation_gradient_aux(const Field& field, const GridSpec& spec, double t_a, double t_b,
                                     double tol = 1e-8, double rho = 0.0) {
    spec.validate();
    if (!(rho > 0.0)) rho = default_aux_offset(spec);
    FlowMapGrid out;
    out.spec = spec;
    out.t_a = t_a;
    out.t_b = t_b;
    out.tol = tol;
    out.rho = rho;
    out.method = GradientMethod::aux_grid;
    out.positions.resize(spec.size());
    out.gradients.resize(spec.size());
    out.mask.assign(spec.size(), 0);
    parallel_for(spec.size(), [&](std::size_t k) {
        const auto pg = aux_gradient_at(field, spec.point(k), t_a, t_b, tol, rho);
        out.positions[k] = pg.position;
        out.gradients[k] = pg.gradient;
        out.mask[k] = pg.ok ? 1 : 0;
    });
    return out;
}

/// Auxiliary-grid gradients at an arbitrary list of points.
template <class Field>
std::vector<PointGradient> deformation_gradient_aux_points(const Field& field, std::span<const Vec2> points,
                                                           double t_a, double t_b, double tol, double rho) {
    std::vector<PointGradient> out(points.size());
    parallel_for(points.size(),
                 [&](std::size_t k) { out[k] = aux_gradient_at(field, points[k], t_a, t_b, tol, rho); });
    return out;
}

inline constexpr std::string_view flow_map_magic = "LCSFMAP1";

inline void write_grid_spec(binary::Writer& w, const GridSpec& g) {
    w.f64(g.x_min);
    w.f64(g.x_max);
    w.f64(g.y_min);
    w.f64(g.y_max);
    w.i64(static_cast<std::int64_t>(g.nx));
    w.i64(static_cast<std::int64_t>(g.ny));
    w.u8(g.periodic_x);
    w.u8(g.periodic_y);
}

inline GridSpec read_grid_spec(binary::Reader& r) {
    GridSpec g;
    g.x_min = r.f64("x_min");
    g.x_max = r.f64("x_max");
    g.y_min = r.f64("y_min");
    g.y_max = r.f64("y_max");
    const auto nx = r.i64("nx"), ny = r.i64("ny");
    if (nx < 2 || ny < 2 || nx > (1 << 20) || ny > (1 << 20))
        throw FormatError(r.where() + "malformed header: bad grid size");
    g.nx = static_cast<std::size_t>(nx);
    g.ny = static_cast<std::size_t>(ny);
    g.periodic_x = r.u8("periodic_x") != 0;
    g.periodic_y = r.u8("periodic_y") != 0;
    return g;
}

/// Layout: magic, grid spec, t_a, t_b, method (u8), rho, tol, then X[y][x]
/// as (x, y) pairs, DF[y][x] as row-major 2x2, mask[y][x] (u8).  DF is
/// all-zero when no gradient was computed.
inline void save_flow_map(const std::filesystem::path& path, const FlowMapGrid& fmg) {
    binary::Writer w;
    w.magic(flow_map_magic);
    write_grid_spec(w, fmg.spec);
    w.f64(fmg.t_a);
    w.f64(fmg.t_b);
    w.u8(static_cast<std::uint8_t>(fmg.method));
    w.f64(fmg.rho);
    w.f64(fmg.tol);
    for (const auto& p : fmg.positions) {
        w.f64(p.x);
        w.f64(p.y);
    }
    for (std::size_t k = 0; k < fmg.spec.size(); ++k) {
        const Mat2 m = fmg.has_gradients() ? fmg.gradients[k] : Mat2{};
        w.f64(m.a);
        w.f64(m.b);
        w.f64(m.c);
        w.f64(m.d);
    }
    for (auto m : fmg.mask) w.u8(m);
    w.save(path);
}

inline FlowMapGrid load_flow_map(const std::filesystem::path& path) {
    auto r = binary::Reader::from_file(path);
    r.expect_magic(flow_map_magic);
    FlowMapGrid fmg;
    fmg.spec = read_grid_spec(r);
    fmg.t_a = r.f64("t_a");
    fmg.t_b = r.f64("t_b");
    const auto method = r.u8("method");
    if (method > 2) throw FormatError(r.where() + "malformed header: unknown gradient method");
    fmg.method = static_cast<GradientMethod>(method);
    fmg.rho = r.f64("rho");
    fmg.tol = r.f64("tol");
    const std::size_t n = fmg.spec.size();
    if (r.remaining() != n * (2 * 8 + 4 * 8 + 1)) throw FormatError(r.where() + "shape mismatch");
    fmg.positions.resize(n);
    for (auto& p : fmg.positions) {
        p.x = r.f64("X");
        p.y = r.f64("X");
    }
    fmg.gradients.resize(n);
    for (auto& m : fmg.gradients) {
        m.a = r.f64("DF");
        m.b = r.f64("DF");
        m.c = r.f64("DF");
        m.d = r.f64("DF");
    }
    if (!fmg.has_gradients()) fmg.gradients.clear();
    fmg.mask.resize(n);
    for (auto& m : fmg.mask) m = r.u8("mask");
    return fmg;
}

} // namespace lcs
