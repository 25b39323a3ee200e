#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lcs/binary_io.hpp"
#include "lcs/error.hpp"
#include "lcs/geometry.hpp"
#include "lcs/interpolation.hpp"

namespace lcs {

/// Closed-form velocity rules.
class AnalyticField {
  public:
    enum class Kind { duffing, zero, uniform, linear, custom };

    using Rule = std::function<Vec2(Vec2, double)>;

    static AnalyticField duffing() { return AnalyticField(Kind::duffing, "duffing"); }
    static AnalyticField zero() { return AnalyticField(Kind::zero, "zero"); }
    static AnalyticField uniform(Vec2 velocity) {
        AnalyticField f(Kind::uniform, "uniform");
        f.constant_ = velocity;
        return f;
    }
    /// v = A x
    static AnalyticField linear(const Mat2& a) {
        AnalyticField f(Kind::linear, "linear");
        f.matrix_ = a;
        return f;
    }
    /// Arbitrary callable, for experiments and tests.  Must be thread-safe.
    static AnalyticField custom(std::string name, Rule rule) {
        AnalyticField f(Kind::custom, std::move(name));
        f.rule_ = std::move(rule);
        return f;
    }

    Kind kind() const noexcept { return kind_; }
    const std::string& name() const noexcept { return name_; }

    Vec2 operator()(Vec2 p, double t) const {
        switch (kind_) {
        case Kind::duffing:
            // Hamiltonian vector field of H = x^4/4 - 2x^2 + y^2/2
            return {p.y, 4.0 * p.x - p.x * p.x * p.x};
        case Kind::zero:
            return {0.0, 0.0};
        case Kind::uniform:
            return constant_;
        case Kind::linear:
            return matrix_ * p;
        case Kind::custom:
            return rule_(p, t);
        }
        return {};
    }

  private:
    AnalyticField(Kind kind, std::string name) : kind_(kind), name_(std::move(name)) {}

    Kind kind_;
    std::string name_;
    Vec2 constant_{};
    Mat2 matrix_{};
    Rule rule_;
};

/// H(x, y) = x^4/4 - 2x^2 + y^2/2; conserved by AnalyticField::duffing().
inline double duffing_hamiltonian(Vec2 p) noexcept {
    const double x2 = p.x * p.x;
    return 0.25 * x2 * x2 - 2.0 * x2 + 0.5 * p.y * p.y;
}

/// Velocity snapshots on a uniform grid: cubic in space, linear in time.
class GriddedField {
  public:
    GriddedField(GridSpec layout, std::vector<double> times, std::vector<double> u, std::vector<double> v)
        : layout_(layout), times_(std::move(times)), u_(std::move(u)), v_(std::move(v)) {
        if (layout_.nx < 2 || layout_.ny < 2 || times_.empty())
            throw FormatError("malformed header: gridded field needs nx, ny >= 2 and nt >= 1");
        if (!(layout_.x_max > layout_.x_min) || !(layout_.y_max > layout_.y_min))
            throw FormatError("malformed header: bounds must satisfy min < max");
        const std::size_t expect = layout_.size() * times_.size();
        if (u_.size() != expect || v_.size() != expect)
            throw FormatError("shape mismatch: velocity arrays do not match nx*ny*nt");
        for (std::size_t k = 1; k < times_.size(); ++k)
            if (!(times_[k] > times_[k - 1])) throw FormatError("non-monotone time axis");
    }

    const GridSpec& layout() const noexcept { return layout_; }
    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<double>& u() const noexcept { return u_; }
    const std::vector<double>& v() const noexcept { return v_; }
    std::size_t nt() const noexcept { return times_.size(); }

    bool contains_time(double t) const noexcept {
        if (times_.size() == 1) return true;
        const double slack = 1e-12 * std::max(1.0, std::abs(times_.back() - times_.front()));
        return t >= times_.front() - slack && t <= times_.back() + slack;
    }

    bool contains(Vec2 p, double t) const noexcept {
        std::size_t c;
        double f;
        return contains_time(t) &&
               detail::locate(p.x, layout_.x_min, layout_.hx(), layout_.nx, layout_.periodic_x, c, f) &&
               detail::locate(p.y, layout_.y_min, layout_.hy(), layout_.ny, layout_.periodic_y, c, f);
    }

    Vec2 operator()(Vec2 p, double t) const {
        std::size_t ci, cj;
        double fi, fj;
        if (!detail::locate(p.x, layout_.x_min, layout_.hx(), layout_.nx, layout_.periodic_x, ci, fi) ||
            !detail::locate(p.y, layout_.y_min, layout_.hy(), layout_.ny, layout_.periodic_y, cj, fj))
            throw DomainError("velocity queried outside spatial domain at (" + std::to_string(p.x) + ", " +
                              std::to_string(p.y) + ")");
        if (!contains_time(t)) throw DomainError("velocity queried outside time window at t=" + std::to_string(t));

        const auto sx = cubic_stencil(ci, fi, layout_.nx, layout_.periodic_x);
        const auto sy = cubic_stencil(cj, fj, layout_.ny, layout_.periodic_y);

        std::size_t k0 = 0;
        double wt = 0.0;
        if (times_.size() > 1) {
            const double tc = std::clamp(t, times_.front(), times_.back());
            auto it = std::upper_bound(times_.begin(), times_.end(), tc);
            k0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - times_.begin()) - 1));
            if (k0 >= times_.size() - 1) k0 = times_.size() - 2;
            wt = (tc - times_[k0]) / (times_[k0 + 1] - times_[k0]);
        }
        Vec2 out = slice(k0, sx, sy);
        if (wt != 0.0) out = (1.0 - wt) * out + wt * slice(k0 + 1, sx, sy);
        return out;
    }

  private:
    Vec2 slice(std::size_t k, const AxisStencil& sx, const AxisStencil& sy) const noexcept {
        const std::size_t base = k * layout_.size();
        Vec2 acc;
        for (int b = 0; b < 4; ++b) {
            if (sy.weight[b] == 0.0) continue;
            Vec2 row;
            const std::size_t rbase = base + sy.index[b] * layout_.nx;
            for (int a = 0; a < 4; ++a) {
                row.x += sx.weight[a] * u_[rbase + sx.index[a]];
                row.y += sx.weight[a] * v_[rbase + sx.index[a]];
            }
            acc += sy.weight[b] * row;
        }
        return acc;
    }

    GridSpec layout_;
    std::vector<double> times_;
    std::vector<double> u_, v_;
};

/// Immutable time-dependent 2-D velocity source; safe for concurrent reads.
class VelocityField {
  public:
    VelocityField(AnalyticField f) : impl_(std::make_shared<const Impl>(std::move(f))) {}
    VelocityField(GriddedField f) : impl_(std::make_shared<const Impl>(std::move(f))) {}

    static VelocityField duffing() { return AnalyticField::duffing(); }

    bool is_gridded() const noexcept { return std::holds_alternative<GriddedField>(*impl_); }
    const GriddedField* gridded() const noexcept { return std::get_if<GriddedField>(impl_.get()); }
    const AnalyticField* analytic() const noexcept { return std::get_if<AnalyticField>(impl_.get()); }

    Vec2 operator()(Vec2 p, double t) const {
        return std::visit([&](const auto& f) { return f(p, t); }, *impl_);
    }
    Vec2 eval(Vec2 p, double t) const { return (*this)(p, t); }

    bool contains(Vec2 p, double t) const noexcept {
        if (const auto* g = gridded()) return g->contains(p, t);
        return true;
    }

    bool periodic_x() const noexcept { return gridded() && gridded()->layout().periodic_x; }
    bool periodic_y() const noexcept { return gridded() && gridded()->layout().periodic_y; }
    /// Period along x (0 when not periodic).
    double period_x() const noexcept {
        return periodic_x() ? gridded()->layout().x_max - gridded()->layout().x_min : 0.0;
    }
    double period_y() const noexcept {
        return periodic_y() ? gridded()->layout().y_max - gridded()->layout().y_min : 0.0;
    }

  private:
    using Impl = std::variant<AnalyticField, GriddedField>;
    std::shared_ptr<const Impl> impl_;
};

inline constexpr std::string_view grid_magic = "LCSGRID1";

/// Layout: magic, nx ny nt (i64), x_min x_max y_min y_max (f64), times[nt]
/// (f64), periodic_x periodic_y (u8), u[t][y][x], v[t][y][x] (f64), all
/// little-endian.
inline void save_gridded_field(const std::filesystem::path& path, const GriddedField& field) {
    binary::Writer w;
    const auto& g = field.layout();
    w.magic(grid_magic);
    w.i64(static_cast<std::int64_t>(g.nx));
    w.i64(static_cast<std::int64_t>(g.ny));
    w.i64(static_cast<std::int64_t>(field.nt()));
    w.f64(g.x_min);
    w.f64(g.x_max);
    w.f64(g.y_min);
    w.f64(g.y_max);
    w.f64s(field.times());
    w.u8(g.periodic_x ? 1 : 0);
    w.u8(g.periodic_y ? 1 : 0);
    w.f64s(field.u());
    w.f64s(field.v());
    w.save(path);
}

inline GriddedField load_gridded_field(const std::filesystem::path& path) {
    auto r = binary::Reader::from_file(path);
    r.expect_magic(grid_magic);
    const auto nx = r.i64("nx"), ny = r.i64("ny"), nt = r.i64("nt");
    if (nx < 2 || ny < 2 || nt < 1 || nx > (1 << 20) || ny > (1 << 20) || nt > (1 << 24))
        throw FormatError(r.where() + "malformed header: bad axis counts");
    GridSpec g;
    g.nx = static_cast<std::size_t>(nx);
    g.ny = static_cast<std::size_t>(ny);
    g.x_min = r.f64("x_min");
    g.x_max = r.f64("x_max");
    g.y_min = r.f64("y_min");
    g.y_max = r.f64("y_max");
    if (!(g.x_max > g.x_min) || !(g.y_max > g.y_min) || !std::isfinite(g.x_max - g.x_min) ||
        !std::isfinite(g.y_max - g.y_min))
        throw FormatError(r.where() + "malformed header: bad bounds");
    auto times = r.f64s(static_cast<std::size_t>(nt), "time stamps");
    const auto px = r.u8("periodic_x"), py = r.u8("periodic_y");
    if (px > 1 || py > 1) throw FormatError(r.where() + "malformed header: periodicity flag not 0/1");
    g.periodic_x = px == 1;
    g.periodic_y = py == 1;
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1])) throw FormatError(r.where() + "non-monotone time axis");
    const std::size_t count = g.size() * static_cast<std::size_t>(nt);
    if (r.remaining() != 2 * count * 8)
        throw FormatError(r.where() + "shape mismatch: payload holds " + std::to_string(r.remaining()) +
                          " bytes, expected " + std::to_string(2 * count * 8));
    auto u = r.f64s(count, "u");
    auto v = r.f64s(count, "v");
    return GriddedField(g, std::move(times), std::move(u), std::move(v));
}

} // namespace lcs
