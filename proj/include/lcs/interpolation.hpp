#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lcs/error.hpp"
#include "lcs/geometry.hpp"

namespace lcs {

/// Four-node interpolation stencil along one axis.  Ghost nodes beyond a
/// non-periodic boundary are linear extrapolations, folded into the weights
/// of the two nearest interior nodes.
struct AxisStencil {
    std::array<std::size_t, 4> index{};
    std::array<double, 4> weight{};
};

namespace detail {

/// Catmull-Rom cardinal weights for fractional offset f in [0, 1].
constexpr std::array<double, 4> catmull_rom_weights(double f) noexcept {
    const double f2 = f * f, f3 = f2 * f;
    return {0.5 * (-f3 + 2.0 * f2 - f), 0.5 * (3.0 * f3 - 5.0 * f2 + 2.0),
            0.5 * (-3.0 * f3 + 4.0 * f2 + f), 0.5 * (f3 - f2)};
}

/// Maps a physical coordinate to (cell index, fraction).  Returns false when a
/// non-periodic coordinate falls outside [0, n-1] in node units.
inline bool locate(double s, double origin, double spacing, std::size_t n, bool periodic,
                   std::size_t& cell, double& frac) noexcept {
    double u = (s - origin) / spacing;
    const double last = static_cast<double>(n - 1);
    if (periodic) {
        const double period = static_cast<double>(n);
        u = std::fmod(u, period);
        if (u < 0.0) u += period;
        if (u >= period) u -= period;
    } else {
        const double slack = 1e-12 * std::max(1.0, last);
        if (!(u >= -slack && u <= last + slack)) return false;
        u = std::clamp(u, 0.0, last);
    }
    double fl = std::floor(u);
    if (!periodic && fl >= last) fl = last - 1.0;
    cell = static_cast<std::size_t>(fl);
    frac = u - fl;
    return true;
}

} // namespace detail

inline AxisStencil cubic_stencil(std::size_t cell, double frac, std::size_t n, bool periodic) noexcept {
    const auto w = detail::catmull_rom_weights(frac);
    AxisStencil st;
    if (periodic) {
        for (int k = 0; k < 4; ++k) {
            const auto shifted = static_cast<long long>(cell) + k - 1;
            const auto nn = static_cast<long long>(n);
            st.index[k] = static_cast<std::size_t>(((shifted % nn) + nn) % nn);
            st.weight[k] = w[k];
        }
        return st;
    }
    // Stencil nodes cell-1 .. cell+2, ghosts folded in.
    st.index = {cell, cell, cell + 1, cell + 1};
    st.weight = {0.0, 0.0, 0.0, 0.0};
    st.weight[1] += w[1];
    st.weight[2] += w[2];
    if (cell >= 1) {
        st.index[0] = cell - 1;
        st.weight[0] += w[0];
    } else {
        // f[-1] = 2 f[0] - f[1]
        st.weight[1] += 2.0 * w[0];
        st.weight[2] -= w[0];
    }
    if (cell + 2 <= n - 1) {
        st.index[3] = cell + 2;
        st.weight[3] += w[3];
    } else {
        // f[n] = 2 f[n-1] - f[n-2]
        st.weight[2] += 2.0 * w[3];
        st.weight[1] -= w[3];
    }
    return st;
}

inline AxisStencil linear_stencil(std::size_t cell, double frac, std::size_t n, bool periodic) noexcept {
    AxisStencil st;
    st.index = {cell, periodic ? (cell + 1) % n : cell + 1, cell, cell};
    st.weight = {1.0 - frac, frac, 0.0, 0.0};
    return st;
}

enum class Interp { linear, cubic };

/// Scalar values on a GridSpec layout, row-major [j][i].
class ScalarGrid {
  public:
    ScalarGrid() = default;
    ScalarGrid(GridSpec spec, std::vector<double> values) : spec_(spec), values_(std::move(values)) {
        if (values_.size() != spec_.size()) throw FormatError("scalar grid: value count does not match grid");
    }

    const GridSpec& spec() const noexcept { return spec_; }
    std::span<const double> values() const noexcept { return values_; }
    double at(std::size_t i, std::size_t j) const noexcept { return values_[spec_.index(i, j)]; }

    bool contains(Vec2 p) const noexcept {
        std::size_t c;
        double f;
        return detail::locate(p.x, spec_.x_min, spec_.hx(), spec_.nx, spec_.periodic_x, c, f) &&
               detail::locate(p.y, spec_.y_min, spec_.hy(), spec_.ny, spec_.periodic_y, c, f);
    }

    double sample(Vec2 p, Interp mode = Interp::cubic) const {
        std::size_t ci, cj;
        double fi, fj;
        if (!detail::locate(p.x, spec_.x_min, spec_.hx(), spec_.nx, spec_.periodic_x, ci, fi) ||
            !detail::locate(p.y, spec_.y_min, spec_.hy(), spec_.ny, spec_.periodic_y, cj, fj))
            throw DomainError("scalar grid sampled outside its domain");
        const auto sx = mode == Interp::cubic ? cubic_stencil(ci, fi, spec_.nx, spec_.periodic_x)
                                              : linear_stencil(ci, fi, spec_.nx, spec_.periodic_x);
        const auto sy = mode == Interp::cubic ? cubic_stencil(cj, fj, spec_.ny, spec_.periodic_y)
                                              : linear_stencil(cj, fj, spec_.ny, spec_.periodic_y);
        double acc = 0.0;
        for (int b = 0; b < 4; ++b) {
            if (sy.weight[b] == 0.0) continue;
            double row = 0.0;
            for (int a = 0; a < 4; ++a) row += sx.weight[a] * values_[spec_.index(sx.index[a], sy.index[b])];
            acc += sy.weight[b] * row;
        }
        return acc;
    }

  private:
    GridSpec spec_;
    std::vector<double> values_;
};

} // namespace lcs
