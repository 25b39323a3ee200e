#pragma once

// Embedded Runge-Kutta 5(4) pair (Dormand-Prince) with PI step-size control.
//
// Several trajectories can be integrated as one coupled system sharing a step
// sequence.  Finite differences taken across such a stencil then see an
// integration error that is smooth in the initial offsets.

#include <algorithm>
#include <array>
#include <concepts>
#include <initializer_list>
#include <utility>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string_view>

#include "lcs/geometry.hpp"

namespace lcs {

struct OdeOptions {
    double abs_tol = 1e-8;
    double rel_tol = 1e-8;
    std::size_t max_steps = 2'000'000;
    /// When positive, the error of each stencil offset (y_k - y_0) / scale,
    /// k >= 1, is controlled too, so finite differences across the stencil
    /// meet the tolerance even where positions alone would not.
    double difference_scale = 0.0;

    static OdeOptions tolerance(double tol) { return {tol, tol}; }
};

enum class AdvectStatus { ok, exited_domain, step_underflow, too_many_steps, non_finite };

inline std::string_view to_string(AdvectStatus s) noexcept {
    switch (s) {
    case AdvectStatus::ok: return "ok";
    case AdvectStatus::exited_domain: return "exited domain";
    case AdvectStatus::step_underflow: return "step underflow";
    case AdvectStatus::too_many_steps: return "too many steps";
    case AdvectStatus::non_finite: return "non-finite state";
    }
    return "unknown";
}

template <std::size_t K>
struct StencilResult {
    std::array<Vec2, K> positions{};
    AdvectStatus status = AdvectStatus::ok;
    /// Time reached; equals the target time on success, the exit time otherwise.
    double end_time = 0.0;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;

    bool ok() const noexcept { return status == AdvectStatus::ok; }
};

using AdvectResult = StencilResult<1>;

namespace detail {

template <class Field>
bool field_contains(const Field& f, Vec2 p, double t) {
    if constexpr (requires { { f.contains(p, t) } -> std::convertible_to<bool>; })
        return f.contains(p, t);
    else
        return true;
}

struct DoPri {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                            a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
};

} // namespace detail

namespace detail {

// With Relative, entry 0 is a position and entries 1.. are offsets from it,
// so tiny stencils keep full precision in their separations.
template <bool Relative, std::size_t K, class Field>
StencilResult<K> advect_joint(const Field& field, const std::array<Vec2, K>& start, double t_a, double t_b,
                              const OdeOptions& opt) {
    using State = std::array<Vec2, K>;

    StencilResult<K> res;
    res.positions = start;
    res.end_time = t_a;
    if (t_a == t_b) return res;

    const double dir = t_b > t_a ? 1.0 : -1.0;
    const double span = std::abs(t_b - t_a);
    const double min_step = 1e-13 * std::max(1.0, std::max(std::abs(t_a), std::abs(t_b)));

    State y = start, k1, k2, k3, k4, k5, k6, k7, tmp, ynew;
    double t = t_a;

    auto rhs = [&](const State& s, double time, State& out) -> bool {
        for (std::size_t i = 0; i < K; ++i) {
            const Vec2 p = Relative && i > 0 ? s[0] + s[i] : s[i];
            if (!field_contains(field, p, time)) return false;
            out[i] = field(p, time);
            if (Relative && i > 0) out[i] -= out[0];
        }
        return true;
    };
    auto combine = [&](std::initializer_list<std::pair<double, const State*>> terms, double h) {
        for (std::size_t i = 0; i < K; ++i) {
            Vec2 acc = y[i];
            for (const auto& [w, s] : terms) acc += (h * w) * (*s)[i];
            tmp[i] = acc;
        }
    };
    auto scaled_norm = [&](const State& a, const State& ref_a, const State& ref_b) {
        double sum = 0.0;
        for (std::size_t i = 0; i < (Relative ? 1 : K); ++i) {
            const double sx = opt.abs_tol + opt.rel_tol * std::max(std::abs(ref_a[i].x), std::abs(ref_b[i].x));
            const double sy = opt.abs_tol + opt.rel_tol * std::max(std::abs(ref_a[i].y), std::abs(ref_b[i].y));
            sum += (a[i].x / sx) * (a[i].x / sx) + (a[i].y / sy) * (a[i].y / sy);
        }
        std::size_t terms = Relative ? 2 : 2 * K;
        if (opt.difference_scale > 0.0) {
            const double inv = 1.0 / opt.difference_scale;
            auto rel = [&](const State& x, std::size_t i) { return Relative ? x[i] : x[i] - x[0]; };
            for (std::size_t i = 1; i < K; ++i) {
                const Vec2 d = rel(a, i) * inv;
                const Vec2 ra = rel(ref_a, i) * inv, rb = rel(ref_b, i) * inv;
                const double sx = opt.abs_tol + opt.rel_tol * std::max(std::abs(ra.x), std::abs(rb.x));
                const double sy = opt.abs_tol + opt.rel_tol * std::max(std::abs(ra.y), std::abs(rb.y));
                sum += (d.x / sx) * (d.x / sx) + (d.y / sy) * (d.y / sy);
            }
            terms += 2 * (K - 1);
        }
        return std::sqrt(sum / static_cast<double>(terms));
    };

    if (!rhs(y, t, k1)) {
        res.status = AdvectStatus::exited_domain;
        return res;
    }

    // Initial step guess (Hairer, Norsett & Wanner II.4).
    double h;
    {
        State zero{};
        const double d0 = scaled_norm(y, y, zero);
        const double d1 = scaled_norm(k1, y, zero);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, span);
        combine({{1.0, &k1}}, dir * h0);
        double d2 = 0.0;
        if (rhs(tmp, t + dir * h0, k2)) {
            State diff;
            for (std::size_t i = 0; i < K; ++i) diff[i] = k2[i] - k1[i];
            d2 = scaled_norm(diff, y, zero) / h0;
        }
        const double dm = std::max(d1, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
        h = std::min({100.0 * h0, h1, span});
    }

    constexpr double beta = 0.04;
    constexpr double alpha = 0.2 - 0.75 * beta;
    double err_old = 1e-4;
    bool last_rejected = false;

    while (dir * (t_b - t) > 0.0) {
        if (res.accepted_steps + res.rejected_steps >= opt.max_steps) {
            res.status = AdvectStatus::too_many_steps;
            break;
        }
        if (h < min_step) {
            res.status = AdvectStatus::step_underflow;
            break;
        }
        bool final_step = false;
        if (h >= std::abs(t_b - t)) {
            h = std::abs(t_b - t);
            final_step = true;
        }
        const double hs = dir * h;

        bool inside = true;
        combine({{DoPri::a21, &k1}}, hs);
        inside = inside && rhs(tmp, t + DoPri::c2 * hs, k2);
        if (inside) {
            combine({{DoPri::a31, &k1}, {DoPri::a32, &k2}}, hs);
            inside = rhs(tmp, t + DoPri::c3 * hs, k3);
        }
        if (inside) {
            combine({{DoPri::a41, &k1}, {DoPri::a42, &k2}, {DoPri::a43, &k3}}, hs);
            inside = rhs(tmp, t + DoPri::c4 * hs, k4);
        }
        if (inside) {
            combine({{DoPri::a51, &k1}, {DoPri::a52, &k2}, {DoPri::a53, &k3}, {DoPri::a54, &k4}}, hs);
            inside = rhs(tmp, t + DoPri::c5 * hs, k5);
        }
        if (inside) {
            combine({{DoPri::a61, &k1}, {DoPri::a62, &k2}, {DoPri::a63, &k3}, {DoPri::a64, &k4},
                      {DoPri::a65, &k5}},
                     hs);
            inside = rhs(tmp, t + hs, k6);
        }
        if (inside) {
            combine({{DoPri::a71, &k1}, {DoPri::a73, &k3}, {DoPri::a74, &k4}, {DoPri::a75, &k5},
                      {DoPri::a76, &k6}},
                     hs);
            ynew = tmp;
            inside = rhs(ynew, t + hs, k7);
        }
        if (!inside) {
            // A stage left the domain: shrink until the step resolves the exit.
            if (h * 0.25 < min_step) {
                res.status = AdvectStatus::exited_domain;
                break;
            }
            h *= 0.25;
            last_rejected = true;
            ++res.rejected_steps;
            continue;
        }

        State err;
        for (std::size_t i = 0; i < K; ++i)
            err[i] = hs * (DoPri::e1 * k1[i] + DoPri::e3 * k3[i] + DoPri::e4 * k4[i] + DoPri::e5 * k5[i] +
                           DoPri::e6 * k6[i] + DoPri::e7 * k7[i]);
        const double e = scaled_norm(err, y, ynew);
        if (!std::isfinite(e)) {
            res.status = AdvectStatus::non_finite;
            break;
        }

        if (e <= 1.0) {
            t = final_step ? t_b : t + hs;
            y = ynew;
            k1 = k7;
            ++res.accepted_steps;
            double fac = 0.9 * std::pow(std::max(e, 1e-10), -alpha) * std::pow(err_old, beta);
            fac = std::clamp(fac, 0.2, 10.0);
            if (last_rejected) fac = std::min(fac, 1.0);
            h *= fac;
            err_old = std::max(e, 1e-4);
            last_rejected = false;
        } else {
            h *= std::max(0.2, 0.9 * std::pow(e, -alpha));
            last_rejected = true;
            ++res.rejected_steps;
        }
    }

    res.positions = y;
    res.end_time = t;
    return res;
}

} // namespace detail

/// Advects K points jointly from t_a to t_b (t_b < t_a integrates backward).
template <std::size_t K, class Field>
StencilResult<K> advect_stencil(const Field& field, const std::array<Vec2, K>& start, double t_a, double t_b,
                                const OdeOptions& opt = {}) {
    return detail::advect_joint<false>(field, start, t_a, t_b, opt);
}

/// Advects a centre and neighbours given as offsets from it.  The result
/// holds the centre's final position in entry 0 and the final offsets after
/// it.  Offset errors are controlled relative to opt.difference_scale when
/// that is positive.
template <std::size_t K, class Field>
StencilResult<K> advect_offsets(const Field& field, Vec2 centre, const std::array<Vec2, K - 1>& offsets,
                                double t_a, double t_b, const OdeOptions& opt = {}) {
    std::array<Vec2, K> start;
    start[0] = centre;
    std::copy(offsets.begin(), offsets.end(), start.begin() + 1);
    return detail::advect_joint<true>(field, start, t_a, t_b, opt);
}

/// Single-trajectory convenience wrapper around advect_stencil.
template <class Field>
AdvectResult advect_point(const Field& field, Vec2 x0, double t_a, double t_b, double tol = 1e-8) {
    return advect_stencil<1>(field, {x0}, t_a, t_b, OdeOptions::tolerance(tol));
}

} // namespace lcs
