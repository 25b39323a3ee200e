#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "lcs/curve.hpp"
#include "lcs/error.hpp"
#include "lcs/ode.hpp"
#include "lcs/parallel.hpp"
#include "lcs/seeding.hpp"

namespace lcs {

struct RefineOptions {
    /// Largest allowed distance between consecutive points after each leg.
    double delta_max = 0.02;
    std::size_t substeps = 20;
    /// Turning angle (degrees) at a vertex that triggers insertion on both
    /// adjacent segments.
    double max_turn_deg = 20.0;
    std::size_t budget = 100'000;
};

namespace detail {

inline double turning_angle(Vec2 a, Vec2 b, Vec2 c) noexcept {
    const Vec2 u = b - a, w = c - b;
    return std::atan2(std::abs(cross(u, w)), dot(u, w));
}

struct LegPoint {
    Vec2 pre;
    Vec2 post;
};

} // namespace detail

/// Advects a material curve from t_from to t_to in `substeps` legs.  After
/// each leg, segments longer than delta_max (or flanking a sharp turn) get a
/// new point: the midpoint of the segment at the start of the leg, advected
/// across the leg.  This repeats until the leg satisfies the gap bound.
template <class Field>
MaterialCurve advect_curve(const Field& field, MaterialCurve curve, double t_from, double t_to,
                           const RefineOptions& opt = {}, double tol = 1e-8) {
    if (!(opt.delta_max > 0.0)) throw ConfigError("refinement delta_max must be positive");
    if (opt.substeps == 0) throw ConfigError("refinement needs at least one substep");
    if (curve.points.empty()) throw NumericalError("advect_curve: empty curve");
    if (t_from == t_to) {
        curve.time = t_to;
        curve.max_gap = curve.largest_gap();
        return curve;
    }
    curve.direction = t_to > t_from ? 1 : -1;

    const double max_turn = opt.max_turn_deg * std::numbers::pi / 180.0;
    // Angle-triggered insertion stops below this segment length.
    const double min_turn_segment = opt.delta_max / 64.0;

    auto advect = [&](Vec2 p, double s0, double s1, Vec2& out) {
        const auto r = advect_point(field, p, s0, s1, tol);
        out = r.positions[0];
        return r.ok() && is_finite(out);
    };

    std::vector<Vec2> pts = std::move(curve.points);
    std::size_t anchor = curve.anchor;

    for (std::size_t leg = 0; leg < opt.substeps; ++leg) {
        const double s0 = t_from + (t_to - t_from) * static_cast<double>(leg) / static_cast<double>(opt.substeps);
        const double s1 = leg + 1 == opt.substeps
                              ? t_to
                              : t_from + (t_to - t_from) * static_cast<double>(leg + 1) /
                                             static_cast<double>(opt.substeps);

        std::vector<detail::LegPoint> cur(pts.size());
        std::vector<std::uint8_t> alive(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            cur[i].pre = pts[i];
            alive[i] = advect(pts[i], s0, s1, cur[i].post) ? 1 : 0;
        }
        if (!alive[anchor]) throw NumericalError("seed point left the domain at t in [" + format_double(s0) +
                                                 ", " + format_double(s1) + "]");
        // Keep the contiguous run of surviving points around the anchor.
        std::size_t lo = anchor, hi = anchor;
        while (lo > 0 && alive[lo - 1]) --lo;
        while (hi + 1 < cur.size() && alive[hi + 1]) ++hi;
        if (lo > 0 || hi + 1 < cur.size()) curve.clipped = true;
        cur = std::vector<detail::LegPoint>(cur.begin() + static_cast<std::ptrdiff_t>(lo),
                                            cur.begin() + static_cast<std::ptrdiff_t>(hi + 1));
        anchor -= lo;

        // Segment i joins points i and i+1; stuck segments cannot be refined.
        std::vector<std::uint8_t> stuck(cur.size() > 0 ? cur.size() - 1 : 0, 0);
        bool changed = true;
        while (changed && !curve.truncated) {
            changed = false;
            const std::size_t n = cur.size();
            std::vector<std::uint8_t> split(n - 1, 0);
            for (std::size_t i = 0; i + 1 < n; ++i)
                if (distance(cur[i].post, cur[i + 1].post) > opt.delta_max) split[i] = 1;
            for (std::size_t i = 1; i + 1 < n; ++i) {
                if (detail::turning_angle(cur[i - 1].post, cur[i].post, cur[i + 1].post) <= max_turn) continue;
                if (distance(cur[i - 1].post, cur[i].post) > min_turn_segment) split[i - 1] = 1;
                if (distance(cur[i].post, cur[i + 1].post) > min_turn_segment) split[i] = 1;
            }

            std::vector<detail::LegPoint> next;
            std::vector<std::uint8_t> next_stuck;
            next.reserve(n * 2);
            std::size_t next_anchor = anchor;
            for (std::size_t i = 0; i < n; ++i) {
                next.push_back(cur[i]);
                if (i == anchor) next_anchor = next.size() - 1;
                if (i + 1 == n) break;
                bool inserted = false;
                if (split[i] && !stuck[i]) {
                    // Points after this insertion: those already emitted, the
                    // midpoint, and the rest of the current curve.
                    if (next.size() + 1 + (n - i - 1) > opt.budget) {
                        curve.truncated = true;
                    } else {
                        detail::LegPoint mid;
                        mid.pre = 0.5 * (cur[i].pre + cur[i + 1].pre);
                        const bool distinct = distance(cur[i].pre, cur[i + 1].pre) > 1e-13;
                        if (distinct && advect(mid.pre, s0, s1, mid.post)) {
                            next_stuck.push_back(0);
                            next.push_back(mid);
                            next_stuck.push_back(0);
                            ++curve.insertions;
                            inserted = changed = true;
                        } else {
                            next_stuck.push_back(1);
                            inserted = true;
                        }
                    }
                }
                if (!inserted) next_stuck.push_back(stuck[i]);
            }
            cur = std::move(next);
            stuck = std::move(next_stuck);
            anchor = next_anchor;
        }

        pts.resize(cur.size());
        for (std::size_t i = 0; i < cur.size(); ++i) pts[i] = cur[i].post;
    }

    curve.points = std::move(pts);
    curve.anchor = anchor;
    curve.time = t_to;
    curve.max_gap = curve.largest_gap();
    return curve;
}

struct TimeWindow {
    double t1 = 0.0;
    double t2 = 1.0;

    void check(double t) const {
        if (!(t2 > t1)) throw ConfigError("time window needs t1 < t2");
        if (t < t1 || t > t2)
            throw ConfigError("time " + format_double(t) + " outside window [" + format_double(t1) + ", " +
                              format_double(t2) + "]");
    }
};

struct Extraction {
    std::vector<MaterialCurve> curves;
    std::vector<SeedFailure> failures;
};

namespace detail {

template <class Field>
Extraction advect_segments(const Field& field, std::span<const SeedPoint> seeds, double t_seed, double t,
                           double length, const RefineOptions& refine, double tol) {
    const auto segments = make_seed_segments(seeds, length, t_seed);
    std::vector<MaterialCurve> curves(segments.size());
    std::vector<std::string> errors(segments.size());
    parallel_for(segments.size(), [&](std::size_t k) {
        try {
            curves[k] = advect_curve(field, segments[k], t_seed, t, refine, tol);
        } catch (const Error& e) {
            errors[k] = e.what();
        }
    });
    Extraction out;
    for (std::size_t k = 0; k < segments.size(); ++k) {
        if (errors[k].empty())
            out.curves.push_back(std::move(curves[k]));
        else
            out.failures.push_back({segments[k].seed_id, errors[k]});
    }
    return out;
}

} // namespace detail

/// Attracting LCS at time t: seed segments along xi2 at t1, advected forward.
template <class Field>
Extraction extract_attracting_lcs(const Field& field, std::span<const SeedPoint> seeds, TimeWindow window,
                                  double t, double length = 0.1, const RefineOptions& refine = {},
                                  double tol = 1e-8) {
    window.check(t);
    return detail::advect_segments(field, seeds, window.t1, t, length, refine, tol);
}

/// Repelling LCS at time t: seed segments along theta1 at t2, advected backward.
template <class Field>
Extraction extract_repelling_lcs(const Field& field, std::span<const SeedPoint> seeds, TimeWindow window,
                                 double t, double length = 0.1, const RefineOptions& refine = {},
                                 double tol = 1e-8) {
    window.check(t);
    return detail::advect_segments(field, seeds, window.t2, t, length, refine, tol);
}

} // namespace lcs
