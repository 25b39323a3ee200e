#pragma once

// Baseline: direct integration of singular-vector line fields, for comparison
// with segment advection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcs/curve.hpp"
#include "lcs/error.hpp"
#include "lcs/interpolation.hpp"
#include "lcs/seeding.hpp"
#include "lcs/svd.hpp"

namespace lcs {

enum class LineFamily { xi1, xi2, theta1, theta2 };

inline std::string_view to_string(LineFamily f) noexcept {
    switch (f) {
    case LineFamily::xi1: return "xi1";
    case LineFamily::xi2: return "xi2";
    case LineFamily::theta1: return "theta1";
    case LineFamily::theta2: return "theta2";
    }
    return "xi1";
}

enum class StopReason { max_length, domain_exit, degenerate_point };

inline std::string_view to_string(StopReason r) noexcept {
    switch (r) {
    case StopReason::max_length: return "max length";
    case StopReason::domain_exit: return "domain exit";
    case StopReason::degenerate_point: return "degenerate point";
    }
    return "max length";
}

/// Unoriented unit vectors on a grid.  Nodes with usable == 0 terminate
/// integration.
struct DirectionField {
    GridSpec spec;
    std::vector<Vec2> vectors;
    std::vector<std::uint8_t> usable;
    LineFamily family = LineFamily::xi1;
};

/// Singular-value ratio below which a node counts as degenerate for line
/// integration.
inline constexpr double line_degeneracy_ratio = 1.0 + 1e-6;

inline DirectionField shrink_direction_field(const SvdFields& svd) {
    DirectionField f;
    f.spec = svd.spec;
    f.vectors = svd.xi1;
    f.family = LineFamily::xi1;
    f.usable.resize(svd.size());
    for (std::size_t k = 0; k < svd.size(); ++k)
        f.usable[k] = svd.mask[k] && svd.sigma2_f[k] / svd.sigma1_f[k] >= line_degeneracy_ratio ? 1 : 0;
    return f;
}

inline DirectionField stretch_direction_field(const SvdFields& svd) {
    auto f = shrink_direction_field(svd);
    f.vectors = svd.xi2;
    f.family = LineFamily::xi2;
    return f;
}

struct LineFieldCurve {
    std::vector<Vec2> points;
    LineFamily family = LineFamily::xi1;
    Vec2 seed;
    std::size_t seed_id = 0;
    /// Index of the seed within points.
    std::size_t anchor = 0;
    StopReason stop_forward = StopReason::max_length;
    StopReason stop_backward = StopReason::max_length;

    double arc_length() const noexcept {
        double len = 0.0;
        for (std::size_t i = 1; i < points.size(); ++i) len += distance(points[i], points[i - 1]);
        return len;
    }
};

namespace detail {

struct DirectionSample {
    Vec2 direction;
    std::optional<StopReason> stop;
};

/// Bilinear interpolation of corner vectors after flipping each to agree with
/// `reference`; the result is normalised and aligned with `reference` too.
inline DirectionSample sample_direction(const DirectionField& f, Vec2 p, Vec2 reference) {
    const auto& g = f.spec;
    std::size_t ci, cj;
    double fi, fj;
    if (!locate(p.x, g.x_min, g.hx(), g.nx, g.periodic_x, ci, fi) ||
        !locate(p.y, g.y_min, g.hy(), g.ny, g.periodic_y, cj, fj))
        return {{}, StopReason::domain_exit};
    const std::size_t i1 = g.periodic_x ? (ci + 1) % g.nx : ci + 1;
    const std::size_t j1 = g.periodic_y ? (cj + 1) % g.ny : cj + 1;
    const std::size_t corners[4] = {g.index(ci, cj), g.index(i1, cj), g.index(ci, j1), g.index(i1, j1)};
    const double w[4] = {(1 - fi) * (1 - fj), fi * (1 - fj), (1 - fi) * fj, fi * fj};
    Vec2 acc;
    for (int c = 0; c < 4; ++c) {
        if (!f.usable[corners[c]]) return {{}, StopReason::degenerate_point};
        Vec2 v = f.vectors[corners[c]];
        if (dot(v, reference) < 0.0) v = -v;
        acc += w[c] * v;
    }
    const double n = norm(acc);
    if (!(n > 1e-12)) return {{}, StopReason::degenerate_point};
    acc = acc / n;
    if (dot(acc, reference) < 0.0) acc = -acc;
    return {acc, std::nullopt};
}

inline Vec2 nearest_node_vector(const DirectionField& f, Vec2 p) {
    const auto& g = f.spec;
    std::size_t ci, cj;
    double fi, fj;
    if (!locate(p.x, g.x_min, g.hx(), g.nx, g.periodic_x, ci, fi) ||
        !locate(p.y, g.y_min, g.hy(), g.ny, g.periodic_y, cj, fj))
        throw DomainError("line-field seed outside the grid");
    if (fi >= 0.5) ci = g.periodic_x ? (ci + 1) % g.nx : ci + 1;
    if (fj >= 0.5) cj = g.periodic_y ? (cj + 1) % g.ny : cj + 1;
    return canonical_axis(f.vectors[g.index(ci, cj)]);
}

} // namespace detail

/// Fixed-step RK4 integration of an unoriented direction field, grown in both
/// directions from the seed for max_len/2 each.
inline LineFieldCurve integrate_line_field(const DirectionField& field, Vec2 seed, double step, double max_len) {
    if (!(step > 0.0) || !(max_len > 0.0)) throw ConfigError("line integration needs positive step and length");
    const auto start = detail::sample_direction(field, seed, detail::nearest_node_vector(field, seed));
    if (start.stop) throw NumericalError(std::string("line-field seed rejected: ") + std::string(to_string(*start.stop)));
    const Vec2 d0 = canonical_axis(start.direction);

    const double half = 0.5 * max_len;
    auto grow = [&](Vec2 initial, StopReason& reason) {
        std::vector<Vec2> pts;
        Vec2 p = seed, ref = initial;
        double travelled = 0.0;
        reason = StopReason::max_length;
        while (travelled < half * (1.0 - 1e-12)) {
            const double h = std::min(step, half - travelled);
            const auto k1 = detail::sample_direction(field, p, ref);
            if (k1.stop) { reason = *k1.stop; break; }
            const auto k2 = detail::sample_direction(field, p + 0.5 * h * k1.direction, k1.direction);
            if (k2.stop) { reason = *k2.stop; break; }
            const auto k3 = detail::sample_direction(field, p + 0.5 * h * k2.direction, k2.direction);
            if (k3.stop) { reason = *k3.stop; break; }
            const auto k4 = detail::sample_direction(field, p + h * k3.direction, k3.direction);
            if (k4.stop) { reason = *k4.stop; break; }
            const Vec2 next =
                p + (h / 6.0) * (k1.direction + 2.0 * k2.direction + 2.0 * k3.direction + k4.direction);
            if (!field.spec.periodic_x || !field.spec.periodic_y) {
                std::size_t c;
                double fr;
                const auto& g = field.spec;
                if (!detail::locate(next.x, g.x_min, g.hx(), g.nx, g.periodic_x, c, fr) ||
                    !detail::locate(next.y, g.y_min, g.hy(), g.ny, g.periodic_y, c, fr)) {
                    reason = StopReason::domain_exit;
                    break;
                }
            }
            ref = normalized(next - p);
            p = next;
            pts.push_back(p);
            travelled += h;
        }
        return pts;
    };

    LineFieldCurve out;
    out.family = field.family;
    out.seed = seed;
    auto fwd = grow(d0, out.stop_forward);
    auto bwd = grow(-d0, out.stop_backward);
    out.points.assign(bwd.rbegin(), bwd.rend());
    out.anchor = out.points.size();
    out.points.push_back(seed);
    out.points.insert(out.points.end(), fwd.begin(), fwd.end());
    return out;
}

struct LineFieldBatch {
    std::vector<LineFieldCurve> curves;
    std::vector<SeedFailure> failures;
};

/// Shrink lines (xi1 integral curves) through each seed at t1.  A
/// non-positive step selects half the grid spacing.
inline LineFieldBatch shrink_lines_through_seeds(const SvdFields& svd, std::span<const SeedPoint> seeds,
                                                 double step, double max_len) {
    if (!(step > 0.0)) step = 0.5 * svd.spec.h();
    const auto field = shrink_direction_field(svd);
    LineFieldBatch out;
    for (const auto& s : seeds) {
        try {
            auto c = integrate_line_field(field, s.position, step, max_len);
            c.seed_id = s.id;
            out.curves.push_back(std::move(c));
        } catch (const Error& e) {
            out.failures.push_back({s.id, e.what()});
        }
    }
    return out;
}

struct CurveStats {
    double min = 0.0, median = 0.0, max = 0.0;
};

struct CurveComparison {
    double hausdorff = 0.0;
    double arc_length_a = 0.0, arc_length_b = 0.0;
    CurveStats metric_a, metric_b;
    /// Metric values at uniform arc-length fractions; NaN where the sample
    /// falls outside the metric grid.
    std::vector<double> samples_a, samples_b;
    /// Share of jointly valid samples with metric_a >= metric_b.
    double fraction_a_ge_b = 0.0;
};

namespace detail {

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) noexcept {
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return distance(p, a + t * ab);
}

inline double directed_hausdorff(std::span<const Vec2> a, std::span<const Vec2> b) noexcept {
    double worst = 0.0;
    for (const auto& p : a) {
        double best = std::numeric_limits<double>::infinity();
        if (b.size() == 1) best = distance(p, b[0]);
        for (std::size_t i = 1; i < b.size(); ++i) best = std::min(best, point_segment_distance(p, b[i - 1], b[i]));
        worst = std::max(worst, best);
    }
    return worst;
}

inline double polyline_length(std::span<const Vec2> pts) noexcept {
    double len = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) len += distance(pts[i], pts[i - 1]);
    return len;
}

} // namespace detail

/// Symmetric Hausdorff distance between polylines (vertices against segments).
inline double hausdorff_distance(std::span<const Vec2> a, std::span<const Vec2> b) {
    if (a.empty() || b.empty()) throw NumericalError("hausdorff_distance: empty curve");
    return std::max(detail::directed_hausdorff(a, b), detail::directed_hausdorff(b, a));
}

/// Points at n uniform arc-length fractions 0, 1/(n-1), ..., 1.
inline std::vector<Vec2> resample_by_arc_length(std::span<const Vec2> pts, std::size_t n) {
    std::vector<Vec2> out;
    if (pts.empty() || n == 0) return out;
    if (pts.size() == 1 || n == 1) return std::vector<Vec2>(n, pts.front());
    std::vector<double> cum(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + distance(pts[i], pts[i - 1]);
    const double total = cum.back();
    std::size_t seg = 1;
    for (std::size_t s = 0; s < n; ++s) {
        const double target = total * static_cast<double>(s) / static_cast<double>(n - 1);
        while (seg + 1 < pts.size() && cum[seg] < target) ++seg;
        const double len = cum[seg] - cum[seg - 1];
        const double f = len > 0.0 ? std::clamp((target - cum[seg - 1]) / len, 0.0, 1.0) : 0.0;
        out.push_back(pts[seg - 1] + f * (pts[seg] - pts[seg - 1]));
    }
    return out;
}

namespace detail {

inline CurveStats curve_stats(const std::vector<double>& vals) {
    std::vector<double> v;
    for (double x : vals)
        if (std::isfinite(x)) v.push_back(x);
    CurveStats s;
    if (v.empty()) {
        s.min = s.median = s.max = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    std::sort(v.begin(), v.end());
    s.min = v.front();
    s.max = v.back();
    const std::size_t m = v.size() / 2;
    s.median = v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
    return s;
}

template <class Metric>
CurveComparison compare_samples(std::span<const Vec2> a, std::span<const Vec2> b, const std::vector<Vec2>& pa,
                                 const std::vector<Vec2>& pb, const Metric& metric) {
    CurveComparison r;
    r.hausdorff = hausdorff_distance(a, b);
    r.arc_length_a = polyline_length(a);
    r.arc_length_b = polyline_length(b);
    auto values = [&](const std::vector<Vec2>& pts) {
        std::vector<double> vals;
        for (const auto& p : pts) vals.push_back(is_finite(p) ? metric(p) : std::numeric_limits<double>::quiet_NaN());
        return vals;
    };
    r.samples_a = values(pa);
    r.samples_b = values(pb);
    r.metric_a = curve_stats(r.samples_a);
    r.metric_b = curve_stats(r.samples_b);
    std::size_t valid = 0, ge = 0;
    for (std::size_t k = 0; k < r.samples_a.size(); ++k) {
        if (!std::isfinite(r.samples_a[k]) || !std::isfinite(r.samples_b[k])) continue;
        ++valid;
        ge += r.samples_a[k] >= r.samples_b[k];
    }
    r.fraction_a_ge_b = valid ? static_cast<double>(ge) / static_cast<double>(valid) : 0.0;
    return r;
}

// Point at signed arc length s from pts[anchor].
inline Vec2 point_at_offset(std::span<const Vec2> pts, const std::vector<double>& cum, std::size_t anchor, double s) {
    const double target = cum[anchor] + s;
    if (pts.size() == 1) return pts[0];
    auto it = std::upper_bound(cum.begin(), cum.end(), target);
    std::size_t k = static_cast<std::size_t>(it - cum.begin());
    k = std::clamp<std::size_t>(k, 1, pts.size() - 1);
    const double len = cum[k] - cum[k - 1];
    const double f = len > 0.0 ? std::clamp((target - cum[k - 1]) / len, 0.0, 1.0) : 0.0;
    return pts[k - 1] + f * (pts[k] - pts[k - 1]);
}

inline std::vector<double> cumulative_length(std::span<const Vec2> pts) {
    std::vector<double> cum(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + distance(pts[i], pts[i - 1]);
    return cum;
}

inline Vec2 tangent_at(std::span<const Vec2> pts, std::size_t anchor) {
    const std::size_t lo = anchor > 0 ? anchor - 1 : anchor;
    const std::size_t hi = anchor + 1 < pts.size() ? anchor + 1 : anchor;
    return pts[hi] - pts[lo];
}

} // namespace detail

/// Metric statistics at uniform arc-length fractions of each curve.  The
/// metric returns NaN where it is undefined.
template <class Metric>
CurveComparison compare_curves(std::span<const Vec2> a, std::span<const Vec2> b, const Metric& metric,
                               std::size_t samples = 201) {
    if (a.empty() || b.empty()) throw NumericalError("compare_curves: empty curve");
    return detail::compare_samples(a, b, resample_by_arc_length(a, samples), resample_by_arc_length(b, samples),
                                   metric);
}

inline CurveComparison compare_curves(std::span<const Vec2> a, std::span<const Vec2> b, const ScalarGrid& metric,
                                      std::size_t samples = 201) {
    return compare_curves(a, b,
                          [&](Vec2 p) {
                              return metric.contains(p) ? metric.sample(p)
                                                        : std::numeric_limits<double>::quiet_NaN();
                          },
                          samples);
}

/// Metric statistics at equal signed arc lengths from each curve's anchor,
/// over the stretch both curves cover on each side.  Curve b is reversed
/// first if its tangent at the anchor opposes a's.
template <class Metric>
CurveComparison compare_curves_from_anchor(std::span<const Vec2> a, std::size_t anchor_a, std::span<const Vec2> b,
                                           std::size_t anchor_b, const Metric& metric, std::size_t samples = 201) {
    if (a.empty() || b.empty()) throw NumericalError("compare_curves: empty curve");
    if (anchor_a >= a.size() || anchor_b >= b.size()) throw NumericalError("compare_curves: anchor out of range");
    std::vector<Vec2> bb(b.begin(), b.end());
    if (dot(detail::tangent_at(a, anchor_a), detail::tangent_at(bb, anchor_b)) < 0.0) {
        std::reverse(bb.begin(), bb.end());
        anchor_b = bb.size() - 1 - anchor_b;
    }
    const auto ca = detail::cumulative_length(a), cb = detail::cumulative_length(bb);
    const double lo = std::min(ca[anchor_a], cb[anchor_b]);
    const double hi = std::min(ca.back() - ca[anchor_a], cb.back() - cb[anchor_b]);
    std::vector<Vec2> pa, pb;
    for (std::size_t k = 0; k < samples; ++k) {
        const double s = samples == 1 ? 0.0
                                      : -lo + (lo + hi) * static_cast<double>(k) / static_cast<double>(samples - 1);
        pa.push_back(detail::point_at_offset(a, ca, anchor_a, s));
        pb.push_back(detail::point_at_offset(bb, cb, anchor_b, s));
    }
    return detail::compare_samples(a, std::span<const Vec2>(bb), pa, pb, metric);
}

inline nlohmann::json to_json(const LineFieldCurve& c, double time) {
    return {{"time", time},
            {"kind", "repelling"},
            {"seed_id", c.seed_id},
            {"points", points_to_json(c.points)},
            {"truncated", false},
            {"family", std::string(to_string(c.family))},
            {"stop_forward", std::string(to_string(c.stop_forward))},
            {"stop_backward", std::string(to_string(c.stop_backward))}};
}

} // namespace lcs
