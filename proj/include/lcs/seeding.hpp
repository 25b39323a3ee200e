#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcs/curve.hpp"
#include "lcs/geometry.hpp"
#include "lcs/svd.hpp"

namespace lcs {

struct Extremum {
    std::size_t index = 0;
    double value = 0.0;
};

/// Strict local maxima over the 8-neighbourhood.  Boundary rows and columns
/// are never reported, and a masked node (mask == 0) is neither a candidate
/// nor a valid neighbour.
inline std::vector<Extremum> local_maxima(std::span<const double> field, const GridSpec& spec,
                                          std::span<const std::uint8_t> mask = {}) {
    std::vector<Extremum> out;
    auto ok = [&](std::size_t k) { return mask.empty() || mask[k] != 0; };
    for (std::size_t j = 1; j + 1 < spec.ny; ++j) {
        for (std::size_t i = 1; i + 1 < spec.nx; ++i) {
            const std::size_t k = spec.index(i, j);
            if (!ok(k)) continue;
            const double v = field[k];
            bool strict = true;
            for (int dj = -1; dj <= 1 && strict; ++dj) {
                for (int di = -1; di <= 1; ++di) {
                    if (di == 0 && dj == 0) continue;
                    const std::size_t nk = spec.index(i + di, j + dj);
                    if (!ok(nk) || !(v > field[nk])) {
                        strict = false;
                        break;
                    }
                }
            }
            if (strict) out.push_back({k, v});
        }
    }
    return out;
}

/// Euclidean distance, taking the minimum image along periodic axes.
struct SeedMetric {
    double period_x = 0.0;
    double period_y = 0.0;

    static SeedMetric for_grid(const GridSpec& g) {
        return {g.periodic_x ? g.x_max - g.x_min : 0.0, g.periodic_y ? g.y_max - g.y_min : 0.0};
    }

    double operator()(Vec2 a, Vec2 b) const noexcept {
        double dx = std::abs(a.x - b.x), dy = std::abs(a.y - b.y);
        if (period_x > 0.0) {
            dx = std::fmod(dx, period_x);
            dx = std::min(dx, period_x - dx);
        }
        if (period_y > 0.0) {
            dy = std::fmod(dy, period_y);
            dy = std::min(dy, period_y - dy);
        }
        return std::hypot(dx, dy);
    }
};

struct SeedCandidate {
    std::size_t index = 0;
    Vec2 position;
    double value = 0.0;
};

/// Greedy suppression: visit candidates by descending value (ties by ascending
/// grid index), keep one, drop every remaining candidate closer than radius.
inline std::vector<SeedCandidate> filter_extrema(std::vector<SeedCandidate> candidates, double radius,
                                                 SeedMetric metric = {}) {
    if (!(radius > 0.0)) throw ConfigError("filter radius must be positive");
    std::sort(candidates.begin(), candidates.end(), [](const SeedCandidate& a, const SeedCandidate& b) {
        if (a.value != b.value) return a.value > b.value;
        return a.index < b.index;
    });
    std::vector<SeedCandidate> kept;
    for (const auto& c : candidates) {
        bool near = false;
        for (const auto& k : kept) {
            if (metric(c.position, k.position) < radius) {
                near = true;
                break;
            }
        }
        if (!near) kept.push_back(c);
    }
    return kept;
}

struct SeedPoint {
    std::size_t id = 0;
    /// Grid node of the originating extremum.
    std::size_t grid_index = 0;
    Vec2 position;
    double value = 0.0;
    Vec2 direction{1.0, 0.0};
    SeedKind kind = SeedKind::attracting;
};

/// Straight polylines of 2k+1 equally spaced points centred at each seed and
/// aligned with its direction.
inline std::vector<MaterialCurve> make_seed_segments(std::span<const SeedPoint> seeds, double length = 0.1,
                                                     double time = 0.0, std::size_t k = 5) {
    if (!(length > 0.0)) throw ConfigError("seed segment length must be positive");
    if (k == 0) throw ConfigError("seed segment needs at least one point per side");
    std::vector<MaterialCurve> out;
    out.reserve(seeds.size());
    const double step = 0.5 * length / static_cast<double>(k);
    for (const auto& s : seeds) {
        MaterialCurve c;
        c.time = time;
        c.seed_id = s.id;
        c.kind = s.kind;
        c.anchor = k;
        const Vec2 d = normalized(s.direction);
        c.points.resize(2 * k + 1);
        for (std::size_t i = 0; i <= 2 * k; ++i) {
            const double offset = (static_cast<double>(i) - static_cast<double>(k)) * step;
            c.points[i] = s.position + offset * d;
        }
        c.max_gap = c.largest_gap();
        out.push_back(std::move(c));
    }
    return out;
}

struct SeedOptions {
    double radius = 0.2;
    /// Keep only extrema beyond this percentile of the seeding field (upper
    /// tail for maxima, lower tail for minima).  Negative disables the floor.
    double percentile_floor = 90.0;
};

struct SeedSelection {
    /// At the initial time t1, along xi2.
    std::vector<SeedPoint> attracting;
    /// At the final time t2 (advected positions), along theta1.
    std::vector<SeedPoint> repelling;
    std::size_t extrema_found = 0;
    std::size_t dropped_degenerate = 0;
};

namespace detail {

inline double percentile(std::vector<double> values, double pct) {
    if (values.empty()) return 0.0;
    const double q = std::clamp(pct, 0.0, 100.0) / 100.0;
    const auto pos = static_cast<std::size_t>(std::floor(q * static_cast<double>(values.size() - 1)));
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(pos), values.end());
    return values[pos];
}

// Candidate extrema of `field` (maxima; callers negate for minima), with the
// percentile floor applied and degenerate nodes dropped.
inline std::vector<SeedCandidate> candidates(const SvdFields& svd, const std::vector<double>& field,
                                             const SeedOptions& opt, std::size_t& found, std::size_t& dropped) {
    const auto maxima = local_maxima(field, svd.spec, svd.mask);
    found += maxima.size();
    double floor = -std::numeric_limits<double>::infinity();
    if (opt.percentile_floor >= 0.0) {
        std::vector<double> vals;
        vals.reserve(field.size());
        for (std::size_t k = 0; k < field.size(); ++k)
            if (svd.mask[k]) vals.push_back(field[k]);
        floor = percentile(std::move(vals), opt.percentile_floor);
    }
    std::vector<SeedCandidate> out;
    for (const auto& m : maxima) {
        if (m.value < floor) continue;
        if (svd.degenerate[m.index]) {
            ++dropped;
            continue;
        }
        out.push_back({m.index, svd.spec.point(m.index), m.value});
    }
    return out;
}

} // namespace detail

/// Seeds for attracting LCS at t1 and repelling LCS at t2.
///
/// Incompressible: one pass over maxima of sigma2_f serves both families; the
/// repelling seed is the advected point with direction theta1.  Compressible:
/// attracting seeds come from minima of sigma1_f, repelling seeds from maxima
/// of sigma2_f, each filtered separately.
inline SeedSelection select_seeds(const SvdFields& svd, const SeedOptions& opt = {}) {
    SeedSelection sel;
    const auto metric = SeedMetric::for_grid(svd.spec);

    auto attracting = [&](const SeedCandidate& c, double value) {
        SeedPoint p;
        p.id = sel.attracting.size();
        p.grid_index = c.index;
        p.position = c.position;
        p.value = value;
        p.direction = svd.xi2[c.index];
        p.kind = SeedKind::attracting;
        sel.attracting.push_back(p);
    };
    auto repelling = [&](const SeedCandidate& c) {
        SeedPoint p;
        p.id = sel.repelling.size();
        p.grid_index = c.index;
        p.position = svd.advected[c.index];
        p.value = svd.sigma2_b[c.index];
        p.direction = svd.theta1[c.index];
        p.kind = SeedKind::repelling;
        sel.repelling.push_back(p);
    };

    auto stretch = detail::candidates(svd, svd.sigma2_f, opt, sel.extrema_found, sel.dropped_degenerate);
    const auto kept_stretch = filter_extrema(std::move(stretch), opt.radius, metric);

    if (svd.incompressible) {
        for (const auto& c : kept_stretch) {
            attracting(c, svd.sigma2_f[c.index]);
            repelling(c);
        }
        return sel;
    }

    std::vector<double> neg_sigma1(svd.sigma1_f.size());
    for (std::size_t k = 0; k < neg_sigma1.size(); ++k) neg_sigma1[k] = -svd.sigma1_f[k];
    auto compress = detail::candidates(svd, neg_sigma1, opt, sel.extrema_found, sel.dropped_degenerate);
    for (const auto& c : filter_extrema(std::move(compress), opt.radius, metric))
        attracting(c, svd.sigma1_f[c.index]);
    for (const auto& c : kept_stretch) repelling(c);
    return sel;
}

/// Plain-text table: kind x y value dir_x dir_y, one seed per line.
inline std::string seeds_to_text(std::span<const SeedPoint> seeds) {
    std::string out = "# kind x y value dir_x dir_y\n";
    for (const auto& s : seeds) {
        out += std::string(to_string(s.kind)) + ' ' + format_double(s.position.x) + ' ' +
               format_double(s.position.y) + ' ' + format_double(s.value) + ' ' + format_double(s.direction.x) +
               ' ' + format_double(s.direction.y) + '\n';
    }
    return out;
}

inline nlohmann::json seeds_to_json(std::span<const SeedPoint> seeds) {
    auto arr = nlohmann::json::array();
    for (const auto& s : seeds) {
        arr.push_back({{"id", s.id},
                       {"kind", std::string(to_string(s.kind))},
                       {"grid_index", s.grid_index},
                       {"x", s.position.x},
                       {"y", s.position.y},
                       {"value", s.value},
                       {"dir_x", s.direction.x},
                       {"dir_y", s.direction.y}});
    }
    return arr;
}

} // namespace lcs
