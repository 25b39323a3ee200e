#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lcs/error.hpp"
#include "lcs/geometry.hpp"

namespace lcs {

enum class SeedKind { attracting, repelling };

inline std::string_view to_string(SeedKind k) noexcept {
    return k == SeedKind::attracting ? "attracting" : "repelling";
}

/// Time-stamped polyline representing a material line.
struct MaterialCurve {
    std::vector<Vec2> points;
    double time = 0.0;
    std::size_t seed_id = 0;
    SeedKind kind = SeedKind::attracting;
    /// +1 advected forward in time, -1 backward, 0 never advected.
    int direction = 0;
    /// Index of the seed point within `points`.
    std::size_t anchor = 0;
    std::size_t insertions = 0;
    double max_gap = 0.0;
    /// Refinement stopped at the insertion budget.
    bool truncated = false;
    /// Points were dropped after leaving the domain.
    bool clipped = false;

    double arc_length() const noexcept {
        double len = 0.0;
        for (std::size_t i = 1; i < points.size(); ++i) len += distance(points[i], points[i - 1]);
        return len;
    }

    double largest_gap() const noexcept {
        double g = 0.0;
        for (std::size_t i = 1; i < points.size(); ++i) g = std::max(g, distance(points[i], points[i - 1]));
        return g;
    }
};

struct SeedFailure {
    std::size_t seed_id = 0;
    std::string reason;
};

/// Round-trip decimal text of a double.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline nlohmann::json points_to_json(const std::vector<Vec2>& pts) {
    auto arr = nlohmann::json::array();
    for (const auto& p : pts) arr.push_back({p.x, p.y});
    return arr;
}

inline nlohmann::json to_json(const MaterialCurve& c) {
    return {{"time", c.time},       {"kind", std::string(to_string(c.kind))},
            {"seed_id", c.seed_id}, {"points", points_to_json(c.points)},
            {"truncated", c.truncated}};
}

inline std::string curves_to_json(const std::vector<MaterialCurve>& curves) {
    auto arr = nlohmann::json::array();
    for (const auto& c : curves) arr.push_back(to_json(c));
    return arr.dump(1) + "\n";
}

/// One row per vertex: curve, kind, seed_id, time, point, x, y.
inline std::string curves_to_csv(const std::vector<MaterialCurve>& curves) {
    std::string out = "curve,kind,seed_id,time,point,x,y\n";
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const auto& cv = curves[c];
        for (std::size_t i = 0; i < cv.points.size(); ++i) {
            out += std::to_string(c) + ',' + std::string(to_string(cv.kind)) + ',' + std::to_string(cv.seed_id) +
                   ',' + format_double(cv.time) + ',' + std::to_string(i) + ',' + format_double(cv.points[i].x) +
                   ',' + format_double(cv.points[i].y) + '\n';
        }
    }
    return out;
}

} // namespace lcs
