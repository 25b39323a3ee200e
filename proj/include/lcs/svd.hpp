#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lcs/binary_io.hpp"
#include "lcs/error.hpp"
#include "lcs/flow_map.hpp"
#include "lcs/geometry.hpp"
#include "lcs/parallel.hpp"

namespace lcs {

/// M = s2 * th2 xi2^T + s1 * th1 xi1^T with s2 >= s1 > 0.
///
/// Sign convention: xi2 has a nonnegative first component (nonnegative second
/// when the first vanishes), xi1 = rot90(xi2), th_i = M xi_i / s_i.
struct Svd2 {
    double s2 = 1.0, s1 = 1.0;
    Vec2 xi2{1.0, 0.0}, xi1{0.0, 1.0};
    Vec2 th2{1.0, 0.0}, th1{0.0, 1.0};

    Mat2 reconstruct() const noexcept {
        return {s2 * th2.x * xi2.x + s1 * th1.x * xi1.x, s2 * th2.x * xi2.y + s1 * th1.x * xi1.y,
                s2 * th2.y * xi2.x + s1 * th1.y * xi1.x, s2 * th2.y * xi2.y + s1 * th1.y * xi1.y};
    }
};

/// Relative singular-value gap below which singular vectors are unreliable.
inline constexpr double degenerate_gap = 1e-9;

inline bool is_degenerate(double s2, double s1) noexcept { return (s2 - s1) <= degenerate_gap * s2; }

/// Closed-form SVD of a non-singular 2x2 matrix.
inline Svd2 svd2x2(const Mat2& m) {
    if (!is_finite(m)) throw NumericalError("svd2x2: non-finite matrix");
    const double det = m.det();
    if (det == 0.0) throw NumericalError("svd2x2: singular matrix");

    // M^T M = [[p, q], [q, r]]
    const double p = m.a * m.a + m.c * m.c;
    const double q = m.a * m.b + m.c * m.d;
    const double r = m.b * m.b + m.d * m.d;
    const double half_trace = 0.5 * (p + r);
    const double radius = std::hypot(0.5 * (p - r), q);
    Svd2 out;
    out.s2 = std::sqrt(half_trace + radius);
    // The smaller value from the determinant avoids cancellation.
    out.s1 = std::abs(det) / out.s2;
    if (out.s1 > out.s2) out.s1 = out.s2;

    const double angle = 0.5 * std::atan2(2.0 * q, p - r);
    out.xi2 = canonical_axis(Vec2{std::cos(angle), std::sin(angle)});
    out.xi1 = rot90(out.xi2);
    out.th2 = (m * out.xi2) / out.s2;
    out.th2 = normalized(out.th2);
    // Theta has the orientation of M because Xi is a proper rotation.
    out.th1 = det > 0.0 ? rot90(out.th2) : -rot90(out.th2);
    return out;
}

/// Finite-time Lyapunov exponent (1/T) log(sigma).
inline double ftle(double sigma, double duration) {
    if (!(sigma > 0.0) || !(duration > 0.0)) throw NumericalError("ftle: sigma and T must be positive");
    return std::log(sigma) / duration;
}

inline std::vector<double> ftle(std::span<const double> sigma, double duration) {
    std::vector<double> out(sigma.size());
    for (std::size_t k = 0; k < sigma.size(); ++k) out[k] = ftle(sigma[k], duration);
    return out;
}

/// Per-grid-point singular values and vectors of DF over [t_a, t_b], with the
/// backward singular values attached at the advected points.
struct SvdFields {
    GridSpec spec;
    double duration = 0.0;
    bool incompressible = true;
    std::vector<double> sigma2_f, sigma1_f;
    std::vector<double> sigma2_b, sigma1_b;
    std::vector<double> ftle_f, ftle_b;
    std::vector<Vec2> xi2, xi1, theta2, theta1;
    /// Advected positions x2 = F(x1), where the backward quantities live.
    std::vector<Vec2> advected;
    std::vector<std::uint8_t> mask;
    std::vector<std::uint8_t> degenerate;

    std::size_t size() const noexcept { return spec.size(); }
    bool usable(std::size_t k) const noexcept { return mask[k] != 0 && degenerate[k] == 0; }
};

inline SvdFields analyze(const FlowMapGrid& fmg, bool incompressible = true) {
    if (!fmg.has_gradients()) throw NumericalError("analyze: flow map has no deformation gradients");
    const std::size_t n = fmg.spec.size();
    SvdFields s;
    s.spec = fmg.spec;
    s.duration = fmg.duration();
    s.incompressible = incompressible;
    s.sigma2_f.assign(n, 1.0);
    s.sigma1_f.assign(n, 1.0);
    s.sigma2_b.assign(n, 1.0);
    s.sigma1_b.assign(n, 1.0);
    s.ftle_f.assign(n, 0.0);
    s.ftle_b.assign(n, 0.0);
    s.xi2.assign(n, {1.0, 0.0});
    s.xi1.assign(n, {0.0, 1.0});
    s.theta2.assign(n, {1.0, 0.0});
    s.theta1.assign(n, {0.0, 1.0});
    s.advected = fmg.positions;
    s.mask = fmg.mask;
    s.degenerate.assign(n, 0);

    parallel_for(n, [&](std::size_t k) {
        if (!s.mask[k]) return;
        const Svd2 d = svd2x2(fmg.gradients[k]);
        s.sigma2_f[k] = d.s2;
        s.sigma1_f[k] = d.s1;
        s.sigma2_b[k] = 1.0 / d.s1;
        s.sigma1_b[k] = 1.0 / d.s2;
        s.xi2[k] = d.xi2;
        s.xi1[k] = d.xi1;
        s.theta2[k] = d.th2;
        s.theta1[k] = d.th1;
        s.degenerate[k] = is_degenerate(d.s2, d.s1) ? 1 : 0;
        if (s.duration > 0.0) {
            s.ftle_f[k] = std::log(d.s2) / s.duration;
            s.ftle_b[k] = std::log(s.sigma2_b[k]) / s.duration;
        }
    });
    return s;
}

inline constexpr std::string_view svd_magic = "LCSSVD01";

/// Named-channel container: magic, grid spec, duration, incompressible (u8),
/// channel count (i64), then per channel a 16-byte zero-padded name followed
/// by nx*ny f64 values.  Vector fields are stored as two channels (name.x,
/// name.y); masks as 0/1 values.
inline void save_svd_fields(const std::filesystem::path& path, const SvdFields& s) {
    binary::Writer w;
    w.magic(svd_magic);
    write_grid_spec(w, s.spec);
    w.f64(s.duration);
    w.u8(s.incompressible);

    std::vector<std::pair<std::string, std::vector<double>>> channels;
    auto scalar = [&](std::string name, const std::vector<double>& v) { channels.emplace_back(std::move(name), v); };
    auto vector = [&](const std::string& name, const std::vector<Vec2>& v) {
        std::vector<double> xs(v.size()), ys(v.size());
        for (std::size_t k = 0; k < v.size(); ++k) {
            xs[k] = v[k].x;
            ys[k] = v[k].y;
        }
        channels.emplace_back(name + ".x", std::move(xs));
        channels.emplace_back(name + ".y", std::move(ys));
    };
    auto flags = [&](std::string name, const std::vector<std::uint8_t>& v) {
        channels.emplace_back(std::move(name), std::vector<double>(v.begin(), v.end()));
    };
    scalar("sigma2_f", s.sigma2_f);
    scalar("sigma1_f", s.sigma1_f);
    scalar("sigma2_b", s.sigma2_b);
    scalar("sigma1_b", s.sigma1_b);
    scalar("ftle_f", s.ftle_f);
    scalar("ftle_b", s.ftle_b);
    vector("xi2", s.xi2);
    vector("xi1", s.xi1);
    vector("theta2", s.theta2);
    vector("theta1", s.theta1);
    vector("x2", s.advected);
    flags("mask", s.mask);
    flags("degenerate", s.degenerate);

    w.i64(static_cast<std::int64_t>(channels.size()));
    for (const auto& [name, values] : channels) {
        w.fixed_string(name, 16);
        w.f64s(values);
    }
    w.save(path);
}

inline SvdFields load_svd_fields(const std::filesystem::path& path) {
    auto r = binary::Reader::from_file(path);
    r.expect_magic(svd_magic);
    SvdFields s;
    s.spec = read_grid_spec(r);
    s.duration = r.f64("duration");
    s.incompressible = r.u8("incompressible") != 0;
    const auto count = r.i64("channel count");
    if (count < 0 || count > 64) throw FormatError(r.where() + "malformed header: bad channel count");
    const std::size_t n = s.spec.size();
    std::vector<std::pair<std::string, std::vector<double>>> channels;
    for (std::int64_t c = 0; c < count; ++c) {
        auto name = r.fixed_string(16, "channel name");
        channels.emplace_back(std::move(name), r.f64s(n, "channel data"));
    }
    if (r.remaining() != 0) throw FormatError(r.where() + "shape mismatch: trailing bytes");
    auto find = [&](const std::string& name) -> const std::vector<double>& {
        for (const auto& [nm, v] : channels)
            if (nm == name) return v;
        throw FormatError(r.where() + "missing channel '" + name + "'");
    };
    auto vec = [&](const std::string& name) {
        const auto& xs = find(name + ".x");
        const auto& ys = find(name + ".y");
        std::vector<Vec2> out(n);
        for (std::size_t k = 0; k < n; ++k) out[k] = {xs[k], ys[k]};
        return out;
    };
    auto flags = [&](const std::string& name) {
        const auto& v = find(name);
        std::vector<std::uint8_t> out(n);
        for (std::size_t k = 0; k < n; ++k) out[k] = v[k] != 0.0 ? 1 : 0;
        return out;
    };
    s.sigma2_f = find("sigma2_f");
    s.sigma1_f = find("sigma1_f");
    s.sigma2_b = find("sigma2_b");
    s.sigma1_b = find("sigma1_b");
    s.ftle_f = find("ftle_f");
    s.ftle_b = find("ftle_b");
    s.xi2 = vec("xi2");
    s.xi1 = vec("xi1");
    s.theta2 = vec("theta2");
    s.theta1 = vec("theta1");
    s.advected = vec("x2");
    s.mask = flags("mask");
    s.degenerate = flags("degenerate");
    return s;
}

} // namespace lcs
