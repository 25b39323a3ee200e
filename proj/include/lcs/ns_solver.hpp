#pragma once

// Pseudo-spectral 2-D Navier-Stokes in vorticity form on [0, 2pi]^2 with
// 2/3-rule de-aliasing, advanced by classical RK4.
//
// Spectra are stored as the non-redundant half of the real-to-complex
// transform, rows ky = 0..N-1 (signed ky = row or row - N), columns
// kx = 0..N/2, normalised so that the physical field is the plain inverse
// sum.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lcs/error.hpp"
#include "lcs/velocity.hpp"

namespace lcs::ns {

using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;

/// Wave-number bookkeeping for an N x N periodic box.
struct Modes {
    std::size_t n = 0;

    std::size_t cols() const noexcept { return n / 2 + 1; }
    std::size_t size() const noexcept { return n * cols(); }
    double kx(std::size_t col) const noexcept { return static_cast<double>(col); }
    double ky(std::size_t row) const noexcept {
        return row <= n / 2 ? static_cast<double>(row) : static_cast<double>(row) - static_cast<double>(n);
    }
    double k2(std::size_t row, std::size_t col) const noexcept { return kx(col) * kx(col) + ky(row) * ky(row); }
    /// Modes with |k| above this radius are truncated.
    double dealias_radius() const noexcept { return (2.0 / 3.0) * (static_cast<double>(n) / 2.0); }
    bool retained(std::size_t row, std::size_t col) const noexcept {
        return std::sqrt(k2(row, col)) <= dealias_radius();
    }
    /// Multiplicity of a half-spectrum column in the full spectrum.
    double weight(std::size_t col) const noexcept { return (col == 0 || col == n / 2) ? 1.0 : 2.0; }
};

/// Owns FFTW plans and aligned buffers for one resolution.
class Transform {
  public:
    explicit Transform(std::size_t n) : modes_{n} {
        if (n < 8 || n % 2 != 0) throw ConfigError("spectral resolution must be even and >= 8");
        real_ = static_cast<double*>(fftw_malloc(sizeof(double) * n * n));
        spec_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * modes_.size()));
        const int ni = static_cast<int>(n);
        forward_ = fftw_plan_dft_r2c_2d(ni, ni, real_, spec_, FFTW_ESTIMATE);
        inverse_ = fftw_plan_dft_c2r_2d(ni, ni, spec_, real_, FFTW_ESTIMATE);
    }
    Transform(const Transform&) = delete;
    Transform& operator=(const Transform&) = delete;
    ~Transform() {
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(inverse_);
        fftw_free(real_);
        fftw_free(spec_);
    }

    const Modes& modes() const noexcept { return modes_; }

    /// Physical values [y][x] from a half spectrum.
    void to_physical(const Spectrum& in, std::vector<double>& out) {
        std::copy(in.begin(), in.end(), reinterpret_cast<Complex*>(spec_));
        fftw_execute(inverse_);
        out.assign(real_, real_ + modes_.n * modes_.n);
    }

    void to_spectral(const std::vector<double>& in, Spectrum& out) {
        std::copy(in.begin(), in.end(), real_);
        fftw_execute(forward_);
        const double scale = 1.0 / static_cast<double>(modes_.n * modes_.n);
        const auto* s = reinterpret_cast<const Complex*>(spec_);
        out.resize(modes_.size());
        for (std::size_t k = 0; k < modes_.size(); ++k) out[k] = s[k] * scale;
    }

  private:
    Modes modes_;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
};

/// Makes the kx = 0 and kx = N/2 columns conjugate-symmetric in ky and the
/// self-conjugate modes real.
inline void enforce_hermitian(const Modes& m, Spectrum& s) {
    for (std::size_t col : {std::size_t{0}, m.n / 2}) {
        for (std::size_t row = 1; row < m.n / 2; ++row) {
            Complex& a = s[row * m.cols() + col];
            Complex& b = s[(m.n - row) * m.cols() + col];
            const Complex avg = 0.5 * (a + std::conj(b));
            a = avg;
            b = std::conj(avg);
        }
        for (std::size_t row : {std::size_t{0}, m.n / 2}) {
            Complex& a = s[row * m.cols() + col];
            a = {a.real(), 0.0};
        }
    }
}

inline void dealias(const Modes& m, Spectrum& s) {
    for (std::size_t row = 0; row < m.n; ++row)
        for (std::size_t col = 0; col < m.cols(); ++col)
            if (!m.retained(row, col)) s[row * m.cols() + col] = 0.0;
}

/// Largest deviation from conjugate symmetry over the self-paired columns.
inline double hermitian_defect(const Modes& m, const Spectrum& s) {
    double worst = 0.0;
    for (std::size_t col : {std::size_t{0}, m.n / 2})
        for (std::size_t row = 0; row < m.n; ++row) {
            const std::size_t mirror = row == 0 ? 0 : m.n - row;
            worst = std::max(worst, std::abs(s[row * m.cols() + col] - std::conj(s[mirror * m.cols() + col])));
        }
    return worst;
}

struct Band {
    double k_lo = 3.5;
    double k_hi = 4.5;
};

namespace detail {
inline double unit_uniform(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}
} // namespace detail

/// Band-limited spectral field of fixed modulus and uniformly random phases,
/// supported on k_lo < |k| < k_hi and reproducible from (seed, stream).
inline Spectrum random_forcing(std::size_t n, Band band, double amplitude, std::uint64_t seed,
                               std::uint64_t stream = 0) {
    const Modes m{n};
    if (!(band.k_lo > 0.0) || !(band.k_hi > band.k_lo) || !(band.k_hi < m.dealias_radius()))
        throw ConfigError("forcing band must satisfy 0 < k_lo < k_hi < (2/3)(N/2)");
    Spectrum s(m.size(), 0.0);
    std::mt19937_64 gen(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
    std::size_t count = 0;
    for (std::size_t row = 0; row < m.n; ++row) {
        for (std::size_t col = 0; col < m.cols(); ++col) {
            const double k = std::sqrt(m.k2(row, col));
            const double phase = 2.0 * std::numbers::pi * detail::unit_uniform(gen);
            if (!(k > band.k_lo && k < band.k_hi)) continue;
            ++count;
            s[row * m.cols() + col] = std::polar(amplitude, phase);
        }
    }
    if (count == 0) throw ConfigError("forcing band contains no modes at this resolution");
    for (std::size_t row = m.n / 2 + 1; row < m.n; ++row) s[row * m.cols()] = std::conj(s[(m.n - row) * m.cols()]);
    enforce_hermitian(m, s);
    return s;
}

struct ForcingParams {
    Band band{};
    double amplitude = 0.0;
    std::uint64_t seed = 1;
    /// Phases are redrawn every this many time units.
    double refresh_interval = 1.0;
};

struct SpectralState {
    std::size_t n = 128;
    Spectrum omega_hat;
    double nu = 1e-4;
    double time = 0.0;
    ForcingParams forcing;
};

/// Fully-developed-state helpers and the RK4 stepper for one resolution.
class Solver {
  public:
    explicit Solver(std::size_t n) : fft_(n) {}

    const Modes& modes() const noexcept { return fft_.modes(); }

    /// Physical velocity (u, v) on the N x N node grid, rows = y.
    void velocity(const SpectralState& s, std::vector<double>& u, std::vector<double>& v) {
        Spectrum uh, vh;
        velocity_spectra(s.omega_hat, uh, vh);
        fft_.to_physical(uh, u);
        fft_.to_physical(vh, v);
    }

    /// Velocity on a finer m x m node grid by zero-padding the spectrum; the
    /// values are the same trigonometric polynomial sampled more densely.
    void velocity(const SpectralState& s, Transform& fine, std::vector<double>& u, std::vector<double>& v) {
        const Modes& m = modes();
        const Modes& f = fine.modes();
        if (f.n == m.n) return velocity(s, u, v);
        if (f.n < m.n) throw ConfigError("output resolution must not be below the solver resolution");
        Spectrum uh, vh;
        velocity_spectra(s.omega_hat, uh, vh);
        Spectrum up(f.size(), 0.0), vp(f.size(), 0.0);
        for (std::size_t row = 0; row < m.n; ++row) {
            const double ky = m.ky(row);
            const std::size_t frow = ky >= 0.0 ? static_cast<std::size_t>(ky) : static_cast<std::size_t>(ky + static_cast<double>(f.n));
            for (std::size_t col = 0; col < m.cols(); ++col) {
                if (!m.retained(row, col)) continue;
                up[frow * f.cols() + col] = uh[row * m.cols() + col];
                vp[frow * f.cols() + col] = vh[row * m.cols() + col];
            }
        }
        fine.to_physical(up, u);
        fine.to_physical(vp, v);
    }

    void vorticity(const SpectralState& s, std::vector<double>& w) { fft_.to_physical(s.omega_hat, w); }

    /// Mean kinetic energy 1/2 <|v|^2>.
    double energy(const SpectralState& s) const {
        const auto& m = modes();
        double e = 0.0;
        for (std::size_t row = 0; row < m.n; ++row)
            for (std::size_t col = 0; col < m.cols(); ++col) {
                const double k2 = m.k2(row, col);
                if (k2 == 0.0) continue;
                e += m.weight(col) * std::norm(s.omega_hat[row * m.cols() + col]) / k2;
            }
        return 0.5 * e;
    }

    /// Max |i k . v_hat| after a round trip of the velocity through physical space.
    double max_divergence(const SpectralState& s) {
        std::vector<double> u, v;
        velocity(s, u, v);
        Spectrum uh, vh;
        fft_.to_spectral(u, uh);
        fft_.to_spectral(v, vh);
        const auto& m = modes();
        double worst = 0.0;
        for (std::size_t row = 0; row < m.n; ++row)
            for (std::size_t col = 0; col < m.cols(); ++col) {
                const std::size_t k = row * m.cols() + col;
                worst = std::max(worst, std::abs(Complex(0, m.kx(col)) * uh[k] + Complex(0, m.ky(row)) * vh[k]));
            }
        return worst;
    }

    double max_speed(const SpectralState& s) {
        std::vector<double> u, v;
        velocity(s, u, v);
        double best = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) best = std::max(best, std::hypot(u[k], v[k]));
        return best;
    }

    /// d(omega_hat)/dt = -(v . grad omega)^ - nu |k|^2 omega_hat + force.
    void rhs(const Spectrum& w, const Spectrum& force, double nu, Spectrum& out) {
        const auto& m = modes();
        Spectrum uh, vh, wx(m.size()), wy(m.size());
        velocity_spectra(w, uh, vh);
        for (std::size_t row = 0; row < m.n; ++row)
            for (std::size_t col = 0; col < m.cols(); ++col) {
                const std::size_t k = row * m.cols() + col;
                wx[k] = Complex(0, m.kx(col)) * w[k];
                wy[k] = Complex(0, m.ky(row)) * w[k];
            }
        fft_.to_physical(uh, u_);
        fft_.to_physical(vh, v_);
        fft_.to_physical(wx, wx_);
        fft_.to_physical(wy, wy_);
        for (std::size_t k = 0; k < u_.size(); ++k) u_[k] = u_[k] * wx_[k] + v_[k] * wy_[k];
        fft_.to_spectral(u_, out);
        for (std::size_t row = 0; row < m.n; ++row)
            for (std::size_t col = 0; col < m.cols(); ++col) {
                const std::size_t k = row * m.cols() + col;
                if (!m.retained(row, col)) {
                    out[k] = 0.0;
                    continue;
                }
                out[k] = -out[k] - nu * m.k2(row, col) * w[k] + (force.empty() ? Complex{} : force[k]);
            }
    }

    /// One classical RK4 step with a frozen forcing spectrum.
    void step(SpectralState& s, double dt, const Spectrum& force = {}) {
        const auto& m = modes();
        const std::size_t sz = m.size();
        Spectrum k1(sz), k2(sz), k3(sz), k4(sz), tmp(sz);
        rhs(s.omega_hat, force, s.nu, k1);
        for (std::size_t k = 0; k < sz; ++k) tmp[k] = s.omega_hat[k] + 0.5 * dt * k1[k];
        rhs(tmp, force, s.nu, k2);
        for (std::size_t k = 0; k < sz; ++k) tmp[k] = s.omega_hat[k] + 0.5 * dt * k2[k];
        rhs(tmp, force, s.nu, k3);
        for (std::size_t k = 0; k < sz; ++k) tmp[k] = s.omega_hat[k] + dt * k3[k];
        rhs(tmp, force, s.nu, k4);
        for (std::size_t k = 0; k < sz; ++k)
            s.omega_hat[k] += (dt / 6.0) * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
        dealias(m, s.omega_hat);
        enforce_hermitian(m, s.omega_hat);
        s.omega_hat[0] = 0.0;
        for (const auto& c : s.omega_hat)
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
                throw NumericalError("vorticity spectrum became non-finite at t=" + std::to_string(s.time));
        s.time += dt;
    }

  private:
    void velocity_spectra(const Spectrum& w, Spectrum& uh, Spectrum& vh) const {
        const auto& m = modes();
        uh.assign(m.size(), 0.0);
        vh.assign(m.size(), 0.0);
        for (std::size_t row = 0; row < m.n; ++row)
            for (std::size_t col = 0; col < m.cols(); ++col) {
                const double k2 = m.k2(row, col);
                if (k2 == 0.0) continue;
                const std::size_t k = row * m.cols() + col;
                const Complex psi = w[k] / k2;
                uh[k] = Complex(0, m.ky(row)) * psi;
                vh[k] = Complex(0, -m.kx(col)) * psi;
            }
    }

    Transform fft_;
    std::vector<double> u_, v_, wx_, wy_;
};

/// Run parameters for turbulence generation.  The solver runs for spin_up
/// before recording; recorded snapshot times start at 0.
struct TurbulenceConfig {
    std::size_t n = 128;
    double nu = 1e-4;
    /// Upper bound on the time step.
    double dt = 0.02;
    double cfl = 0.5;
    std::size_t cfl_refresh_steps = 100;
    double spin_up = 20.0;
    double window = 5.0;
    double snapshot_interval = 0.1;
    std::uint64_t seed = 1;
    Band forcing_band{};
    double forcing_amplitude = 0.1;
    double forcing_refresh = 1.0;
    Band initial_band{1.5, 8.5};
    double initial_energy = 0.5;
    /// Snapshots are stored on a grid this many times finer than the solver
    /// grid, which lowers the interpolation error of the stored field,
    /// notably its divergence.
    std::size_t record_factor = 4;

    std::size_t output_n() const noexcept { return record_factor * n; }

    /// The large-scale reference setup: 512 modes, nu = 1e-5 over [0, 100]
    /// with the last half recorded.
    static TurbulenceConfig reference_scale() {
        TurbulenceConfig c;
        c.n = 512;
        c.nu = 1e-5;
        c.spin_up = 50.0;
        c.window = 50.0;
        c.dt = 0.005;
        return c;
    }

    std::size_t snapshot_count() const {
        return static_cast<std::size_t>(std::llround(window / snapshot_interval)) + 1;
    }

    void validate() const {
        if (n < 8 || n % 2 != 0) throw ConfigError("turbulence.n must be even and >= 8");
        if (!(nu >= 0.0)) throw ConfigError("turbulence.nu must be nonnegative");
        if (!(dt > 0.0) || !(cfl > 0.0)) throw ConfigError("turbulence.dt and cfl must be positive");
        if (!(spin_up >= 0.0) || !(window > 0.0) || !(snapshot_interval > 0.0))
            throw ConfigError("turbulence times must be positive");
        const double ratio = window / snapshot_interval;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
            throw ConfigError("turbulence.window must be a multiple of snapshot_interval");
        if (!(forcing_refresh > 0.0)) throw ConfigError("turbulence.forcing_refresh must be positive");
        if (record_factor == 0) throw ConfigError("turbulence.record_factor must be at least 1");
        const double radius = Modes{n}.dealias_radius();
        for (const Band& b : {forcing_band, initial_band})
            if (!(b.k_lo > 0.0) || !(b.k_hi > b.k_lo) || !(b.k_hi < radius))
                throw ConfigError("wave-number bands must satisfy 0 < k_lo < k_hi < (2/3)(N/2) = " +
                                  std::to_string(radius));
    }
};

/// Seeded random vorticity on an annulus of wave numbers with the requested
/// mean kinetic energy.
inline SpectralState initial_state(const TurbulenceConfig& cfg) {
    SpectralState s;
    s.n = cfg.n;
    s.nu = cfg.nu;
    s.forcing = {cfg.forcing_band, cfg.forcing_amplitude, cfg.seed, cfg.forcing_refresh};
    s.omega_hat = random_forcing(cfg.n, cfg.initial_band, 1.0, cfg.seed, 0xFFFF'FFFFULL);
    Solver solver(cfg.n);
    const double e = solver.energy(s);
    if (e > 0.0)
        for (auto& c : s.omega_hat) c *= std::sqrt(cfg.initial_energy / e);
    return s;
}

struct TurbulenceRun {
    std::vector<double> times;
    std::vector<double> u, v;
    std::size_t steps = 0;
    double final_energy = 0.0;
    double max_divergence = 0.0;
    std::size_t n = 0;

    GriddedField field() const {
        GridSpec layout;
        layout.x_min = layout.y_min = 0.0;
        layout.x_max = layout.y_max = 2.0 * std::numbers::pi;
        layout.nx = layout.ny = n;
        layout.periodic_x = layout.periodic_y = true;
        return GriddedField(layout, times, u, v);
    }
};

/// Spin up, then record velocity snapshots at fixed intervals over the
/// window.  The step is dt = min(cfg.dt, cfl * dx / max|v|), refreshed every
/// cfl_refresh_steps and shortened to land on snapshot times.
inline TurbulenceRun run_turbulence(const TurbulenceConfig& cfg,
                                    const std::function<void(double)>& progress = {}) {
    cfg.validate();
    SpectralState s = initial_state(cfg);
    Solver solver(cfg.n);
    const double dx = 2.0 * std::numbers::pi / static_cast<double>(cfg.n);

    std::uint64_t forcing_epoch = 0;
    Spectrum force = cfg.forcing_amplitude > 0.0
                         ? random_forcing(cfg.n, cfg.forcing_band, cfg.forcing_amplitude, cfg.seed, forcing_epoch)
                         : Spectrum{};

    TurbulenceRun run;
    run.n = cfg.output_n();
    std::optional<Transform> fine;
    if (run.n != cfg.n) fine.emplace(run.n);
    double dt_cfl = cfg.dt;
    std::size_t since_refresh = cfg.cfl_refresh_steps;

    auto advance_to = [&](double target) {
        while (s.time < target - 1e-12) {
            if (since_refresh >= cfg.cfl_refresh_steps) {
                const double vmax = solver.max_speed(s);
                if (!std::isfinite(vmax))
                    throw NumericalError("velocity became non-finite at t=" + std::to_string(s.time));
                dt_cfl = vmax > 0.0 ? std::min(cfg.dt, cfg.cfl * dx / vmax) : cfg.dt;
                if (dt_cfl < 1e-9 * cfg.dt)
                    throw NumericalError("CFL time step collapsed to " + std::to_string(dt_cfl) + " (max speed " +
                                         std::to_string(vmax) + "); treating the run as non-finite");
                since_refresh = 0;
            }
            const auto epoch = static_cast<std::uint64_t>(std::floor(s.time / cfg.forcing_refresh + 1e-9));
            if (cfg.forcing_amplitude > 0.0 && epoch != forcing_epoch) {
                forcing_epoch = epoch;
                force = random_forcing(cfg.n, cfg.forcing_band, cfg.forcing_amplitude, cfg.seed, forcing_epoch);
            }
            // Never step across a forcing refresh or the target.
            const double next_refresh = static_cast<double>(forcing_epoch + 1) * cfg.forcing_refresh;
            double dt = std::min({dt_cfl, target - s.time, next_refresh - s.time});
            if (target - (s.time + dt) < 1e-9 * dt_cfl) dt = target - s.time;
            solver.step(s, dt, force);
            if (std::abs(s.time - target) < 1e-12) s.time = target;
            ++since_refresh;
            ++run.steps;
        }
    };

    advance_to(cfg.spin_up);
    const std::size_t count = cfg.snapshot_count();
    for (std::size_t k = 0; k < count; ++k) {
        const double target = cfg.spin_up + static_cast<double>(k) * cfg.snapshot_interval;
        advance_to(target);
        s.time = target;
        std::vector<double> u, v;
        if (fine)
            solver.velocity(s, *fine, u, v);
        else
            solver.velocity(s, u, v);
        run.times.push_back(static_cast<double>(k) * cfg.snapshot_interval);
        run.u.insert(run.u.end(), u.begin(), u.end());
        run.v.insert(run.v.end(), v.begin(), v.end());
        run.max_divergence = std::max(run.max_divergence, solver.max_divergence(s));
        if (progress) progress(run.times.back());
    }
    run.final_energy = solver.energy(s);
    return run;
}

/// Runs the solver and writes the recorded snapshots as a grid file.
inline TurbulenceRun generate_turbulence(const TurbulenceConfig& cfg, const std::filesystem::path& out) {
    auto run = run_turbulence(cfg);
    save_gridded_field(out, run.field());
    return run;
}

} // namespace lcs::ns
