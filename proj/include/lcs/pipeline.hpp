#pragma once

// Batch pipeline: field -> flow map -> SVD -> seeds -> LCS -> comparisons.
// Every command writes its effective configuration next to its outputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcs/config.hpp"
#include "lcs/curve.hpp"
#include "lcs/error.hpp"
#include "lcs/flow_map.hpp"
#include "lcs/lcs_tracking.hpp"
#include "lcs/ns_solver.hpp"
#include "lcs/parallel.hpp"
#include "lcs/seeding.hpp"
#include "lcs/shrinkline.hpp"
#include "lcs/svd.hpp"
#include "lcs/velocity.hpp"

namespace lcs {

struct PipelineConfig {
    // duffing | zero | uniform | saddle | grid
    std::string field = "duffing";
    std::string field_file;
    Vec2 uniform_velocity{1.0, 0.0};

    double t1 = 0.0;
    double t2 = 2.5;
    double t = 0.0;

    GridSpec grid{-3.0, 3.0, -3.0, 3.0, 301, 301, false, false};

    GradientMethod method = GradientMethod::aux_grid;
    double rho = 0.0;
    double tol = 1e-8;
    bool incompressible = true;

    SeedOptions seeding{};
    double segment_length = 0.1;
    RefineOptions refine{};

    std::size_t compare_seeds = 5;
    std::size_t compare_samples = 201;
    double shrink_step = 0.0;
    bool compare_self = false;
    // Forward FTLE evaluated by integration at each sample instead of
    // interpolated from the grid.
    bool compare_exact = true;
    // Samples at equal arc length from the seed instead of equal fractions.
    bool compare_from_seed = true;

    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 1;
    unsigned threads = 0;

    ns::TurbulenceConfig turbulence{};
    std::string turbulence_file = "turbulence.grid";
};

namespace detail {

inline GridSpec read_grid(Config& c, GridSpec g) {
    g.x_min = c.get_double("grid.x_min", g.x_min);
    g.x_max = c.get_double("grid.x_max", g.x_max);
    g.y_min = c.get_double("grid.y_min", g.y_min);
    g.y_max = c.get_double("grid.y_max", g.y_max);
    g.nx = c.get_uint("grid.nx", g.nx);
    g.ny = c.get_uint("grid.ny", g.ny);
    g.periodic_x = c.get_bool("grid.periodic_x", g.periodic_x);
    g.periodic_y = c.get_bool("grid.periodic_y", g.periodic_y);
    try {
        g.validate();
    } catch (const ConfigError& e) {
        throw c.error_at("grid.nx", e.what());
    }
    return g;
}

} // namespace detail

/// Reads every known key (falling back to defaults), validates, and rejects
/// unknown keys.  Grid-file fields are checked against the grid in
/// `check_field_domain` once the file is loaded.
inline PipelineConfig read_pipeline_config(Config& c) {
    PipelineConfig p;
    p.field = c.get_string("field.source", p.field);
    p.field_file = c.get_string("field.file", p.field_file);
    p.uniform_velocity.x = c.get_double("field.u", p.uniform_velocity.x);
    p.uniform_velocity.y = c.get_double("field.v", p.uniform_velocity.y);
    if (p.field != "duffing" && p.field != "zero" && p.field != "uniform" && p.field != "saddle" && p.field != "grid")
        throw c.error_at("field.source", "unknown field source '" + p.field +
                                             "' (expected duffing, zero, uniform, saddle or grid)");
    if (p.field == "grid" && p.field_file.empty())
        throw c.error_at("field.source", "field.source = grid needs field.file");

    p.t1 = c.get_double("window.t1", p.t1);
    p.t2 = c.get_double("window.t2", p.t2);
    p.t = c.get_double("window.t", p.t1);
    if (!(p.t2 > p.t1)) throw c.error_at("window.t2", "window needs t1 < t2");
    if (p.t < p.t1 || p.t > p.t2) throw c.error_at("window.t", "t must lie in [t1, t2]");

    p.grid = detail::read_grid(c, p.grid);

    const std::string method = c.get_string("flow_map.method", "aux");
    if (method == "aux")
        p.method = GradientMethod::aux_grid;
    else if (method == "main")
        p.method = GradientMethod::main_grid;
    else
        throw c.error_at("flow_map.method", "method must be 'aux' or 'main', got '" + method + "'");
    p.rho = c.get_double("flow_map.rho", p.rho);
    p.tol = c.get_double("flow_map.tol", p.tol);
    p.incompressible = c.get_bool("flow_map.incompressible", p.incompressible);
    if (!(p.tol > 0.0)) throw c.error_at("flow_map.tol", "tolerance must be positive");
    if (p.rho < 0.0) throw c.error_at("flow_map.rho", "rho must be nonnegative (0 selects the default)");

    p.seeding.radius = c.get_double("seeding.radius", p.seeding.radius);
    p.seeding.percentile_floor = c.get_double("seeding.percentile_floor", p.seeding.percentile_floor);
    p.segment_length = c.get_double("seeding.length", p.segment_length);
    if (!(p.seeding.radius > 0.0)) throw c.error_at("seeding.radius", "radius must be positive");
    if (!(p.segment_length > 0.0)) throw c.error_at("seeding.length", "segment length must be positive");
    if (p.seeding.percentile_floor > 100.0)
        throw c.error_at("seeding.percentile_floor", "percentile must not exceed 100");

    // Gaps are bounded by the seed grid spacing unless set explicitly.
    p.refine.delta_max = c.get_double("refine.delta_max", p.grid.h());
    p.refine.substeps = c.get_uint("refine.substeps", p.refine.substeps);
    p.refine.max_turn_deg = c.get_double("refine.max_turn_deg", p.refine.max_turn_deg);
    p.refine.budget = c.get_uint("refine.budget", p.refine.budget);
    if (!(p.refine.delta_max > 0.0)) throw c.error_at("refine.delta_max", "delta_max must be positive");
    if (p.refine.substeps == 0) throw c.error_at("refine.substeps", "substeps must be at least 1");
    if (p.refine.budget < 3) throw c.error_at("refine.budget", "budget must be at least 3");

    p.compare_seeds = c.get_uint("compare.seeds", p.compare_seeds);
    p.compare_samples = c.get_uint("compare.samples", p.compare_samples);
    p.shrink_step = c.get_double("compare.step", p.shrink_step);
    p.compare_self = c.get_bool("compare.self", p.compare_self);
    const std::string metric = c.get_string("compare.metric", "exact");
    if (metric != "exact" && metric != "grid") throw c.error_at("compare.metric", "metric must be 'exact' or 'grid'");
    p.compare_exact = metric == "exact";
    const std::string match = c.get_string("compare.match", "seed");
    if (match != "seed" && match != "fraction") throw c.error_at("compare.match", "match must be 'seed' or 'fraction'");
    p.compare_from_seed = match == "seed";
    if (p.compare_samples < 2) throw c.error_at("compare.samples", "need at least 2 samples");

    p.output_dir = c.get_string("run.output", p.output_dir.string());
    p.seed = c.get_uint("run.seed", p.seed);
    p.threads = static_cast<unsigned>(c.get_uint("run.threads", p.threads));

    auto& tc = p.turbulence;
    tc.n = c.get_uint("turbulence.n", tc.n);
    tc.nu = c.get_double("turbulence.nu", tc.nu);
    tc.dt = c.get_double("turbulence.dt", tc.dt);
    tc.cfl = c.get_double("turbulence.cfl", tc.cfl);
    tc.spin_up = c.get_double("turbulence.spin_up", tc.spin_up);
    tc.window = c.get_double("turbulence.window", tc.window);
    tc.snapshot_interval = c.get_double("turbulence.snapshot_interval", tc.snapshot_interval);
    tc.forcing_band.k_lo = c.get_double("turbulence.forcing_k_lo", tc.forcing_band.k_lo);
    tc.forcing_band.k_hi = c.get_double("turbulence.forcing_k_hi", tc.forcing_band.k_hi);
    tc.forcing_amplitude = c.get_double("turbulence.forcing_amplitude", tc.forcing_amplitude);
    tc.forcing_refresh = c.get_double("turbulence.forcing_refresh", tc.forcing_refresh);
    tc.initial_energy = c.get_double("turbulence.initial_energy", tc.initial_energy);
    tc.record_factor = c.get_uint("turbulence.record_factor", tc.record_factor);
    tc.seed = p.seed;
    p.turbulence_file = c.get_string("turbulence.output", p.turbulence_file);
    try {
        tc.validate();
    } catch (const ConfigError& e) {
        throw c.error_at("turbulence.n", e.what());
    }

    c.reject_unknown();
    return p;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path,
                                           const std::vector<std::string>& overrides = {}) {
    Config c = Config::load(path);
    for (const auto& o : overrides) c.set(o);
    return read_pipeline_config(c);
}

/// Every setting, in a form `read_pipeline_config` reproduces exactly.
inline std::string effective_config(const PipelineConfig& p) {
    ConfigWriter w;
    w.section("field");
    w.put("source", p.field);
    if (!p.field_file.empty()) w.put("file", p.field_file);
    w.put("u", p.uniform_velocity.x);
    w.put("v", p.uniform_velocity.y);
    w.section("window");
    w.put("t1", p.t1);
    w.put("t2", p.t2);
    w.put("t", p.t);
    w.section("grid");
    w.put("x_min", p.grid.x_min);
    w.put("x_max", p.grid.x_max);
    w.put("y_min", p.grid.y_min);
    w.put("y_max", p.grid.y_max);
    w.put("nx", std::uint64_t{p.grid.nx});
    w.put("ny", std::uint64_t{p.grid.ny});
    w.put("periodic_x", p.grid.periodic_x);
    w.put("periodic_y", p.grid.periodic_y);
    w.section("flow_map");
    w.put("method", std::string(to_string(p.method)));
    w.put("rho", p.rho);
    w.put("tol", p.tol);
    w.put("incompressible", p.incompressible);
    w.section("seeding");
    w.put("radius", p.seeding.radius);
    w.put("percentile_floor", p.seeding.percentile_floor);
    w.put("length", p.segment_length);
    w.section("refine");
    w.put("delta_max", p.refine.delta_max);
    w.put("substeps", std::uint64_t{p.refine.substeps});
    w.put("max_turn_deg", p.refine.max_turn_deg);
    w.put("budget", std::uint64_t{p.refine.budget});
    w.section("compare");
    w.put("seeds", std::uint64_t{p.compare_seeds});
    w.put("samples", std::uint64_t{p.compare_samples});
    w.put("step", p.shrink_step);
    w.put("self", p.compare_self);
    w.put("metric", p.compare_exact ? "exact" : "grid");
    w.put("match", p.compare_from_seed ? "seed" : "fraction");
    w.section("run");
    w.put("output", p.output_dir.string());
    w.put("seed", p.seed);
    w.put("threads", std::uint64_t{p.threads});
    w.section("turbulence");
    const auto& tc = p.turbulence;
    w.put("n", std::uint64_t{tc.n});
    w.put("nu", tc.nu);
    w.put("dt", tc.dt);
    w.put("cfl", tc.cfl);
    w.put("spin_up", tc.spin_up);
    w.put("window", tc.window);
    w.put("snapshot_interval", tc.snapshot_interval);
    w.put("forcing_k_lo", tc.forcing_band.k_lo);
    w.put("forcing_k_hi", tc.forcing_band.k_hi);
    w.put("forcing_amplitude", tc.forcing_amplitude);
    w.put("forcing_refresh", tc.forcing_refresh);
    w.put("initial_energy", tc.initial_energy);
    w.put("record_factor", std::uint64_t{tc.record_factor});
    w.put("output", p.turbulence_file);
    return w.str();
}

/// Checks that the grid and window lie inside the data of a gridded field.
inline void check_field_domain(const PipelineConfig& p, const VelocityField& field) {
    const auto* g = field.gridded();
    if (!g) {
        if (p.grid.periodic_x || p.grid.periodic_y)
            throw ConfigError("periodic grid axes need a periodic grid-file field");
        return;
    }
    const GridSpec& L = g->layout();
    auto axis = [](const char* name, double lo, double hi, bool periodic, double f_lo, double f_hi,
                   bool f_periodic) {
        const double eps = 1e-9 * std::max(1.0, f_hi - f_lo);
        if (periodic) {
            if (!f_periodic) throw ConfigError(std::string("grid is periodic in ") + name + " but the field is not");
            if (std::abs(lo - f_lo) > eps || std::abs(hi - f_hi) > eps)
                throw ConfigError(std::string("periodic grid must span the field period in ") + name);
        } else if (!f_periodic && (lo < f_lo - eps || hi > f_hi + eps)) {
            throw ConfigError(std::string("grid extends outside the field domain in ") + name);
        }
    };
    axis("x", p.grid.x_min, p.grid.x_max, p.grid.periodic_x, L.x_min, L.x_max, L.periodic_x);
    axis("y", p.grid.y_min, p.grid.y_max, p.grid.periodic_y, L.y_min, L.y_max, L.periodic_y);
    if (!g->contains_time(p.t1) || !g->contains_time(p.t2))
        throw ConfigError("time window [" + format_double(p.t1) + ", " + format_double(p.t2) +
                          "] is outside the field's time axis");
}

inline VelocityField make_field(const PipelineConfig& p) {
    if (p.field == "duffing") return AnalyticField::duffing();
    if (p.field == "zero") return AnalyticField::zero();
    if (p.field == "uniform") return AnalyticField::uniform(p.uniform_velocity);
    if (p.field == "saddle") return AnalyticField::linear({1.0, 0.0, 0.0, -1.0});
    return load_gridded_field(p.field_file);
}

namespace detail {

inline void prepare_output(const PipelineConfig& p) {
    std::error_code ec;
    std::filesystem::create_directories(p.output_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + p.output_dir.string() + "': " + ec.message());
    write_text_file(p.output_dir / "effective.cfg", effective_config(p));
}

inline std::string json_text(const nlohmann::json& j) { return j.dump(1) + "\n"; }

} // namespace detail

/// Flow map with deformation gradients over [t_a, t_b] on the configured grid.
inline FlowMapGrid flow_map_for(const PipelineConfig& p, const VelocityField& field, double t_a, double t_b) {
    if (p.method == GradientMethod::aux_grid) return deformation_gradient_aux(field, p.grid, t_a, t_b, p.tol, p.rho);
    return deformation_gradient_main(compute_flow_map_grid(field, p.grid, t_a, t_b, p.tol));
}

/// i, j, x, y, ftle_forward, ftle_backward (at the advected point x2, y2),
/// sigma2_f, sigma1_f, valid.
inline std::string ftle_csv(const SvdFields& s) {
    std::string out = "i,j,x,y,ftle_forward,x2,y2,ftle_backward,sigma2_f,sigma1_f,valid\n";
    for (std::size_t j = 0; j < s.spec.ny; ++j) {
        for (std::size_t i = 0; i < s.spec.nx; ++i) {
            const std::size_t k = s.spec.index(i, j);
            const Vec2 x = s.spec.point(k);
            out += std::to_string(i) + ',' + std::to_string(j) + ',' + format_double(x.x) + ',' + format_double(x.y) +
                   ',' + format_double(s.ftle_f[k]) + ',' + format_double(s.advected[k].x) + ',' +
                   format_double(s.advected[k].y) + ',' + format_double(s.ftle_b[k]) + ',' +
                   format_double(s.sigma2_f[k]) + ',' + format_double(s.sigma1_f[k]) + ',' +
                   (s.mask[k] ? "1" : "0") + '\n';
        }
    }
    return out;
}

struct FtleResult {
    VelocityField field;
    FlowMapGrid flow_map;
    SvdFields svd;
};

inline FtleResult run_ftle(const PipelineConfig& p) {
    set_max_threads(p.threads);
    VelocityField field = make_field(p);
    check_field_domain(p, field);
    auto fmg = flow_map_for(p, field, p.t1, p.t2);
    auto svd = analyze(fmg, p.incompressible);
    return {std::move(field), std::move(fmg), std::move(svd)};
}

inline FtleResult cmd_ftle(const PipelineConfig& p) {
    detail::prepare_output(p);
    auto r = run_ftle(p);
    save_flow_map(p.output_dir / "flowmap.bin", r.flow_map);
    save_svd_fields(p.output_dir / "svd.bin", r.svd);
    write_text_file(p.output_dir / "ftle.csv", ftle_csv(r.svd));
    return r;
}

struct SeedsResult {
    FtleResult ftle;
    SeedSelection seeds;
};

inline void write_seeds(const PipelineConfig& p, const SeedSelection& sel) {
    std::vector<SeedPoint> all = sel.attracting;
    all.insert(all.end(), sel.repelling.begin(), sel.repelling.end());
    write_text_file(p.output_dir / "seeds.txt", seeds_to_text(all));
    nlohmann::json j = {{"extrema_found", sel.extrema_found},
                        {"dropped_degenerate", sel.dropped_degenerate},
                        {"radius", p.seeding.radius},
                        {"attracting", seeds_to_json(sel.attracting)},
                        {"repelling", seeds_to_json(sel.repelling)}};
    write_text_file(p.output_dir / "seeds.json", detail::json_text(j));
}

inline SeedsResult cmd_seeds(const PipelineConfig& p) {
    SeedsResult r{cmd_ftle(p), {}};
    r.seeds = select_seeds(r.ftle.svd, p.seeding);
    write_seeds(p, r.seeds);
    return r;
}

struct ExtractResult {
    SeedsResult seeds;
    Extraction attracting;
    Extraction repelling;
};

inline nlohmann::json failures_json(const std::vector<SeedFailure>& f) {
    auto arr = nlohmann::json::array();
    for (const auto& e : f) arr.push_back({{"seed_id", e.seed_id}, {"reason", e.reason}});
    return arr;
}

inline ExtractResult cmd_extract(const PipelineConfig& p) {
    ExtractResult r{cmd_seeds(p), {}, {}};
    const TimeWindow window{p.t1, p.t2};
    const auto& field = r.seeds.ftle.field;
    r.attracting = extract_attracting_lcs(field, std::span<const SeedPoint>(r.seeds.seeds.attracting), window, p.t,
                                          p.segment_length, p.refine, p.tol);
    r.repelling = extract_repelling_lcs(field, std::span<const SeedPoint>(r.seeds.seeds.repelling), window, p.t,
                                        p.segment_length, p.refine, p.tol);
    write_text_file(p.output_dir / "attracting.json", curves_to_json(r.attracting.curves));
    write_text_file(p.output_dir / "attracting.csv", curves_to_csv(r.attracting.curves));
    write_text_file(p.output_dir / "repelling.json", curves_to_json(r.repelling.curves));
    write_text_file(p.output_dir / "repelling.csv", curves_to_csv(r.repelling.curves));
    auto stats = [](const Extraction& e) {
        std::size_t points = 0, truncated = 0, clipped = 0;
        double gap = 0.0;
        for (const auto& c : e.curves) {
            points += c.points.size();
            truncated += c.truncated;
            clipped += c.clipped;
            gap = std::max(gap, c.max_gap);
        }
        return nlohmann::json{{"curves", e.curves.size()}, {"points", points},       {"truncated", truncated},
                              {"clipped", clipped},        {"max_gap", gap},         {"failures", failures_json(e.failures)}};
    };
    nlohmann::json summary = {{"time", p.t},
                              {"delta_max", p.refine.delta_max},
                              {"attracting", stats(r.attracting)},
                              {"repelling", stats(r.repelling)}};
    write_text_file(p.output_dir / "extract.json", detail::json_text(summary));
    return r;
}

struct CompareEntry {
    std::size_t seed_id = 0;
    Vec2 seed;
    CurveComparison comparison;
};

struct CompareResult {
    ExtractResult extract;
    std::vector<CompareEntry> entries;
    std::vector<LineFieldCurve> shrink_lines;
    std::vector<MaterialCurve> shrink_advected;
    std::vector<SeedFailure> failures;
};

/// Matched-seed comparison at time t: the repelling LCS (backward-advected
/// segment) against the shrink line through the same seed at t1, advected
/// forward to t.  The metric is the forward FTLE over [t, t2].
inline CompareResult cmd_compare(const PipelineConfig& p) {
    CompareResult r{cmd_extract(p), {}, {}, {}, {}};
    const auto& svd = r.extract.seeds.ftle.svd;
    const auto& field = r.extract.seeds.ftle.field;

    std::function<double(Vec2)> metric;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (p.compare_exact) {
        const double rho = p.rho > 0.0 ? p.rho : default_aux_offset(p.grid);
        metric = [&field, &p, rho, nan](Vec2 x) {
            const auto pg = aux_gradient_at(field, x, p.t, p.t2, p.tol, rho);
            return pg.ok ? ftle(svd2x2(pg.gradient).s2, p.t2 - p.t) : nan;
        };
    } else {
        std::vector<double> values = svd.ftle_f;
        if (p.t != p.t1) values = analyze(flow_map_for(p, field, p.t, p.t2), p.incompressible).ftle_f;
        metric = [grid = std::make_shared<ScalarGrid>(p.grid, std::move(values)), nan](Vec2 x) {
            return grid->contains(x) ? grid->sample(x) : nan;
        };
    }

    // Seeds ranked by value; ids are shared by both families.
    std::vector<const MaterialCurve*> repelling;
    for (const auto& c : r.extract.repelling.curves) repelling.push_back(&c);
    const auto& attracting = r.extract.seeds.seeds.attracting;
    std::stable_sort(repelling.begin(), repelling.end(), [&](const MaterialCurve* a, const MaterialCurve* b) {
        return attracting[a->seed_id].value > attracting[b->seed_id].value;
    });
    if (repelling.size() > p.compare_seeds) repelling.resize(p.compare_seeds);

    const auto shrink = shrink_direction_field(svd);
    const double step = p.shrink_step > 0.0 ? p.shrink_step : 0.5 * p.grid.h();
    for (const MaterialCurve* rep : repelling) {
        const SeedPoint& seed = attracting[rep->seed_id];
        std::vector<Vec2> other;
        std::size_t other_anchor = rep->anchor;
        try {
            if (p.compare_self) {
                other = rep->points;
            } else {
                auto line = integrate_line_field(shrink, seed.position, step, std::max(rep->arc_length(), step));
                line.seed_id = seed.id;
                MaterialCurve mc;
                mc.points = line.points;
                mc.anchor = line.anchor;
                mc.time = p.t1;
                mc.seed_id = seed.id;
                mc.kind = SeedKind::repelling;
                mc = advect_curve(field, std::move(mc), p.t1, p.t, p.refine, p.tol);
                other = mc.points;
                other_anchor = mc.anchor;
                r.shrink_lines.push_back(std::move(line));
                r.shrink_advected.push_back(std::move(mc));
            }
            r.entries.push_back(
                {seed.id, seed.position,
                 p.compare_from_seed
                     ? compare_curves_from_anchor(rep->points, rep->anchor, other, other_anchor, metric, p.compare_samples)
                     : compare_curves(rep->points, other, metric, p.compare_samples)});
        } catch (const Error& e) {
            r.failures.push_back({seed.id, e.what()});
        }
    }

    auto entries = nlohmann::json::array();
    std::string csv = "seed_id,sample,fraction,ftle_lcs,ftle_shrink\n";
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    for (const auto& e : r.entries) {
        const auto& c = e.comparison;
        entries.push_back({{"seed_id", e.seed_id},
                           {"seed", {e.seed.x, e.seed.y}},
                           {"hausdorff", c.hausdorff},
                           {"arc_length_lcs", c.arc_length_a},
                           {"arc_length_shrink", c.arc_length_b},
                           {"ftle_lcs", {{"min", num(c.metric_a.min)}, {"median", num(c.metric_a.median)}, {"max", num(c.metric_a.max)}}},
                           {"ftle_shrink", {{"min", num(c.metric_b.min)}, {"median", num(c.metric_b.median)}, {"max", num(c.metric_b.max)}}},
                           {"fraction_lcs_ge_shrink", c.fraction_a_ge_b}});
        for (std::size_t k = 0; k < c.samples_a.size(); ++k) {
            const double frac = static_cast<double>(k) / static_cast<double>(c.samples_a.size() - 1);
            csv += std::to_string(e.seed_id) + ',' + std::to_string(k) + ',' + format_double(frac) + ',' +
                   format_double(c.samples_a[k]) + ',' + format_double(c.samples_b[k]) + '\n';
        }
    }
    nlohmann::json report = {{"time", p.t},
                             {"self", p.compare_self},
                             {"metric", p.compare_exact ? "exact" : "grid"},
                             {"match", p.compare_from_seed ? "seed" : "fraction"},
                             {"delta_max", p.refine.delta_max},
                             {"entries", entries},
                             {"failures", failures_json(r.failures)}};
    write_text_file(p.output_dir / "compare.json", detail::json_text(report));
    write_text_file(p.output_dir / "compare.csv", csv);
    auto lines = nlohmann::json::array();
    for (const auto& mc : r.shrink_advected) {
        auto j = to_json(mc);
        j["family"] = "xi1";
        lines.push_back(std::move(j));
    }
    write_text_file(p.output_dir / "shrink_lines.json", detail::json_text(lines));
    return r;
}

inline ns::TurbulenceRun cmd_turbulence(const PipelineConfig& p) {
    set_max_threads(p.threads);
    detail::prepare_output(p);
    const auto path = p.output_dir / p.turbulence_file;
    auto run = ns::generate_turbulence(p.turbulence, path);
    nlohmann::json j = {{"file", p.turbulence_file},
                        {"n", p.turbulence.n},
                        {"grid_n", run.n},
                        {"snapshots", run.times.size()},
                        {"t_first", run.times.front()},
                        {"t_last", run.times.back()},
                        {"steps", run.steps},
                        {"final_energy", run.final_energy},
                        {"max_divergence", run.max_divergence}};
    write_text_file(p.output_dir / "turbulence.json", detail::json_text(j));
    return run;
}

} // namespace lcs
