#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lcs/pipeline.hpp"

namespace {

struct Options {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
    int threads = -1;
};

lcs::PipelineConfig resolve(const Options& o) {
    lcs::Config c = o.config.empty() ? lcs::Config{} : lcs::Config::load(o.config);
    for (const auto& s : o.overrides) c.set(s);
    if (!o.out.empty()) c.set("run.output=" + o.out);
    if (o.threads >= 0) c.set("run.threads=" + std::to_string(o.threads));
    return lcs::read_pipeline_config(c);
}

void report_extraction(const char* name, const lcs::Extraction& e) {
    std::printf("%s: %zu curves, %zu failed seeds\n", name, e.curves.size(), e.failures.size());
    for (const auto& f : e.failures) std::printf("  seed %zu: %s\n", f.seed_id, f.reason.c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lagrangian coherent structures by attraction-based extraction"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", opt.config, "configuration file (section/key = value)");
        sub->add_option("-s,--set", opt.overrides, "override a setting, e.g. --set window.t=1.25");
        sub->add_option("-o,--out", opt.out, "output directory (run.output)");
        sub->add_option("-j,--threads", opt.threads, "worker thread cap (0 = all cores)");
    };
    auto* ftle = app.add_subcommand("ftle", "flow map, SVD fields and FTLE table");
    auto* seeds = app.add_subcommand("seeds", "ftle, then filtered seed points");
    auto* extract = app.add_subcommand("extract", "seeds, then attracting and repelling LCS at window.t");
    auto* compare = app.add_subcommand("compare", "extract, then compare against shrink lines");
    auto* turb = app.add_subcommand("turbulence", "generate a forced 2-D turbulence grid file");
    for (auto* s : {ftle, seeds, extract, compare, turb}) add_common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : static_cast<int>(lcs::ExitCode::config);
    }

    try {
        const auto cfg = resolve(opt);
        if (*ftle) {
            const auto r = lcs::cmd_ftle(cfg);
            std::printf("ftle: %zu x %zu grid, %zu masked points -> %s\n", cfg.grid.nx, cfg.grid.ny,
                        r.flow_map.masked_count(), cfg.output_dir.string().c_str());
        } else if (*seeds) {
            const auto r = lcs::cmd_seeds(cfg);
            std::printf("seeds: %zu extrema, %zu attracting, %zu repelling\n", r.seeds.extrema_found,
                        r.seeds.attracting.size(), r.seeds.repelling.size());
        } else if (*extract) {
            const auto r = lcs::cmd_extract(cfg);
            report_extraction("attracting", r.attracting);
            report_extraction("repelling", r.repelling);
        } else if (*compare) {
            const auto r = lcs::cmd_compare(cfg);
            for (const auto& e : r.entries)
                std::printf("seed %zu: hausdorff %.6g, median ftle lcs %.6g vs shrink %.6g\n", e.seed_id,
                            e.comparison.hausdorff, e.comparison.metric_a.median, e.comparison.metric_b.median);
            for (const auto& f : r.failures) std::printf("seed %zu failed: %s\n", f.seed_id, f.reason.c_str());
        } else if (*turb) {
            const auto r = lcs::cmd_turbulence(cfg);
            std::printf("turbulence: %zu snapshots, %zu steps, energy %.6g -> %s\n", r.times.size(), r.steps,
                        r.final_energy, (cfg.output_dir / cfg.turbulence_file).string().c_str());
        }
    } catch (const lcs::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(lcs::ExitCode::numerical);
    }
    return 0;
}
