// Repelling LCS of the Duffing oscillator at t = 0 from a single seed at the
// saddle, printed as x y pairs together with the Hamiltonian along the curve.

#include <cstdio>
#include <vector>

#include "lcs/lcs.hpp"

int main() {
    const auto field = lcs::VelocityField::duffing();
    const double t1 = 0.0, t2 = 2.5;

    const auto pg = lcs::aux_gradient_at(field, {0.0, 0.0}, t1, t2, 1e-10, 1e-4);
    const auto svd = lcs::svd2x2(pg.gradient);
    std::printf("# sigma2 = %.6f  sigma1 = %.3e  ftle = %.6f\n", svd.s2, svd.s1, lcs::ftle(svd.s2, t2 - t1));

    lcs::SeedPoint seed;
    seed.position = pg.position;
    seed.direction = svd.th1;
    seed.kind = lcs::SeedKind::repelling;
    std::vector<lcs::SeedPoint> seeds{seed};

    const auto out = lcs::extract_repelling_lcs(field, std::span<const lcs::SeedPoint>(seeds), {t1, t2}, t1);
    if (out.curves.empty()) {
        std::fprintf(stderr, "extraction failed: %s\n", out.failures.front().reason.c_str());
        return 1;
    }
    const auto& curve = out.curves.front();
    std::printf("# %zu points, arc length %.4f, largest gap %.4g\n", curve.points.size(), curve.arc_length(),
                curve.max_gap);
    for (const auto& p : curve.points) std::printf("%.9f %.9f %.3e\n", p.x, p.y, lcs::duffing_hamiltonian(p));
    return 0;
}
