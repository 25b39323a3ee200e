#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "lcs/flow_map.hpp"
#include "lcs/seeding.hpp"
#include "lcs/velocity.hpp"

using Catch::Approx;
using lcs::GridSpec;
using lcs::SeedCandidate;
using lcs::Vec2;

namespace {

std::vector<double> bumps(const GridSpec& g, std::vector<Vec2> centres, double width = 0.1) {
    std::vector<double> v(g.size(), 0.0);
    for (std::size_t k = 0; k < g.size(); ++k)
        for (std::size_t c = 0; c < centres.size(); ++c) {
            const double r2 = std::pow(lcs::distance(g.point(k), centres[c]), 2);
            v[k] += (1.0 + 0.1 * static_cast<double>(c)) * std::exp(-r2 / (width * width));
        }
    return v;
}

double min_pairwise(const std::vector<SeedCandidate>& kept, lcs::SeedMetric metric) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < kept.size(); ++a)
        for (std::size_t b = a + 1; b < kept.size(); ++b)
            best = std::min(best, metric(kept[a].position, kept[b].position));
    return best;
}

} // namespace

TEST_CASE("local maxima") {
    const GridSpec g{0.0, 1.0, 0.0, 1.0, 21, 21};
    SECTION("constant field has none") {
        CHECK(lcs::local_maxima(std::vector<double>(g.size(), 2.0), g).empty());
    }
    SECTION("a single bump yields its centre") {
        const auto m = lcs::local_maxima(bumps(g, {{0.5, 0.5}}), g);
        REQUIRE(m.size() == 1);
        CHECK(m[0].index == g.index(10, 10));
    }
    SECTION("two separated bumps") {
        const auto m = lcs::local_maxima(bumps(g, {{0.25, 0.25}, {0.75, 0.6}}), g);
        REQUIRE(m.size() == 2);
        CHECK(m[0].index == g.index(5, 5));
        CHECK(m[1].index == g.index(15, 12));
    }
    SECTION("boundary rows are excluded") {
        const auto m = lcs::local_maxima(bumps(g, {{0.0, 0.5}}), g);
        CHECK(m.empty());
    }
    SECTION("masked neighbours disqualify a maximum") {
        std::vector<std::uint8_t> mask(g.size(), 1);
        mask[g.index(11, 10)] = 0;
        CHECK(lcs::local_maxima(bumps(g, {{0.5, 0.5}}), g, mask).empty());
    }
}

TEST_CASE("greedy filter keeps the higher of two close points") {
    std::vector<SeedCandidate> c{{0, {0.0, 0.0}, 1.0}, {1, {0.1, 0.0}, 2.0}, {2, {1.0, 0.0}, 0.5}};
    const auto kept = lcs::filter_extrema(c, 0.2);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].index == 1);
    CHECK(kept[1].index == 2);
    CHECK(lcs::filter_extrema(c, 0.05).size() == 3);
    CHECK_THROWS_AS(lcs::filter_extrema(c, 0.0), lcs::ConfigError);
}

TEST_CASE("greedy filter output is pairwise separated and order independent") {
    std::mt19937 gen(17);
    std::uniform_real_distribution<double> d(0.0, 2.0);
    std::vector<SeedCandidate> c;
    for (std::size_t k = 0; k < 400; ++k) c.push_back({k, {d(gen), d(gen)}, std::round(d(gen) * 4.0)});
    const auto kept = lcs::filter_extrema(c, 0.2);
    CHECK(min_pairwise(kept, {}) >= 0.2);
    for (int trial = 0; trial < 5; ++trial) {
        std::shuffle(c.begin(), c.end(), gen);
        const auto again = lcs::filter_extrema(c, 0.2);
        REQUIRE(again.size() == kept.size());
        for (std::size_t k = 0; k < kept.size(); ++k) CHECK(again[k].index == kept[k].index);
    }
}

TEST_CASE("periodic metric takes the minimum image") {
    const lcs::SeedMetric m{1.0, 0.0};
    CHECK(m({0.05, 0.0}, {0.95, 0.0}) == Approx(0.1));
    CHECK(m({0.05, 0.0}, {0.95, 0.3}) == Approx(std::hypot(0.1, 0.3)));
    std::vector<SeedCandidate> c{{0, {0.02, 0.5}, 1.0}, {1, {0.98, 0.5}, 0.9}};
    CHECK(lcs::filter_extrema(c, 0.2, m).size() == 1);
    CHECK(lcs::filter_extrema(c, 0.2).size() == 2);
}

TEST_CASE("seed segments") {
    std::vector<lcs::SeedPoint> seeds(2);
    seeds[0].position = {0.0, 0.0};
    seeds[0].direction = {1.0, 0.0};
    seeds[1].id = 1;
    seeds[1].position = {1.0, 2.0};
    seeds[1].direction = {0.0, 1.0};
    const auto segs = lcs::make_seed_segments(seeds, 0.1);
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].points.size() == 11);
    CHECK(segs[0].points.front().x == Approx(-0.05));
    CHECK(segs[0].points.back().x == Approx(0.05));
    CHECK(segs[0].points[segs[0].anchor] == Vec2{0.0, 0.0});
    CHECK(segs[1].points.front().y == Approx(1.95));
    CHECK(segs[1].points.back().y == Approx(2.05));
    for (const auto& s : segs) CHECK(s.arc_length() == Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(lcs::make_seed_segments(seeds, -1.0), lcs::ConfigError);
}

TEST_CASE("Duffing seeds") {
    const GridSpec g{-3.0, 3.0, -3.0, 3.0, 121, 121};
    const auto svd = lcs::analyze(lcs::deformation_gradient_aux(lcs::AnalyticField::duffing(), g, 0.0, 2.5));
    const auto sel = lcs::select_seeds(svd, {0.5, 90.0});

    REQUIRE_FALSE(sel.attracting.empty());
    CHECK(sel.attracting.size() == sel.repelling.size());
    for (std::size_t k = 0; k < sel.attracting.size(); ++k) {
        CHECK(sel.repelling[k].position == svd.advected[sel.attracting[k].grid_index]);
        CHECK(sel.repelling[k].direction == svd.theta1[sel.attracting[k].grid_index]);
        CHECK(sel.attracting[k].direction == svd.xi2[sel.attracting[k].grid_index]);
    }
    std::vector<SeedCandidate> kept;
    for (const auto& s : sel.attracting) kept.push_back({s.grid_index, s.position, s.value});
    CHECK(min_pairwise(kept, {}) >= 0.5);

    // The strongest seed sits on the forward FTLE ridge, i.e. the stable
    // manifold H = 0, to within a grid cell.
    const auto& top = sel.attracting.front();
    double best = 1e9;
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j)
            best = std::min(best, std::abs(lcs::duffing_hamiltonian(top.position + Vec2{i * g.hx(), j * g.hy()})));
    const double h_scale = 4.0 * g.h() * std::max(1.0, lcs::norm(lcs::AnalyticField::duffing()(top.position, 0.0)));
    CHECK(best < h_scale);
}

TEST_CASE("maxima of sigma2 coincide with minima of sigma1 when incompressible") {
    const GridSpec g{-2.0, 2.0, -2.0, 2.0, 61, 61};
    const auto svd =
        lcs::analyze(lcs::deformation_gradient_aux(lcs::AnalyticField::duffing(), g, 0.0, 2.5, 1e-8, 1e-5));
    std::vector<double> neg(svd.sigma1_f.size());
    for (std::size_t k = 0; k < neg.size(); ++k) neg[k] = -svd.sigma1_f[k];
    const auto a = lcs::local_maxima(svd.sigma2_f, g, svd.mask);
    const auto b = lcs::local_maxima(neg, g, svd.mask);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].index == b[k].index);
}

TEST_CASE("compressible seeding uses minima of sigma1 for attracting seeds") {
    const GridSpec g{0.0, 1.0, 0.0, 1.0, 21, 21};
    lcs::FlowMapGrid fmg;
    fmg.spec = g;
    fmg.t_b = 1.0;
    fmg.method = lcs::GradientMethod::aux_grid;
    fmg.positions.resize(g.size());
    fmg.gradients.resize(g.size());
    fmg.mask.assign(g.size(), 1);
    const auto s2 = bumps(g, {{0.3, 0.3}}, 0.15);
    const auto dip = bumps(g, {{0.7, 0.7}}, 0.15);
    for (std::size_t k = 0; k < g.size(); ++k) {
        fmg.positions[k] = g.point(k);
        fmg.gradients[k] = {2.0 + s2[k], 0.0, 0.0, 1.0 - 0.5 * dip[k]};
    }
    const auto sel = lcs::select_seeds(lcs::analyze(fmg, false), {0.2, -1.0});
    REQUIRE(sel.attracting.size() == 1);
    REQUIRE(sel.repelling.size() == 1);
    CHECK(sel.attracting[0].grid_index == g.index(14, 14));
    CHECK(sel.repelling[0].grid_index == g.index(6, 6));
}

TEST_CASE("no extrema means no seeds") {
    const GridSpec g{0.0, 1.0, 0.0, 1.0, 8, 8};
    const auto svd = lcs::analyze(lcs::deformation_gradient_aux(lcs::AnalyticField::zero(), g, 0.0, 1.0));
    const auto sel = lcs::select_seeds(svd);
    CHECK(sel.attracting.empty());
    CHECK(sel.repelling.empty());
}

TEST_CASE("seed table formats") {
    lcs::SeedPoint s;
    s.position = {0.5, -0.25};
    s.value = 3.0;
    s.direction = {1.0, 0.0};
    const std::vector<lcs::SeedPoint> v{s};
    CHECK(lcs::seeds_to_text(v) == "# kind x y value dir_x dir_y\nattracting 0.5 -0.25 3 1 0\n");
    const auto j = lcs::seeds_to_json(v);
    CHECK(j[0]["x"] == 0.5);
    CHECK(j[0]["kind"] == "attracting");
}
