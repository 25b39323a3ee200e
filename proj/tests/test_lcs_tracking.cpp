#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "lcs/flow_map.hpp"
#include "lcs/lcs_tracking.hpp"
#include "lcs/shrinkline.hpp"
#include "lcs/svd.hpp"
#include "lcs/velocity.hpp"

using Catch::Approx;
using lcs::MaterialCurve;
using lcs::RefineOptions;
using lcs::SeedPoint;
using lcs::Vec2;

namespace {

MaterialCurve segment(Vec2 centre, Vec2 dir, double length = 0.1) {
    SeedPoint s;
    s.position = centre;
    s.direction = dir;
    return lcs::make_seed_segments(std::vector<SeedPoint>{s}, length).front();
}

double angle_deg(Vec2 a, Vec2 b) {
    return std::atan2(std::abs(lcs::cross(a, b)), std::abs(lcs::dot(a, b))) * 180.0 / std::numbers::pi;
}

// Chord through the points within `radius` of the anchor.
Vec2 tangent_at_anchor(const MaterialCurve& c, double radius) {
    const Vec2 a = c.points[c.anchor];
    std::size_t lo = c.anchor, hi = c.anchor;
    while (lo > 0 && lcs::distance(c.points[lo - 1], a) < radius) --lo;
    while (hi + 1 < c.points.size() && lcs::distance(c.points[hi + 1], a) < radius) ++hi;
    return c.points[hi] - c.points[lo];
}

lcs::Svd2 duffing_origin_svd() {
    const auto pg = lcs::aux_gradient_at(lcs::AnalyticField::duffing(), {0.0, 0.0}, 0.0, 2.5, 1e-10, 1e-5);
    return lcs::svd2x2(pg.gradient);
}

} // namespace

TEST_CASE("uniform flow translates curves without insertions") {
    const auto f = lcs::AnalyticField::uniform({1.0, 0.5});
    const auto c0 = segment({0.2, 0.1}, {1.0, 1.0});
    const auto c = lcs::advect_curve(f, c0, 0.0, 2.0);
    REQUIRE(c.points.size() == c0.points.size());
    CHECK(c.insertions == 0);
    CHECK(c.time == 2.0);
    CHECK(c.direction == 1);
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        CHECK(c.points[i].x == Approx(c0.points[i].x + 2.0));
        CHECK(c.points[i].y == Approx(c0.points[i].y + 1.0));
    }
}

TEST_CASE("linear saddle stretches a segment by e^T") {
    const auto f = lcs::AnalyticField::linear({1.0, 0.0, 0.0, -1.0});
    RefineOptions opt;
    opt.delta_max = 0.05;
    const auto c = lcs::advect_curve(f, segment({0.0, 0.0}, {1.0, 0.0}), 0.0, 3.0, opt, 1e-10);
    const double e3 = std::exp(3.0);
    CHECK(c.points.front().x == Approx(-0.05 * e3).epsilon(1e-8));
    CHECK(c.points.back().x == Approx(0.05 * e3).epsilon(1e-8));
    CHECK(c.arc_length() == Approx(0.1 * e3).epsilon(0.01));
    CHECK(c.max_gap <= 0.05);
    CHECK(c.insertions > 0);
    CHECK_FALSE(c.truncated);
    CHECK(c.points[c.anchor] == Vec2{0.0, 0.0});
}

TEST_CASE("forward then backward advection returns to the seed segment") {
    const auto f = lcs::AnalyticField::duffing();
    const auto c0 = segment({0.5, 0.3}, {1.0, -0.2});
    RefineOptions opt;
    opt.delta_max = 0.01;
    const auto fwd = lcs::advect_curve(f, c0, 0.0, 1.0, opt, 1e-10);
    const auto back = lcs::advect_curve(f, fwd, 1.0, 0.0, opt, 1e-10);
    CHECK(back.direction == -1);
    CHECK(lcs::distance(back.points.front(), c0.points.front()) < 1e-7);
    CHECK(lcs::distance(back.points.back(), c0.points.back()) < 1e-7);
    // Points inserted on the way back start on chords of the stretched curve.
    CHECK(lcs::detail::directed_hausdorff(back.points, c0.points) < opt.delta_max * opt.delta_max);
}

TEST_CASE("gaps never exceed delta_max") {
    const auto f = lcs::AnalyticField::duffing();
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> pos(-2.0, 2.0), ang(0.0, std::numbers::pi);
    for (int n = 0; n < 20; ++n) {
        const double a = ang(gen);
        RefineOptions opt;
        opt.delta_max = 0.02;
        const auto c = lcs::advect_curve(f, segment({pos(gen), pos(gen)}, {std::cos(a), std::sin(a)}), 0.0,
                                         n % 2 ? 2.0 : -2.0, opt);
        CHECK(c.max_gap <= opt.delta_max);
        CHECK(c.max_gap == c.largest_gap());
    }
}

TEST_CASE("refinement budget truncates and flags the curve") {
    const auto f = lcs::AnalyticField::linear({1.0, 0.0, 0.0, -1.0});
    RefineOptions opt;
    opt.delta_max = 1e-3;
    opt.budget = 200;
    const auto c = lcs::advect_curve(f, segment({0.0, 0.0}, {1.0, 0.0}), 0.0, 4.0, opt);
    CHECK(c.truncated);
    CHECK(c.points.size() <= 200);
    CHECK(c.max_gap > opt.delta_max);
}

TEST_CASE("invalid refinement options are rejected") {
    const auto f = lcs::AnalyticField::zero();
    RefineOptions opt;
    opt.delta_max = 0.0;
    CHECK_THROWS_AS(lcs::advect_curve(f, segment({0, 0}, {1, 0}), 0.0, 1.0, opt), lcs::ConfigError);
    opt = {};
    opt.substeps = 0;
    CHECK_THROWS_AS(lcs::advect_curve(f, segment({0, 0}, {1, 0}), 0.0, 1.0, opt), lcs::ConfigError);
}

TEST_CASE("time window") {
    const lcs::TimeWindow w{0.0, 2.5};
    CHECK_NOTHROW(w.check(0.0));
    CHECK_NOTHROW(w.check(2.5));
    CHECK_THROWS_AS(w.check(-0.1), lcs::ConfigError);
    CHECK_THROWS_AS(w.check(2.6), lcs::ConfigError);
    CHECK_THROWS_AS((lcs::TimeWindow{1.0, 1.0}.check(1.0)), lcs::ConfigError);

    std::vector<SeedPoint> seeds(1);
    CHECK_THROWS_AS(lcs::extract_attracting_lcs(lcs::AnalyticField::duffing(), seeds, w, 3.0), lcs::ConfigError);
    CHECK_THROWS_AS(lcs::extract_repelling_lcs(lcs::AnalyticField::duffing(), seeds, w, -1.0), lcs::ConfigError);
}

TEST_CASE("extraction at the seeding time returns the seed segments") {
    const auto f = lcs::AnalyticField::duffing();
    const lcs::TimeWindow w{0.0, 2.5};
    std::vector<SeedPoint> seeds(2);
    seeds[0].position = {0.3, 0.4};
    seeds[0].direction = {0.0, 1.0};
    seeds[1].id = 1;
    seeds[1].position = {-1.0, 0.2};
    seeds[1].direction = {1.0, 1.0};
    const auto segs = lcs::make_seed_segments(seeds, 0.1);
    const auto a = lcs::extract_attracting_lcs(f, seeds, w, 0.0);
    const auto r = lcs::extract_repelling_lcs(f, seeds, w, 2.5);
    REQUIRE(a.curves.size() == 2);
    REQUIRE(r.curves.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(a.curves[k].points == segs[k].points);
        CHECK(r.curves[k].points == segs[k].points);
        CHECK(r.curves[k].time == 2.5);
    }
}

TEST_CASE("Duffing LCS through the saddle follow the invariant manifolds") {
    const auto f = lcs::AnalyticField::duffing();
    const lcs::TimeWindow w{0.0, 2.5};
    const auto svd = duffing_origin_svd();
    RefineOptions opt;
    opt.delta_max = 0.01;

    SeedPoint att;
    att.position = {0.0, 0.0};
    att.direction = svd.xi2;
    const auto a = lcs::extract_attracting_lcs(f, std::vector<SeedPoint>{att}, w, 2.5, 0.1, opt);
    REQUIRE(a.curves.size() == 1);

    SeedPoint rep;
    rep.kind = lcs::SeedKind::repelling;
    rep.position = {0.0, 0.0};
    rep.direction = svd.th1;
    const auto r = lcs::extract_repelling_lcs(f, std::vector<SeedPoint>{rep}, w, 0.0, 0.1, opt);
    REQUIRE(r.curves.size() == 1);

    CHECK(angle_deg(tangent_at_anchor(a.curves[0], 0.05), {1.0, 2.0}) < 0.5);
    CHECK(angle_deg(tangent_at_anchor(r.curves[0], 0.05), {1.0, -2.0}) < 0.5);
    CHECK(a.curves[0].arc_length() > 1.0);
    CHECK(r.curves[0].arc_length() > 1.0);

    // Both manifolds lie on H = 0; the check runs up to the first sharp turn
    // where the curve folds back around the centres.
    for (const auto* c : {&a.curves[0], &r.curves[0]}) {
        const auto& p = c->points;
        double worst = 0.0;
        for (std::size_t i = c->anchor; i + 1 < p.size(); ++i) {
            if (i > c->anchor && angle_deg(p[i] - p[i - 1], p[i + 1] - p[i]) > 45.0) break;
            worst = std::max(worst, std::abs(lcs::duffing_hamiltonian(p[i])));
        }
        CHECK(worst < 5e-3);
    }
}

TEST_CASE("extraction is materially consistent") {
    const auto f = lcs::AnalyticField::duffing();
    const lcs::TimeWindow w{0.0, 2.5};
    const double tol = 1e-8;
    RefineOptions opt;
    opt.delta_max = 0.002;
    SeedPoint s;
    s.kind = lcs::SeedKind::repelling;
    s.position = {0.0, 0.0};
    s.direction = duffing_origin_svd().th1;
    const std::vector<SeedPoint> seeds{s};

    const auto at_mid = lcs::extract_repelling_lcs(f, seeds, w, 1.5, 0.1, opt, tol);
    const auto direct = lcs::extract_repelling_lcs(f, seeds, w, 0.5, 0.1, opt, tol);
    REQUIRE(at_mid.curves.size() == 1);
    REQUIRE(direct.curves.size() == 1);
    const auto further = lcs::advect_curve(f, at_mid.curves[0], 1.5, 0.5, opt, tol);
    // Polyline vertices differ between the two, so chords may sag by up to
    // curvature * delta^2 / 8 with curvature below 1 here.
    const double bound = 10.0 * tol + opt.delta_max * opt.delta_max / 8.0;
    CHECK(lcs::hausdorff_distance(further.points, direct.curves[0].points) < bound);
}

TEST_CASE("seeds that leave the domain become failures") {
    const lcs::GridSpec g{0.0, 1.0, 0.0, 1.0, 5, 5};
    std::vector<double> u(2 * g.size(), 1.0), v(2 * g.size(), 0.0);
    const lcs::VelocityField f = lcs::GriddedField(g, {0.0, 10.0}, u, v);
    std::vector<SeedPoint> seeds(2);
    seeds[0].position = {0.5, 0.5};
    seeds[1].id = 7;
    seeds[1].position = {0.1, 0.5};
    seeds[1].direction = {0.0, 1.0};
    const auto out = lcs::extract_attracting_lcs(f, seeds, {0.0, 1.0}, 0.7);
    REQUIRE(out.failures.size() == 1);
    CHECK(out.failures[0].seed_id == 0);
    REQUIRE(out.curves.size() == 1);
    CHECK(out.curves[0].seed_id == 7);
    CHECK(out.curves[0].points[5].x == Approx(0.8));
}

TEST_CASE("points that leave the domain are clipped around the anchor") {
    const lcs::GridSpec g{0.0, 1.0, 0.0, 1.0, 5, 5};
    std::vector<double> u(2 * g.size(), 1.0), v(2 * g.size(), 0.0);
    const lcs::VelocityField f = lcs::GriddedField(g, {0.0, 10.0}, u, v);
    const auto c = lcs::advect_curve(f, segment({0.5, 0.5}, {1.0, 0.0}, 0.4), 0.0, 0.45);
    CHECK(c.clipped);
    CHECK(c.points[c.anchor].x == Approx(0.95));
    for (const auto& p : c.points) CHECK(p.x <= 1.0);
}
