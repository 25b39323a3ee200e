#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "lcs/flow_map.hpp"
#include "lcs/parallel.hpp"
#include "lcs/velocity.hpp"

using Catch::Approx;
using lcs::GridSpec;
using lcs::Mat2;
using lcs::Vec2;

namespace {

// expm(2.5 * [[0, 1], [4, 0]]) in closed form.
Mat2 duffing_origin_oracle() {
    const double c = std::cosh(5.0), s = std::sinh(5.0);
    return {c, s / 2.0, 2.0 * s, c};
}

void check_rel(const Mat2& m, const Mat2& ref, double rel) {
    CHECK(m.a == Approx(ref.a).epsilon(rel).margin(1e-9));
    CHECK(m.b == Approx(ref.b).epsilon(rel).margin(1e-9));
    CHECK(m.c == Approx(ref.c).epsilon(rel).margin(1e-9));
    CHECK(m.d == Approx(ref.d).epsilon(rel).margin(1e-9));
}

} // namespace

TEST_CASE("uniform flow translates every grid point") {
    const GridSpec g{0.0, 1.0, 0.0, 1.0, 6, 5};
    const auto f = lcs::AnalyticField::uniform({1.0, 0.0});
    const auto fmg = lcs::compute_flow_map_grid(f, g, 0.0, 0.75);
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(fmg.positions[k].x == Approx(g.point(k).x + 0.75));
        CHECK(fmg.positions[k].y == Approx(g.point(k).y));
    }
    CHECK(fmg.masked_count() == 0);
}

TEST_CASE("zero flow leaves points in place") {
    const GridSpec g{-1.0, 1.0, -1.0, 1.0, 4, 4};
    const auto fmg = lcs::compute_flow_map_grid(lcs::AnalyticField::zero(), g, 0.0, 3.0);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(fmg.positions[k] == g.point(k));
}

TEST_CASE("translation has identity gradient by both methods") {
    const GridSpec g{0.0, 1.0, 0.0, 1.0, 7, 7};
    const auto f = lcs::AnalyticField::uniform({0.3, -0.2});
    const auto main = lcs::deformation_gradient_main(lcs::compute_flow_map_grid(f, g, 0.0, 1.0));
    const auto aux = lcs::deformation_gradient_aux(f, g, 0.0, 1.0);
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(lcs::frobenius(main.gradients[k] - Mat2::identity()) < 1e-9);
        CHECK(lcs::frobenius(aux.gradients[k] - Mat2::identity()) < 1e-6);
    }
}

TEST_CASE("linear saddle gradients match the matrix exponential") {
    const GridSpec g{-1.0, 1.0, -1.0, 1.0, 21, 21};
    const auto f = lcs::AnalyticField::linear({1.0, 0.0, 0.0, -1.0});
    const double T = 1.5;
    const Mat2 exact{std::exp(T), 0.0, 0.0, std::exp(-T)};
    const auto main = lcs::deformation_gradient_main(lcs::compute_flow_map_grid(f, g, 0.0, T, 1e-11));
    const auto aux = lcs::deformation_gradient_aux(f, g, 0.0, T, 1e-11, 1e-3);
    for (std::size_t k = 0; k < g.size(); ++k) {
        check_rel(main.gradients[k], exact, 1e-6);
        CHECK(std::abs(aux.gradients[k].a - main.gradients[k].a) < 1e-6);
        CHECK(std::abs(aux.gradients[k].d - main.gradients[k].d) < 1e-6);
        CHECK(std::abs(aux.gradients[k].b) < 1e-6);
        CHECK(std::abs(aux.gradients[k].c) < 1e-6);
    }
}

TEST_CASE("aux-grid gradient at the Duffing saddle matches the oracle") {
    const auto f = lcs::AnalyticField::duffing();
    const auto pg = lcs::aux_gradient_at(f, {0.0, 0.0}, 0.0, 2.5, 1e-8, 1e-4);
    REQUIRE(pg.ok);
    check_rel(pg.gradient, duffing_origin_oracle(), 1e-5);
}

TEST_CASE("main-grid gradient at the Duffing saddle within finite-difference error") {
    const GridSpec g{-0.002, 0.002, -0.002, 0.002, 3, 3};
    const auto f = lcs::AnalyticField::duffing();
    const auto fmg = lcs::deformation_gradient_main(lcs::compute_flow_map_grid(f, g, 0.0, 2.5, 1e-12));
    check_rel(fmg.gradients[g.index(1, 1)], duffing_origin_oracle(), 5e-3);
}

TEST_CASE("Duffing grid has no masked points and unit determinant") {
    const GridSpec g{-3.0, 3.0, -3.0, 3.0, 41, 41};
    const auto fmg = lcs::deformation_gradient_aux(lcs::AnalyticField::duffing(), g, 0.0, 2.5, 1e-8, 2e-6);
    CHECK(fmg.masked_count() == 0);
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(fmg.gradients[k].det() > 0.0);
        worst = std::max(worst, std::abs(fmg.gradients[k].det() - 1.0));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("aux offset trades truncation against integration noise") {
    // Central differences carry an O(rho^2) error that the saddle amplifies.
    const auto f = lcs::AnalyticField::duffing();
    const double coarse = lcs::aux_gradient_at(f, {0.0, 0.0}, 0.0, 2.5, 1e-8, 1e-3).gradient.det();
    const double fine = lcs::aux_gradient_at(f, {0.0, 0.0}, 0.0, 2.5, 1e-8, 1e-5).gradient.det();
    CHECK(std::abs(fine - 1.0) < std::abs(coarse - 1.0));
}

TEST_CASE("points leaving a bounded field are masked, not fatal") {
    const GridSpec field_grid{0.0, 1.0, 0.0, 1.0, 5, 5};
    std::vector<double> u(field_grid.size(), 1.0), v(field_grid.size(), 0.0);
    const lcs::VelocityField f = lcs::GriddedField(field_grid, {0.0}, u, v);
    const GridSpec g{0.1, 0.9, 0.1, 0.9, 5, 5};
    const auto fmg = lcs::deformation_gradient_aux(f, g, 0.0, 0.3);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const bool should_exit = g.point(k).x + 0.3 + fmg.rho > 1.0;
        CHECK(fmg.valid(k) == !should_exit);
    }
    const auto main = lcs::deformation_gradient_main(lcs::compute_flow_map_grid(f, g, 0.0, 0.3));
    CHECK(main.masked_count() > 0);
}

TEST_CASE("periodic grids difference across the seam") {
    const double L = 2.0 * std::numbers::pi;
    const GridSpec g{0.0, L, 0.0, L, 16, 16, true, true};
    const auto f = lcs::AnalyticField::uniform({0.5, 0.25});
    const auto fmg = lcs::deformation_gradient_main(lcs::compute_flow_map_grid(f, g, 0.0, 1.0));
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(lcs::frobenius(fmg.gradients[k] - Mat2::identity()) < 1e-9);
}

TEST_CASE("default aux offset scales with the grid") {
    const GridSpec g{0.0, 1.0, 0.0, 1.0, 101, 101};
    CHECK(lcs::default_aux_offset(g) == Approx(1e-4));
    CHECK(lcs::deformation_gradient_aux(lcs::AnalyticField::zero(), g, 0.0, 1.0).rho == Approx(1e-4));
}

TEST_CASE("grid computation does not depend on the thread count") {
    const GridSpec g{-2.0, 2.0, -2.0, 2.0, 23, 19};
    const auto f = lcs::AnalyticField::duffing();
    lcs::set_max_threads(1);
    const auto serial = lcs::deformation_gradient_aux(f, g, 0.0, 2.0);
    lcs::set_max_threads(4);
    const auto threaded = lcs::deformation_gradient_aux(f, g, 0.0, 2.0);
    lcs::set_max_threads(0);
    CHECK(serial.positions == threaded.positions);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(serial.gradients[k] == threaded.gradients[k]);
    CHECK(serial.mask == threaded.mask);
}

TEST_CASE("flow map file round trip") {
    const GridSpec g{-1.0, 1.0, -2.0, 2.0, 5, 6};
    const auto fmg = lcs::deformation_gradient_aux(lcs::AnalyticField::duffing(), g, 0.0, 1.0, 1e-9, 1e-4);
    const auto path = std::filesystem::temp_directory_path() / "lcs_test_flowmap.bin";
    lcs::save_flow_map(path, fmg);
    const auto back = lcs::load_flow_map(path);
    CHECK(back.spec == g);
    CHECK(back.t_a == 0.0);
    CHECK(back.t_b == 1.0);
    CHECK(back.method == lcs::GradientMethod::aux_grid);
    CHECK(back.rho == 1e-4);
    CHECK(back.tol == 1e-9);
    CHECK(back.positions == fmg.positions);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(back.gradients[k] == fmg.gradients[k]);
    CHECK(back.mask == fmg.mask);
}
