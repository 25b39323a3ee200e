#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "lcs/config.hpp"
#include "lcs/pipeline.hpp"

using Catch::Matchers::ContainsSubstring;
using lcs::Config;

TEST_CASE("parsing sections, comments and values") {
    auto c = Config::parse("# leading comment\n"
                           "[grid]\n"
                           "nx = 10   ; trailing\n"
                           "  x_min=-2.5\n"
                           "\n"
                           "[run]\n"
                           "output = results/a b\n"
                           "flag = yes\r\n",
                           "test.cfg");
    CHECK(c.get_uint("grid.nx", 0) == 10);
    CHECK(c.get_double("grid.x_min", 0.0) == -2.5);
    CHECK(c.get_string("run.output", "") == "results/a b");
    CHECK(c.get_bool("run.flag", false));
    CHECK(c.get_double("grid.missing", 7.0) == 7.0);
    CHECK(c.has("grid.nx"));
    CHECK_FALSE(c.has("grid.ny"));
    CHECK_NOTHROW(c.reject_unknown());
}

TEST_CASE("syntax errors name the file and line") {
    auto fails = [](const std::string& text, const std::string& expect) {
        CHECK_THROWS_WITH(Config::parse(text, "f.cfg"), ContainsSubstring(expect));
    };
    fails("[grid\nnx = 1\n", "f.cfg:1: unterminated section header");
    fails("[]\n", "f.cfg:1: bad section name");
    fails("[grid]\nnx 1\n", "f.cfg:2: expected 'key = value'");
    fails("[grid]\n\n = 4\n", "f.cfg:3: bad key name");
    fails("nx = 1\n", "f.cfg:1: key 'nx' appears before any [section]");
    fails("[grid]\nnx = 1\nny = 2\nnx = 3\n", "f.cfg:4: duplicate key 'grid.nx' (first set on line 2)");
}

TEST_CASE("typed getters reject malformed values") {
    auto c = Config::parse("[a]\nx = 1.5e\ny = -3\nz = maybe\nw = inf\nn = 12\n", "v.cfg");
    CHECK_THROWS_WITH(c.get_double("a.x", 0.0), ContainsSubstring("v.cfg:2: expected a finite number, got '1.5e'"));
    CHECK_THROWS_WITH(c.get_uint("a.y", 0), ContainsSubstring("v.cfg:3: expected a nonnegative integer"));
    CHECK_THROWS_WITH(c.get_bool("a.z", false), ContainsSubstring("v.cfg:4: expected true or false"));
    CHECK_THROWS_AS(c.get_double("a.w", 0.0), lcs::ConfigError);
    CHECK(c.get_double("a.n", 0.0) == 12.0);
}

TEST_CASE("unknown keys are rejected with their line") {
    auto c = Config::parse("[grid]\nnx = 3\nnxx = 4\n", "u.cfg");
    c.get_uint("grid.nx", 0);
    CHECK_THROWS_WITH(c.reject_unknown(), ContainsSubstring("u.cfg:3: unknown key 'grid.nxx'"));
}

TEST_CASE("command-line overrides win and are reported as overrides") {
    auto c = Config::parse("[grid]\nnx = 3\n", "o.cfg");
    c.set("grid.nx=5");
    c.set(" grid.ny = 7 ");
    CHECK(c.get_uint("grid.nx", 0) == 5);
    CHECK(c.get_uint("grid.ny", 0) == 7);
    c.set("grid.dx=abc");
    CHECK_THROWS_WITH(c.get_double("grid.dx", 0.0), ContainsSubstring("override grid.dx: expected a finite number"));
    CHECK_THROWS_AS(c.set("nodot=1"), lcs::ConfigError);
    CHECK_THROWS_AS(c.set("grid.nx"), lcs::ConfigError);
}

TEST_CASE("missing config file is an I/O error naming the path") {
    const auto path = std::filesystem::temp_directory_path() / "lcs_no_such_config.cfg";
    std::filesystem::remove(path);
    try {
        Config::load(path);
        FAIL("expected an exception");
    } catch (const lcs::IoError& e) {
        CHECK_THAT(e.what(), ContainsSubstring(path.string()));
        CHECK(e.exit_code() == lcs::ExitCode::io);
    }
}

TEST_CASE("config writer output parses back") {
    lcs::ConfigWriter w;
    w.section("a");
    w.put("x", 0.1);
    w.put("n", std::uint64_t{3});
    w.put("b", true);
    w.put("s", "text");
    w.section("b");
    w.put("y", -1e-300);
    auto c = Config::parse(w.str());
    CHECK(c.get_double("a.x", 0.0) == 0.1);
    CHECK(c.get_uint("a.n", 0) == 3);
    CHECK(c.get_bool("a.b", false));
    CHECK(c.get_string("a.s", "") == "text");
    CHECK(c.get_double("b.y", 0.0) == -1e-300);
}

TEST_CASE("pipeline defaults") {
    auto c = Config::parse("");
    const auto p = lcs::read_pipeline_config(c);
    CHECK(p.field == "duffing");
    CHECK(p.t1 == 0.0);
    CHECK(p.t2 == 2.5);
    CHECK(p.tol == 1e-8);
    CHECK(p.seeding.radius == 0.2);
    CHECK(p.refine.delta_max == p.grid.h());
    CHECK(p.turbulence.n == 128);
}

TEST_CASE("pipeline configuration errors") {
    auto fails = [](const std::string& text, const std::string& expect) {
        auto c = Config::parse(text, "p.cfg");
        CHECK_THROWS_WITH(lcs::read_pipeline_config(c), ContainsSubstring(expect));
    };
    fails("[field]\nsource = vortex\n", "p.cfg:2: unknown field source 'vortex'");
    fails("[field]\nsource = grid\n", "field.source = grid needs field.file");
    fails("[window]\nt1 = 1\nt2 = 1\n", "p.cfg:3: window needs t1 < t2");
    fails("[window]\nt = 9\n", "p.cfg:2: t must lie in [t1, t2]");
    fails("[grid]\nnx = 1\n", "p.cfg:2:");
    fails("[flow_map]\nmethod = spline\n", "method must be 'aux' or 'main'");
    fails("[flow_map]\ntol = 0\n", "tolerance must be positive");
    fails("[seeding]\nradius = -1\n", "radius must be positive");
    fails("[refine]\nbudget = 2\n", "budget must be at least 3");
    fails("[turbulence]\nn = 7\n", "turbulence.n must be even");
    fails("[run]\nthreads = 2\nspeed = 3\n", "p.cfg:3: unknown key 'run.speed'");
    fails("[extra]\nkey = 1\n", "unknown key 'extra.key'");
}

TEST_CASE("effective configuration reproduces itself") {
    auto c = Config::parse("[field]\nsource = uniform\nu = 0.3\n"
                           "[window]\nt1 = 0.5\nt2 = 1.75\nt = 1\n"
                           "[grid]\nnx = 17\nny = 9\nx_min = -1\n"
                           "[flow_map]\nmethod = main\nrho = 1e-3\n"
                           "[seeding]\nradius = 0.3\npercentile_floor = -1\n"
                           "[run]\nseed = 99\n");
    const auto p = lcs::read_pipeline_config(c);
    const std::string text = lcs::effective_config(p);
    auto c2 = Config::parse(text, "effective.cfg");
    const auto q = lcs::read_pipeline_config(c2);
    CHECK(lcs::effective_config(q) == text);
    CHECK(q.field == "uniform");
    CHECK(q.uniform_velocity.x == 0.3);
    CHECK(q.t == 1.0);
    CHECK(q.grid == p.grid);
    CHECK(q.method == lcs::GradientMethod::main_grid);
    CHECK(q.seeding.percentile_floor == -1.0);
    CHECK(q.seed == 99);
    CHECK(q.turbulence.seed == 99);
}
