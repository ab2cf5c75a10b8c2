#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "fkpde/catalog.hpp"
#include "fkpde/feynman_kac.hpp"
#include "fkpde/fixed_point.hpp"
#include "helpers.hpp"

using namespace fkpde;

namespace {

constexpr double kPi = std::numbers::pi;

SolverConfig small(std::size_t particles = 2000, int nodes = 16, int steps = 20, int slices = 5) {
    SolverConfig c;
    c.nodes = nodes;
    c.n_steps = steps;
    c.slices = slices;
    c.particles = particles;
    return c;
}

TerminalTerm sin_f(double amp = 1.0) {
    return [amp](const Points& x, std::span<double> out) {
        for (std::size_t p = 0; p < x.count; ++p) out[p] = amp * std::sin(2 * kPi * x(0, p));
    };
}

TerminalTerm cos_f() {
    return [](const Points& x, std::span<double> out) {
        for (std::size_t p = 0; p < x.count; ++p) out[p] = std::cos(2 * kPi * x(0, p)) + 0.3;
    };
}

TerminalTerm const_f(double c) {
    return [c](const Points&, std::span<double> out) { std::fill(out.begin(), out.end(), c); };
}

}  // namespace

TEST_CASE("psi slice examples") {
    auto s = test::heat(1, 0.1);
    s.initial_u0 = test::constant_u0(1.0);
    const auto cfg = small();
    auto e = estimate_psi_slice(s, {}, 1, cfg, RngStream{1});
    for (double v : e.values) CHECK(v == 1.0);

    const double c = -0.8;
    s.potential_V = test::constant_scalar(c);
    e = estimate_psi_slice(s, {}, 1, cfg, RngStream{1});
    const double tau = 0.1 - cfg.slice_times(0.1)[1];
    for (double v : e.values) CHECK(v == doctest::Approx(std::exp(c * tau)).epsilon(1e-13));
    for (double se : e.stderr_values) CHECK(se <= 1e-15);

    const auto h = test::heat(1, 0.1);
    const auto lat = cfg.lattice(1);
    for (int slice : {0, 2}) {
        const auto est = estimate_psi_slice(h, {}, slice, cfg, RngStream{2});
        const double tt = 0.1 - cfg.slice_times(0.1)[slice];
        for (std::size_t i = 0; i < lat.size(); ++i) {
            const double exact = std::exp(-2 * kPi * kPi * tt) * std::sin(2 * kPi * lat.coord(i, 0));
            CHECK(std::abs(est.values[i] - exact) <= 4 * est.stderr_values[i] + 1e-12);
        }
    }
}

TEST_CASE("psi slice rejects state-dependent sources") {
    auto s = test::heat();
    s.g_spatial_only = false;
    s.source_g = test::constant_g(1.0);
    CHECK_THROWS_AS(estimate_psi_slice(s, {}, 0, small(), RngStream{1}), InvalidInput);
}

TEST_CASE("semigroup examples") {
    const auto h = test::heat(1, 0.1);
    const auto cfg = small(20000);
    const auto lat = cfg.lattice(1);
    auto one = semigroup_apply(h, {}, 4, 16, const_f(1.0), cfg, RngStream{3});
    for (double v : one.values) CHECK(v == 1.0);

    auto same = semigroup_apply(h, {}, 8, 8, sin_f(), cfg, RngStream{3});
    for (std::size_t i = 0; i < lat.size(); ++i)
        CHECK(same.values[i] == doctest::Approx(std::sin(2 * kPi * lat.coord(i, 0))).epsilon(1e-15));

    const auto sg = semigroup_apply(h, {}, 4, 16, sin_f(), cfg, RngStream{4});
    const double span = 12 * 0.1 / 20;
    for (std::size_t i = 0; i < lat.size(); ++i) {
        const double exact = std::exp(-2 * kPi * kPi * span) * std::sin(2 * kPi * lat.coord(i, 0));
        CHECK(std::abs(sg.values[i] - exact) <= 4 * sg.stderr_values[i] + 1e-12);
    }
    CHECK_THROWS_AS(semigroup_apply(h, {}, 10, 4, sin_f(), cfg, RngStream{4}), InvalidInput);
}

TEST_CASE("semigroup is linear under common random numbers") {
    CatalogOptions o;
    o.T = 0.1;
    const auto s = make_problem("nonlinear-test", o);  // nonzero V
    const auto cfg = small(1000);
    const RngStream rng{5};
    const auto pf = semigroup_apply(s, {}, 0, 20, sin_f(), cfg, rng);
    const auto pg = semigroup_apply(s, {}, 0, 20, cos_f(), cfg, rng);
    // power-of-two scaling commutes with rounding
    const auto p4 = semigroup_apply(s, {}, 0, 20, sin_f(4.0), cfg, rng);
    for (std::size_t i = 0; i < pf.values.size(); ++i) CHECK(p4.values[i] == 4.0 * pf.values[i]);

    const double a = 0.7, b = -1.3;
    const TerminalTerm comb = [&](const Points& x, std::span<double> out) {
        std::vector<double> u(x.count), v(x.count);
        sin_f()(x, u);
        cos_f()(x, v);
        for (std::size_t p = 0; p < x.count; ++p) out[p] = a * u[p] + b * v[p];
    };
    const auto pc = semigroup_apply(s, {}, 0, 20, comb, cfg, rng);
    for (std::size_t i = 0; i < pf.values.size(); ++i)
        CHECK(std::abs(pc.values[i] - (a * pf.values[i] + b * pg.values[i])) <= 1e-12);
}

TEST_CASE("semigroup property holds statistically") {
    const auto h = test::heat(1, 0.1);
    const auto cfg = small(20000, 64);
    const auto lat = cfg.lattice(1);
    const auto inner = semigroup_apply(h, {}, 10, 20, sin_f(), cfg, RngStream{6});
    const auto& k = kernels::active();
    const TerminalTerm g = [&](const Points& x, std::span<double> out) { interp_lattice(lat, inner.values, x, out, k); };
    const auto composed = semigroup_apply(h, {}, 0, 10, g, cfg, RngStream{7});
    const auto direct = semigroup_apply(h, {}, 0, 20, sin_f(), cfg, RngStream{8});
    const double h2 = lat.spacing(0) * lat.spacing(0);
    const double interp = h2 / 8 * 4 * kPi * kPi;  // linear interpolation error of the inner sine
    for (std::size_t i = 0; i < lat.size(); ++i) {
        const double se = std::hypot(composed.stderr_values[i], direct.stderr_values[i], inner.stderr_values[i]);
        CHECK(std::abs(composed.values[i] - direct.values[i]) <= 4 * se + interp);
    }
}

TEST_CASE("u^V functional examples") {
    auto s = test::heat(1, 0.1);
    const auto cfg = small(500);
    const auto lat = cfg.lattice(1);
    auto f = make_field(cfg.slice_times(0.1), lat, 1);
    auto r = u_v_functional(s, {}, 4, f, cfg, RngStream{9});
    for (double v : r.values) CHECK(v == 0.0);

    std::fill(f.values.begin(), f.values.end(), 1.0);
    r = u_v_functional(s, {}, 4, f, cfg, RngStream{9});
    const double span = 0.1 - 4 * 0.1 / 20;
    for (double v : r.values) CHECK(v == doctest::Approx(span).epsilon(1e-13));

    for (double c : {0.9, -2.0}) {
        s.potential_V = test::constant_scalar(c);
        r = u_v_functional(s, {}, 4, f, cfg, RngStream{9});
        for (double v : r.values) CHECK(std::abs(v - std::expm1(c * span) / c) <= 1e-12);
    }
    auto wrong = make_field(cfg.slice_times(0.1), Lattice(1, 8), 1);
    CHECK_THROWS_AS(u_v_functional(s, {}, 4, wrong, cfg, RngStream{9}), InvalidInput);
}

TEST_CASE("pathwise Feynman-Kac bound") {
    CatalogOptions o;
    o.T = 0.2;
    const auto s = make_problem("nonlinear-test", o);
    const auto cfg = small(1000);
    const double k = fk_bound(s, cfg);
    for (int slice = 0; slice < 4; ++slice) {
        const auto e = estimate_psi_slice(s, {}, slice, cfg, RngStream{10});
        CHECK(e.particle_sup <= k * (1 + 1e-12));
        for (double v : e.values) CHECK(std::abs(v) <= e.particle_sup);
    }
}

TEST_CASE("bismut gradient examples") {
    const auto h = test::heat(1, 0.1);
    SolverConfig sc = small();
    const auto eng = sc.engine(0.1);
    EnsembleOptions eo;
    eo.derivatives = true;
    eo.retain = {20};
    for (double x0 : {0.0, 0.15, 0.6}) {
        const auto e = simulate_ensemble(h, {}, 4, {x0, 0, 0}, eng, 40000, RngStream{11}, eo);
        const std::vector<double> v{1.0};
        const auto g = bismut_gradient(e, 0, sin_f(), 1, v, eng.grid);
        const double span = 16 * 0.1 / 20;
        const double exact = 2 * kPi * std::exp(-2 * kPi * kPi * span) * std::cos(2 * kPi * x0);
        CHECK(std::abs(g.value[0] - exact) <= 4 * g.stderr_values[0]);

        const auto one = bismut_gradient(e, 0, const_f(1.0), 1, v, eng.grid);
        CHECK(std::abs(one.value[0]) <= 3 * one.stderr_values[0]);
        // constant f is the constant times the mean Bismut integral
        const auto three = bismut_gradient(e, 0, const_f(3.0), 1, v, eng.grid);
        CHECK(three.value[0] == doctest::Approx(3 * one.value[0]).epsilon(1e-14));
    }
    EnsembleOptions at_launch;
    at_launch.derivatives = true;
    at_launch.retain = {4};
    const auto e0 = simulate_ensemble(h, {}, 4, {0.1, 0, 0}, eng, 10, RngStream{11}, at_launch);
    CHECK_THROWS_AS(bismut_gradient(e0, 0, sin_f(), 1, std::vector<double>{1.0}, eng.grid), InvalidInput);
    const auto nd = simulate_ensemble(h, {}, 4, {0.1, 0, 0}, eng, 10, RngStream{11});
    CHECK_THROWS_AS(bismut_gradient(nd, 1, sin_f(), 1, std::vector<double>{1.0}, eng.grid), InvalidInput);
}

TEST_CASE("grid gradient accuracy") {
    const Lattice lat(1, 64);
    std::vector<double> v(lat.size(), 2.5);
    for (double g : grid_gradient(lat, v, 1)) CHECK(g == 0.0);
    for (std::size_t i = 0; i < lat.size(); ++i) v[i] = std::sin(2 * kPi * lat.coord(i, 0));
    const auto g = grid_gradient(lat, v, 1);
    const double h = lat.spacing(0);
    const double bound = std::pow(2 * kPi, 3) * h * h / 6;
    for (std::size_t i = 0; i < lat.size(); ++i) CHECK(std::abs(g[i] - 2 * kPi * std::cos(2 * kPi * lat.coord(i, 0))) <= bound);

    const Lattice l2(2, 32);
    std::vector<double> w(l2.size() * 2);
    for (std::size_t i = 0; i < l2.size(); ++i) {
        w[i * 2] = std::sin(2 * kPi * l2.coord(i, 1));
        w[i * 2 + 1] = 1.0;
    }
    const auto g2 = grid_gradient(l2, w, 2);
    for (std::size_t i = 0; i < l2.size(); ++i) {
        CHECK(std::abs(g2[(i * 2 + 0) * 2 + 0]) <= 1e-12);
        CHECK(g2[(i * 2 + 0) * 2 + 1] == 0.0);
        CHECK(g2[(i * 2 + 1) * 2 + 1] == 0.0);
    }
    CHECK_THROWS_AS(grid_gradient(Lattice(1, 2), std::vector<double>{1, 2}, 1), InvalidInput);
}

TEST_CASE("grid and Bismut gradients agree on heat data") {
    const auto h = test::heat(1, 0.1);
    auto cfg = small(20000);
    cfg.gradient_mode = GradientMode::GridDifference;
    const auto grid = estimate_field(h, {}, cfg, RngStream{12});
    cfg.gradient_mode = GradientMode::Bismut;
    const auto bis = estimate_field(h, {}, cfg, RngStream{12});
    CHECK(bis.provenance == GradientMode::Bismut);
    REQUIRE(grid.gradients.size() == bis.gradients.size());
    const double h2 = 1.0 / (16.0 * 16.0);
    // difference bias of a sine on 16 nodes plus Monte Carlo spread of the Bismut weight
    const double tol = std::pow(2 * kPi, 3) * h2 / 6 + 0.25;
    CHECK(test::max_abs_diff(grid.gradients, bis.gradients) <= tol);
    // the terminal slice has no paths and falls back to differences in both modes
    const std::size_t last = (grid.slices() - 1) * grid.nodes();
    for (std::size_t i = last; i < grid.gradients.size(); ++i) CHECK(grid.gradients[i] == bis.gradients[i]);
}

TEST_CASE("interpolation reproduces node values and linear data") {
    const Lattice lat(2, 8);
    std::vector<double> t(lat.size());
    for (std::size_t i = 0; i < lat.size(); ++i) t[i] = 3 * lat.coord(i, 0) + lat.coord(i, 1);
    const auto coords = lat.coordinates();
    std::vector<double> out(lat.size());
    interp_lattice(lat, t, Points{coords, lat.size(), 2}, out, kernels::active());
    for (std::size_t i = 0; i < lat.size(); ++i) CHECK(out[i] == doctest::Approx(t[i]).epsilon(1e-14));
    const std::vector<double> mid = {0.0625, 0.3, 0.5, 0.3};  // axis-major: x0 then x1
    std::vector<double> o2(2);
    interp_lattice(lat, t, Points{mid, 2, 2}, o2, kernels::active());
    CHECK(o2[0] == doctest::Approx(3 * 0.0625 + 0.5).epsilon(1e-14));
    CHECK(o2[1] == doctest::Approx(3 * 0.3 + 0.3).epsilon(1e-14));
}
