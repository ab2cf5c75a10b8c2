#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "fkpde/transforms.hpp"
#include "helpers.hpp"

using namespace fkpde;

namespace {

constexpr double kPi = std::numbers::pi;

KpzProblem kpz(double beta, double v_amp = 0.2, double f_amp = 0.0) {
    CatalogOptions o;
    o.T = 0.2;
    o.beta = beta;
    o.V_amp = v_amp;
    o.F_amp = f_amp;
    o.amplitude = 0.1;
    return make_kpz_problem(o);
}

std::vector<double> at_nodes(const ProblemSpec& s, const Lattice& lat, double t, auto which) {
    const auto c = lat.coordinates();
    return which(s, t, Points{c, lat.size(), lat.dim});
}

}  // namespace

TEST_CASE("phi beta examples") {
    for (double b : {-3.0, -1e-8, 0.0, 0.5, 2.0}) CHECK(phi_beta(0.0, b) == 0.0);
    CHECK(phi_beta(std::log(2.0), 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    for (double u : {-2.0, -0.3, 0.7, 3.0}) {
        CHECK(phi_beta(u, 0.0) == u);
        CHECK(std::abs(phi_beta(u, 1e-8) - u) <= 1e-7 * u * u);
    }
    const std::vector<double> v{0.0, std::log(2.0), -1.0};
    const auto p = phi_beta(v, 1.0);
    CHECK(p[0] == 0.0);
    CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p[2] == doctest::Approx(1 - std::exp(1.0)).epsilon(1e-15));
    CHECK(std::isfinite(phi_beta(-1e6, 1.0)));
}

TEST_CASE("phi beta is increasing and odd under sign flip") {
    for (double b : {-2.0, -0.5, 0.5, 1.0, 3.0}) {
        double prev = -std::numeric_limits<double>::infinity();
        for (double u = -4.0; u <= 4.0; u += 0.125) {
            const double f = phi_beta(u, b);
            CHECK(f > prev);
            prev = f;
            CHECK(phi_beta(-u, -b) == doctest::Approx(-f).epsilon(1e-14));
        }
    }
}

TEST_CASE("transformed problem examples") {
    const Lattice lat(1, 16);
    auto k = kpz(1.5);
    k.base.initial_u0 = test::constant_u0(0.0);
    const auto t = build_transformed_problem(k);
    for (double v : sample_initial(t, lat)) CHECK(v == 1.0);

    // F = 0: linear with potential -beta Vbar and no source or transport
    const auto lin = build_transformed_problem(kpz(1.5));
    CHECK_FALSE(lin.nonlinearity_F);
    CHECK_FALSE(lin.source_g);
    const auto V = at_nodes(lin, lat, 0.05, [](auto& s, double tt, const Points& p) { return eval_V(s, tt, p); });
    for (std::size_t i = 0; i < lat.size(); ++i)
        CHECK(V[i] == doctest::Approx(-1.5 * 0.2 * std::cos(2 * kPi * lat.coord(i, 0))).epsilon(1e-14));

    const auto u0 = sample_initial(kpz(1.5).base, lat);
    const auto v0 = sample_initial(lin, lat);
    for (std::size_t i = 0; i < lat.size(); ++i) CHECK(v0[i] == doctest::Approx(std::exp(-1.5 * u0[i])).epsilon(1e-15));

    CHECK_THROWS_AS(build_transformed_problem(kpz(0.0)), InvalidInput);
    CHECK_THROWS_AS(build_transformed_problem(kpz(std::nan(""))), InvalidInput);
}

TEST_CASE("transformed transport evaluates F at the inverse map") {
    const auto k = kpz(2.0, 0.0, 0.5);
    const auto t = build_transformed_problem(k);
    REQUIRE(t.nonlinearity_F);
    const std::vector<double> x{0.1, 0.4}, r1{0.5, 1.2}, r2{0.0, 0.0};
    std::vector<double> out(2);
    t.nonlinearity_F(0.0, Points{x, 2, 1}, r1, r2, out);
    for (int p = 0; p < 2; ++p) CHECK(out[p] == doctest::Approx(0.5 * std::sin((1 - r1[p]) / 2.0)).epsilon(1e-14));
}

TEST_CASE("round trip through the substitution") {
    const Lattice lat(1, 32);
    GridSeries u;
    u.lattice = lat;
    u.times = {0.0, 0.1};
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t i = 0; i < lat.size(); ++i) u.values.push_back(0.3 * std::sin(2 * kPi * lat.coord(i, 0)) + s);
    for (double beta : {0.5, 1.0, -2.0}) {
        GridSeries v = u;
        for (auto& x : v.values) x = std::exp(-beta * x);
        const auto back = invert_solution(v, beta);
        CHECK(test::max_abs_diff(back.values, u.values) <= 1e-12);
    }
}

TEST_CASE("inversion examples and positivity loss") {
    GridSeries v;
    v.lattice = Lattice(1, 4);
    v.times = {0.0};
    v.values.assign(4, 1.0);
    for (double x : invert_solution(v, 1.3).values) CHECK(x == 0.0);
    for (double beta : {1.0, 2.5}) {
        v.values.assign(4, std::exp(-beta));
        for (double x : invert_solution(v, beta).values) CHECK(x == doctest::Approx(1.0).epsilon(1e-15));
    }
    v.values = {1.0, 0.5, 0.0, 0.3};
    try {
        invert_solution(v, 1.0);
        FAIL("expected a positivity error");
    } catch (const InvalidInput& e) {
        CHECK(std::string(e.what()).find("positivity") != std::string::npos);
        CHECK(std::string(e.what()).find("entry 2") != std::string::npos);
    }

    PsiField psi = make_field({0.0, 0.1}, Lattice(1, 8), 1);
    psi.values.assign(16, std::exp(-0.5));
    psi.stderr_values.assign(16, 1e-3);
    const auto inv = invert_solution(psi, 0.5);
    for (double x : inv.values) CHECK(x == doctest::Approx(1.0).epsilon(1e-15));
    for (double se : inv.stderr_values) CHECK(se == doctest::Approx(1e-3 / (0.5 * std::exp(-0.5))).epsilon(1e-14));
    for (double g : inv.gradients) CHECK(g == 0.0);
}

TEST_CASE("direct problem carries the quadratic gradient term") {
    const auto k = kpz(1.0, 0.2, 0.0);
    const auto d = build_direct_problem(k);
    REQUIRE(d.nonlinearity_F);
    // F_total . r2 = -beta a r2 . r2 with a = diffusion = 0.5
    const std::vector<double> x{0.2}, r1{0.4}, r2{3.0};
    std::vector<double> out(1);
    d.nonlinearity_F(0.0, Points{x, 1, 1}, r1, r2, out);
    CHECK(out[0] == doctest::Approx(-1.0 * 0.5 * 3.0).epsilon(1e-15));
    CHECK(d.g_spatial_only);
    auto m2 = k;
    m2.base.dim_m = 2;
    CHECK_THROWS_AS(build_direct_problem(m2), InvalidInput);
}

TEST_CASE("transformed and direct problems agree on the initial time derivative") {
    // d/dt u = -(1/beta) (d/dt v) / v at t = 0
    const double beta = 1.0;
    const auto k = kpz(beta, 0.2, 0.5);
    const auto v = build_transformed_problem(k);
    const auto u = build_direct_problem(k);
    const Lattice lat(1, 256);
    const auto u0 = sample_initial(u, lat), v0 = sample_initial(v, lat);
    const auto du = discrete_operator(u, 0.0, lat, u0);
    const auto dv = discrete_operator(v, 0.0, lat, v0);
    for (std::size_t i = 0; i < lat.size(); ++i) CHECK(std::abs(du[i] + dv[i] / (beta * v0[i])) <= 2e-4);
}
