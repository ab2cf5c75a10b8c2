#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "fkpde/fd_oracle.hpp"
#include "helpers.hpp"

using namespace fkpde;

namespace {

constexpr double kPi = std::numbers::pi;

double heat_error(const FdSolution& fd, double shift = 0.0) {
    double err = 0.0;
    for (std::size_t s = 0; s < fd.u.times.size(); ++s) {
        const double t = fd.u.times[s];
        for (std::size_t i = 0; i < fd.u.nodes(); ++i) {
            const double exact = std::exp((shift - 2 * kPi * kPi) * t) * std::sin(2 * kPi * fd.u.lattice.coord(i, 0));
            err = std::max(err, std::abs(fd.u.at(s, i) - exact));
        }
    }
    return err;
}

FdOptions opts(FdScheme s, double dt = 0.0, int slices = 11) {
    FdOptions o;
    o.scheme = s;
    o.dt = dt;
    o.out_slices = slices;
    return o;
}

}  // namespace

TEST_CASE("discrete operator examples") {
    const Lattice lat(1, 64);
    const auto h = test::heat(1, 0.1);
    std::vector<double> u(lat.size(), 1.7);
    for (double v : discrete_operator(h, 0.0, lat, u)) CHECK(v == 0.0);

    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sin(2 * kPi * lat.coord(i, 0));
    const auto Lu = discrete_operator(h, 0.0, lat, u);
    const double hh = lat.spacing(0);
    // second-difference truncation: (h^2 / 12) |u''''| * a
    const double bound = 0.5 * std::pow(2 * kPi, 4) * hh * hh / 12 * 1.01;
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(std::abs(Lu[i] + 2 * kPi * kPi * u[i]) <= bound);

    ProblemSpec v = test::heat(1, 0.1);
    v.diffusion_a = [](double, const Points&, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
    v.potential_V = test::constant_scalar(-1.25);
    const auto Vu = discrete_operator(v, 0.0, lat, u);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(Vu[i] == -1.25 * u[i]);

    CHECK_THROWS_AS(discrete_operator(h, 0.0, Lattice(1, 3), std::vector<double>{1, 2, 3}), InvalidInput);
}

TEST_CASE("heat, shifted eigenmode and constant source for both schemes") {
    const Lattice lat(1, 32);
    const double h2 = lat.spacing(0) * lat.spacing(0);
    for (FdScheme sc : {FdScheme::ExplicitRk4, FdScheme::ImexEuler}) {
        CAPTURE(to_string(sc));
        const auto h = test::heat(1, 0.1);
        const auto fd = fd_solve(h, lat, opts(sc));
        CHECK(fd.u.times.front() == 0.0);
        CHECK(fd.u.times.back() == 0.1);
        const double budget = 40 * (h2 + fd.dt);
        CHECK(heat_error(fd) <= budget);
        if (sc == FdScheme::ExplicitRk4) CHECK(fd.cfl.used <= fd.cfl.max_stable);
        else CHECK(std::isinf(fd.cfl.max_stable));

        auto v = test::heat(1, 0.1);
        v.potential_V = test::constant_scalar(0.8);
        CHECK(heat_error(fd_solve(v, lat, opts(sc)), 0.8) <= budget * 1.2);

        auto g = test::heat(1, 0.1);
        g.initial_u0 = test::constant_u0(0.0);
        g.source_g = test::constant_g(1.0);
        const auto fg = fd_solve(g, lat, opts(sc));
        for (std::size_t s = 0; s < fg.u.times.size(); ++s)
            for (std::size_t i = 0; i < fg.u.nodes(); ++i) CHECK(fg.u.at(s, i) == doctest::Approx(fg.u.times[s]).epsilon(1e-12));
    }
}

TEST_CASE("imex error shrinks when h and dt are halved") {
    const auto h = test::heat(1, 0.1);
    const double e1 = heat_error(fd_solve(h, Lattice(1, 32), opts(FdScheme::ImexEuler, 5e-5)));
    const double e2 = heat_error(fd_solve(h, Lattice(1, 64), opts(FdScheme::ImexEuler, 2.5e-5)));
    CHECK(e1 / e2 >= 1.8);  // first order in time dominates at these steps
    const double r1 = heat_error(fd_solve(h, Lattice(1, 32), opts(FdScheme::ExplicitRk4)));
    const double r2 = heat_error(fd_solve(h, Lattice(1, 64), opts(FdScheme::ExplicitRk4)));
    CHECK(r1 / r2 >= 3.0);
}

TEST_CASE("discrete maximum principle for the implicit heat solve") {
    auto h = test::heat(1, 0.2);
    h.initial_u0 = [](const Points& x, std::span<double> out) {
        for (std::size_t p = 0; p < x.count; ++p) out[p] = x(0, p) < 0.3 ? 1.0 : -0.5 * std::cos(6 * kPi * x(0, p));
    };
    FdOptions o = opts(FdScheme::ImexEuler, 1e-3);
    o.every_step = true;
    const auto fd = fd_solve(h, Lattice(1, 64), o);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < fd.u.times.size(); ++s) {
        double m = 0.0;
        for (std::size_t i = 0; i < fd.u.nodes(); ++i) m = std::max(m, std::abs(fd.u.at(s, i)));
        CHECK(m <= prev + 1e-15);
        prev = m;
    }
}

TEST_CASE("two-dimensional splitting matches the explicit scheme") {
    auto h = test::heat(2, 0.05);
    h.initial_u0 = [](const Points& x, std::span<double> out) {
        for (std::size_t p = 0; p < x.count; ++p) out[p] = std::sin(2 * kPi * x(0, p)) * std::cos(2 * kPi * x(1, p));
    };
    const Lattice lat(2, 24);
    const auto a = fd_solve(h, lat, opts(FdScheme::ExplicitRk4, 0.0, 3));
    const auto b = fd_solve(h, lat, opts(FdScheme::ImexEuler, 1e-4, 3));
    const double decay = std::exp(-4 * kPi * kPi * 0.05);
    for (std::size_t i = 0; i < lat.size(); ++i) {
        const double exact = decay * std::sin(2 * kPi * lat.coord(i, 0)) * std::cos(2 * kPi * lat.coord(i, 1));
        CHECK(std::abs(a.u.at(2, i) - exact) <= 0.01);
        CHECK(std::abs(b.u.at(2, i) - exact) <= 0.01);
    }
    CHECK_THROWS_AS(fd_solve(test::heat(3, 0.05), Lattice(3, 8), opts(FdScheme::ImexEuler)), InvalidInput);
}

TEST_CASE("residual examples and noise control") {
    const auto h = test::heat(1, 0.1);
    const Lattice lat(1, 32);
    FdOptions o = opts(FdScheme::ExplicitRk4);
    o.every_step = true;
    const auto fd = fd_solve(h, lat, o);
    const double hh = lat.spacing(0) * lat.spacing(0);
    const double bound = 5 * (hh + fd.dt) * problem_scale(h, lat);
    CHECK(residual_of(fd.u, h) <= bound);

    GridSeries exact = fd.u;
    for (std::size_t s = 0; s < exact.times.size(); ++s)
        for (std::size_t i = 0; i < exact.nodes(); ++i)
            exact.values[s * exact.nodes() + i] =
                std::exp(-2 * kPi * kPi * exact.times[s]) * std::sin(2 * kPi * lat.coord(i, 0));
    CHECK(residual_of(exact, h) <= bound);

    GridSeries noise = fd.u;
    for (std::size_t k = 0; k < noise.values.size(); ++k) noise.values[k] = std::sin(7919.0 * (k + 1));
    CHECK(residual_of(noise, h) > 10 * bound);
}

TEST_CASE("fd rejects runaway solutions") {
    auto h = test::heat(1, 1.0);
    h.potential_V = test::constant_scalar(40.0);
    CHECK_THROWS_AS(fd_solve(h, Lattice(1, 16), opts(FdScheme::ImexEuler, 1e-3)), BlowUp);
}
