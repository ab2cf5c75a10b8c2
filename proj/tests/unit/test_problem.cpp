#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fkpde/catalog.hpp"
#include "fkpde/problem.hpp"
#include "helpers.hpp"

using namespace fkpde;

namespace {

SpaceTimeField field(int d, int nodes, int slices, double T, auto f) {
    SpaceTimeField s;
    s.lattice = Lattice(d, nodes);
    for (int j = 0; j < slices; ++j) s.times.push_back(j == slices - 1 ? T : j * T / (slices - 1));
    for (double t : s.times)
        for (std::size_t i = 0; i < s.lattice.size(); ++i) s.values.push_back(f(t, s.lattice.coord(i, 0)));
    return s;
}

}  // namespace

TEST_CASE("kato class examples") {
    CHECK(kato_class_check(1, {3, 5}));
    CHECK_FALSE(kato_class_check(2, {2, 2}));
    CHECK_FALSE(kato_class_check(4, {8, 4}));
}

TEST_CASE("kato class check is monotone in p and q") {
    for (int d = 1; d <= 3; ++d)
        for (double p = 2.0; p <= 12.0; p += 0.5)
            for (double q = 2.0; q <= 12.0; q += 0.5)
                if (kato_class_check(d, {p, q})) {
                    CHECK(kato_class_check(d, {p + 0.5, q}));
                    CHECK(kato_class_check(d, {p, q + 0.5}));
                }
}

TEST_CASE("mixed norm examples") {
    const KatoPair pr{3, 5};
    CHECK(tilde_Lpq_norm(field(1, 32, 11, 1.0, [](double, double) { return 0.0; }), pr, 0, 1) == 0.0);
    CHECK(tilde_Lpq_norm(field(1, 32, 11, 1.0, [](double, double) { return 1.0; }), pr, 0, 1) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // trapezoid error on t^3 with 2001 knots is ~1e-7 relative
    const auto f = field(1, 8, 2001, 1.0, [](double t, double) { return t; });
    CHECK(tilde_Lpq_norm(f, {7, 3}, 0, 1) == doctest::Approx(std::pow(4.0, -1.0 / 3.0)).epsilon(1e-6));
}

TEST_CASE("mixed norm is homogeneous and subadditive") {
    const KatoPair pr{3, 5};
    auto f = field(2, 16, 9, 0.5, [](double t, double x) { return std::sin(7 * x) + t; });
    auto g = field(2, 16, 9, 0.5, [](double t, double x) { return std::cos(3 * x) * t - 0.2; });
    const double nf = tilde_Lpq_norm(f, pr, 0, 0.5), ng = tilde_Lpq_norm(g, pr, 0, 0.5);
    for (double c : {-3.0, 0.25, 10.0}) {
        auto cf = f;
        for (auto& v : cf.values) v *= c;
        CHECK(tilde_Lpq_norm(cf, pr, 0, 0.5) == doctest::Approx(std::abs(c) * nf).epsilon(1e-12));
    }
    auto s = f;
    for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] += g.values[i];
    CHECK(tilde_Lpq_norm(s, pr, 0, 0.5) <= (nf + ng) * (1 + 1e-12));
    CHECK_THROWS_AS(tilde_Lpq_norm(f, pr, 0, 0.7), InvalidInput);
}

TEST_CASE("C1_b norm examples") {
    const Lattice lat(1, 1024);
    std::vector<double> v(lat.size(), 0.0);
    CHECK(cb1_norm(lat, v, 1) == 0.0);
    std::fill(v.begin(), v.end(), -2.5);
    CHECK(cb1_norm(lat, v, 1) == 2.5);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(2 * std::numbers::pi * lat.coord(i, 0));
    const double h = lat.spacing(0);
    CHECK(std::abs(cb1_norm(lat, v, 1) - (1 + 2 * std::numbers::pi)) <= 10 * h * h * 40);
    CHECK_THROWS_AS(cb1_norm(Lattice(1, 2), std::vector<double>{0, 1}, 1), InvalidInput);
}

TEST_CASE("k constant examples") {
    auto s = test::heat(1, 1.0);
    CHECK(k_constant(s).value == doctest::Approx(1.0).epsilon(1e-12));
    s.potential_V = test::constant_scalar(std::log(2.0));
    CHECK(k_constant(s).value == doctest::Approx(2.0).epsilon(1e-12));
    s.potential_V = nullptr;
    s.source_g = test::constant_g(3.0);
    CHECK(k_constant(s).value == doctest::Approx(4.0).epsilon(1e-12));
    s.source_g = test::constant_g(std::numeric_limits<double>::infinity());
    const auto r = k_constant(s);
    CHECK_FALSE(r.finite);
    CHECK(std::isinf(r.value));
    CHECK_FALSE(r.where.empty());
}

TEST_CASE("k constant is monotone") {
    CatalogOptions o;
    o.T = 0.3;
    double prev = 0.0;
    for (double amp : {0.5, 1.0, 2.0}) {
        o.amplitude = amp;
        const double k = k_constant(make_problem("nonlinear-test", o)).value;
        CHECK(k >= prev);
        prev = k;
    }
    o.amplitude = 1.0;
    prev = 0.0;
    for (double va : {0.0, 0.1, 0.4}) {
        o.V_amp = va;
        const double k = k_constant(make_problem("nonlinear-test", o)).value;
        CHECK(k >= prev);
        prev = k;
    }
    o.V_amp = 0.2;
    prev = 0.0;
    for (double ga : {0.0, 0.3, 0.9}) {
        o.g_amp = ga;
        const double k = k_constant(make_problem("nonlinear-test", o)).value;
        CHECK(k >= prev);
        prev = k;
    }
}

TEST_CASE("fbar examples") {
    auto s = test::heat();
    ProbeGrid pg;
    pg.nodes = 16;
    pg.time_slices = 3;
    for (double v : fbar_field(s, 1.0, pg).values) CHECK(v == 0.0);

    s.nonlinearity_F = [](double, const Points& x, std::span<const double> r1, std::span<const double>,
                          std::span<double> out) {
        for (std::size_t p = 0; p < x.count; ++p) out[p] = std::sin(r1[p]);
    };
    for (double v : fbar_field(s, std::numbers::pi / 2, pg).values) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));

    // factored form h(t,x) * beta(r1) with beta(r) = r^3
    s.nonlinearity_F = [](double t, const Points& x, std::span<const double> r1, std::span<const double>,
                          std::span<double> out) {
        for (std::size_t p = 0; p < x.count; ++p) out[p] = (1 + t) * std::cos(2 * std::numbers::pi * x(0, p)) * std::pow(r1[p], 3);
    };
    const auto f = fbar_field(s, 2.0, pg);
    for (std::size_t j = 0; j < f.times.size(); ++j)
        for (std::size_t i = 0; i < f.lattice.size(); ++i) {
            const double h = (1 + f.times[j]) * std::abs(std::cos(2 * std::numbers::pi * f.lattice.coord(i, 0)));
            CHECK(f.at(j, i) == doctest::Approx(8.0 * h).epsilon(1e-12));
        }
}

TEST_CASE("fbar dominates F at the origin") {
    CatalogOptions o;
    for (const char* name : {"nonlinear-test", "factored-F", "navier-stokes"}) {
        const auto s = make_problem(name, o);
        ProbeGrid pg;
        pg.nodes = 8;
        pg.time_slices = 3;
        const auto f = fbar_field(s, 1.5, pg);
        const int d = s.dim_d, m = s.dim_m;
        for (std::size_t j = 0; j < f.times.size(); ++j) {
            const auto coords = f.lattice.coordinates();
            const std::size_t n = f.lattice.size();
            const Points p{coords, n, d};
            std::vector<double> r1(m * n, 0.0), r2(d * m * n, 0.0);
            const auto F0 = eval_F(s, f.times[j], p, r1, r2);
            for (std::size_t i = 0; i < n; ++i) {
                double nrm = 0.0;
                for (int a = 0; a < d; ++a) nrm += F0[a * n + i] * F0[a * n + i];
                CHECK(f.at(j, i) >= std::sqrt(nrm) * (1 - 1e-12));
            }
        }
    }
}

TEST_CASE("assumption probe examples") {
    const auto heat = test::heat();
    const auto r = probe_assumptions(heat, {}, 1000);
    CHECK_FALSE(r.failure.has_value());
    for (const auto& [k, v] : r.pass_flags) CHECK_MESSAGE(v, k);
    CHECK(r.lipschitz_F_probe == 0.0);
    CHECK(r.alpha_probe == 0.0);
    CHECK(r.lipschitz_b_probe == 0.0);
    CHECK(r.kato_norm_V >= 0.0);
    CHECK(r.ellipticity_min == doctest::Approx(0.5));

    auto g3 = test::heat();
    g3.g_spatial_only = false;
    g3.source_g = [](double, const Points& x, std::span<const double>, std::span<const double>,
                     std::span<const double> r3, std::span<double> out) {
        for (std::size_t p = 0; p < x.count; ++p) out[p] = r3[p];
    };
    CHECK(probe_assumptions(g3, {}, 1000).alpha_probe == doctest::Approx(1.0).epsilon(1e-9));

    auto lip = test::heat();
    lip.nonlinearity_F = [](double, const Points& x, std::span<const double> r1, std::span<const double>,
                            std::span<double> out) {
        for (std::size_t p = 0; p < x.count; ++p) out[p] = 2.0 * std::sin(r1[p]);
    };
    const double K = probe_assumptions(lip, {}, 1000).lipschitz_F_probe;
    CHECK(K >= 1.8);
    CHECK(K <= 2.0);

    CHECK_THROWS_AS(probe_assumptions(heat, {}, 99), InvalidInput);
}

TEST_CASE("assumption probe reports non-finite coefficients") {
    auto s = test::heat();
    s.potential_V = [](double, const Points& x, std::span<double> out) {
        for (std::size_t p = 0; p < x.count; ++p) out[p] = x(0, p) > 0.5 ? std::nan("") : 0.0;
    };
    const auto r = probe_assumptions(s, {}, 200);
    REQUIRE(r.failure.has_value());
    CHECK_FALSE(r.pass_flags.at("H_V_u0"));
}

TEST_CASE("validate rejects malformed problems") {
    auto s = test::heat();
    CHECK_NOTHROW(validate(s));
    s.dim_d = 4;
    CHECK_THROWS_AS(validate(s), InvalidInput);
    s = test::heat();
    s.horizon_T = 0.0;
    CHECK_THROWS_AS(validate(s), InvalidInput);
    s = test::heat();
    s.initial_u0 = nullptr;
    CHECK_THROWS_AS(validate(s), InvalidInput);
    CHECK_THROWS_AS(make_problem("no-such-problem", {}), InvalidInput);
}

TEST_CASE("time grid knots are exact") {
    const TimeGrid g{0.3, 7};
    const auto t = g.slice_times();
    CHECK(t.front() == 0.0);
    CHECK(t.back() == 0.3);
    for (int k = 0; k <= 7; ++k) CHECK(g.knot(k) == (k == 7 ? 0.3 : k * 0.3 / 7));
}
