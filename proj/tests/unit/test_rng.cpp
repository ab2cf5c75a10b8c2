#include <cmath>
#include <array>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "fkpde/lattice.hpp"
#include "fkpde/rng.hpp"

using namespace fkpde;

namespace {

void check_kat(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key,
               std::array<std::uint32_t, 4> expect) {
    std::uint32_t out[4];
    kernels::philox4x32_10(ctr.data(), key.data(), out);
    for (int i = 0; i < 4; ++i) CHECK(out[i] == expect[i]);
}

}  // namespace

TEST_CASE("philox4x32-10 known answers") {
    check_kat({0, 0, 0, 0}, {0, 0}, {0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    check_kat({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff},
              {0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    check_kat({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0},
              {0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("normals do not depend on how particles are partitioned") {
    const RngStream r{0x0123456789abcdefULL};
    const auto& k = kernels::active();
    const std::size_t n = 1000;
    const int dim = 3;
    std::vector<double> whole(dim * n), scratch(n);
    r.normals(2, 5, 17, 0, n, dim, whole, scratch, k);

    for (std::size_t cut : {1u, 7u, 333u, 999u}) {
        std::vector<double> a(dim * cut), b(dim * (n - cut));
        r.normals(2, 5, 17, 0, cut, dim, a, scratch, k);
        r.normals(2, 5, 17, static_cast<std::uint32_t>(cut), n - cut, dim, b, scratch, k);
        for (int ax = 0; ax < dim; ++ax) {
            CHECK(std::memcmp(a.data() + ax * cut, whole.data() + ax * n, cut * sizeof(double)) == 0);
            CHECK(std::memcmp(b.data() + ax * (n - cut), whole.data() + ax * n + cut, (n - cut) * sizeof(double)) == 0);
        }
    }
}

TEST_CASE("distinct keys give distinct streams") {
    const RngStream r{7};
    const auto& k = kernels::active();
    std::vector<double> a(8), b(8), scratch(8);
    r.normals(0, 0, 0, 0, 8, 1, a, scratch, k);
    for (auto [sl, nd, st] : {std::array<std::uint32_t, 3>{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}) {
        r.normals(sl, nd, st, 0, 8, 1, b, scratch, k);
        CHECK(a != b);
    }
    const RngStream other{7ULL << 32};
    other.normals(0, 0, 0, 0, 8, 1, b, scratch, k);
    CHECK(a != b);
}

TEST_CASE("normal moments") {
    const RngStream r{42};
    const auto& k = kernels::active();
    const std::size_t n = 200000;
    std::vector<double> z(2 * n), scratch(n);
    r.normals(0, 0, 0, 0, n, 2, z, scratch, k);
    double m = 0, m2 = 0, m4 = 0, cross = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = z[i];
        m += x;
        m2 += x * x;
        m4 += x * x * x * x;
        cross += x * z[n + i];
    }
    m /= n;
    m2 /= n;
    m4 /= n;
    cross /= n;
    const double se = 1.0 / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(m) < 4 * se);
    CHECK(std::abs(m2 - 1.0) < 4 * std::sqrt(2.0) * se);
    CHECK(std::abs(m4 - 3.0) < 4 * std::sqrt(96.0) * se);
    CHECK(std::abs(cross) < 4 * se);
}

TEST_CASE("rng key ranges are enforced") {
    const RngStream r{1};
    CHECK_THROWS_AS(r.batch(0, 0, 1u << 24, 0), InvalidInput);
    CHECK_THROWS_AS(r.batch(0, 0, 0, 256), InvalidInput);
    CHECK_NOTHROW(r.batch(0, 0, (1u << 24) - 1, 255));
}
