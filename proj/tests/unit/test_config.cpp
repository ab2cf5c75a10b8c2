#include <string>

#include "doctest.h"
#include "fkpde/config.hpp"

using namespace fkpde;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config(text, "cfg");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

bool has(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("minimal config materializes defaults") {
    const RunConfig r = parse_config("problem = heat\nseed = 7\n");
    CHECK(r.problem == "heat");
    CHECK(*r.seed == 7);
    CHECK(r.particles == 10000);
    CHECK(r.nodes == 64);
    CHECK(r.n_steps == 200);
    CHECK(r.slices == 21);
    CHECK(r.tol == 1e-3);
    CHECK(r.max_iter == 25);
    CHECK(r.alpha_threshold == 0.1);
    CHECK_FALSE(r.truncation_level.has_value());
    const SolverConfig sc = r.solver();
    CHECK(sc.particles == 10000);
    CHECK(sc.nodes == 64);
    CHECK(sc.n_steps == 200);
    CHECK(r.fd_options().out_slices == 21);
}

TEST_CASE("seed is required") {
    CHECK(error_of("problem = heat\n") == "seed required");
    CHECK(error_of("") == "seed required");
    ConfigOverrides ov;
    ov.seed = 99;
    CHECK(*parse_config("problem = heat\n", "cfg", ov).seed == 99);
}

TEST_CASE("duplicate keys name both lines") {
    const auto e = error_of("seed = 1\n# comment\n[picard]\ntol = 1e-3\ntol = 2e-3\n");
    CHECK(has(e, "duplicate key 'picard.tol' on lines 4 and 5"));
    // a dotted key and a section key are the same key
    CHECK(has(error_of("seed = 1\npicard.tol = 1e-3\n[picard]\ntol = 2e-3\n"), "lines 2 and 4"));
    // aliases collapse too
    CHECK(has(error_of("seed = 1\nnodes = 32\nlattice.nodes = 16\n"), "duplicate key 'lattice.nodes' on lines 2 and 3"));
}

TEST_CASE("parse errors carry line numbers") {
    CHECK(has(error_of("seed = 1\nbogus = 3\n"), "cfg:2: bogus: unknown key"));
    CHECK(has(error_of("seed = 1\n[picard]\nfoo = 1\n"), "picard.foo"));
    CHECK(has(error_of("seed = 1\nparticles = many\n"), "cfg:2"));
    CHECK(has(error_of("seed = 1\nparticles = many\n"), "expected an integer"));
    CHECK(has(error_of("seed = 1\njust words\n"), "cfg:2"));
    CHECK(has(error_of("seed = 1\n[lattice\n"), "unterminated section header"));
    CHECK(has(error_of("seed = 1\nmc.common_nodes = maybe\n"), "expected true or false"));
}

TEST_CASE("invariant violations") {
    CHECK(has(error_of("seed = 1\nproblem = nope\n"), "unknown problem"));
    CHECK(has(error_of("seed = 1\nparticles = 0\n"), "must be >= 1"));
    CHECK(has(error_of("seed = 1\npicard.tol = 0\n"), "picard.tol must be > 0"));
    CHECK(has(error_of("seed = 1\nlattice.n_steps = 201\n"), "multiple"));
    CHECK(has(error_of("seed = 1\ncoefficients.d = 4\n"), "coefficients.d"));
    CHECK(has(error_of("seed = 1\ntruncation_level = 0.5\n"), "truncation_level"));
    CHECK_NOTHROW(parse_config("seed = 1\ntruncation_level = none\n"));
}

TEST_CASE("sections, dotted keys, comments and quotes") {
    const RunConfig a = parse_config(
        "seed = 5  # trailing comment\n"
        "[coefficients]\nT = 0.25\nF_amp = 0.5\n"
        "[picard]\nlambda = 2\n"
        "[lattice]\nnodes = 32\nn_steps = 100\nslices = 11\n"
        "[report]\ngate = 3\n");
    const RunConfig b = parse_config(
        "seed=5\ncoefficients.T=0.25\ncoefficients.F_amp=0.5\npicard.lambda=2\n"
        "nodes=32\nn_steps=100\nlattice.slices=11\nreport.gate=3\n");
    CHECK(echo_config(a) == echo_config(b));
    CHECK(a.coefficients.T == 0.25);
    CHECK(a.nodes == 32);
    CHECK(a.gate_pct == 3.0);

    const RunConfig q = parse_config("seed = 1\noutput_dir = \"run #1\"\n");
    CHECK(q.output_dir == "run #1");
}

TEST_CASE("echo round trips") {
    const RunConfig a = parse_config(
        "seed = 18446744073709551615\nproblem = outer-test\ncoefficients.alpha = 0.05\n"
        "truncation_level = 7\ngradient_mode = bismut\nfd.scheme = imex-euler\noutput_dir = \"a b\"\n");
    const std::string e = echo_config(a);
    const RunConfig b = parse_config(e, "echo");
    CHECK(echo_config(b) == e);
    CHECK(*b.seed == 18446744073709551615ULL);
    CHECK(*b.truncation_level == 7.0);
    CHECK(b.gradient_mode == GradientMode::Bismut);
    CHECK(b.fd_scheme == FdScheme::ImexEuler);
    CHECK(b.output_dir == "a b");
    for (const auto& k : config_keys()) {
        const auto dot = k.find('.');
        if (dot == std::string::npos) {
            CHECK_MESSAGE((has(e, "\n" + k + " = ") || e.rfind(k + " = ", 0) == 0), k);
        } else {
            CHECK_MESSAGE(has(e, "[" + k.substr(0, dot) + "]"), k);
            CHECK_MESSAGE(has(e, "\n" + k.substr(dot + 1) + " = "), k);
        }
    }
}

TEST_CASE("command-line overrides win") {
    ConfigOverrides ov;
    ov.seed = 3;
    ov.particles = 123;
    ov.output_dir = "elsewhere";
    ov.gate_pct = 1.5;
    const RunConfig r = parse_config("seed = 1\nparticles = 5\noutput_dir = x\nreport.gate = 9\n", "cfg", ov);
    CHECK(*r.seed == 3);
    CHECK(r.particles == 123);
    CHECK(r.output_dir == "elsewhere");
    CHECK(r.gate_pct == 1.5);
}

TEST_CASE("missing file") {
    CHECK_THROWS_AS(load_config("/nonexistent/fkpde.cfg"), ConfigError);
}
