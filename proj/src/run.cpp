#include "fkpde/run.hpp"

#include <chrono>
#include <filesystem>
#include <ostream>

#include "fkpde/fd_oracle.hpp"
#include "fkpde/fixed_point.hpp"
#include "fkpde/report.hpp"
#include "fkpde/snapshot.hpp"
#include "fkpde/transforms.hpp"

namespace fkpde {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Session {
    std::string verb;
    const RunConfig& cfg;
    std::ostream& log;
    fs::path dir;
    std::vector<std::pair<std::string, std::string>> notes;
    std::vector<std::pair<std::string, double>> timings;

    std::string path(const std::string& name) const { return (dir / name).string(); }
    void note(const std::string& k, const std::string& v) { notes.emplace_back(k, v); }
    void flush() {
        write_manifest(path("manifest.txt"), verb, cfg, notes);
        if (!timings.empty()) write_timings(path("timings.txt"), timings);
    }
};

struct McRun {
    SolveResult result;
    GridSeries u;  ///< PDE time
    std::vector<double> stderr_values;
};

GridSeries stderr_series(const PsiField& psi) {
    PsiField s = psi;
    s.values = psi.stderr_values;
    s.gradients.clear();
    return as_pde_solution(s);
}

McRun run_mc(Session& S, const ProblemSpec& spec) {
    const SolverConfig sc = S.cfg.solver();
    const RngStream rng{*S.cfg.seed};
    const auto t0 = Clock::now();
    McRun out;
    if (spec.g_spatial_only) {
        S.log << "picard_solve: " << spec.name << ", " << sc.particles << " particles, " << sc.nodes << " nodes\n";
        out.result = picard_solve(spec, sc, rng);
    } else {
        S.log << "outer_psi_solve: " << spec.name << "\n";
        out.result = outer_psi_solve(spec, sc, rng);
    }
    S.timings.emplace_back("mc_total_seconds", seconds_since(t0));
    const PicardState& st = out.result.state;
    for (std::size_t i = 0; i < st.wall_seconds.size(); ++i)
        S.timings.emplace_back("mc_iterate_" + std::to_string(i) + "_seconds", st.wall_seconds[i]);
    S.note("picard.status", to_string(st.status));
    S.note("picard.iterations", std::to_string(st.iterate_index));
    if (!st.distance_history.empty()) S.note("picard.final_distance", fmt(st.distance_history.back()));
    S.note("picard.k_bound", fmt(st.k_bound));
    if (st.blowup_time) S.note("blowup_time", fmt(*st.blowup_time));
    S.log << "  status " << to_string(st.status) << " after " << st.iterate_index << " iterate(s)\n";
    if (st.status != PicardStatus::BlowUp) {
        out.u = as_pde_solution(out.result.psi);
        out.stderr_values = stderr_series(out.result.psi).values;
    }
    return out;
}

void write_mc(Session& S, const McRun& mc, const std::string& stem) {
    write_diagnostics(S.path("diagnostics.csv"), mc.result.state);
    if (mc.result.state.status == PicardStatus::BlowUp) return;
    write_snapshot(mc.result.psi, S.path(stem + ".psif"));
    write_field_csv(S.path(stem + ".csv"), mc.u, mc.stderr_values);
    if (S.cfg.write_dat) write_dat(S.path(stem + ".dat"), mc.u);
}

FdSolution run_fd(Session& S, const ProblemSpec& spec, const std::string& stem) {
    const Lattice lat(spec.dim_d, S.cfg.nodes);
    const auto t0 = Clock::now();
    S.log << "fd_solve: " << spec.name << " (" << to_string(S.cfg.fd_scheme) << ")\n";
    FdSolution fd = fd_solve(spec, lat, S.cfg.fd_options());
    S.timings.emplace_back("fd_seconds", seconds_since(t0));
    S.note("fd.dt_used", fmt(fd.dt));
    S.note("fd.steps", std::to_string(fd.steps));
    S.note("fd.cfl_max_stable", fmt(fd.cfl.max_stable));
    write_snapshot(field_from_series(fd.u), S.path(stem + ".psif"));
    write_field_csv(S.path(stem + ".csv"), fd.u);
    if (S.cfg.write_dat) write_dat(S.path(stem + ".dat"), fd.u);
    return fd;
}

int status_code(PicardStatus s) {
    switch (s) {
        case PicardStatus::Converged: return kExitPass;
        case PicardStatus::BlowUp: return kExitBlowUp;
        default: return kExitNonConvergence;
    }
}

int gate(Session& S, const McRun& mc, const FdSolution& fd) {
    const ErrorTable e = compare_series(mc.u, mc.stderr_values, fd.u);
    write_error_table(S.path("error_table.csv"), e);
    const double pct = 100.0 * e.rel_sup();
    S.note("compare.rel_sup_diff_pct", fmt(pct));
    S.note("compare.gate_pct", fmt(S.cfg.gate_pct));
    const bool ok = pct <= S.cfg.gate_pct;
    S.note("compare.result", ok ? "pass" : "fail");
    S.log << "relative sup difference " << pct << "% (gate " << S.cfg.gate_pct << "%): " << (ok ? "pass" : "FAIL")
          << "\n";
    return ok ? kExitPass : kExitGateFailed;
}

void flag_alpha(Session& S) {
    if (S.cfg.problem != "outer-test") return;
    const bool above = S.cfg.coefficients.alpha > S.cfg.alpha_threshold;
    S.note("alpha_check", above ? "alpha above threshold; outer iteration may diverge" : "ok");
    if (above) S.log << "warning: alpha " << S.cfg.coefficients.alpha << " exceeds threshold " << S.cfg.alpha_threshold << "\n";
}

int verb_solve_mc(Session& S, const ProblemSpec& spec) {
    flag_alpha(S);
    const McRun mc = run_mc(S, spec);
    write_mc(S, mc, "u_mc");
    return status_code(mc.result.state.status);
}

int verb_solve_fd(Session& S, const ProblemSpec& spec) {
    run_fd(S, spec, "u_fd");
    return kExitPass;
}

int verb_compare(Session& S, const ProblemSpec& spec) {
    flag_alpha(S);
    const McRun mc = run_mc(S, spec);
    write_mc(S, mc, "u_mc");
    const int st = status_code(mc.result.state.status);
    if (st == kExitBlowUp) return st;
    const FdSolution fd = run_fd(S, spec, "u_fd");
    const int g = gate(S, mc, fd);
    return st != kExitPass ? st : g;
}

int verb_diagnose(Session& S, const ProblemSpec& spec) {
    ProbeOptions po;
    po.grid.nodes = S.cfg.nodes;
    po.grid.time_slices = S.cfg.slices;
    po.alpha_threshold = S.cfg.alpha_threshold;
    const KatoPair pair{};
    const AssumptionReport r = probe_assumptions(spec, pair, 4096, po);
    std::vector<std::vector<std::string>> rows = {
        {"kato_pair_admissible", kato_class_check(spec.dim_d, pair) ? "1" : "0"},
        {"kato_norm_V", fmt(r.kato_norm_V)},
        {"kato_norm_Fbar", fmt(r.kato_norm_Fbar)},
        {"kato_norm_gbar", fmt(r.kato_norm_gbar)},
        {"k_constant", fmt(r.k_constant)},
        {"lipschitz_F_probe", fmt(r.lipschitz_F_probe)},
        {"oscillation_F_probe", fmt(r.oscillation_F_probe)},
        {"alpha_probe", fmt(r.alpha_probe)},
        {"log_growth_probe", fmt(r.log_growth_probe)},
        {"lipschitz_b_probe", fmt(r.lipschitz_b_probe)},
        {"grad_a_probe", fmt(r.grad_a_probe)},
        {"ellipticity_min", fmt(r.ellipticity_min)},
        {"ellipticity_max", fmt(r.ellipticity_max)},
        {"u0_cb1", fmt(r.u0_cb1)}};
    for (const auto& [k, v] : r.pass_flags) rows.push_back({"pass." + k, v ? "1" : "0"});
    write_csv(S.path("assumptions.csv"), {"quantity", "value"}, rows);
    S.note("diagnose.result", r.failure ? "fail: " + *r.failure : "all probes pass");
    S.log << (r.failure ? "assumption probe failed: " + *r.failure : std::string("all assumption probes pass")) << "\n";
    return kExitPass;
}

int verb_kpz(Session& S) {
    const KpzProblem k = make_kpz_problem(S.cfg.coefficients);
    S.note("kpz.beta", fmt(k.beta));
    const std::string& be = S.cfg.kpz_backend;
    McRun mc;
    if (be == "mc" || be == "both") {
        const ProblemSpec v = build_transformed_problem(k);
        mc = run_mc(S, v);
        write_diagnostics(S.path("diagnostics.csv"), mc.result.state);
        const int st = status_code(mc.result.state.status);
        if (st == kExitBlowUp) return st;
        write_snapshot(mc.result.psi, S.path("v_mc.psif"));
        const PsiField u = invert_solution(mc.result.psi, k.beta);
        mc.u = as_pde_solution(u);
        mc.stderr_values = stderr_series(u).values;
        write_snapshot(u, S.path("u_mc.psif"));
        write_field_csv(S.path("u_mc.csv"), mc.u, mc.stderr_values);
        if (S.cfg.write_dat) write_dat(S.path("u_mc.dat"), mc.u);
        if (be == "mc") return st;
        if (st != kExitPass) return st;
    }
    const FdSolution fd = run_fd(S, build_direct_problem(k), "u_fd");
    if (be == "fd") return kExitPass;
    return gate(S, mc, fd);
}

}  // namespace

ProblemSpec problem_from_config(const RunConfig& cfg) {
    if (cfg.problem == "kpz") return build_transformed_problem(make_kpz_problem(cfg.coefficients));
    return make_problem(cfg.problem, cfg.coefficients);
}

int run_verb(const std::string& verb, const RunConfig& cfg, std::ostream& log) {
    if (verb != "solve-mc" && verb != "solve-fd" && verb != "compare" && verb != "diagnose" && verb != "kpz") {
        log << "error: unknown verb '" << verb << "'\n";
        return kExitConfig;
    }
    Session S{verb, cfg, log, fs::path(cfg.output_dir), {}, {}};
    try {
        fs::create_directories(S.dir);
        S.flush();  // partial manifest in case the solver fails
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitInternal;
    }

    ProblemSpec spec;
    if (verb != "kpz") {
        try {
            spec = problem_from_config(cfg);
            validate(spec);
            cfg.solver().check();
        } catch (const std::exception& e) {
            log << "config error: " << e.what() << "\n";
            S.note("error", e.what());
            S.flush();
            return kExitConfig;
        }
    }

    int code = kExitInternal;
    try {
        if (verb == "solve-mc") code = verb_solve_mc(S, spec);
        else if (verb == "solve-fd") code = verb_solve_fd(S, spec);
        else if (verb == "compare") code = verb_compare(S, spec);
        else if (verb == "diagnose") code = verb_diagnose(S, spec);
        else code = verb_kpz(S);
    } catch (const BlowUp& e) {
        log << "blow-up: " << e.what() << "\n";
        S.note("error", e.what());
        S.note("blowup_time", fmt(e.time));
        code = kExitBlowUp;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        S.note("error", e.what());
        code = kExitInternal;
    }
    S.note("exit_code", std::to_string(code));
    try {
        S.flush();
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitInternal;
    }
    return code;
}

}  // namespace fkpde
