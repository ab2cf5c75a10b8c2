#include "fkpde/sde_engine.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace fkpde {

std::vector<double> sigma_from_a(std::span<const double> a, int d) {
    if (static_cast<int>(a.size()) != d * d) throw InvalidInput("sigma_from_a: size mismatch");
    double amax = 0.0;
    for (double v : a) amax = std::max(amax, std::abs(v));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < i; ++j)
            if (std::abs(a[i * d + j] - a[j * d + i]) > 1e-9 * std::max(1.0, amax))
                throw InvalidInput("diffusion matrix is not symmetric");
    std::vector<double> s(d * d, 0.0);
    if (d == 1) {
        if (!(a[0] > 0.0)) throw InvalidInput("diffusion matrix is not positive definite");
        s[0] = std::sqrt(2.0 * a[0]);
        return s;
    }
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = 2.0 * 0.5 * (a[i * d + j] + a[j * d + i]);
    bool diagonal = true;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j && m(i, j) != 0.0) diagonal = false;
    if (diagonal) {
        for (int i = 0; i < d; ++i) {
            if (!(m(i, i) > 0.0)) throw InvalidInput("diffusion matrix is not positive definite");
            s[i * d + i] = std::sqrt(m(i, i));
        }
        return s;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const auto& ev = es.eigenvalues();
    for (int i = 0; i < d; ++i)
        if (!(ev(i) > 0.0)) throw InvalidInput("diffusion matrix is not positive definite");
    const Eigen::MatrixXd root = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) s[i * d + j] = 0.5 * (root(i, j) + root(j, i));
    return s;
}

namespace {

std::vector<double> invert_small(std::span<const double> s, int d) {
    std::vector<double> out(d * d);
    if (d == 1) {
        out[0] = 1.0 / s[0];
        return out;
    }
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = s[i * d + j];
    const Eigen::MatrixXd inv = m.inverse();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out[i * d + j] = inv(i, j);
    return out;
}

/// Per-run machinery shared by run_batch and replay_flow.
class Stepper {
public:
    Stepper(const ProblemSpec& spec, const DriftExtra& drift, const EngineConfig& cfg, std::size_t lanes)
        : spec_(spec), drift_(drift), cfg_(cfg), k_(cfg.table()), d_(spec.dim_d), n_(lanes) {
        const std::size_t dd = static_cast<std::size_t>(d_) * d_;
        sig_.assign(dd * n_, 0.0);
        siginv_.assign(dd * n_, 0.0);
        constant_sigma_ = spec.diffusion_constant;
        if (constant_sigma_) {
            std::vector<double> origin(d_, 0.0);
            Points p0{origin, 1, d_};
            const auto a = eval_a(spec, 0.0, p0);
            const auto s = sigma_from_a(a, d_);
            const auto si = invert_small(s, d_);
            diag_sigma_ = true;
            for (int i = 0; i < d_; ++i)
                for (int j = 0; j < d_; ++j) {
                    std::fill_n(sig_.begin() + (i * d_ + j) * n_, n_, s[i * d_ + j]);
                    std::fill_n(siginv_.begin() + (i * d_ + j) * n_, n_, si[i * d_ + j]);
                    if (i != j && s[i * d_ + j] != 0.0) diag_sigma_ = false;
                }
        }
        drift_buf_.assign(d_ * n_, 0.0);
        tmp_.assign(d_ * n_, 0.0);
        has_drift_ = static_cast<bool>(spec.drift_b) || static_cast<bool>(drift);
    }

    double pde_time(int k) const { return cfg_.grid.horizon - cfg_.grid.knot(k); }

    void potential(int k, const Points& xw, std::span<double> v) {
        if (spec_.potential_V) spec_.potential_V(pde_time(k), xw, v);
    }
    void accumulate(std::span<double> fk, std::span<const double> v) {
        if (spec_.potential_V) k_.axpy(fk.data(), v.data(), cfg_.grid.step_size(), n_);
    }

    /// b + drift_extra at the given points into out (d*count).
    void eff_drift(int k, const Points& xw, std::span<double> out) {
        const std::size_t cnt = xw.count;
        if (spec_.drift_b)
            spec_.drift_b(pde_time(k), xw, out);
        else
            std::fill_n(out.begin(), d_ * cnt, 0.0);
        if (drift_) {
            if (extra_.size() < d_ * cnt) extra_.resize(d_ * cnt);
            std::span<double> e(extra_.data(), d_ * cnt);
            drift_(k, xw, e);
            for (std::size_t q = 0; q < d_ * cnt; ++q) out[q] = out[q] + e[q];
        }
    }

    void drift(int k, const Points& xw) { eff_drift(k, xw, drift_buf_); }

    void sigma_at(int k, const Points& xw, std::span<double> sig, std::span<double> siginv) {
        const std::size_t cnt = xw.count;
        const auto a = eval_a(spec_, pde_time(k), xw);
        if (d_ == 1) {
            for (std::size_t p = 0; p < cnt; ++p) {
                if (!(a[p] > 0.0)) throw InvalidInput("diffusion is not positive at a visited point");
                sig[p] = std::sqrt(2.0 * a[p]);
                if (!siginv.empty()) siginv[p] = 1.0 / sig[p];
            }
            return;
        }
        std::vector<double> ap(d_ * d_);
        for (std::size_t p = 0; p < cnt; ++p) {
            for (int q = 0; q < d_ * d_; ++q) ap[q] = a[q * cnt + p];
            const auto s = sigma_from_a(ap, d_);
            for (int q = 0; q < d_ * d_; ++q) sig[q * cnt + p] = s[q];
            if (!siginv.empty()) {
                const auto si = invert_small(s, d_);
                for (int q = 0; q < d_ * d_; ++q) siginv[q * cnt + p] = si[q];
            }
        }
    }

    void sigma(int k, const Points& xw, bool need_inverse) {
        if (constant_sigma_) return;
        sigma_at(k, xw, sig_, need_inverse ? std::span<double>(siginv_) : std::span<double>());
    }

    /// Bismut increment (left endpoint) then first-variation update of J.
    void flow(int k, const Points& xw, std::span<double> J, std::span<double> bis, std::span<const double> xi) {
        const double dt = cfg_.grid.step_size();
        const double sq = std::sqrt(dt);
        const std::size_t n = n_;
        const int d = d_;
        // Bismut: B_j += <sigma^-1 J e_j, xi sqrt(dt)>
        for (int j = 0; j < d; ++j)
            for (std::size_t p = 0; p < n; ++p) {
                double acc = 0.0;
                for (int i = 0; i < d; ++i) {
                    double w = 0.0;
                    for (int l = 0; l < d; ++l) w = w + siginv_[(i * d + l) * n + p] * J[(l * d + j) * n + p];
                    acc = acc + w * (xi[i * n + p] * sq);
                }
                bis[j * n + p] = bis[j * n + p] + acc;
            }

        const bool need_db = has_drift_;
        const bool need_ds = !constant_sigma_;
        if (!need_db && !need_ds) return;

        // Central-difference Jacobians at the wrapped points.
        std::vector<double> h(n);
        for (std::size_t p = 0; p < n; ++p) {
            double r2 = 0.0;
            for (int a = 0; a < d; ++a) r2 += xw(a, p) * xw(a, p);
            h[p] = cfg_.h_jac * (1.0 + std::sqrt(r2));
        }
        std::vector<double> xp(d * n), xm(d * n);
        std::vector<double> db(need_db ? d * d * n : 0), ds(need_ds ? d * d * d * n : 0);
        std::vector<double> fp(d * d * n), fm(d * d * n), ip, im;
        for (int l = 0; l < d; ++l) {
            for (int a = 0; a < d; ++a)
                for (std::size_t p = 0; p < n; ++p) {
                    const double off = (a == l) ? h[p] : 0.0;
                    xp[a * n + p] = xw(a, p) + off;
                    xm[a * n + p] = xw(a, p) - off;
                }
            k_.wrap_unit(xp.data(), d * n, xp.data());
            k_.wrap_unit(xm.data(), d * n, xm.data());
            Points pp{xp, n, d}, pm{xm, n, d};
            if (need_db) {
                eff_drift(k, pp, std::span<double>(fp.data(), d * n));
                eff_drift(k, pm, std::span<double>(fm.data(), d * n));
                for (int i = 0; i < d; ++i)
                    for (std::size_t p = 0; p < n; ++p)
                        db[(i * d + l) * n + p] = (fp[i * n + p] - fm[i * n + p]) / (2.0 * h[p]);
            }
            if (need_ds) {
                sigma_at(k, pp, fp, {});
                sigma_at(k, pm, fm, {});
                for (int q = 0; q < d * d; ++q)
                    for (std::size_t p = 0; p < n; ++p)
                        ds[(q * d + l) * n + p] = (fp[q * n + p] - fm[q * n + p]) / (2.0 * h[p]);
            }
        }
        std::vector<double> Jn(J.begin(), J.end());
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                for (std::size_t p = 0; p < n; ++p) {
                    double inc = 0.0;
                    if (need_db) {
                        double s = 0.0;
                        for (int l = 0; l < d; ++l) s = s + db[(i * d + l) * n + p] * J[(l * d + j) * n + p];
                        inc = inc + s * dt;
                    }
                    if (need_ds) {
                        for (int q = 0; q < d; ++q) {
                            double s = 0.0;
                            for (int l = 0; l < d; ++l)
                                s = s + ds[((i * d + q) * d + l) * n + p] * J[(l * d + j) * n + p];
                            inc = inc + s * (xi[q * n + p] * sq);
                        }
                    }
                    Jn[(i * d + j) * n + p] = J[(i * d + j) * n + p] + inc;
                }
        std::copy(Jn.begin(), Jn.end(), J.begin());
    }

    void advance(std::span<double> x, std::span<const double> xi) {
        const double dt = cfg_.grid.step_size();
        const double sq = std::sqrt(dt);
        const std::size_t n = n_;
        if (d_ == 1 || diag_sigma_) {
            for (int i = 0; i < d_; ++i)
                k_.em_update(x.data() + i * n, drift_buf_.data() + i * n, sig_.data() + (i * d_ + i) * n,
                             xi.data() + i * n, n, dt, sq);
            return;
        }
        if (ones_.size() < n) ones_.assign(n, 1.0);
        for (int i = 0; i < d_; ++i) {
            for (std::size_t p = 0; p < n; ++p) {
                double s = 0.0;
                for (int j = 0; j < d_; ++j) s = s + sig_[(i * d_ + j) * n + p] * xi[j * n + p];
                tmp_[p] = s;
            }
            k_.em_update(x.data() + i * n, drift_buf_.data() + i * n, tmp_.data(), ones_.data(), n, dt, sq);
        }
    }

    const kernels::Table& table() const { return k_; }

private:
    const ProblemSpec& spec_;
    const DriftExtra& drift_;
    const EngineConfig& cfg_;
    const kernels::Table& k_;
    int d_;
    std::size_t n_;
    bool constant_sigma_ = false, diag_sigma_ = false, has_drift_ = false;
    std::vector<double> sig_, siginv_, drift_buf_, tmp_, extra_, ones_;
};

void wrap_state(const kernels::Table& k, Batch& b) { k.wrap_unit(b.x.data(), b.x.size(), b.xw.data()); }

void draw_normals(const RngStream& rng, const EngineConfig& cfg, const RunRequest& req, int step, Batch& b,
                  std::vector<double>& tmp, std::vector<double>& scratch) {
    const std::size_t pb = b.per_block;
    const int d = b.d;
    tmp.resize(d * pb);
    scratch.resize(pb);
    const auto& k = cfg.table();
    for (std::size_t blk = 0; blk < b.blocks; ++blk) {
        if (!cfg.common_nodes || blk == 0) {
            const std::uint32_t node = cfg.common_nodes ? 0u : b.block_node[blk];
            rng.normals(req.slice_key, node, static_cast<std::uint32_t>(step), b.first, pb, d, tmp, scratch, k);
        }
        for (int a = 0; a < d; ++a)
            std::copy_n(tmp.begin() + a * pb, pb, b.xi.begin() + a * b.lanes + blk * pb);
    }
}

}  // namespace

void init_batch(Batch& b, int d, std::span<const std::array<double, 3>> start, std::span<const std::uint32_t> nodes,
                std::uint32_t first, std::size_t per_block, bool derivatives) {
    b.d = d;
    b.blocks = start.size();
    b.per_block = per_block;
    b.lanes = b.blocks * per_block;
    b.first = first;
    b.block_node.assign(nodes.begin(), nodes.end());
    b.x.resize(d * b.lanes);
    b.xw.resize(d * b.lanes);
    for (std::size_t blk = 0; blk < b.blocks; ++blk)
        for (int a = 0; a < d; ++a)
            std::fill_n(b.x.begin() + a * b.lanes + blk * per_block, per_block, start[blk][a]);
    b.fk.assign(b.lanes, 0.0);
    b.v.assign(b.lanes, 0.0);
    b.xi.assign(d * b.lanes, 0.0);
    if (derivatives) {
        b.J.assign(d * d * b.lanes, 0.0);
        for (int i = 0; i < d; ++i) std::fill_n(b.J.begin() + (i * d + i) * b.lanes, b.lanes, 1.0);
        b.bis.assign(d * b.lanes, 0.0);
    } else {
        b.J.clear();
        b.bis.clear();
    }
}

void run_batch(const ProblemSpec& spec, const DriftExtra& drift, const EngineConfig& cfg, const RngStream& rng,
               const RunRequest& req, Batch& b, StepObserver& obs) {
    if (req.start_step < 0 || req.end_step > cfg.grid.n_steps || req.start_step > req.end_step)
        throw InvalidInput("run_batch: step range outside the grid");
    if (req.derivatives && b.J.empty()) throw InvalidInput("run_batch: batch initialised without derivatives");
    Stepper st(spec, drift, cfg, b.lanes);
    const auto& k = cfg.table();
    std::vector<double> tmp, scratch;
    const Points xw = b.wrapped();
    for (int step = req.start_step; step < req.end_step; ++step) {
        wrap_state(k, b);
        st.potential(step, xw, b.v);
        obs.at_step(step, b);
        st.accumulate(b.fk, b.v);
        st.drift(step, xw);
        st.sigma(step, xw, req.derivatives);
        draw_normals(rng, cfg, req, step, b, tmp, scratch);
        if (req.derivatives) st.flow(step, xw, b.J, b.bis, b.xi);
        st.advance(b.x, b.xi);
        for (std::size_t q = 0; q < b.x.size(); ++q)
            if (!std::isfinite(b.x[q]))
                throw BlowUp("non-finite particle state", cfg.grid.horizon - cfg.grid.knot(step + 1));
        for (std::size_t q = 0; q < b.lanes; ++q)
            if (std::isnan(b.fk[q])) throw BlowUp("non-finite potential exponent", cfg.grid.horizon - cfg.grid.knot(step + 1));
    }
    wrap_state(k, b);
    obs.at_end(req.end_step, b);
}

void parallel_for(int workers, std::size_t count, const std::function<void(std::size_t)>& fn) {
    const std::size_t w = std::max(1, workers);
    if (w == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errs(w);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < w; ++t)
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t * count / w; i < (t + 1) * count / w; ++i) fn(i);
            } catch (...) {
                errs[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

namespace {

struct RetainObserver : StepObserver {
    PathEnsemble& e;
    std::size_t offset;  // particle index of lane 0
    std::size_t cursor = 0;
    bool log;

    RetainObserver(PathEnsemble& ens, std::size_t off, bool lg) : e(ens), offset(off), log(lg) {}

    void keep(int k, const Batch& b) {
        while (cursor < e.retained_steps.size() && e.retained_steps[cursor] < k) ++cursor;
        if (cursor >= e.retained_steps.size() || e.retained_steps[cursor] != k) return;
        const std::size_t r = cursor;
        const std::size_t N = e.particles, n = b.lanes;
        const int d = b.d;
        for (int a = 0; a < d; ++a) std::copy_n(b.x.begin() + a * n, n, e.states[r].begin() + a * N + offset);
        std::copy_n(b.fk.begin(), n, e.fk_exponent[r].begin() + offset);
        if (e.has_derivatives) {
            for (int q = 0; q < d * d; ++q) std::copy_n(b.J.begin() + q * n, n, e.flows[r].begin() + q * N + offset);
            for (int j = 0; j < d; ++j)
                std::copy_n(b.bis.begin() + j * n, n, e.bismut_integral[r].begin() + j * N + offset);
        }
    }
    void log_noise(int k, const Batch& b) {
        if (!log || k <= e.start_step) return;
        const std::size_t N = e.particles, n = b.lanes;
        auto& dst = e.xi_log[k - 1 - e.start_step];
        for (int a = 0; a < b.d; ++a) std::copy_n(b.xi.begin() + a * n, n, dst.begin() + a * N + offset);
    }
    void at_step(int k, const Batch& b) override {
        log_noise(k, b);
        keep(k, b);
    }
    void at_end(int k, const Batch& b) override {
        log_noise(k, b);
        keep(k, b);
    }
};

}  // namespace

PathEnsemble simulate_ensemble(const ProblemSpec& spec, const DriftExtra& drift, int start_step,
                               std::array<double, 3> x, const EngineConfig& cfg, std::size_t particles,
                               const RngStream& rng, const EnsembleOptions& opts) {
    validate(spec);
    const int n_steps = cfg.grid.n_steps;
    if (start_step < 0 || start_step > n_steps) throw InvalidInput("launch index outside the time grid");
    if (particles < 1) throw InvalidInput("particles must be at least 1");
    const int d = spec.dim_d;
    PathEnsemble e;
    e.dim = d;
    e.start_step = start_step;
    e.start_point = x;
    e.particles = particles;
    e.has_derivatives = opts.derivatives;
    if (opts.retain.empty()) {
        for (int k = start_step; k <= n_steps; ++k) e.retained_steps.push_back(k);
    } else {
        e.retained_steps = opts.retain;
        std::sort(e.retained_steps.begin(), e.retained_steps.end());
        e.retained_steps.erase(std::unique(e.retained_steps.begin(), e.retained_steps.end()), e.retained_steps.end());
        for (int k : e.retained_steps)
            if (k < start_step || k > n_steps) throw InvalidInput("retained step outside [launch, T]");
    }
    const int end = e.retained_steps.back();
    const std::size_t R = e.retained_steps.size();
    e.states.assign(R, std::vector<double>(d * particles));
    e.fk_exponent.assign(R, std::vector<double>(particles));
    if (opts.derivatives) {
        e.flows.assign(R, std::vector<double>(d * d * particles));
        e.bismut_integral.assign(R, std::vector<double>(d * particles));
    }
    if (opts.log_noise) e.xi_log.assign(end - start_step, std::vector<double>(d * particles));

    const std::size_t chunk = 4096;
    const std::size_t nchunks = (particles + chunk - 1) / chunk;
    parallel_for(cfg.workers, nchunks, [&](std::size_t c) {
        const std::size_t first = c * chunk;
        const std::size_t cnt = std::min(chunk, particles - first);
        Batch b;
        const std::array<std::array<double, 3>, 1> start{x};
        const std::array<std::uint32_t, 1> nodes{opts.node_key};
        init_batch(b, d, start, nodes, static_cast<std::uint32_t>(first), cnt, opts.derivatives);
        RetainObserver obs(e, first, opts.log_noise);
        // Lanes of this chunk are written at offset `first` with stride N.
        RunRequest req{static_cast<std::uint32_t>(start_step), start_step, end, opts.derivatives};
        EngineConfig local = cfg;
        local.common_nodes = false;
        run_batch(spec, drift, local, rng, req, b, obs);
    });
    return e;
}

std::vector<std::vector<double>> replay_flow(const ProblemSpec& spec, const DriftExtra& drift, const EngineConfig& cfg,
                                             const PathEnsemble& e, std::size_t particle) {
    if (e.xi_log.empty()) throw InvalidInput("replay_flow needs logged noise");
    const int d = e.dim;
    const std::size_t N = e.particles;
    const int steps = static_cast<int>(e.xi_log.size());
    if (static_cast<int>(e.retained_steps.size()) != steps + 1) throw InvalidInput("replay_flow needs every step");
    Stepper st(spec, drift, cfg, 1);
    const auto& k = cfg.table();
    std::vector<double> J(d * d, 0.0), bis(d, 0.0), x(d), xw(d), xi(d);
    for (int i = 0; i < d; ++i) J[i * d + i] = 1.0;
    std::vector<std::vector<double>> out;
    out.push_back(J);
    for (int s = 0; s < steps; ++s) {
        const int step = e.start_step + s;
        for (int a = 0; a < d; ++a) {
            x[a] = e.states[s][a * N + particle];
            xi[a] = e.xi_log[s][a * N + particle];
        }
        k.wrap_unit(x.data(), d, xw.data());
        Points p{xw, 1, d};
        st.sigma(step, p, true);
        st.flow(step, p, J, bis, xi);
        out.push_back(J);
    }
    return out;
}

std::vector<double> directional_flow(const PathEnsemble& e, std::size_t r, std::size_t p, std::span<const double> v) {
    if (!e.has_derivatives) throw InvalidInput("ensemble has no derivative flow");
    const int d = e.dim;
    const std::size_t N = e.particles;
    std::vector<double> out(d, 0.0);
    for (int i = 0; i < d; ++i) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) s = s + e.flows[r][(i * d + j) * N + p] * v[j];
        out[i] = s;
    }
    return out;
}

ScalingReport derivative_scaling_check(const PathEnsemble& e, std::span<const double> v, double c, double p) {
    if (!e.has_derivatives) throw InvalidInput("ensemble has no derivative flow");
    const int d = e.dim;
    if (static_cast<int>(v.size()) != d) throw InvalidInput("direction has wrong dimension");
    std::vector<double> cv(d);
    double vn = 0.0;
    for (int j = 0; j < d; ++j) {
        cv[j] = c * v[j];
        vn += v[j] * v[j];
    }
    vn = std::sqrt(vn);
    ScalingReport rep;
    rep.bitwise = true;
    for (std::size_t r = 0; r < e.retained_steps.size(); ++r) {
        double moment = 0.0;
        for (std::size_t q = 0; q < e.particles; ++q) {
            const auto a = directional_flow(e, r, q, cv);
            const auto b = directional_flow(e, r, q, v);
            double nrm = 0.0;
            for (int i = 0; i < d; ++i) {
                if (!(a[i] == c * b[i])) rep.bitwise = false;
                nrm += b[i] * b[i];
            }
            moment += std::pow(std::sqrt(nrm), p);
        }
        moment /= static_cast<double>(e.particles);
        if (vn > 0.0) rep.moment_ratio = std::max(rep.moment_ratio, moment / std::pow(vn, p));
    }
    return rep;
}

}  // namespace fkpde
