#include "fkpde/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fkpde {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

struct Ctx {
    const std::string& source;
    int line;
    std::string key;

    [[noreturn]] void fail(const std::string& msg) const {
        std::ostringstream os;
        os << source << ":" << line << ": " << key << ": " << msg;
        throw ConfigError(os.str());
    }
};

double to_double(const std::string& v, const Ctx& c) {
    double out = 0.0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) c.fail("expected a number, got '" + v + "'");
    return out;
}

template <class Int>
Int to_int(const std::string& v, const Ctx& c) {
    Int out{};
    auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) c.fail("expected an integer, got '" + v + "'");
    return out;
}

bool to_bool(const std::string& v, const Ctx& c) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    c.fail("expected true or false, got '" + v + "'");
}

struct Key {
    std::string name;
    std::function<void(RunConfig&, const std::string&, const Ctx&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class M>
Key dbl(std::string name, M RunConfig::*member) {
    return {name, [member](RunConfig& r, const std::string& v, const Ctx& c) { r.*member = to_double(v, c); },
            [member](const RunConfig& r) { return fmt_double(r.*member); }};
}

Key coef_dbl(std::string name, double CatalogOptions::*member) {
    return {"coefficients." + name,
            [member](RunConfig& r, const std::string& v, const Ctx& c) { r.coefficients.*member = to_double(v, c); },
            [member](const RunConfig& r) { return fmt_double(r.coefficients.*member); }};
}

Key coef_str(std::string name, std::string CatalogOptions::*member) {
    return {"coefficients." + name,
            [member](RunConfig& r, const std::string& v, const Ctx&) { r.coefficients.*member = v; },
            [member](const RunConfig& r) { return r.coefficients.*member; }};
}

template <class Int, class Owner>
Key integer(std::string name, Int Owner::*member) {
    if constexpr (std::is_same_v<Owner, RunConfig>)
        return {name, [member](RunConfig& r, const std::string& v, const Ctx& c) { r.*member = to_int<Int>(v, c); },
                [member](const RunConfig& r) { return std::to_string(r.*member); }};
    else
        return {"coefficients." + name,
                [member](RunConfig& r, const std::string& v, const Ctx& c) {
                    r.coefficients.*member = to_int<Int>(v, c);
                },
                [member](const RunConfig& r) { return std::to_string(r.coefficients.*member); }};
}

const std::vector<Key>& keys() {
    static const std::vector<Key> k = [] {
        std::vector<Key> v;
        v.push_back({"problem", [](RunConfig& r, const std::string& s, const Ctx&) { r.problem = s; },
                     [](const RunConfig& r) { return r.problem; }});
        v.push_back({"seed",
                     [](RunConfig& r, const std::string& s, const Ctx& c) { r.seed = to_int<std::uint64_t>(s, c); },
                     [](const RunConfig& r) { return r.seed ? std::to_string(*r.seed) : std::string(); }});
        v.push_back(integer("particles", &RunConfig::particles));
        v.push_back({"gradient_mode",
                     [](RunConfig& r, const std::string& s, const Ctx& c) {
                         try {
                             r.gradient_mode = gradient_mode_from(s);
                         } catch (const std::exception& e) {
                             c.fail(e.what());
                         }
                     },
                     [](const RunConfig& r) { return std::string(to_string(r.gradient_mode)); }});
        v.push_back({"truncation_level",
                     [](RunConfig& r, const std::string& s, const Ctx& c) {
                         if (s == "none")
                             r.truncation_level.reset();
                         else
                             r.truncation_level = to_double(s, c);
                     },
                     [](const RunConfig& r) {
                         return r.truncation_level ? fmt_double(*r.truncation_level) : std::string("none");
                     }});
        v.push_back(dbl("alpha_threshold", &RunConfig::alpha_threshold));
        v.push_back({"output_dir", [](RunConfig& r, const std::string& s, const Ctx&) { r.output_dir = s; },
                     [](const RunConfig& r) { return r.output_dir; }});

        v.push_back(integer("d", &CatalogOptions::d));
        v.push_back(coef_dbl("T", &CatalogOptions::T));
        v.push_back(coef_dbl("diffusion", &CatalogOptions::diffusion));
        v.push_back(coef_dbl("amplitude", &CatalogOptions::amplitude));
        v.push_back(integer("mode", &CatalogOptions::mode));
        v.push_back(coef_dbl("potential", &CatalogOptions::potential));
        v.push_back(coef_dbl("V_amp", &CatalogOptions::V_amp));
        v.push_back(coef_dbl("g_amp", &CatalogOptions::g_amp));
        v.push_back(coef_dbl("F_amp", &CatalogOptions::F_amp));
        v.push_back(coef_dbl("alpha", &CatalogOptions::alpha));
        v.push_back(coef_dbl("beta", &CatalogOptions::beta));
        v.push_back(coef_str("V_csv", &CatalogOptions::V_csv));
        v.push_back(coef_str("g_csv", &CatalogOptions::g_csv));
        v.push_back(coef_str("u0_csv", &CatalogOptions::u0_csv));

        v.push_back(integer("lattice.nodes", &RunConfig::nodes));
        v.push_back(integer("lattice.n_steps", &RunConfig::n_steps));
        v.push_back(integer("lattice.slices", &RunConfig::slices));

        v.push_back(integer("mc.block", &RunConfig::block));
        v.push_back(integer("mc.workers", &RunConfig::workers));
        v.push_back({"mc.common_nodes",
                     [](RunConfig& r, const std::string& s, const Ctx& c) { r.common_nodes = to_bool(s, c); },
                     [](const RunConfig& r) { return std::string(r.common_nodes ? "true" : "false"); }});

        v.push_back(dbl("picard.lambda", &RunConfig::lambda));
        v.push_back(dbl("picard.tol", &RunConfig::tol));
        v.push_back(integer("picard.max_iter", &RunConfig::max_iter));

        v.push_back({"fd.scheme",
                     [](RunConfig& r, const std::string& s, const Ctx& c) {
                         try {
                             r.fd_scheme = fd_scheme_from(s);
                         } catch (const std::exception& e) {
                             c.fail(e.what());
                         }
                     },
                     [](const RunConfig& r) { return std::string(to_string(r.fd_scheme)); }});
        v.push_back(dbl("fd.dt", &RunConfig::fd_dt));
        v.push_back(dbl("fd.cfl", &RunConfig::fd_cfl));

        v.push_back({"kpz.backend", [](RunConfig& r, const std::string& s, const Ctx&) { r.kpz_backend = s; },
                     [](const RunConfig& r) { return r.kpz_backend; }});

        v.push_back(dbl("report.gate", &RunConfig::gate_pct));
        v.push_back({"report.dat", [](RunConfig& r, const std::string& s, const Ctx& c) { r.write_dat = to_bool(s, c); },
                     [](const RunConfig& r) { return std::string(r.write_dat ? "true" : "false"); }});
        return v;
    }();
    return k;
}

// Aliases with the section spelled differently from the echo.
std::string canonical(const std::string& key) {
    static const std::map<std::string, std::string> alias = {
        {"nodes", "lattice.nodes"},     {"n_steps", "lattice.n_steps"}, {"lattice.particles", "particles"},
        {"mc.particles", "particles"},  {"mc.seed", "seed"},            {"mc.gradient_mode", "gradient_mode"},
        {"output.dir", "output_dir"},   {"report.output_dir", "output_dir"}};
    auto it = alias.find(key);
    return it == alias.end() ? key : it->second;
}

void require(bool ok, const std::string& source, const std::string& msg) {
    if (!ok) throw ConfigError(source + ": " + msg);
}

void validate_config(const RunConfig& r, const std::string& src) {
    if (!r.seed) throw ConfigError("seed required");
    const auto names = catalog_names();
    require(r.problem == "kpz" || std::find(names.begin(), names.end(), r.problem) != names.end(), src,
            "unknown problem '" + r.problem + "'");
    require(r.coefficients.d >= 1 && r.coefficients.d <= 3, src, "coefficients.d must be 1, 2 or 3");
    require(r.coefficients.T > 0.0, src, "coefficients.T must be > 0");
    require(r.coefficients.diffusion > 0.0, src, "coefficients.diffusion must be > 0");
    require(r.coefficients.mode >= 1, src, "coefficients.mode must be >= 1");
    require(r.nodes >= 1 && r.n_steps >= 1 && r.particles >= 1 && r.block >= 1 && r.workers >= 1 && r.max_iter >= 1,
            src, "all counts must be >= 1");
    require(r.slices >= 2, src, "lattice.slices must be >= 2");
    require(r.n_steps % (r.slices - 1) == 0, src, "lattice.n_steps must be a multiple of lattice.slices - 1");
    require(r.tol > 0.0, src, "picard.tol must be > 0");
    require(!r.truncation_level || *r.truncation_level >= 1.0, src, "truncation_level must be >= 1");
    require(r.alpha_threshold > 0.0, src, "alpha_threshold must be > 0");
    require(r.fd_dt >= 0.0 && r.fd_cfl > 0.0, src, "fd.dt must be >= 0 and fd.cfl > 0");
    require(r.gate_pct > 0.0, src, "report.gate must be > 0");
    require(r.kpz_backend == "mc" || r.kpz_backend == "fd" || r.kpz_backend == "both", src,
            "kpz.backend must be mc, fd or both");
    require(!r.output_dir.empty(), src, "output_dir must not be empty");
}

}  // namespace

SolverConfig RunConfig::solver() const {
    SolverConfig s;
    s.nodes = nodes;
    s.n_steps = n_steps;
    s.slices = slices;
    s.particles = particles;
    s.block = block;
    s.common_nodes = common_nodes;
    s.workers = workers;
    s.gradient_mode = gradient_mode;
    s.lambda = lambda;
    s.tol = tol;
    s.max_iter = max_iter;
    s.truncation = truncation_level;
    return s;
}

FdOptions RunConfig::fd_options() const {
    FdOptions o;
    o.scheme = fd_scheme;
    o.dt = fd_dt;
    o.cfl = fd_cfl;
    o.out_slices = slices;
    return o;
}

RunConfig parse_config(const std::string& text, const std::string& source, const ConfigOverrides& ov) {
    RunConfig r;
    std::map<std::string, int> seen;
    std::istringstream in(text);
    std::string raw, section;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        // strip a comment unless the # sits inside quotes
        bool quoted = false;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (raw[i] == '"') quoted = !quoted;
            if (raw[i] == '#' && !quoted) {
                raw.resize(i);
                break;
            }
        }
        const std::string line = trim(raw);
        if (line.empty()) continue;
        Ctx c{source, lineno, ""};
        if (line.front() == '[') {
            if (line.back() != ']') c.fail("unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) c.fail("empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) c.fail("expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) c.fail("missing key");
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        c.key = key;
        const std::string full = canonical(section.empty() ? key : section + "." + key);
        c.key = full;
        auto it = std::find_if(keys().begin(), keys().end(), [&](const Key& k) { return k.name == full; });
        if (it == keys().end()) c.fail("unknown key");
        if (auto prev = seen.find(full); prev != seen.end()) {
            std::ostringstream os;
            os << source << ": duplicate key '" << full << "' on lines " << prev->second << " and " << lineno;
            throw ConfigError(os.str());
        }
        seen[full] = lineno;
        if (value.empty() && full != "coefficients.V_csv" && full != "coefficients.g_csv" &&
            full != "coefficients.u0_csv")
            c.fail("empty value");
        it->set(r, value, c);
    }
    if (ov.seed) r.seed = ov.seed;
    if (ov.particles) r.particles = *ov.particles;
    if (ov.output_dir) r.output_dir = *ov.output_dir;
    if (ov.gate_pct) r.gate_pct = *ov.gate_pct;
    validate_config(r, source);
    return r;
}

RunConfig load_config(const std::string& path, const ConfigOverrides& ov) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError(path + ": cannot open config");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path, ov);
}

std::string echo_config(const RunConfig& cfg) {
    std::ostringstream os;
    std::string section;
    for (const Key& k : keys()) {
        const auto dot = k.name.find('.');
        const std::string sec = dot == std::string::npos ? "" : k.name.substr(0, dot);
        const std::string leaf = dot == std::string::npos ? k.name : k.name.substr(dot + 1);
        if (sec != section) {
            os << "\n[" << sec << "]\n";
            section = sec;
        }
        const std::string v = k.get(cfg);
        const bool quote = v.empty() || v.find_first_of(" #\t") != std::string::npos;
        os << leaf << " = " << (quote ? "\"" + v + "\"" : v) << "\n";
    }
    return os.str();
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const Key& k : keys()) out.push_back(k.name);
    return out;
}

}  // namespace fkpde
