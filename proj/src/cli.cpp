#include "hbfrac/cli.hpp"

#include "hbfrac/errors.hpp"
#include "hbfrac/oracle_fd.hpp"
#include "hbfrac/special_functions.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace hbfrac::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double to_double(const std::string& text, const std::string& what) {
    const std::string s = trim(text);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
        throw ConfigError(what + ": expected a finite number, got '" + text + "'");
    }
    return v;
}

int to_int(const std::string& text, const std::string& what) {
    const std::string s = trim(text);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw ConfigError(what + ": expected an integer, got '" + text + "'");
    }
    return v;
}

std::vector<double> to_doubles(const std::string& text, const std::string& what) {
    std::vector<double> out;
    for (const auto& p : split(text, ',')) out.push_back(to_double(p, what));
    return out;
}

std::vector<int> to_ladder(const std::string& text, const std::string& what) {
    std::vector<int> out;
    for (const auto& p : split(text, ',')) {
        const int v = to_int(p, what);
        if (v < 1) throw ConfigError(what + ": entries must be positive");
        out.push_back(v);
    }
    return out;
}

// Top-level sum: '+' that is not the sign of an exponent.
std::vector<std::string> split_sum(const std::string& expr) {
    std::vector<std::string> out;
    std::string cur;
    for (std::size_t i = 0; i < expr.size(); ++i) {
        const char c = expr[i];
        const bool exponent_sign = c == '+' && i >= 2 && (expr[i - 1] == 'e' || expr[i - 1] == 'E') &&
                                   (std::isdigit(static_cast<unsigned char>(expr[i - 2])) || expr[i - 2] == '.');
        if (c == '+' && !exponent_sign) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    for (const auto& t : out) {
        if (t.empty()) throw ConfigError("empty term in expression '" + expr + "'");
    }
    return out;
}

// "c*rest" -> (c, rest); no '*' -> (1, term)
std::pair<double, std::string> coefficient(const std::string& term) {
    const auto star = term.find('*');
    if (star == std::string::npos) return {1.0, term};
    return {to_double(term.substr(0, star), "coefficient"), trim(term.substr(star + 1))};
}

std::pair<std::string, std::string> kind_args(const std::string& term) {
    const auto colon = term.find(':');
    if (colon == std::string::npos) return {trim(term), {}};
    return {trim(term.substr(0, colon)), trim(term.substr(colon + 1))};
}

std::vector<std::vector<double>> read_numeric_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open table '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        try {
            row = to_doubles(line, "table " + path);
        } catch (const ConfigError&) {
            if (first) {  // header
                first = false;
                continue;
            }
            throw;
        }
        first = false;
        rows.push_back(std::move(row));
    }
    return rows;
}

SampledFunction space_term(const std::string& kind, const std::string& args, const EigenSystem* sys) {
    if (kind == "zero") return SampledFunction();
    if (kind == "const") return SampledFunction::constant(to_double(args, "const"));
    if (kind == "poly") return SampledFunction::polynomial(to_doubles(args, "poly"));
    if (kind == "sin" || kind == "cos") {
        const auto v = to_doubles(args, kind);
        if (v.size() < 2 || v.size() > 3) throw ConfigError(kind + ": expected A,w[,phase]");
        const double ph = v.size() == 3 ? v[2] : 0.0;
        return kind == "sin" ? SampledFunction::sine(v[0], v[1], ph) : SampledFunction::cosine(v[0], v[1], ph);
    }
    if (kind == "mode") {
        const auto parts = split(args, ',');
        if (parts.empty() || parts.size() > 2) throw ConfigError("mode: expected k[,c]");
        const int k = to_int(parts[0], "mode");
        const double c = parts.size() == 2 ? to_double(parts[1], "mode") : 1.0;
        if (!sys) throw ConfigError("mode:k needs an eigen system");
        if (k < 1 || k > sys->count()) throw ConfigError("mode: index out of range");
        const EigenSystem s = *sys;
        return SampledFunction::callable([s, k, c](double x) { return c * s.value(k, x); },
                                         [s, k, c](double x) { return c * s.derivative(k, x); });
    }
    if (kind == "table") {
        const auto rows = read_numeric_csv(args);
        std::vector<double> x, v;
        for (const auto& r : rows) {
            if (r.size() != 2) throw ConfigError("table '" + args + "': expected two columns x,value");
            x.push_back(r[0]);
            v.push_back(r[1]);
        }
        if (x.size() < 2) throw ConfigError("table '" + args + "': need at least two rows");
        return SampledFunction::tabulated(std::move(x), std::move(v));
    }
    throw ConfigError("unknown space expression '" + kind + "'");
}

SampledFunction time_term(const std::string& kind, const std::string& args, const TimeWarp& warp) {
    if (kind == "warp") {
        const auto v = to_doubles(args, "warp");
        if (v.empty() || v.size() > 2) throw ConfigError("warp: expected e[,c]");
        if (v[0] < 0.0) throw ConfigError("warp: exponent must be nonnegative");
        return SampledFunction::warp_power(warp, v[0], v.size() == 2 ? v[1] : 1.0);
    }
    if (kind == "mode" || kind == "table") throw ConfigError(kind + " is not a time expression");
    return space_term(kind, args, nullptr);
}

// Scalar parameters; beta gets its own message.
void check_domain(const RunConfig& cfg) {
    if (!(cfg.beta > 0.0 && cfg.beta < 2.0) || cfg.beta == 1.0) {
        std::ostringstream m;
        m << "β ∈ (0,2), β ≠ 1 required (got beta = " << cfg.beta << ")";
        throw DomainError(m.str());
    }
    ProblemSpec sp;
    sp.alpha = cfg.alpha;
    sp.theta = cfg.theta;
    sp.beta = cfg.beta;
    sp.a = cfg.a;
    sp.T = cfg.T;
    sp.validate();
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

void write_table(const RunConfig& cfg, const std::string& stem, const Table& t) {
    fs::create_directories(cfg.out);
    if (cfg.format == "json") {
        json j;
        j["columns"] = t.header;
        j["rows"] = t.rows;
        std::ofstream(fs::path(cfg.out) / (stem + ".json")) << j.dump(1) << "\n";
        return;
    }
    std::ofstream os(fs::path(cfg.out) / (stem + ".csv"));
    for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
    os << "\n";
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_number(r[i]);
        os << "\n";
    }
}

void write_json(const RunConfig& cfg, const std::string& name, const json& j) {
    fs::create_directories(cfg.out);
    std::ofstream(fs::path(cfg.out) / name) << j.dump(1) << "\n";
}

std::vector<double> uniform(double lo, double hi, int n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = hi;
        return v;
    }
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    v.back() = hi;
    return v;
}

EigenSystem make_system(const RunConfig& cfg, int count) {
    return cfg.oracle == "bessel" ? bessel_eigen(cfg.beta, count) : solve_eigen(cfg.beta, count);
}

int system_size(const RunConfig& cfg) {
    if (cfg.eigen_modes > 0) return cfg.eigen_modes;
    return cfg.modes > 0 ? cfg.modes + 8 : 64;
}

json config_json(const RunConfig& cfg) {
    return json{{"alpha", cfg.alpha}, {"theta", cfg.theta}, {"beta", cfg.beta}, {"a", cfg.a},
                {"T", cfg.T},         {"phi", cfg.phi},     {"f", cfg.f},       {"modes", cfg.modes},
                {"oracle", cfg.oracle}};
}

FDMesh fd_mesh(const RunConfig& cfg, const ProblemSpec& spec) {
    if (cfg.fd_nx > 0 || cfg.fd_nt > 0) {
        const FDMesh d = default_fd_mesh(spec);
        return make_fd_mesh(spec, cfg.fd_nx > 0 ? cfg.fd_nx : d.nx(), cfg.fd_nt > 0 ? cfg.fd_nt : d.nt());
    }
    return default_fd_mesh(spec);
}

double observed_order(double e0, double e1, double n0, double n1) {
    return std::log(e0 / e1) / std::log(n1 / n0);
}

}  // namespace

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (key == "alpha") cfg.alpha = to_double(v, key);
    else if (key == "theta") cfg.theta = to_double(v, key);
    else if (key == "beta") cfg.beta = to_double(v, key);
    else if (key == "a") cfg.a = to_double(v, key);
    else if (key == "T") cfg.T = to_double(v, key);
    else if (key == "phi") cfg.phi = v;
    else if (key == "f") cfg.f = v;
    else if (key == "modes") {
        if (v == "auto") {
            cfg.modes = 0;
        } else {
            cfg.modes = to_int(v, key);
            if (cfg.modes < 1) throw ConfigError("modes: expected a positive integer or auto");
        }
    } else if (key == "eigen_modes") {
        cfg.eigen_modes = to_int(v, key);
        if (cfg.eigen_modes < 0) throw ConfigError("eigen_modes must be nonnegative");
    } else if (key == "nx") {
        cfg.nx = to_int(v, key);
        if (cfg.nx < 2) throw ConfigError("nx must be at least 2");
    } else if (key == "nt") {
        cfg.nt = to_int(v, key);
        if (cfg.nt < 1) throw ConfigError("nt must be at least 1");
    } else if (key == "fd_nx") {
        cfg.fd_nx = to_int(v, key);
        if (cfg.fd_nx < 0) throw ConfigError("fd_nx must be nonnegative");
    } else if (key == "fd_nt") {
        cfg.fd_nt = to_int(v, key);
        if (cfg.fd_nt < 0) throw ConfigError("fd_nt must be nonnegative");
    } else if (key == "tol") {
        cfg.tol = to_double(v, key);
        if (cfg.tol < 0.0) throw ConfigError("tol must be nonnegative");
    } else if (key == "out") {
        if (v.empty()) throw ConfigError("out must not be empty");
        cfg.out = v;
    } else if (key == "format") {
        if (v != "csv" && v != "json") throw ConfigError("format must be csv or json");
        cfg.format = v;
    } else if (key == "oracle") {
        if (v != "galerkin" && v != "bessel") throw ConfigError("oracle must be galerkin or bessel");
        cfg.oracle = v;
    } else if (key == "k_ladder") cfg.k_ladder = to_ladder(v, key);
    else if (key == "fd_ladder") cfg.fd_ladder = to_ladder(v, key);
    else throw ConfigError("unknown configuration key '" + key + "'");
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::map<std::string, int> seen;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (seen.count(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        seen[key] = lineno;
        set_key(cfg, key, line.substr(eq + 1));
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

SampledFunction parse_space(const std::string& expr, const EigenSystem* sys) {
    SampledFunction sum;
    bool first = true;
    for (const auto& term : split_sum(expr)) {
        const auto [c, body] = coefficient(term);
        const auto [kind, args] = kind_args(body);
        SampledFunction g = space_term(kind, args, sys);
        if (c != 1.0) g = g.scaled(c);
        sum = first ? g : sum + g;
        first = false;
    }
    return sum;
}

SampledFunction parse_time(const std::string& expr, const TimeWarp& warp) {
    SampledFunction sum;
    bool first = true;
    for (const auto& term : split_sum(expr)) {
        const auto [c, body] = coefficient(term);
        const auto [kind, args] = kind_args(body);
        SampledFunction g = time_term(kind, args, warp);
        if (c != 1.0) g = g.scaled(c);
        sum = first ? g : sum + g;
        first = false;
    }
    return sum;
}

SourceTerm parse_source(const std::string& expr, const TimeWarp& warp, const EigenSystem* sys) {
    const std::string e = trim(expr);
    if (e.empty() || e == "zero") return SourceTerm::zero();
    const auto [kind, args] = kind_args(e);
    if (kind == "table" && e.find('@') == std::string::npos) {
        // header: a label, then the x nodes; rows: t, then the values
        std::ifstream in(args);
        if (!in) throw ConfigError("cannot open table '" + args + "'");
        std::string line;
        std::vector<double> x, t;
        std::vector<std::vector<double>> rows;
        bool header = true;
        while (std::getline(in, line)) {
            line = trim(line);
            if (line.empty() || line[0] == '#') continue;
            auto cols = split(line, ',');
            if (cols.size() < 3) throw ConfigError("source table '" + args + "': need at least two x columns");
            if (header) {
                for (std::size_t i = 1; i < cols.size(); ++i) x.push_back(to_double(cols[i], "source table x"));
                header = false;
                continue;
            }
            if (cols.size() != x.size() + 1) throw ConfigError("source table '" + args + "': ragged row");
            t.push_back(to_double(cols[0], "source table t"));
            std::vector<double> r;
            for (std::size_t i = 1; i < cols.size(); ++i) r.push_back(to_double(cols[i], "source table value"));
            rows.push_back(std::move(r));
        }
        if (t.size() < 2) throw ConfigError("source table '" + args + "': need at least two time rows");
        Eigen::MatrixXd values(static_cast<Eigen::Index>(t.size()), static_cast<Eigen::Index>(x.size()));
        for (std::size_t j = 0; j < t.size(); ++j)
            for (std::size_t i = 0; i < x.size(); ++i) values(j, i) = rows[j][i];
        return SourceTerm::tabulated(std::move(x), std::move(t), std::move(values));
    }
    std::vector<SourceTerm::Product> terms;
    for (const auto& term : split_sum(e)) {
        const auto at = term.find('@');
        if (at == std::string::npos) {
            const auto [c, body] = coefficient(term);
            const auto [k, a] = kind_args(body);
            if (k != "const" && k != "zero") {
                throw ConfigError("source term '" + term + "' needs the form SPACE @ TIME");
            }
            const double v = k == "zero" ? 0.0 : c * to_double(a, "const");
            terms.push_back({SampledFunction::constant(1.0), SampledFunction::constant(v)});
            continue;
        }
        terms.push_back({parse_space(term.substr(0, at), sys), parse_time(term.substr(at + 1), warp)});
    }
    return SourceTerm::separable(std::move(terms));
}

ProblemSpec build_problem(const RunConfig& cfg, const EigenSystem* sys) {
    ProblemSpec sp;
    sp.alpha = cfg.alpha;
    sp.theta = cfg.theta;
    sp.beta = cfg.beta;
    sp.a = cfg.a;
    sp.T = cfg.T;
    sp.validate();
    sp.phi = parse_space(cfg.phi, sys);
    sp.f = parse_source(cfg.f, sp.warp(), sys);
    sp.validate();
    return sp;
}

int cmd_eigen(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    const int K = cfg.modes > 0 ? cfg.modes : 8;
    const EigenSystem sys = solve_eigen(cfg.beta, K);
    const auto x = uniform(0.0, 1.0, cfg.nx);

    Table lam{{"k", "lambda"}, {}};
    for (int k = 1; k <= K; ++k) lam.rows.push_back({double(k), sys.lambda(k)});
    write_table(cfg, "eigenvalues", lam);

    Table fun{{"k", "lambda"}, {}};
    for (double xi : x) fun.header.push_back(format_number(xi));
    std::vector<std::vector<double>> cols(x.size(), std::vector<double>(K));
    std::vector<double> v(K), dv(K);
    for (std::size_t i = 0; i < x.size(); ++i) {
        sys.eval_all(x[i], v, dv);
        for (int k = 0; k < K; ++k) cols[i][k] = x[i] == 1.0 ? 0.0 : v[k];
    }
    for (int k = 1; k <= K; ++k) {
        std::vector<double> row{double(k), sys.lambda(k)};
        for (std::size_t i = 0; i < x.size(); ++i) row.push_back(cols[i][k - 1]);
        fun.rows.push_back(std::move(row));
    }
    write_table(cfg, "eigenfunctions", fun);

    const auto orth = orthogonality_report(sys);
    const auto bc = bc_requirements(cfg.beta);
    json j{{"beta", cfg.beta},
           {"count", K},
           {"method", "galerkin"},
           {"left_condition", bc.left_condition == LeftCondition::dirichlet_at_zero ? "dirichlet" : "none"},
           {"max_offdiag_l2", orth.max_offdiag_l2},
           {"max_diag_l2_error", orth.max_diag_l2_error},
           {"max_offdiag_weighted", orth.max_offdiag_weighted},
           {"max_weighted_diag_error", orth.max_weighted_diag_error}};
    if (cfg.oracle == "bessel") {
        const EigenSystem bes = bessel_eigen(cfg.beta, K);
        const auto rule = unit_interval_rule(cfg.beta);
        double dl = 0.0, dv2 = 0.0;
        std::vector<double> a(K), b(K), da(K), db(K);
        std::vector<double> acc(K, 0.0);
        for (std::size_t q = 0; q < rule.x.size(); ++q) {
            sys.eval_all(rule.x[q], a, da);
            bes.eval_all(rule.x[q], b, db);
            for (int k = 0; k < K; ++k) acc[k] += rule.w[q] * (a[k] - b[k]) * (a[k] - b[k]);
        }
        for (int k = 1; k <= K; ++k) {
            dl = std::max(dl, std::abs(sys.lambda(k) - bes.lambda(k)) / bes.lambda(k));
            dv2 = std::max(dv2, std::sqrt(acc[k - 1]));
        }
        const auto sub = bessel_substitution_check(bes);
        j["cross_oracle"] = {{"max_relative_lambda_delta", dl},
                             {"max_l2_eigenfunction_delta", dv2},
                             {"substitution_residual", sub.max_relative_residual},
                             {"substitution_passed", sub.passed}};
    }
    write_json(cfg, "orthogonality.json", j);
    out << "eigen: " << K << " modes, lambda_1 = " << format_number(sys.lambda(1)) << ", max off-diagonal "
        << format_number(orth.max_offdiag_l2) << "\n";
    return ok;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const EigenSystem sys = make_system(cfg, system_size(cfg));
    const ProblemSpec spec = build_problem(cfg, &sys);
    const auto x = uniform(0.0, 1.0, cfg.nx);
    const auto t = uniform(cfg.a, cfg.T, cfg.nt);
    const SolutionField field = assemble(spec, sys, cfg.modes, x, t);

    Table sol{{"t"}, {}};
    for (double xi : x) sol.header.push_back(format_number(xi));
    for (std::size_t j = 0; j < t.size(); ++j) {
        std::vector<double> row{t[j]};
        for (std::size_t i = 0; i < x.size(); ++i) row.push_back(field.values(j, i));
        sol.rows.push_back(std::move(row));
    }
    write_table(cfg, "solution", sol);

    json d;
    d["config"] = config_json(cfg);
    d["regime"] = regime_name(field.regime);
    d["K"] = field.K;
    d["tail_estimate"] = field.diagnostics.tail_estimate;
    d["last_mode"] = field.diagnostics.last_mode;
    d["warnings"] = field.diagnostics.warnings;
    if (field.regime == Regime::classical) {
        const auto r = residual_strong(field, spec);
        d["residual"] = {{"kind", "strong"}, {"sup", r.sup}, {"l2", r.l2}, {"relative", r.relative}};
    } else {
        const auto r = residual_weak(field, spec, std::min(field.K, 8));
        d["residual"] = {{"kind", "weak"}, {"max_violation", r.max_violation}, {"violation", r.violation}};
    }
    const auto n = solution_norms(field, spec);
    d["norms"] = {{"sup_l2", n.sup_l2},
                  {"sup_energy", n.sup_energy},
                  {"sup_w12", n.sup_w12},
                  {"series_phi", n.series_phi},
                  {"series_f_a", n.series_f_a},
                  {"series_df", n.series_df},
                  {"parseval_defect", n.parseval_defect}};
    write_json(cfg, "diagnostics.json", d);
    for (const auto& w : field.diagnostics.warnings) err << "warning: " << w << "\n";
    out << "solve: " << regime_name(field.regime) << " regime, K = " << field.K << ", tail "
        << format_number(field.diagnostics.tail_estimate) << "\n";
    return ok;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const int K = cfg.modes > 0 ? cfg.modes : 0;
    const EigenSystem sys = make_system(cfg, system_size(cfg));
    const ProblemSpec spec = build_problem(cfg, &sys);
    json suites = json::array();
    bool all = true;
    auto record = [&](const std::string& name, double value, double tol) {
        const bool pass = value <= tol;
        all = all && pass;
        suites.push_back({{"name", name}, {"value", value}, {"tolerance", tol}, {"passed", pass}});
        if (!pass) err << "verification failed: " << name << " = " << format_number(value) << " > " << format_number(tol) << "\n";
    };

    double ml = 0.0;
    for (double al : {0.3, 0.5, 0.7, 1.2})
        for (double be : {0.5, 1.0, 2.0})
            for (int i = 0; i <= 16; ++i) {
                const double z = -30.0 + 35.0 * i / 16.0;
                const double e = ml_eval(al, be, z);
                ml = std::max(ml, std::abs(e - rgamma(be) - z * ml_eval(al, al + be, z)) / (1.0 + std::abs(e)));
            }
    record("ml_recurrence", ml, 1e-11);

    record("orthogonality", orthogonality_report(sys).max_offdiag_l2, 1e-8);

    double flux = 0.0;
    for (int k = 1; k <= std::min(3, sys.count()); ++k) {
        const auto r = flux_limit_check(sys, k);
        flux = std::max(flux, std::abs(cfg.beta > 1.0 ? r.limit : r.product_limit));
    }
    record("flux_limit", flux, 1e-6);

    double keq = 0.0;
    for (const auto& ode : build_mode_odes(spec, sys, std::min(4, sys.count())))
        for (double tt : {0.5 * (spec.a + spec.T), spec.T}) {
            const double u = mode_value(ode, tt);
            keq = std::max(keq, std::abs(u - mode_value_alt(ode, tt)) / (1.0 + std::abs(u)));
        }
    record("kernel_equivalence", keq, 1e-8);

    ProblemSpec zero = spec;
    zero.phi = SampledFunction();
    zero.f = SourceTerm::zero();
    const auto z1 = assemble(zero, sys, std::min(4, sys.count()), uniform(0.0, 1.0, 17), {spec.T});
    const auto z2 = fd_solve(zero, make_fd_mesh(zero, 32, 32));
    record("uniqueness", std::max(z1.values.cwiseAbs().maxCoeff(), z2.values.cwiseAbs().maxCoeff()), 1e-12);

    const FDMesh mesh = fd_mesh(cfg, spec);
    const auto fd = fd_solve(spec, mesh);
    const auto sp = assemble(spec, sys, K, mesh.x, {spec.T});
    record("fd_comparison", compare(sp, fd, {spec.T}).max_rel_l2, cfg.tol);

    write_json(cfg, "verify.json", json{{"config", config_json(cfg)}, {"passed", all}, {"suites", suites}});
    out << "verify: " << (all ? "pass" : "fail") << "\n";
    return all ? ok : verification;
}

int cmd_convergence(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    if (cfg.k_ladder.size() < 2 || cfg.fd_ladder.size() < 2) {
        throw ConfigError("convergence needs ladders with at least two levels");
    }
    const int kmax = *std::max_element(cfg.k_ladder.begin(), cfg.k_ladder.end());
    const int kref = 2 * kmax;
    const EigenSystem sys = make_system(cfg, std::max(system_size(cfg), kref + 1));
    const ProblemSpec spec = build_problem(cfg, &sys);
    const auto x = uniform(0.0, 1.0, 401);
    const auto ref = assemble(spec, sys, kref, x, {spec.T});

    Table modes{{"K", "rel_l2", "order"}, {}};
    for (std::size_t i = 0; i < cfg.k_ladder.size(); ++i) {
        const int k = cfg.k_ladder[i];
        const double e = compare(ref, assemble(spec, sys, k, x, {spec.T}), {spec.T}).max_rel_l2;
        const double ord = i == 0 ? NAN : observed_order(modes.rows.back()[1], e, cfg.k_ladder[i - 1], k);
        modes.rows.push_back({double(k), e, ord});
    }
    write_table(cfg, "convergence_modes", modes);

    Table fd{{"N", "rel_l2", "order"}, {}};
    for (std::size_t i = 0; i < cfg.fd_ladder.size(); ++i) {
        const int n = cfg.fd_ladder[i];
        const double e = compare(ref, fd_solve(spec, make_fd_mesh(spec, n, n)), {spec.T}).max_rel_l2;
        const double ord = i == 0 ? NAN : observed_order(fd.rows.back()[1], e, cfg.fd_ladder[i - 1], n);
        fd.rows.push_back({double(n), e, ord});
    }
    write_table(cfg, "convergence_fd", fd);
    out << "convergence: reference K = " << kref << ", finest FD error " << format_number(fd.rows.back()[1]) << "\n";
    return ok;
}

int run(const std::string& command, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        check_domain(cfg);
        if (command == "eigen") return cmd_eigen(cfg, out, err);
        if (command == "solve") return cmd_solve(cfg, out, err);
        if (command == "verify") return cmd_verify(cfg, out, err);
        if (command == "convergence") return cmd_convergence(cfg, out, err);
        err << "error: unknown command '" << command << "'\n";
        return usage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return usage;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return domain;
    } catch (const ResolutionError& e) {
        err << "error: " << e.what() << "\n";
        return resolution;
    } catch (const NumericError& e) {
        err << "error: " << e.what() << "\n";
        return resolution;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return usage;
    }
}

}  // namespace hbfrac::cli
