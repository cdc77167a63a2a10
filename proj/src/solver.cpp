#include "hbfrac/solver.hpp"

#include "hbfrac/errors.hpp"
#include "hbfrac/quadrature.hpp"
#include "hbfrac/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hbfrac {

namespace {

constexpr int kConvPoints = 12;
constexpr int kConvLevels = 40;
constexpr int kAltPoints = 16;
constexpr int kAltLevels = 25;

// Quadrature rule on [0,1] with the first K eigenfunctions tabulated at its nodes.
struct ModalRule {
    XQuadrature rule;
    Eigen::MatrixXd V;   // nodes x K
    Eigen::MatrixXd dV;  // nodes x K
};

ModalRule modal_rule(const EigenSystem& sys, int K, double endpoint_exponent) {
    ModalRule m;
    m.rule = unit_interval_rule(sys.beta(), endpoint_exponent);
    const std::size_t n = m.rule.x.size();
    m.V.resize(n, K);
    m.dV.resize(n, K);
    std::vector<double> v(sys.count()), dv(sys.count());
    for (std::size_t i = 0; i < n; ++i) {
        sys.eval_all(m.rule.x[i], v, dv);
        for (int k = 0; k < K; ++k) {
            m.V(i, k) = v[k];
            m.dV(i, k) = dv[k];
        }
    }
    return m;
}

double coeff_exponent(double beta) { return beta < 1.0 ? 1.0 - beta : 0.0; }

std::vector<double> project(const SampledFunction& g, const ModalRule& m) {
    const auto K = m.V.cols();
    std::vector<double> c(K, 0.0);
    for (std::size_t i = 0; i < m.rule.x.size(); ++i) {
        const double gw = m.rule.w[i] * g(m.rule.x[i]);
        for (Eigen::Index k = 0; k < K; ++k) c[k] += gw * m.V(i, k);
    }
    return c;
}

double l2_squared(const std::function<double(double)>& g, double beta) {
    const XQuadrature r = unit_interval_rule(beta);
    double s = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        const double v = g(r.x[i]);
        s += r.w[i] * v * v;
    }
    return s;
}

void check_time(const ModeODE& ode, double t) {
    if (!(t >= ode.warp.a) || !std::isfinite(t)) throw DomainError("mode solution: t must satisfy t >= a");
}

double homogeneous(const ModeODE& ode, double s) {
    if (ode.phi_k == 0.0) return 0.0;
    return ode.phi_k * ml_eval(ode.alpha, 1.0, ode.lambda_star() * std::pow(s, ode.alpha));
}

// int_0^s K(s - sigma) g(sigma) dsigma, K(r) = r^(alpha-1) E_{alpha,alpha}(l r^alpha)
double convolution(const ModeODE& ode, double s) {
    const double alpha = ode.alpha;
    const double l = ode.lambda_star();
    auto g = [&](double sigma) { return ode.f_k(ode.warp.inverse(sigma)); };
    auto E = [&](double r) { return ml_eval(alpha, alpha, l * std::pow(r, alpha)); };
    const QuadRule& gl = cached_gauss_legendre(kConvPoints);

    double total = 0.0;
    // sigma in [0, s/2], panels halving toward sigma = 0
    auto left_panel = [&](double lo, double hi) {
        const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
        double acc = 0.0;
        for (int i = 0; i < kConvPoints; ++i) {
            const double sigma = mid + half * gl.nodes[i];
            const double r = s - sigma;
            acc += gl.weights[i] * std::pow(r, alpha - 1.0) * E(r) * g(sigma);
        }
        return acc * half;
    };
    double hi = 0.5 * s;
    for (int k = 0; k < kConvLevels; ++k) {
        total += left_panel(0.5 * hi, hi);
        hi *= 0.5;
    }
    total += left_panel(0.0, hi);

    // r = s - sigma in [0, s/2], panels halving toward r = 0
    auto right_panel = [&](double lo, double hi_r) {
        const double half = 0.5 * (hi_r - lo), mid = 0.5 * (hi_r + lo);
        double acc = 0.0;
        for (int i = 0; i < kConvPoints; ++i) {
            const double r = mid + half * gl.nodes[i];
            acc += gl.weights[i] * std::pow(r, alpha - 1.0) * E(r) * g(s - r);
        }
        return acc * half;
    };
    double rhi = 0.5 * s;
    for (int k = 0; k < kConvLevels; ++k) {
        total += right_panel(0.5 * rhi, rhi);
        rhi *= 0.5;
    }
    // innermost panel: r = rhi u^(1/alpha) turns r^(alpha-1) E(l r^alpha) dr into
    // rhi^alpha / alpha E(l rhi^alpha u) du, smooth in u
    double tail = 0.0;
    for (int i = 0; i < kConvPoints; ++i) {
        const double u = 0.5 * (1.0 + gl.nodes[i]);
        const double r = rhi * std::pow(u, 1.0 / alpha);
        tail += 0.5 * gl.weights[i] * ml_eval(alpha, alpha, l * std::pow(rhi, alpha) * u) * g(s - r);
    }
    total += tail * std::pow(rhi, alpha) / alpha;
    return total;
}

// (s^alpha/alpha) int_0^1 [1/Gamma(alpha) + l s^alpha w E_{alpha,2alpha}(l s^alpha w)] g(s - s w^(1/alpha)) dw
double convolution_alt(const ModeODE& ode, double s) {
    const double alpha = ode.alpha;
    const double ls = ode.lambda_star() * std::pow(s, alpha);
    const double rg = rgamma(alpha);
    auto g = [&](double sigma) { return ode.f_k(ode.warp.inverse(sigma)); };
    auto kernel = [&](double w) {
        if (ls == 0.0) return rg;
        return rg + ls * w * ml_eval(alpha, 2.0 * alpha, ls * w);
    };
    const QuadRule& gl = cached_gauss_legendre(kAltPoints);

    double total = 0.0;
    // w in [0, 1/2], panels shrinking by 4 toward w = 0
    auto low_panel = [&](double lo, double hi) {
        const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
        double acc = 0.0;
        for (int i = 0; i < kAltPoints; ++i) {
            const double w = mid + half * gl.nodes[i];
            acc += gl.weights[i] * kernel(w) * g(s - s * std::pow(w, 1.0 / alpha));
        }
        return acc * half;
    };
    double hi = 0.5;
    for (int k = 0; k < kAltLevels; ++k) {
        total += low_panel(0.25 * hi, hi);
        hi *= 0.25;
    }
    total += low_panel(0.0, hi);

    // w = 1 - u, u in [0, 1/2], sigma = s (1 - (1-u)^(1/alpha)) kept accurate for small u
    auto high_panel = [&](double lo, double hi_u) {
        const double half = 0.5 * (hi_u - lo), mid = 0.5 * (hi_u + lo);
        double acc = 0.0;
        for (int i = 0; i < kAltPoints; ++i) {
            const double u = mid + half * gl.nodes[i];
            const double sigma = -s * std::expm1(std::log1p(-u) / alpha);
            acc += gl.weights[i] * kernel(1.0 - u) * g(sigma);
        }
        return acc * half;
    };
    double uhi = 0.5;
    for (int k = 0; k < kAltLevels; ++k) {
        total += high_panel(0.25 * uhi, uhi);
        uhi *= 0.25;
    }
    total += high_panel(0.0, uhi);
    return std::pow(s, alpha) / alpha * total;
}

double source_part(const ModeODE& ode, double s, bool alt) {
    if (ode.f_k.is_constant()) {
        const double c = ode.f_k(ode.warp.a);
        if (c == 0.0) return 0.0;
        const double alpha = ode.alpha;
        const double sa = std::pow(s, alpha);
        const double l = ode.lambda_star();
        const double scale = std::pow(ode.warp.p(), -alpha);
        if (!alt) return c * scale * sa * ml_eval(alpha, alpha + 1.0, l * sa);
        return c * scale * (sa * rgamma(alpha + 1.0) + l * sa * sa * ml_eval(alpha, 2.0 * alpha + 1.0, l * sa));
    }
    const double conv = alt ? convolution_alt(ode, s) : convolution(ode, s);
    return std::pow(ode.warp.p(), -ode.alpha) * conv;
}

double mode_value_impl(const ModeODE& ode, double t, bool alt) {
    check_time(ode, t);
    if (t == ode.warp.a) return ode.phi_k;
    const double s = ode.warp.forward(t);
    const double v = homogeneous(ode, s) + source_part(ode, s, alt);
    if (!std::isfinite(v)) throw NumericError("mode solution: non-finite value");
    return v;
}

ModeTrajectory trajectory(const ModeODE& ode, const std::vector<double>& t_grid, bool alt) {
    ModeTrajectory tr;
    tr.k = ode.k;
    tr.t_grid = t_grid;
    tr.method_tag = alt ? ModeMethod::split_kernel : ModeMethod::direct_kernel;
    tr.values.reserve(t_grid.size());
    for (double t : t_grid) tr.values.push_back(mode_value_impl(ode, t, alt));
    return tr;
}

// Local Lagrange interpolation of degree 5 through the six nodes nearest to x.
double lagrange6(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    const std::size_t n = xs.size();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t j = static_cast<std::size_t>(it - xs.begin());
    std::size_t lo = j >= 3 ? j - 3 : 0;
    lo = std::min(lo, n - 6);
    double acc = 0.0;
    for (std::size_t a = lo; a < lo + 6; ++a) {
        double w = 1.0;
        for (std::size_t b = lo; b < lo + 6; ++b) {
            if (b != a) w *= (x - xs[b]) / (xs[a] - xs[b]);
        }
        acc += w * ys[a];
    }
    return acc;
}

// u_k as a function of t for the numerical derivative. The closed-form parts stay exact;
// a non-constant source leaves a remainder int K (g - g(0)) that is tabulated in s on a
// grid graded toward s = 0 and interpolated.
SampledFunction mode_as_function(const ModeODE& ode, double t_max) {
    if (ode.f_k.is_constant()) {
        return SampledFunction::callable([ode](double t) { return mode_value_impl(ode, t, false); });
    }
    ModeODE head = ode;
    const double fa = ode.f_k(ode.warp.a);
    head.f_k = SampledFunction::constant(fa);
    ModeODE rest = ode;
    rest.phi_k = 0.0;
    rest.f_k = ode.f_k.shifted(-fa);
    const int N = 240;
    const double S = ode.warp.forward(t_max);
    const double r = std::max(1.0, (2.0 - ode.alpha) / ode.alpha);
    std::vector<double> nodes(N + 1), vals(N + 1);
    for (int j = 0; j <= N; ++j) {
        nodes[j] = S * std::pow(static_cast<double>(j) / N, r);
        vals[j] = j == 0 ? 0.0 : mode_value_impl(rest, j == N ? t_max : ode.warp.inverse(nodes[j]), false);
    }
    const TimeWarp warp = ode.warp;
    return SampledFunction::callable([head, nodes, vals, warp](double t) {
        return mode_value_impl(head, t, false) + lagrange6(nodes, vals, warp.forward(t));
    });
}

// D u_k(t) for every mode at every time (times equal to a are skipped with NaN).
Eigen::MatrixXd mode_derivatives(const ModalData& modal, const std::vector<double>& t_grid, double alpha,
                                 const ResidualOptions& options) {
    const int K = static_cast<int>(modal.odes.size());
    Eigen::MatrixXd D(t_grid.size(), K);
    const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
    for (int k = 0; k < K; ++k) {
        const ModeODE& ode = modal.odes[k];
        const SampledFunction u = mode_as_function(ode, t_max);
        for (std::size_t j = 0; j < t_grid.size(); ++j) {
            D(j, k) = t_grid[j] > ode.warp.a ? hb_caputo(u, alpha, ode.warp, t_grid[j], options.caputo)
                                             : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return D;
}

}  // namespace

// ---------------------------------------------------------------------------

SourceTerm SourceTerm::separable(std::vector<Product> terms) {
    SourceTerm s;
    s.terms_ = std::move(terms);
    return s;
}

SourceTerm SourceTerm::constant(double c) {
    if (c == 0.0) return zero();
    return separable({{SampledFunction::constant(1.0), SampledFunction::constant(c)}});
}

SourceTerm SourceTerm::tabulated(std::vector<double> x_nodes, std::vector<double> t_nodes,
                                 Eigen::MatrixXd values) {
    if (x_nodes.size() < 2 || t_nodes.size() < 2) throw ContractError("tabulated source needs at least 2x2 nodes");
    if (values.rows() != static_cast<Eigen::Index>(t_nodes.size()) ||
        values.cols() != static_cast<Eigen::Index>(x_nodes.size())) {
        throw ContractError("tabulated source: values must be t_nodes x x_nodes");
    }
    if (!std::is_sorted(t_nodes.begin(), t_nodes.end()) ||
        std::adjacent_find(t_nodes.begin(), t_nodes.end()) != t_nodes.end()) {
        throw ContractError("tabulated source: t nodes must increase");
    }
    SourceTerm s;
    s.x_nodes_ = std::move(x_nodes);
    s.t_nodes_ = std::move(t_nodes);
    s.values_ = std::move(values);
    for (Eigen::Index j = 0; j < s.values_.rows(); ++j) {
        std::vector<double> row(s.values_.cols());
        for (Eigen::Index i = 0; i < s.values_.cols(); ++i) row[i] = s.values_(j, i);
        s.rows_.push_back(SampledFunction::tabulated(s.x_nodes_, row));
    }
    return s;
}

SampledFunction SourceTerm::row(std::size_t j) const {
    if (j >= rows_.size()) throw ContractError("SourceTerm::row: index out of range");
    return rows_[j];
}

double SourceTerm::operator()(double x, double t) const {
    if (is_tabulated()) {
        // linear in t between the monotone-cubic rows
        if (t < t_nodes_.front() || t > t_nodes_.back()) throw DomainError("tabulated source: t outside the table");
        auto it = std::upper_bound(t_nodes_.begin(), t_nodes_.end(), t);
        std::size_t j = it == t_nodes_.end() ? t_nodes_.size() - 1 : static_cast<std::size_t>(it - t_nodes_.begin());
        j = std::max<std::size_t>(j, 1);
        const double w = (t - t_nodes_[j - 1]) / (t_nodes_[j] - t_nodes_[j - 1]);
        return (1.0 - w) * rows_[j - 1](x) + w * rows_[j](x);
    }
    double acc = 0.0;
    for (const auto& p : terms_) acc += p.space(x) * p.time(t);
    return acc;
}

bool SourceTerm::is_zero() const {
    if (is_tabulated()) return values_.cwiseAbs().maxCoeff() == 0.0;
    for (const auto& p : terms_) {
        const bool zero_space = p.space.is_constant() && p.space(0.0) == 0.0;
        const bool zero_time = p.time.is_constant() && p.time(0.0) == 0.0;
        if (!zero_space && !zero_time) return false;
    }
    return true;
}

void ProblemSpec::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0,1]");
    if (!(theta < 1.0) || !std::isfinite(theta)) throw DomainError("theta must satisfy theta < 1");
    if (!(beta > 0.0 && beta < 2.0) || beta == 1.0) throw DomainError("beta must satisfy beta in (0,2), beta != 1");
    if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("a must be nonnegative");
    if (!(T > a) || !std::isfinite(T)) throw DomainError("T must be finite and exceed a");
    if (f.is_tabulated()) {
        if (f.t_nodes().front() > a || f.t_nodes().back() < T) throw DomainError("tabulated source must cover [a, T]");
        if (f.x_nodes().front() > 0.0 || f.x_nodes().back() < 1.0) throw DomainError("tabulated source must cover [0, 1]");
    }
}

std::vector<std::string> compatibility_warnings(const ProblemSpec& spec, double tol) {
    std::vector<std::string> out;
    if (std::abs(spec.phi(1.0)) > tol) out.push_back("phi(1) != 0: the series converges to 0 at x = 1");
    if (spec.beta < 1.0 && std::abs(spec.phi(0.0)) > tol) {
        out.push_back("phi(0) != 0 while 0 < beta < 1 imposes u(0,t) = 0");
    }
    return out;
}

Regime regime_of(double beta) {
    if (!(beta > 0.0 && beta < 2.0) || beta == 1.0) throw DomainError("beta must satisfy beta in (0,2), beta != 1");
    return beta < 1.0 ? Regime::classical : Regime::weak;
}

const char* regime_name(Regime r) { return r == Regime::classical ? "classical" : "weak"; }

double ModeODE::lambda_star() const { return -lambda / std::pow(warp.p(), alpha); }

double fourier_coeff(const SampledFunction& g, const EigenSystem& sys, int k) {
    if (k < 1 || k > sys.count()) throw ContractError("fourier_coeff: mode index out of range");
    return fourier_coeffs(g, sys, k)[k - 1];
}

std::vector<double> fourier_coeffs(const SampledFunction& g, const EigenSystem& sys, int K) {
    if (K < 1 || K > sys.count()) throw ContractError("fourier_coeffs: K out of range");
    if (g.is_constant() && g(0.0) == 0.0) return std::vector<double>(K, 0.0);
    return project(g, modal_rule(sys, K, coeff_exponent(sys.beta())));
}

double mode_value(const ModeODE& ode, double t) { return mode_value_impl(ode, t, false); }
double mode_value_alt(const ModeODE& ode, double t) { return mode_value_impl(ode, t, true); }

ModeTrajectory mode_solution(const ModeODE& ode, const std::vector<double>& t_grid) {
    return trajectory(ode, t_grid, false);
}

ModeTrajectory mode_solution_alt(const ModeODE& ode, const std::vector<double>& t_grid) {
    return trajectory(ode, t_grid, true);
}

TailReport tail_estimate(const std::vector<double>& coeffs, const std::vector<double>& lambdas, int m,
                         double weighted_rhs, double slack) {
    if (lambdas.size() < coeffs.size()) throw ContractError("tail_estimate: fewer eigenvalues than coefficients");
    if (m < 0) throw DomainError("tail_estimate: m must be nonnegative");
    TailReport rep;
    rep.rhs = weighted_rhs;
    double acc = 0.0;
    for (std::size_t n = 0; n < coeffs.size(); ++n) {
        acc += std::pow(lambdas[n], m + 1) * coeffs[n] * coeffs[n];
        rep.partial_sums.push_back(acc);
    }
    rep.holds = acc <= weighted_rhs * (1.0 + slack) + slack;
    if (!coeffs.empty()) {
        const double next = lambdas.size() > coeffs.size() ? lambdas[coeffs.size()] : lambdas[coeffs.size() - 1];
        rep.tail_bound = std::max(0.0, weighted_rhs - acc) / std::pow(next, m + 1);
    } else {
        rep.tail_bound = weighted_rhs / std::pow(lambdas.empty() ? 1.0 : lambdas[0], m + 1);
    }
    return rep;
}

std::vector<ModeODE> build_mode_odes(const ProblemSpec& spec, const EigenSystem& sys, int K) {
    spec.validate();
    if (sys.beta() != spec.beta) throw ContractError("eigen system built for a different beta");
    if (K < 1 || K > sys.count()) throw ContractError("build_mode_odes: K out of range");
    const ModalRule m = modal_rule(sys, K, coeff_exponent(spec.beta));
    const std::vector<double> phi = spec.phi.is_constant() && spec.phi(0.0) == 0.0 ? std::vector<double>(K, 0.0)
                                                                                   : project(spec.phi, m);
    std::vector<SampledFunction> fk(K);
    if (spec.f.is_tabulated()) {
        const auto& tn = spec.f.t_nodes();
        std::vector<std::vector<double>> cols(K, std::vector<double>(tn.size()));
        for (std::size_t j = 0; j < tn.size(); ++j) {
            const auto c = project(spec.f.row(j), m);
            for (int k = 0; k < K; ++k) cols[k][j] = c[k];
        }
        for (int k = 0; k < K; ++k) fk[k] = SampledFunction::tabulated(tn, cols[k]);
    } else {
        for (const auto& term : spec.f.terms()) {
            const auto c = project(term.space, m);
            for (int k = 0; k < K; ++k) fk[k] = fk[k] + term.time.scaled(c[k]);
        }
    }
    std::vector<ModeODE> odes(K);
    for (int k = 0; k < K; ++k) {
        odes[k].k = k + 1;
        odes[k].alpha = spec.alpha;
        odes[k].lambda = sys.lambda(k + 1);
        odes[k].phi_k = phi[k];
        odes[k].f_k = fk[k];
        odes[k].warp = spec.warp();
    }
    return odes;
}

namespace {

struct Truncation {
    int K;
    double tail;
    double last;
};

Truncation choose_truncation(const ProblemSpec& spec, const EigenSystem& sys, const std::vector<ModeODE>& odes,
                             int K_fixed, double tol) {
    const int Kmax = static_cast<int>(odes.size());
    const double phi2 = l2_squared([&](double x) { return spec.phi(x); }, spec.beta);
    std::vector<double> phik(Kmax);
    for (int k = 0; k < Kmax; ++k) phik[k] = odes[k].phi_k;
    double energy = -1.0;
    if (spec.phi.has_derivative()) {
        const XQuadrature r = unit_interval_rule(spec.beta);
        energy = 0.0;
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            const double d = spec.phi.derivative(r.x[i]);
            energy += r.w[i] * std::pow(r.x[i], spec.beta) * d * d;
        }
    }
    // source: L2 norms and coefficients at a few times
    std::vector<double> ts;
    const bool steady = !spec.f.is_tabulated() &&
                        std::all_of(spec.f.terms().begin(), spec.f.terms().end(),
                                    [](const SourceTerm::Product& p) { return p.time.is_constant(); });
    if (steady && !spec.f.is_zero()) {
        ts.push_back(spec.a);
    } else if (!steady) {
        for (int i = 0; i <= 8; ++i) ts.push_back(spec.a + (spec.T - spec.a) * i / 8.0);
    }
    std::vector<double> f2(ts.size());
    std::vector<std::vector<double>> fk(ts.size(), std::vector<double>(Kmax));
    for (std::size_t j = 0; j < ts.size(); ++j) {
        const double t = ts[j];
        f2[j] = l2_squared([&](double x) { return spec.f(x, t); }, spec.beta);
        for (int k = 0; k < Kmax; ++k) fk[j][k] = odes[k].f_k(t);
    }

    auto estimate = [&](int K) {
        double s = 0.0;
        for (int k = 0; k < K; ++k) s += phik[k] * phik[k];
        double tail2 = std::max(0.0, phi2 - s);
        if (energy >= 0.0) {
            std::vector<double> c(phik.begin(), phik.begin() + K);
            tail2 = std::min(tail2, tail_estimate(c, sys.lambdas(), 0, energy).tail_bound);
        }
        const double next = K < sys.count() ? sys.lambda(K + 1) : sys.lambda(K);
        double ftail = 0.0, flast = 0.0;
        for (std::size_t j = 0; j < ts.size(); ++j) {
            double sf = 0.0;
            for (int k = 0; k < K; ++k) sf += fk[j][k] * fk[j][k];
            ftail = std::max(ftail, std::sqrt(std::max(0.0, f2[j] - sf)) / next);
            flast = std::max(flast, std::abs(fk[j][K - 1]) / sys.lambda(K));
        }
        return Truncation{K, std::sqrt(tail2) + ftail, std::abs(phik[K - 1]) + flast};
    };

    if (K_fixed > 0) return estimate(K_fixed);
    for (int K = 1; K <= Kmax; ++K) {
        const Truncation tr = estimate(K);
        if (tr.tail <= tol && tr.last <= tol) return tr;
    }
    const Truncation last = estimate(Kmax);
    throw ResolutionError("automatic truncation: tail estimate " + std::to_string(last.tail) + " at K = " +
                          std::to_string(Kmax) + " exceeds " + std::to_string(tol));
}

}  // namespace

SolutionField assemble(const ProblemSpec& spec, const EigenSystem& sys, int K, const std::vector<double>& x_grid,
                       const std::vector<double>& t_grid, const AssembleOptions& options) {
    spec.validate();
    if (K < 0 || K > sys.count()) throw ContractError("assemble: K must satisfy 0 <= K <= modes computed");
    for (double x : x_grid) {
        if (!(x >= 0.0 && x <= 1.0)) throw DomainError("assemble: x grid must lie in [0,1]");
    }
    for (double t : t_grid) {
        if (!(t >= spec.a && t <= spec.T)) throw DomainError("assemble: t grid must lie in [a,T]");
    }

    const int Kbuild = K == 0 ? sys.count() : K;
    std::vector<ModeODE> odes = build_mode_odes(spec, sys, Kbuild);
    const Truncation tr = choose_truncation(spec, sys, odes, K, options.auto_tol);
    if (K > 0 && options.explicit_tol > 0.0 && tr.tail > options.explicit_tol) {
        throw ResolutionError("assemble: tail estimate " + std::to_string(tr.tail) + " exceeds " +
                              std::to_string(options.explicit_tol) + " at K = " + std::to_string(K));
    }
    odes.resize(tr.K);

    auto modal = std::make_shared<ModalData>(ModalData{sys, odes, Eigen::MatrixXd(t_grid.size(), tr.K)});
    for (int k = 0; k < tr.K; ++k) {
        const ModeTrajectory traj = mode_solution(odes[k], t_grid);
        for (std::size_t j = 0; j < t_grid.size(); ++j) modal->coeffs(j, k) = traj.values[j];
    }

    Eigen::MatrixXd V(tr.K, x_grid.size());
    std::vector<double> v(sys.count()), dv(sys.count());
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        sys.eval_all(x_grid[i], v, dv);
        for (int k = 0; k < tr.K; ++k) V(k, i) = x_grid[i] == 1.0 ? 0.0 : v[k];
    }

    SolutionField field;
    field.x_grid = x_grid;
    field.t_grid = t_grid;
    field.values = modal->coeffs * V;
    field.K = tr.K;
    field.regime = regime_of(spec.beta);
    field.diagnostics.tail_estimate = tr.tail;
    field.diagnostics.last_mode = tr.last;
    field.diagnostics.warnings = compatibility_warnings(spec);
    field.modal = std::move(modal);
    return field;
}

ResidualReport residual_strong(const SolutionField& field, const ProblemSpec& spec, const ResidualOptions& options) {
    if (field.regime != Regime::classical || regime_of(spec.beta) != Regime::classical) {
        throw ContractError("residual_strong needs the classical regime 0 < beta < 1; use residual_weak");
    }
    if (!field.modal) throw ContractError("residual_strong needs a spectral field");
    const ModalData& modal = *field.modal;
    const int K = field.K;
    const Eigen::MatrixXd D = mode_derivatives(modal, field.t_grid, spec.alpha, options);

    std::vector<double> xs;
    for (double x : field.x_grid) {
        if (x > 0.0 && x < 1.0) xs.push_back(x);
    }
    Eigen::MatrixXd V(K, xs.size());
    std::vector<double> v(modal.sys.count()), dv(modal.sys.count());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        modal.sys.eval_all(xs[i], v, dv);
        for (int k = 0; k < K; ++k) V(k, i) = v[k];
    }

    ResidualReport rep;
    double scale = 0.0;
    for (std::size_t j = 0; j < field.t_grid.size(); ++j) {
        const double t = field.t_grid[j];
        if (!(t > spec.a)) continue;
        rep.times.push_back(t);
        Eigen::VectorXd r(K);
        double au = 0.0, ff = 0.0;
        for (int k = 0; k < K; ++k) {
            const double lu = modal.odes[k].lambda * modal.coeffs(j, k);
            const double fk = modal.odes[k].f_k(t);
            r(k) = D(j, k) + lu - fk;
            au += lu * lu;
            ff += fk * fk;
        }
        rep.l2 = std::max(rep.l2, r.norm());
        scale = std::max(scale, std::sqrt(au) + std::sqrt(ff));
        if (xs.size() > 0) rep.sup = std::max(rep.sup, (r.transpose() * V).cwiseAbs().maxCoeff());
    }
    rep.relative = scale > 0.0 ? rep.l2 / scale : (rep.l2 == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    return rep;
}

WeakResidualReport residual_weak(const SolutionField& field, const ProblemSpec& spec,
                                 const std::vector<SampledFunction>& tests, const ResidualOptions& options) {
    if (field.regime != Regime::weak || regime_of(spec.beta) != Regime::weak) {
        throw ContractError("residual_weak needs the weak regime 1 < beta < 2");
    }
    if (!field.modal) throw ContractError("residual_weak needs a spectral field");
    const ModalData& modal = *field.modal;
    const int K = field.K;
    const Eigen::MatrixXd D = mode_derivatives(modal, field.t_grid, spec.alpha, options);
    const ModalRule m = modal_rule(modal.sys, K, 0.0);

    // (v_k, w) and (x^beta v_k', w')
    const std::size_t n_tests = tests.size();
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n_tests, K), G = Eigen::MatrixXd::Zero(n_tests, K);
    std::vector<std::vector<double>> wv(n_tests, std::vector<double>(m.rule.x.size()));
    for (std::size_t q = 0; q < n_tests; ++q) {
        if (!tests[q].has_derivative()) throw ContractError("residual_weak: test functions need a derivative");
        for (std::size_t i = 0; i < m.rule.x.size(); ++i) {
            const double x = m.rule.x[i];
            const double w = tests[q](x);
            const double dw = tests[q].derivative(x);
            wv[q][i] = w;
            for (int k = 0; k < K; ++k) {
                C(q, k) += m.rule.w[i] * m.V(i, k) * w;
                G(q, k) += m.rule.w[i] * std::pow(x, spec.beta) * m.dV(i, k) * dw;
            }
        }
    }

    WeakResidualReport rep;
    rep.violation.assign(n_tests, 0.0);
    for (std::size_t j = 0; j < field.t_grid.size(); ++j) {
        const double t = field.t_grid[j];
        if (!(t > spec.a)) continue;
        std::vector<double> fx(m.rule.x.size());
        for (std::size_t i = 0; i < m.rule.x.size(); ++i) fx[i] = spec.f.is_zero() ? 0.0 : spec.f(m.rule.x[i], t);
        for (std::size_t q = 0; q < n_tests; ++q) {
            double dpart = 0.0, gpart = 0.0, fpart = 0.0;
            for (int k = 0; k < K; ++k) {
                dpart += C(q, k) * D(j, k);
                gpart += G(q, k) * modal.coeffs(j, k);
            }
            for (std::size_t i = 0; i < m.rule.x.size(); ++i) fpart += m.rule.w[i] * fx[i] * wv[q][i];
            const double res = dpart + gpart - fpart;
            const double size = std::abs(dpart) + std::abs(gpart) + std::abs(fpart);
            const double rel = size > 0.0 ? std::abs(res) / size : 0.0;
            rep.violation[q] = std::max(rep.violation[q], rel);
        }
    }
    for (double v : rep.violation) rep.max_violation = std::max(rep.max_violation, v);
    return rep;
}

WeakResidualReport residual_weak(const SolutionField& field, const ProblemSpec& spec, int n_modes,
                                 const ResidualOptions& options) {
    if (!field.modal) throw ContractError("residual_weak needs a spectral field");
    const EigenSystem sys = field.modal->sys;
    if (n_modes < 1 || n_modes > sys.count()) throw ContractError("residual_weak: test mode count out of range");
    std::vector<SampledFunction> tests;
    for (int k = 1; k <= n_modes; ++k) {
        tests.push_back(SampledFunction::callable([sys, k](double x) { return sys.value(k, x); },
                                                  [sys, k](double x) { return sys.derivative(k, x); }));
    }
    return residual_weak(field, spec, tests, options);
}

NormReport solution_norms(const SolutionField& field, const ProblemSpec& spec) {
    NormReport rep;
    if (!field.modal) {
        // finite-difference field: trapezoid norms on its own grid
        const auto& x = field.x_grid;
        for (Eigen::Index j = 0; j < field.values.rows(); ++j) {
            double l2 = 0.0, en = 0.0;
            for (std::size_t i = 0; i + 1 < x.size(); ++i) {
                const double h = x[i + 1] - x[i];
                const double u0 = field.values(j, i), u1 = field.values(j, i + 1);
                l2 += 0.5 * h * (u0 * u0 + u1 * u1);
                const double xm = 0.5 * (x[i] + x[i + 1]);
                en += std::pow(xm, spec.beta) * (u1 - u0) * (u1 - u0) / h;
            }
            rep.sup_l2 = std::max(rep.sup_l2, std::sqrt(l2));
            rep.sup_energy = std::max(rep.sup_energy, std::sqrt(en));
            rep.sup_w12 = std::max(rep.sup_w12, std::sqrt(l2 + en));
        }
        return rep;
    }
    const ModalData& modal = *field.modal;
    const int K = field.K;
    const ModalRule m = modal_rule(modal.sys, K, spec.beta < 1.0 ? 2.0 * (1.0 - spec.beta) : 0.0);
    for (Eigen::Index j = 0; j < modal.coeffs.rows(); ++j) {
        double l2 = 0.0, en = 0.0, a2 = 0.0;
        Eigen::VectorXd lu(K);
        for (int k = 0; k < K; ++k) {
            const double u = modal.coeffs(j, k), l = modal.odes[k].lambda;
            l2 += u * u;
            en += l * u * u;
            a2 += l * l * u * u;
            lu(k) = l * u;
        }
        rep.sup_l2 = std::max(rep.sup_l2, std::sqrt(l2));
        rep.sup_energy = std::max(rep.sup_energy, std::sqrt(en));
        rep.sup_w12 = std::max(rep.sup_w12, std::sqrt(l2 + en));
        if (a2 > 0.0) {
            const Eigen::VectorXd Au = m.V * lu;
            double q = 0.0;
            for (std::size_t i = 0; i < m.rule.x.size(); ++i) q += m.rule.w[i] * Au(i) * Au(i);
            rep.parseval_defect = std::max(rep.parseval_defect, std::abs(a2 - q) / q);
        }
    }
    const QuadRule& gl = cached_gauss_legendre(16);
    for (const ModeODE& ode : modal.odes) {
        const double l2 = ode.lambda * ode.lambda;
        rep.series_phi += l2 * ode.phi_k * ode.phi_k;
        const double fa = ode.f_k(spec.a);
        rep.series_f_a += l2 * fa * fa;
        if (ode.f_k.is_constant()) continue;
        // int_a^T f_k'^2 on 16 panels, derivative by the closed form or central differences
        double acc = 0.0;
        const int panels = 16;
        const double width = (spec.T - spec.a) / panels;
        for (int p = 0; p < panels; ++p) {
            for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
                const double t = spec.a + width * (p + 0.5 * (1.0 + gl.nodes[i]));
                double d;
                if (ode.f_k.has_derivative()) {
                    d = ode.f_k.derivative(t);
                } else {
                    const double h = 1e-6 * (spec.T - spec.a);
                    const double lo = std::max(spec.a, t - h), hi = std::min(spec.T, t + h);
                    d = (ode.f_k(hi) - ode.f_k(lo)) / (hi - lo);
                }
                acc += 0.5 * width * gl.weights[i] * d * d;
            }
        }
        rep.series_df += l2 * acc;
    }
    return rep;
}

std::vector<double> graded_times(const ProblemSpec& spec, int N) {
    spec.validate();
    if (N < 1) throw DomainError("graded_times: N must be positive");
    const TimeWarp w = spec.warp();
    const double S = w.forward(spec.T);
    const auto s = graded_grid(S, N, (2.0 - spec.alpha) / spec.alpha);
    std::vector<double> t;
    for (int j = 1; j <= N; ++j) t.push_back(j == N ? spec.T : w.inverse(s[j]));
    return t;
}

}  // namespace hbfrac
