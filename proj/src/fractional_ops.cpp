#include "hbfrac/fractional_ops.hpp"

#include "hbfrac/errors.hpp"
#include "hbfrac/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace hbfrac {

namespace {

constexpr int kPanelPoints = 12;
constexpr int kLeftLevels = 60;
constexpr int kRightLevels = 30;

// A^(1-alpha) - B^(1-alpha) for A = B + h >= B >= 0, without cancellation.
double power_gap(double A, double h, double one_minus_alpha) {
    if (h >= A) return std::pow(A, one_minus_alpha);
    return -std::pow(A, one_minus_alpha) * std::expm1(one_minus_alpha * std::log1p(-h / A));
}

void check_alpha(double alpha, bool allow_one, const char* who) {
    const bool ok = alpha > 0.0 && (allow_one ? alpha <= 1.0 : alpha < 1.0);
    if (!ok) {
        throw DomainError(std::string(who) + (allow_one ? ": alpha must lie in (0,1]"
                                                        : ": alpha must lie in (0,1)"));
    }
}

}  // namespace

double ek_integral(const SampledFunction& f, const EKParams& params, double t) {
    const auto [gamma_ek, delta, beta_ek, a] = params;
    if (!(delta > 0.0)) throw DomainError("ek_integral: delta must be positive");
    if (!(beta_ek > 0.0)) throw DomainError("ek_integral: beta must be positive");
    if (!(a >= 0.0)) throw DomainError("ek_integral: a must be nonnegative");
    if (!(t >= a) || !std::isfinite(t)) throw DomainError("ek_integral: t must satisfy t >= a");
    if (t == a) return 0.0;

    // u = tau^beta, v = u - a^beta in [0, L]
    const double A = std::pow(a, beta_ek);
    const double L = a > 0.0 ? A * std::expm1(beta_ek * std::log(t / a)) : std::pow(t, beta_ek);
    auto tau_of = [&](double v) {
        if (a > 0.0) return a * std::exp(std::log1p(v / A) / beta_ek);
        return std::pow(v, 1.0 / beta_ek);
    };
    auto h = [&](double v) {
        const double u = A + v;
        const double weight = gamma_ek == 0.0 ? 1.0 : std::pow(u, gamma_ek);
        return weight * f(tau_of(v));
    };

    const QuadRule& gl = cached_gauss_legendre(kPanelPoints);
    auto panel = [&](double lo, double hi) {
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        double acc = 0.0;
        for (int i = 0; i < kPanelPoints; ++i) {
            const double v = mid + half * gl.nodes[i];
            acc += gl.weights[i] * std::pow(L - v, delta - 1.0) * h(v);
        }
        return acc * half;
    };

    double total = 0.0;
    // left half, refined toward v = 0
    double hi = 0.5 * L;
    // For a > 0 refinement stops where tau can no longer be told apart from a.
    const double v_floor = a > 0.0 ? 1.0e-13 * A : 0.0;
    for (int k = 0; k < kLeftLevels && 0.5 * hi > v_floor; ++k) {
        const double lo = 0.5 * hi;
        total += panel(lo, hi);
        hi = lo;
    }
    total += panel(0.0, hi);
    // right half, refined toward v = L; the last panel takes the kernel into the weight
    double gap = 0.5 * L;
    for (int k = 0; k < kRightLevels; ++k) {
        total += panel(L - gap, L - 0.5 * gap);
        gap *= 0.5;
    }
    const QuadRule& gj = cached_gauss_jacobi(kPanelPoints, delta - 1.0, 0.0);
    double tail = 0.0;
    for (int i = 0; i < kPanelPoints; ++i) {
        const double v = L - gap + 0.5 * gap * (1.0 + gj.nodes[i]);
        tail += gj.weights[i] * h(v);
    }
    total += tail * std::pow(0.5 * gap, delta);

    return std::exp(-beta_ek * (gamma_ek + delta) * std::log(t) - std::lgamma(delta)) * total;
}

std::vector<double> graded_grid(double S, int N, double exponent) {
    if (N < 1) throw DomainError("graded_grid: N must be positive");
    if (!(S > 0.0) || !(exponent > 0.0)) throw DomainError("graded_grid: S and exponent must be positive");
    std::vector<double> s(N + 1);
    for (int j = 0; j <= N; ++j) s[j] = S * std::pow(static_cast<double>(j) / N, exponent);
    s[N] = S;
    return s;
}

std::vector<double> caputo_l1_samples(std::span<const double> g, double alpha,
                                      std::span<const double> s_grid) {
    check_alpha(alpha, false, "caputo_l1");
    if (g.size() != s_grid.size() || s_grid.empty()) {
        throw ContractError("caputo_l1: samples and grid differ in length");
    }
    if (s_grid.front() != 0.0) throw ContractError("caputo_l1: grid must start at 0");
    const std::size_t n_nodes = s_grid.size();
    std::vector<double> slope(n_nodes > 1 ? n_nodes - 1 : 0);
    for (std::size_t j = 0; j + 1 < n_nodes; ++j) {
        const double h = s_grid[j + 1] - s_grid[j];
        if (!(h > 0.0)) throw ContractError("caputo_l1: grid must be strictly increasing");
        slope[j] = (g[j + 1] - g[j]) / h;
    }
    const double oma = 1.0 - alpha;
    const double scale = 1.0 / std::tgamma(2.0 - alpha);
    std::vector<double> out(n_nodes, 0.0);
    for (std::size_t n = 1; n < n_nodes; ++n) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double A = s_grid[n] - s_grid[j];
            acc += slope[j] * power_gap(A, s_grid[j + 1] - s_grid[j], oma);
        }
        out[n] = scale * acc;
    }
    return out;
}

std::vector<double> caputo_l1(const SampledFunction& g, double alpha, std::span<const double> s_grid) {
    std::vector<double> samples(s_grid.size());
    for (std::size_t j = 0; j < s_grid.size(); ++j) samples[j] = g(s_grid[j]);
    return caputo_l1_samples(samples, alpha, s_grid);
}

double hb_caputo(const SampledFunction& f, double alpha, const TimeWarp& warp, double t,
                 const HBCaputoOptions& options) {
    check_alpha(alpha, true, "hb_caputo");
    if (!(t > warp.a) || !std::isfinite(t)) throw DomainError("hb_caputo: t must exceed a");
    if (f.is_constant()) return 0.0;

    const double p = warp.p();
    const double S = warp.forward(t);

    if (alpha == 1.0) {
        if (f.has_derivative()) return std::pow(t, warp.theta) * f.derivative(t);
        // one-sided fourth-order difference in s
        const double h = S / 64.0;
        double g[5];
        for (int k = 0; k < 5; ++k) g[k] = f(warp.inverse(S - k * h));
        const double dg = (25.0 * g[0] - 48.0 * g[1] + 36.0 * g[2] - 16.0 * g[3] + 3.0 * g[4]) / (12.0 * h);
        return p * dg;
    }

    const int M = options.half_intervals;
    if (M < 1) throw DomainError("hb_caputo: half_intervals must be positive");
    // The default grading is capped so that the first node stays above ~1e-10 S:
    // closer to s = 0 the samples f(t(s)) are dominated by rounding in t.
    const double r_left = options.left_grading > 0.0
                              ? options.left_grading
                              : std::min((2.0 - alpha) / alpha, 10.0 / std::log10(2.0 * M));
    const double r_right = options.right_grading;

    // Nodes sigma_j with their distances d_j = S - sigma_j kept separately so that the
    // kernel differences near s = S keep their digits.
    const int n_nodes = 2 * M + 1;
    std::vector<double> sigma(n_nodes), dist(n_nodes), g(n_nodes);
    const double half = 0.5 * S;
    for (int j = 0; j <= M; ++j) {
        const double x = std::pow(static_cast<double>(j) / M, r_left);
        sigma[j] = half * x;
        dist[j] = S - sigma[j];
        const double y = std::pow(static_cast<double>(M - j) / M, r_right);
        dist[M + j] = half * y;
        sigma[M + j] = S - dist[M + j];
    }
    sigma[0] = 0.0;
    dist[0] = S;
    dist[n_nodes - 1] = 0.0;
    sigma[n_nodes - 1] = S;
    for (int j = 0; j < n_nodes; ++j) {
        g[j] = j == 0 ? f(warp.a) : j == n_nodes - 1 ? f(t) : f(warp.inverse(sigma[j]));
    }

    const double oma = 1.0 - alpha;
    double acc = 0.0;
    for (int j = 0; j + 1 < n_nodes; ++j) {
        const double h = dist[j] - dist[j + 1];
        if (!(h > 0.0)) continue;
        acc += (g[j + 1] - g[j]) / h * power_gap(dist[j], h, oma);
    }
    return std::pow(p, alpha) / std::tgamma(2.0 - alpha) * acc;
}

double hb_caputo_ek(const SampledFunction& f, double alpha, const TimeWarp& warp, double t) {
    check_alpha(alpha, false, "hb_caputo_ek");
    if (!(t > warp.a)) throw DomainError("hb_caputo_ek: t must exceed a");
    if (!f.has_derivative()) throw ContractError("hb_caputo_ek: f' is required");
    const double p = warp.p();
    const double fa = f(warp.a);
    const auto shifted = SampledFunction::callable([f, fa](double x) { return f(x) - fa; });
    const auto flux = SampledFunction::callable([f](double x) { return x * f.derivative(x); });
    const EKParams params{0.0, 1.0 - alpha, p, warp.a};
    const double i1 = ek_integral(shifted, params, t);
    const double i2 = ek_integral(flux, params, t);
    return std::pow(p, alpha) * std::pow(t, -alpha * p) * ((1.0 - alpha) * i1 + i2 / p);
}

}  // namespace hbfrac
