#include "hbfrac/special_functions.hpp"

#include "hbfrac/errors.hpp"

#include <boost/math/special_functions/bessel.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace hbfrac {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// log(machine epsilon); the contour parameters keep exp(mu) * eps below the tolerance.
const double kLogEps = std::log(std::numeric_limits<double>::epsilon());
const double kLogTol = std::log(1.0e-15);

bool is_nonpositive_integer(double x) {
    return x <= 0.0 && x == std::nearbyint(x);
}

// Power series with Neumaier summation. Only used where |z| is small enough that
// the terms do not cancel.
double ml_series(double alpha, double beta, double z) {
    double sum = 0.0;
    double comp = 0.0;
    double zk = 1.0;
    for (int k = 0; k < 500; ++k) {
        const double arg = alpha * k + beta;
        const double term = zk * rgamma(arg);
        const double t = sum + term;
        if (std::abs(sum) >= std::abs(term)) {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        if (arg > 1.0 && std::abs(zk) * 1.2 < 1.0e-18 * std::abs(sum + comp)) break;
        zk *= z;
        if (zk == 0.0) break;
    }
    return sum + comp;
}

// Algebraic expansion -sum_{n>=1} z^{-n} / Gamma(beta - alpha n) on the negative ray
// for 0 < alpha < 1. Truncated where the term envelope stops decreasing; the envelope
// replaces 1/Gamma(x) by its reflection bound Gamma(1-x)/pi so that terms which
// happen to sit near a pole of Gamma do not stop the summation early. Returns NaN
// when the smallest envelope is not negligible.
double ml_asymptotic(double alpha, double beta, double z) {
    const double log_abs_z = std::log(-z);
    double sum = 0.0;
    double zn = 1.0;
    double prev_log_env = kInf;
    for (int n = 1; n <= 80; ++n) {
        zn /= z;
        const double x = beta - alpha * n;
        const double log_env = x < 0.5 ? -n * log_abs_z + std::lgamma(1.0 - x) - std::log(kPi)
                                       : -n * log_abs_z - std::lgamma(x);
        if (log_env > prev_log_env) break;
        prev_log_env = log_env;
        sum -= zn * rgamma(x);
        if (sum != 0.0 && log_env < std::log(1.0e-17 * std::abs(sum))) return sum;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

struct Contour {
    double mu = 0.0;
    double h = 0.0;
    double N = kInf;
};

// Parabolic contour confined between two singularities with strengths p (left)
// and q (right).
Contour contour_between(double phi_j, double phi_j1, double pj, double qj, double log_tol) {
    constexpr double fac = 1.01;
    const double f_max = std::exp(log_tol - kLogEps);

    const double sq_phi_j = std::sqrt(phi_j);
    const double threshold = 2.0 * std::sqrt(log_tol - kLogEps);
    const double sq_phi_j1 = std::min(std::sqrt(phi_j1), threshold - sq_phi_j);

    double sq_bar_j = 0.0;
    double sq_bar_j1 = 0.0;
    double f_bar = 1.0;
    bool admissible = false;

    if (pj < 1.0e-14 && qj < 1.0e-14) {
        sq_bar_j = sq_phi_j;
        sq_bar_j1 = sq_phi_j1;
        admissible = true;
    } else if (pj < 1.0e-14) {
        sq_bar_j = sq_phi_j;
        const double f_min = sq_phi_j > 0.0
                                 ? fac * std::pow(sq_phi_j / (sq_phi_j1 - sq_phi_j), qj)
                                 : fac;
        if (f_min < f_max) {
            f_bar = f_min + f_min / f_max * (f_max - f_min);
            const double fq = std::pow(f_bar, -1.0 / qj);
            sq_bar_j1 = (2.0 * sq_phi_j1 - fq * sq_phi_j) / (2.0 + fq);
            admissible = true;
        }
    } else if (qj < 1.0e-14) {
        sq_bar_j1 = sq_phi_j1;
        const double f_min = fac * std::pow(sq_phi_j1 / (sq_phi_j1 - sq_phi_j), pj);
        if (f_min < f_max) {
            f_bar = f_min + f_min / f_max * (f_max - f_min);
            const double fp = std::pow(f_bar, -1.0 / pj);
            sq_bar_j = (2.0 * sq_phi_j + fp * sq_phi_j1) / (2.0 - fp);
            admissible = true;
        }
    } else {
        double f_min = fac * (sq_phi_j + sq_phi_j1) /
                       std::pow(sq_phi_j1 - sq_phi_j, std::max(pj, qj));
        if (f_min < f_max) {
            f_min = std::max(f_min, 1.5);
            f_bar = f_min + f_min / f_max * (f_max - f_min);
            const double fp = std::pow(f_bar, -1.0 / pj);
            const double fq = std::pow(f_bar, -1.0 / qj);
            const double w = -phi_j1 / log_tol;
            const double den = 2.0 + w - (1.0 + w) * fp + fq;
            sq_bar_j = ((2.0 + w + fq) * sq_phi_j + fp * sq_phi_j1) / den;
            sq_bar_j1 = (-(1.0 + w) * fq * sq_phi_j + (2.0 + w - (1.0 + w) * fp) * sq_phi_j1) / den;
            admissible = true;
        }
    }
    if (!admissible) return {};

    const double log_tol_eff = log_tol - std::log(f_bar);
    const double w = -sq_bar_j1 * sq_bar_j1 / log_tol_eff;
    Contour c;
    c.mu = std::pow(((1.0 + w) * sq_bar_j + sq_bar_j1) / (2.0 + w), 2);
    c.h = -2.0 * kPi / log_tol_eff * (sq_bar_j1 - sq_bar_j) / ((1.0 + w) * sq_bar_j + sq_bar_j1);
    c.N = std::ceil(std::sqrt(1.0 - log_tol_eff / c.mu) / c.h);
    return c;
}

// Parabolic contour to the right of the rightmost singularity (strength p).
Contour contour_unbounded(double phi_j, double pj, double log_tol) {
    const double sq_phi_j = std::sqrt(phi_j);
    double phibar = phi_j > 0.0 ? phi_j * 1.01 : 0.01;
    double sq_phibar = std::sqrt(phibar);
    constexpr double f_min = 1.0;
    constexpr double f_max = 10.0;
    constexpr double f_tar = 5.0;

    double N = 0.0;
    double A = 0.0;
    double sq_mu = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
        const double phi_t = phibar;
        const double log_eps_phi_t = log_tol / phi_t;
        N = std::ceil(phi_t / kPi * (1.0 - 1.5 * log_eps_phi_t + std::sqrt(1.0 - 2.0 * log_eps_phi_t)));
        A = kPi * N / phi_t;
        sq_mu = sq_phibar * std::abs(4.0 - A) / std::abs(7.0 - std::sqrt(1.0 + 12.0 * A));
        const double fbar = std::pow((sq_phibar - sq_phi_j) / sq_mu, -pj);
        if (pj < 1.0e-14 || (f_min < fbar && fbar < f_max)) break;
        sq_phibar = std::pow(f_tar, -1.0 / pj) * sq_mu + sq_phi_j;
        phibar = sq_phibar * sq_phibar;
    }
    Contour c;
    c.mu = sq_mu * sq_mu;
    c.h = (-3.0 * A - 2.0 + 2.0 * std::sqrt(1.0 + 12.0 * A)) / (4.0 - A) / N;
    c.N = N;

    // Keep exp(mu) small enough that round-off stays under the tolerance.
    const double threshold = log_tol - kLogEps;
    if (c.mu > threshold) {
        const double Q = std::abs(pj) < 1.0e-14 ? 0.0 : std::pow(f_tar, -1.0 / pj) * std::sqrt(c.mu);
        phibar = std::pow(Q + sq_phi_j, 2);
        if (phibar < threshold) {
            const double w = std::sqrt(kLogEps / (kLogEps - log_tol));
            const double u = std::sqrt(-phibar / kLogEps);
            c.mu = threshold;
            c.N = std::ceil(w * log_tol / 2.0 / kPi / (u * w - 1.0));
            c.h = w / c.N;
        } else {
            c = Contour{};
        }
    }
    return c;
}

double ml_laplace(double alpha, double beta, double z) {
    const double theta = z < 0.0 ? kPi : 0.0;
    const auto kmin = static_cast<int>(std::ceil(-alpha / 2.0 - theta / (2.0 * kPi)));
    const auto kmax = static_cast<int>(std::floor(alpha / 2.0 - theta / (2.0 * kPi)));
    const double rz = std::pow(std::abs(z), 1.0 / alpha);

    struct Singularity {
        cplx s;
        double phi;
    };
    std::vector<Singularity> poles;
    for (int k = kmin; k <= kmax; ++k) {
        const cplx s = std::polar(rz, (theta + 2.0 * kPi * k) / alpha);
        const double phi = 0.5 * (s.real() + std::abs(s));
        if (phi > 1.0e-15) poles.push_back({s, phi});
    }
    std::stable_sort(poles.begin(), poles.end(),
                     [](const Singularity& l, const Singularity& r) { return l.phi < r.phi; });

    // Singular points: origin followed by the sorted poles; phi has a trailing +inf.
    const std::size_t n_sing = poles.size() + 1;
    std::vector<double> phi(n_sing + 1);
    std::vector<double> p(n_sing);
    std::vector<double> q(n_sing);
    phi[0] = 0.0;
    p[0] = std::max(0.0, -2.0 * (alpha - beta + 1.0));
    for (std::size_t j = 0; j < poles.size(); ++j) {
        phi[j + 1] = poles[j].phi;
        p[j + 1] = 1.0;
    }
    phi[n_sing] = kInf;
    for (std::size_t j = 0; j < n_sing; ++j) q[j] = (j + 1 < n_sing) ? 1.0 : kInf;

    std::vector<std::size_t> regions;
    for (std::size_t j = 0; j < n_sing; ++j) {
        if (phi[j] < kLogTol - kLogEps && phi[j] < phi[j + 1]) regions.push_back(j);
    }
    if (regions.empty()) throw NumericError("ml_eval: no admissible integration contour");

    double log_tol = kLogTol;
    Contour best;
    std::size_t best_region = 0;
    for (int attempt = 0; attempt < 20; ++attempt) {
        best = Contour{};
        for (const std::size_t j : regions) {
            const Contour c = (j + 1 < n_sing)
                                  ? contour_between(phi[j], phi[j + 1], p[j], q[j], log_tol)
                                  : contour_unbounded(phi[j], p[j], log_tol);
            if (c.N < best.N) {
                best = c;
                best_region = j;
            }
        }
        if (best.N <= 200.0) break;
        log_tol += std::log(10.0);
    }
    if (!std::isfinite(best.N)) throw NumericError("ml_eval: contour selection failed");

    // Trapezoidal rule on z(u) = mu (1 + i u)^2. For real z the integrand at -u is
    // minus the conjugate of the integrand at u, so only u >= 0 is evaluated.
    const auto N = static_cast<int>(best.N);
    const double mu = best.mu;
    double acc = 0.0;
    for (int k = 0; k <= N; ++k) {
        const double u = best.h * k;
        const cplx s = mu * cplx(1.0 - u * u, 2.0 * u);
        const cplx ds(-2.0 * mu * u, 2.0 * mu);
        const cplx log_s = std::log(s);
        const cplx num = std::exp(s + (alpha - beta) * log_s);
        const cplx den = std::exp(alpha * log_s) - z;
        const double im = (num / den * ds).imag();
        acc += (k == 0) ? im : 2.0 * im;
    }
    double result = best.h * acc / (2.0 * kPi);

    // Poles lying to the right of the chosen contour contribute their residues.
    cplx residues(0.0, 0.0);
    for (std::size_t j = best_region + 1; j < n_sing; ++j) {
        const cplx s = poles[j - 1].s;
        residues += std::exp(s + (1.0 - beta) * std::log(s)) / alpha;
    }
    result += residues.real();
    return result;
}

}  // namespace

double gamma_eval(double x) {
    if (!std::isfinite(x)) throw DomainError("gamma_eval: non-finite argument");
    if (is_nonpositive_integer(x)) {
        throw DomainError("gamma_eval: pole at x = " + std::to_string(x));
    }
    return std::tgamma(x);
}

double rgamma(double x) {
    if (is_nonpositive_integer(x)) return 0.0;
    if (x > 171.0) return 0.0;
    return 1.0 / std::tgamma(x);
}

double ml_eval(const MLArgs& args) {
    const auto [alpha, beta, z] = args;
    if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(z)) {
        throw DomainError("ml_eval: non-finite argument");
    }
    if (alpha <= 0.0) throw DomainError("ml_eval: alpha must be positive");
    if (z == 0.0) return rgamma(beta);
    if (alpha == 1.0 && beta <= 1.0 && beta == std::nearbyint(beta)) {
        // E_{1,1-m}(z) = z^m e^z; exponentially small on the negative ray, where the
        // contour integral only has absolute accuracy.
        return std::pow(z, 1.0 - beta) * std::exp(z);
    }
    if (std::abs(z) <= 0.5) return ml_series(alpha, beta, z);
    if (alpha < 1.0 && z < 0.0 && std::pow(-z, 1.0 / alpha) > 40.0) {
        const double value = ml_asymptotic(alpha, beta, z);
        if (!std::isnan(value)) return value;
    }
    const double value = ml_laplace(alpha, beta, z);
    if (std::isnan(value)) throw NumericError("ml_eval: evaluation produced NaN");
    return value;
}

double ml_eval(double alpha, double beta, double z) {
    return ml_eval(MLArgs{alpha, beta, z});
}

double bessel_j(double order, double x) {
    if (!std::isfinite(order) || !std::isfinite(x)) {
        throw DomainError("bessel_j: non-finite argument");
    }
    if (x < 0.0) throw DomainError("bessel_j: x must be nonnegative");
    if (x == 0.0) {
        if (order == 0.0) return 1.0;
        if (order > 0.0) return 0.0;
    }
    return boost::math::cyl_bessel_j(order, x);
}

double bessel_j_zero(double order, int k) {
    if (k < 1) throw DomainError("bessel_j_zero: k must be >= 1");
    if (!(order > -1.0)) throw DomainError("bessel_j_zero: order must exceed -1");

    // J_order is positive just right of the origin. Walk forward counting sign
    // changes; for order >= 0 consecutive zeros are more than 2 apart, so a step
    // of 0.25 cannot skip a pair.
    constexpr double step = 0.25;
    double lo = 1.0e-8;
    double f_lo = bessel_j(order, lo);
    int found = 0;
    double hi = lo;
    double f_hi = f_lo;
    while (true) {
        hi = lo + step;
        f_hi = bessel_j(order, hi);
        if ((f_lo > 0.0) != (f_hi > 0.0)) {
            if (++found == k) break;
        }
        lo = hi;
        f_lo = f_hi;
    }
    while (hi - lo > 1.0e-13 * hi) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = bessel_j(order, mid);
        if (f_mid == 0.0) return mid;
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

MLBoundFit ml_bound_fit(double alpha, double beta, std::span<const double> ray_samples) {
    if (!(alpha > 0.0) || !(alpha < 2.0)) {
        throw DomainError("ml_bound_fit: the decay bound is only claimed for 0 < alpha < 2");
    }
    if (ray_samples.empty()) throw DomainError("ml_bound_fit: no samples");
    double M = 0.0;
    for (const double x : ray_samples) {
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw DomainError("ml_bound_fit: samples must be finite and nonnegative");
        }
        M = std::max(M, std::abs(ml_eval(alpha, beta, -x)) * (1.0 + x));
    }
    if (!std::isfinite(M)) throw NumericError("ml_bound_fit: bound is not finite");
    const double lower = kPi * alpha / 2.0;
    const double upper = std::min(kPi, kPi * alpha);
    return MLBoundFit{M, 0.5 * (lower + upper), static_cast<int>(ray_samples.size())};
}

}  // namespace hbfrac
