#pragma once

#include <span>

namespace hbfrac {

/// Arguments of the two-parameter Mittag-Leffler function E_{alpha,beta}(z).
struct MLArgs {
    double alpha;
    double beta;
    double z;
};

/// Empirical constant of the algebraic decay bound |E_{alpha,beta}(z)| <= M / (1 + |z|)
/// on the negative real ray.
struct MLBoundFit {
    double M;
    double sector_mu;  ///< an admissible sector angle in (pi*alpha/2, min(pi, pi*alpha))
    int sample_count;
};

/// Two-parameter Mittag-Leffler function for real argument.
///
/// Small |z| is summed from the power series. Far out on the negative ray with
/// alpha < 1 the algebraic asymptotic expansion is used. Everything else is obtained
/// by numerically inverting the Laplace transform s^(alpha-beta) / (s^alpha - z) on an
/// optimal parabolic contour, with the residues of the poles that lie outside the
/// contour added back.
///
/// Throws DomainError for alpha <= 0 or non-finite input.
double ml_eval(const MLArgs& args);
double ml_eval(double alpha, double beta, double z);

/// Gamma function; DomainError at the poles 0, -1, -2, ...
double gamma_eval(double x);

/// 1/Gamma(x), defined as 0 at the poles.
double rgamma(double x);

/// Bessel function of the first kind J_order(x) for x >= 0.
double bessel_j(double order, double x);

/// k-th positive zero of J_order (k >= 1, order > -1), refined by bisection.
double bessel_j_zero(double order, int k);

/// Smallest M with |E_{alpha,beta}(-x)| (1 + x) <= M over the given samples x >= 0.
MLBoundFit ml_bound_fit(double alpha, double beta, std::span<const double> ray_samples);

}  // namespace hbfrac
