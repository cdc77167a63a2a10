#pragma once

#include "hbfrac/sampled_function.hpp"
#include "hbfrac/time_warp.hpp"

#include <span>
#include <vector>

namespace hbfrac {

/// Parameters of the Erdelyi-Kober integral I^{gamma,delta}_{beta; a+}.
struct EKParams {
    double gamma_ek = 0.0;
    double delta = 1.0;
    double beta_ek = 1.0;
    double a = 0.0;
};

/// t^{-beta(gamma+delta)} / Gamma(delta) * int_a^t (t^beta - tau^beta)^{delta-1}
///     tau^{beta gamma} f(tau) d(tau^beta).
/// Composite Gauss rules on panels refined geometrically toward both ends, with a
/// Gauss-Jacobi rule carrying the kernel singularity on the last panel. Integrable
/// singularities of f at tau = a are tolerated.
double ek_integral(const SampledFunction& f, const EKParams& params, double t);

/// L1 discretization of the Caputo derivative of order alpha in (0,1) on a grid
/// starting at 0. Entry n uses the piecewise-linear interpolant of g on [s_0, s_n];
/// entry 0 is 0.
std::vector<double> caputo_l1(const SampledFunction& g, double alpha, std::span<const double> s_grid);

/// Same scheme on precomputed samples g_j = g(s_j).
std::vector<double> caputo_l1_samples(std::span<const double> g, double alpha,
                                      std::span<const double> s_grid);

/// s_j = S (j/N)^exponent, j = 0..N.
std::vector<double> graded_grid(double S, int N, double exponent);

struct HBCaputoOptions {
    /// intervals on each half of [0, S]
    int half_intervals = 2048;
    /// grading exponent toward s = 0; 0 selects (2 - alpha) / alpha capped at 8
    double left_grading = 0.0;
    double right_grading = 2.0;
};

/// Regularized Caputo-like hyper-Bessel derivative of order alpha in (0,1] at t > a:
/// p^alpha times the classical Caputo derivative of s -> f(t(s)) at s = t^p - a^p,
/// evaluated by the L1 rule on a grid graded toward both ends of [0, s].
/// alpha = 1 reduces to t^theta f'(t).
double hb_caputo(const SampledFunction& f, double alpha, const TimeWarp& warp, double t,
                 const HBCaputoOptions& options = {});

/// Independent evaluation through Erdelyi-Kober integrals in t:
/// p^alpha t^{-alpha p} [ (1-alpha) I^{0,1-alpha}_{p;a+}(f - f(a)) + (1/p) I^{0,1-alpha}_{p;a+}(tau f'(tau)) ].
/// Needs f'.
double hb_caputo_ek(const SampledFunction& f, double alpha, const TimeWarp& warp, double t);

}  // namespace hbfrac
