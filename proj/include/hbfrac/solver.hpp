#pragma once

#include "hbfrac/fractional_ops.hpp"
#include "hbfrac/sampled_function.hpp"
#include "hbfrac/spectral.hpp"
#include "hbfrac/time_warp.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hbfrac {

/// Source f(x, t): a sum of separable products X_i(x) T_i(t), or a table on an
/// (x, t) grid interpolated by monotone cubics in x and t.
class SourceTerm {
public:
    struct Product {
        SampledFunction space;
        SampledFunction time;
    };

    SourceTerm() = default;
    static SourceTerm zero() { return {}; }
    static SourceTerm separable(std::vector<Product> terms);
    static SourceTerm constant(double c);
    /// values(j, i) = f(x_nodes[i], t_nodes[j])
    static SourceTerm tabulated(std::vector<double> x_nodes, std::vector<double> t_nodes,
                                Eigen::MatrixXd values);

    double operator()(double x, double t) const;
    bool is_zero() const;
    bool is_tabulated() const { return !t_nodes_.empty(); }
    const std::vector<Product>& terms() const { return terms_; }
    const std::vector<double>& x_nodes() const { return x_nodes_; }
    const std::vector<double>& t_nodes() const { return t_nodes_; }
    /// The spatial profile at tabulation time index j.
    SampledFunction row(std::size_t j) const;

private:
    std::vector<Product> terms_;
    std::vector<double> x_nodes_, t_nodes_;
    Eigen::MatrixXd values_;
    std::vector<SampledFunction> rows_;
};

struct ProblemSpec {
    double alpha = 0.5;
    double theta = 0.0;
    double beta = 0.5;
    double a = 0.0;
    double T = 1.0;
    SampledFunction phi;
    SourceTerm f;

    /// Throws DomainError for alpha outside (0,1], theta >= 1, beta outside (0,2) or
    /// equal to 1, a < 0, T <= a or non-finite T.
    void validate() const;
    TimeWarp warp() const { return TimeWarp(theta, a); }
};

/// Boundary compatibility of phi. Violations are reported, never rejected.
std::vector<std::string> compatibility_warnings(const ProblemSpec& spec, double tol = 1e-8);

enum class Regime { classical, weak };
Regime regime_of(double beta);
const char* regime_name(Regime r);

/// p^alpha D^alpha u_k + lambda_k u_k = f_k,  u_k(a+) = phi_k.
struct ModeODE {
    int k = 1;
    double alpha = 0.5;
    double lambda = 1.0;
    double phi_k = 0.0;
    SampledFunction f_k;
    TimeWarp warp;

    double lambda_star() const;
};

enum class ModeMethod { direct_kernel, split_kernel };

struct ModeTrajectory {
    int k = 1;
    std::vector<double> t_grid;
    std::vector<double> values;
    ModeMethod method_tag = ModeMethod::direct_kernel;
};

/// int_0^1 g v_k dx on the graded rule of unit_interval_rule.
double fourier_coeff(const SampledFunction& g, const EigenSystem& sys, int k);

/// All coefficients 1..K at once.
std::vector<double> fourier_coeffs(const SampledFunction& g, const EigenSystem& sys, int K);

/// u_k(t) = phi_k E_{alpha,1}(lambda* s^alpha)
///        + p^-alpha int_0^s (s - sigma)^(alpha-1) E_{alpha,alpha}(lambda* (s - sigma)^alpha) f_k(t(sigma)) dsigma
/// with s = t^p - a^p. Constant f_k uses the closed form
/// f_k s^alpha E_{alpha,alpha+1}(lambda* s^alpha) / p^alpha; otherwise composite Gauss
/// rules on panels halving toward both ends of [0, s]; the panel touching sigma = s
/// is mapped by s - sigma = h u^(1/alpha) so that the kernel becomes smooth.
double mode_value(const ModeODE& ode, double t);
ModeTrajectory mode_solution(const ModeODE& ode, const std::vector<double>& t_grid);

/// The same solution from the split kernel
///     r^(alpha-1) E_{alpha,alpha}(l r^alpha) = r^(alpha-1)/Gamma(alpha) + l r^(2alpha-1) E_{alpha,2alpha}(l r^alpha),
/// integrated after the substitution r = s w^(1/alpha), which removes the weak
/// singularity. Constant f_k uses f_k (s^alpha/Gamma(alpha+1) + l s^(2alpha) E_{alpha,2alpha+1}(l s^alpha)).
double mode_value_alt(const ModeODE& ode, double t);
ModeTrajectory mode_solution_alt(const ModeODE& ode, const std::vector<double>& t_grid);

struct TailReport {
    std::vector<double> partial_sums;  ///< sum_{n<=K} lambda_n^(m+1) g_n^2 for K = 1..
    double rhs = 0.0;
    bool holds = true;
    /// bound on sum_{n>K} g_n^2 for the full K
    double tail_bound = 0.0;
};

/// Bessel-type inequality sum lambda_n^(m+1) g_n^2 <= rhs. The caller supplies rhs by
/// quadrature. lambdas may be longer than coeffs; lambda_{K+1} sharpens the tail bound.
TailReport tail_estimate(const std::vector<double>& coeffs, const std::vector<double>& lambdas, int m,
                         double weighted_rhs, double slack = 1e-10);

struct ResidualReport {
    double sup = 0.0;       ///< over interior sample points
    double l2 = 0.0;        ///< max over times of the L2(0,1) norm
    double relative = 0.0;  ///< l2 over the size of the terms balanced in the equation
    std::vector<double> times;
};

struct NormReport {
    double sup_l2 = 0.0;
    double sup_energy = 0.0;  ///< sup_t (int x^beta u_x^2)^(1/2)
    double sup_w12 = 0.0;     ///< sup_t (int u^2 + x^beta u_x^2)^(1/2)
    double series_phi = 0.0;  ///< sum lambda_k^2 phi_k^2
    double series_f_a = 0.0;  ///< sum lambda_k^2 f_k(a)^2
    double series_df = 0.0;   ///< sum lambda_k^2 int_a^T f_k'^2 dt
    double parseval_defect = 0.0;  ///< max_t |sum lambda_k^2 u_k^2 - ||Au||^2| / ||Au||^2
};

struct FieldDiagnostics {
    double tail_estimate = 0.0;
    double last_mode = 0.0;
    std::vector<std::string> warnings;
    std::optional<ResidualReport> residual;
    std::optional<NormReport> norms;
};

/// Modal data kept by a spectral field for residuals and norms.
struct ModalData {
    EigenSystem sys;
    std::vector<ModeODE> odes;
    Eigen::MatrixXd coeffs;  ///< coeffs(j, k-1) = u_k(t_j)
};

struct SolutionField {
    std::vector<double> x_grid;
    std::vector<double> t_grid;
    Eigen::MatrixXd values;  ///< values(j, i) = u(x_i, t_j)
    int K = 0;
    Regime regime = Regime::classical;
    FieldDiagnostics diagnostics;
    std::shared_ptr<const ModalData> modal;  ///< empty for finite-difference fields
};

struct AssembleOptions {
    /// L2 target of the automatic truncation (K = 0)
    double auto_tol = 1e-6;
    /// limit on the tail estimate for an explicit K; <= 0 disables the check
    double explicit_tol = 0.0;
};

/// Per-mode ODEs for modes 1..K.
std::vector<ModeODE> build_mode_odes(const ProblemSpec& spec, const EigenSystem& sys, int K);

/// u(x_i, t_j) = sum_{k<=K} u_k(t_j) v_k(x_i). K = 0 grows K until the truncation
/// estimate and the last mode both drop below options.auto_tol; ResolutionError if
/// sys.count() modes are not enough, or if an explicit K leaves a tail above
/// options.explicit_tol.
SolutionField assemble(const ProblemSpec& spec, const EigenSystem& sys, int K,
                       const std::vector<double>& x_grid, const std::vector<double>& t_grid,
                       const AssembleOptions& options = {});

struct ResidualOptions {
    HBCaputoOptions caputo{512, 0.0, 2.0};
};

/// Mode-wise R = sum_k [D u_k + lambda_k u_k - f_k] v_k with D the hyper-Bessel
/// derivative evaluated numerically. ContractError unless the regime is classical.
ResidualReport residual_strong(const SolutionField& field, const ProblemSpec& spec,
                               const ResidualOptions& options = {});

struct WeakResidualReport {
    std::vector<double> violation;  ///< per test function, max over times, relative
    double max_violation = 0.0;
};

/// D(u, w) + (x^(beta/2) u_x, x^(beta/2) w_x) - (f, w) for each test w, all pairings by
/// quadrature. Tests need a derivative. ContractError unless the regime is weak.
WeakResidualReport residual_weak(const SolutionField& field, const ProblemSpec& spec,
                                 const std::vector<SampledFunction>& tests,
                                 const ResidualOptions& options = {});
/// Tests are the first n eigenfunctions.
WeakResidualReport residual_weak(const SolutionField& field, const ProblemSpec& spec, int n_modes,
                                 const ResidualOptions& options = {});

NormReport solution_norms(const SolutionField& field, const ProblemSpec& spec);

/// Times graded toward a: t(s_j) with s_j = S (j/N)^((2-alpha)/alpha), j = 1..N.
std::vector<double> graded_times(const ProblemSpec& spec, int N);

}  // namespace hbfrac
