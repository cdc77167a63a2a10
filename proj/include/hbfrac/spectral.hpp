#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace hbfrac {

enum class LeftCondition { dirichlet_at_zero, none_at_zero };
enum class RightCondition { dirichlet_at_one };

/// Boundary conditions of -(x^beta v')' = lambda v that the degeneracy at x = 0 admits.
struct BCDescriptor {
    double beta;
    LeftCondition left_condition;
    RightCondition right_condition = RightCondition::dirichlet_at_one;
    /// derivative orders required to vanish at x = 0
    std::vector<int> nu_range;
};

/// Throws DomainError outside (0,2) and for beta = 1.
BCDescriptor bc_requirements(double beta);

/// Composite rule for int_0^1 F(x) dx. Built in xi = x^((2-beta)/2), where the
/// eigenfunctions oscillate uniformly: uniform panels on [1/8, 1] and panels
/// halving toward 0 below that. The innermost panel is exact for F ~ x^endpoint_exponent
/// times a smooth function (endpoint_exponent > -1).
struct XQuadrature {
    std::vector<double> x;
    std::vector<double> w;
};

struct QuadResolution {
    int panels = 64;
    int levels = 40;
    int points = 16;
};

XQuadrature unit_interval_rule(double beta, double endpoint_exponent = 0.0,
                               const QuadResolution& res = {});

enum class EigenMethod { galerkin_numeric, bessel_closed_form };

/// First K eigenpairs, L2(0,1)-orthonormal, v_k'(1) < 0. Modes are numbered 1..K.
/// Immutable; copies share state.
class EigenSystem {
public:
    struct Impl;
    explicit EigenSystem(std::shared_ptr<const Impl> impl);

    double beta() const;
    int count() const;
    EigenMethod method() const;
    const std::vector<double>& lambdas() const;
    double lambda(int k) const;

    double value(int k, double x) const;
    double derivative(int k, double x) const;
    /// v_k(x) and v_k'(x) for k = 1..count() in one pass; x in [0, 1]. At x = 0 the
    /// values are the limits and the derivatives are NaN.
    void eval_all(double x, std::span<double> v, std::span<double> dv) const;

    /// Polynomial degree of the Galerkin space (0 for the closed form).
    int degree() const;

private:
    std::shared_ptr<const Impl> impl_;
};

struct EigenOptions {
    /// Galerkin degree; 0 picks max(64, 3K + 32)
    int degree = 0;
    /// allowed relative change of lambda_K when the degree grows by 16
    double resolution_tol = 1e-9;
};

/// Weighted Galerkin solve. With v = x^s W(eta), eta = x^(2-beta), s = 1-beta for
/// beta < 1 and 0 for beta > 1, both forms become
///     int_0^1 v w dx            = 1/(2-beta) int eta^nu W_v W_w deta
///     int_0^1 x^beta v' w' dx   = (2-beta)   int eta^(1+nu) W_v' W_w' deta
/// with nu = |1-beta| / (2-beta). W is expanded in (1-eta) P_n^(2,nu)(2 eta - 1), so
/// v(1) = 0 and, for beta < 1, v(0) = 0 are built in. The generalized symmetric
/// eigenproblem is solved densely.
/// Throws ResolutionError when lambda_K moves by more than the tolerance between
/// degrees P and P + 16.
EigenSystem solve_eigen(double beta, int K, const EigenOptions& options = {});

/// Closed form v_k = c x^((1-beta)/2) J_nu(j_{nu,k} x^((2-beta)/2)),
/// lambda_k = ((2-beta)/2 j_{nu,k})^2.
EigenSystem bessel_eigen(double beta, int K);

struct SubstitutionCheck {
    double max_relative_residual;
    bool passed;
};

/// Interior relative L2 residual of -(x^beta v')' - lambda v for each closed-form
/// mode: flux from the analytic derivative, its derivative by fourth-order central
/// differences on [0.05, 0.95].
SubstitutionCheck bessel_substitution_check(const EigenSystem& sys, double tol = 1e-6);

struct FluxReport {
    std::vector<double> x;
    std::vector<double> flux;     ///< x^beta v'(x)
    std::vector<double> product;  ///< v(x) x^beta v'(x)
    double limit;                 ///< extrapolated lim x^beta v'
    double product_limit;         ///< extrapolated lim v x^beta v'
    bool vanishes;                ///< |limit| <= tol
    bool product_vanishes;
    bool converged;
};

/// Samples x^beta v'(x) on x_j = 10^-j, j = 1..12, and extrapolates to x -> 0.
/// fn returns (v(x), v'(x)).
FluxReport flux_limit_check(const std::function<std::pair<double, double>(double)>& fn, double beta,
                            double tol = 1e-6);
FluxReport flux_limit_check(const EigenSystem& sys, int k, double tol = 1e-6);

struct OrthogonalityReport {
    Eigen::MatrixXd gram_l2;        ///< int v_i v_j
    Eigen::MatrixXd gram_weighted;  ///< int x^beta v_i' v_j'
    double max_offdiag_l2;
    double max_diag_l2_error;
    double max_offdiag_weighted;  ///< relative to sqrt(lambda_i lambda_j)
    double max_weighted_diag_error;  ///< max |G_ii - lambda_i| / lambda_i
};

OrthogonalityReport orthogonality_report(const EigenSystem& sys, const QuadResolution& res = {});

}  // namespace hbfrac
