#include "hbfrac/spectral.hpp"

#include "hbfrac/errors.hpp"
#include "hbfrac/quadrature.hpp"
#include "hbfrac/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hbfrac {

namespace {

void check_beta(double beta) {
    if (!std::isfinite(beta) || !(beta > 0.0) || !(beta < 2.0)) {
        throw DomainError("beta must satisfy beta in (0,2), beta != 1");
    }
    if (beta == 1.0) {
        throw DomainError("beta = 1 is not supported: beta in (0,2), beta != 1");
    }
}

void check_mode(int k, int count) {
    if (k < 1 || k > count) {
        throw ContractError("mode index " + std::to_string(k) + " outside 1.." + std::to_string(count));
    }
}

}  // namespace

BCDescriptor bc_requirements(double beta) {
    check_beta(beta);
    if (beta < 1.0) return BCDescriptor{beta, LeftCondition::dirichlet_at_zero, RightCondition::dirichlet_at_one, {0}};
    return BCDescriptor{beta, LeftCondition::none_at_zero, RightCondition::dirichlet_at_one, {}};
}

XQuadrature unit_interval_rule(double beta, double endpoint_exponent, const QuadResolution& res) {
    check_beta(beta);
    if (!(endpoint_exponent > -1.0)) throw DomainError("unit_interval_rule: endpoint exponent must exceed -1");
    if (res.panels < 1 || res.levels < 0 || res.points < 1) throw DomainError("unit_interval_rule: bad resolution");

    // x = xi^Q
    const double Q = 2.0 / (2.0 - beta);
    const double E = Q * (endpoint_exponent + 1.0) - 1.0;
    const QuadRule& gl = cached_gauss_legendre(res.points);
    XQuadrature rule;
    auto push = [&](double xi, double w_xi) {
        rule.x.push_back(std::pow(xi, Q));
        rule.w.push_back(w_xi * Q * std::pow(xi, Q - 1.0));
    };
    auto panel = [&](double lo, double hi) {
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        for (int i = 0; i < res.points; ++i) push(mid + half * gl.nodes[i], half * gl.weights[i]);
    };

    const double split = 0.125;
    const double width = (1.0 - split) / res.panels;
    for (int j = 0; j < res.panels; ++j) panel(split + j * width, split + (j + 1) * width);
    double hi = split;
    for (int l = 0; l < res.levels; ++l) {
        panel(0.5 * hi, hi);
        hi *= 0.5;
    }
    const QuadRule& gj = cached_gauss_jacobi(res.points, 0.0, E);
    for (int i = 0; i < res.points; ++i) {
        const double xi = 0.5 * hi * (1.0 + gj.nodes[i]);
        push(xi, gj.weights[i] * 0.5 * hi * std::pow(1.0 + gj.nodes[i], -E));
    }
    return rule;
}

// ---------------------------------------------------------------------------

struct EigenSystem::Impl {
    double beta = 0.0;
    int count = 0;
    std::vector<double> lambdas;
    virtual ~Impl() = default;
    virtual EigenMethod method() const = 0;
    virtual int degree() const = 0;
    virtual void eval_all(double x, std::span<double> v, std::span<double> dv) const = 0;
};

namespace {

// v = x^sigma W(eta), eta = x^(2-beta), W = sum_n c_n s (1 - eta) p_n(2 eta - 1),
// p_n orthonormal for (1-y)^2 (1+y)^nu.
struct GalerkinImpl final : EigenSystem::Impl {
    int P = 0;  // highest polynomial index
    double sigma = 0.0;
    double scale = 1.0;
    JacobiRecurrence rec;
    Eigen::MatrixXd coeffs;  // (P+1) x count

    EigenMethod method() const override { return EigenMethod::galerkin_numeric; }
    int degree() const override { return P; }

    // basis W_n(eta) and W_n'(eta)
    void basis(double eta, Eigen::VectorXd& w, Eigen::VectorXd& dw) const {
        const double y = 2.0 * eta - 1.0;
        Eigen::VectorXd p(P + 1), dp(P + 1);
        p(0) = 1.0 / std::sqrt(rec.mu0);
        dp(0) = 0.0;
        if (P >= 1) {
            p(1) = (y - rec.diag[0]) * p(0) / rec.off[0];
            dp(1) = p(0) / rec.off[0];
        }
        for (int n = 1; n < P; ++n) {
            p(n + 1) = ((y - rec.diag[n]) * p(n) - rec.off[n - 1] * p(n - 1)) / rec.off[n];
            dp(n + 1) = ((y - rec.diag[n]) * dp(n) + p(n) - rec.off[n - 1] * dp(n - 1)) / rec.off[n];
        }
        // d/deta = 2 d/dy
        w = scale * (1.0 - eta) * p;
        dw = scale * (-p + 2.0 * (1.0 - eta) * dp);
    }

    void eval_all(double x, std::span<double> v, std::span<double> dv) const override {
        if (x == 0.0) {
            Eigen::VectorXd w, dw;
            basis(0.0, w, dw);
            const Eigen::VectorXd W = coeffs.transpose() * w;
            for (int k = 0; k < count; ++k) {
                v[k] = sigma == 0.0 ? W(k) : 0.0;
                dv[k] = std::numeric_limits<double>::quiet_NaN();
            }
            return;
        }
        const double eta = std::pow(x, 2.0 - beta);
        Eigen::VectorXd w, dw;
        basis(eta, w, dw);
        const Eigen::VectorXd W = coeffs.transpose() * w;
        const Eigen::VectorXd dW = coeffs.transpose() * dw;
        const double xs = sigma == 0.0 ? 1.0 : std::pow(x, sigma);
        for (int k = 0; k < count; ++k) {
            v[k] = xs * W(k);
            dv[k] = xs / x * (sigma * W(k) + (2.0 - beta) * eta * dW(k));
        }
    }
};

struct BesselImpl final : EigenSystem::Impl {
    double nu = 0.0;
    std::vector<double> zeros;
    std::vector<double> norms;

    EigenMethod method() const override { return EigenMethod::bessel_closed_form; }
    int degree() const override { return 0; }

    void eval_all(double x, std::span<double> v, std::span<double> dv) const override {
        if (x == 0.0) {
            // x^((1-beta)/2) J_nu(c xi) -> (c/2)^nu / Gamma(nu+1) when beta > 1
            for (int k = 0; k < count; ++k) {
                v[k] = beta > 1.0 ? norms[k] * std::pow(0.5 * zeros[k], nu) / std::tgamma(nu + 1.0) : 0.0;
                dv[k] = std::numeric_limits<double>::quiet_NaN();
            }
            return;
        }
        const double xi = std::pow(x, 0.5 * (2.0 - beta));
        const double pre = std::pow(x, 0.5 * (1.0 - beta));
        // x v' = pre [((1-beta)/2 + nu (2-beta)/2) J_nu(c xi) - (2-beta)/2 c xi J_{nu+1}(c xi)]
        const double a0 = 0.5 * (1.0 - beta) + 0.5 * nu * (2.0 - beta);
        for (int k = 0; k < count; ++k) {
            const double z = zeros[k] * xi;
            const double j0 = bessel_j(nu, z);
            const double j1 = bessel_j(nu + 1.0, z);
            v[k] = norms[k] * pre * j0;
            dv[k] = norms[k] * pre / x * (a0 * j0 - 0.5 * (2.0 - beta) * z * j1);
        }
    }
};

std::shared_ptr<GalerkinImpl> galerkin(double beta, int K, int P) {
    const double nu = std::abs(1.0 - beta) / (2.0 - beta);
    auto impl = std::make_shared<GalerkinImpl>();
    impl->beta = beta;
    impl->count = K;
    impl->P = P;
    impl->sigma = beta < 1.0 ? 1.0 - beta : 0.0;
    impl->rec = jacobi_recurrence(P + 1, 2.0, nu);
    // makes the mass matrix the identity
    impl->scale = std::sqrt((2.0 - beta) * std::pow(2.0, nu + 3.0));

    const int n = P + 1;
    const QuadRule& q = cached_gauss_jacobi(P + 4, 0.0, nu);
    Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd stiff = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd w, dw;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        const double eta = 0.5 * (1.0 + q.nodes[i]);
        impl->basis(eta, w, dw);
        // int_0^1 eta^nu F deta = 2^(-nu-1) int (1+y)^nu F dy
        const double wq = q.weights[i] * std::pow(2.0, -nu - 1.0);
        mass.noalias() += (wq / (2.0 - beta)) * w * w.transpose();
        stiff.noalias() += (wq * (2.0 - beta) * eta) * dw * dw.transpose();
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(stiff, mass);
    if (es.info() != Eigen::Success) throw NumericError("solve_eigen: generalized eigensolver failed");

    impl->lambdas.resize(K);
    impl->coeffs.resize(n, K);
    for (int k = 0; k < K; ++k) {
        impl->lambdas[k] = es.eigenvalues()(k);
        Eigen::VectorXd c = es.eigenvectors().col(k);
        // v'(1) = (2-beta) W'(1)
        impl->basis(1.0, w, dw);
        if (dw.dot(c) > 0.0) c = -c;
        impl->coeffs.col(k) = c;
    }
    return impl;
}

}  // namespace

EigenSystem::EigenSystem(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

double EigenSystem::beta() const { return impl_->beta; }
int EigenSystem::count() const { return impl_->count; }
EigenMethod EigenSystem::method() const { return impl_->method(); }
const std::vector<double>& EigenSystem::lambdas() const { return impl_->lambdas; }
int EigenSystem::degree() const { return impl_->degree(); }

double EigenSystem::lambda(int k) const {
    check_mode(k, count());
    return impl_->lambdas[k - 1];
}

void EigenSystem::eval_all(double x, std::span<double> v, std::span<double> dv) const {
    if (!(x >= 0.0) || !(x <= 1.0)) throw DomainError("eigenfunction evaluation needs x in [0,1]");
    if (v.size() < static_cast<std::size_t>(count()) || dv.size() < static_cast<std::size_t>(count())) {
        throw ContractError("eval_all: output spans too short");
    }
    impl_->eval_all(x, v, dv);
}

double EigenSystem::value(int k, double x) const {
    check_mode(k, count());
    std::vector<double> v(count()), dv(count());
    eval_all(x, v, dv);
    return v[k - 1];
}

double EigenSystem::derivative(int k, double x) const {
    check_mode(k, count());
    std::vector<double> v(count()), dv(count());
    eval_all(x, v, dv);
    return dv[k - 1];
}

EigenSystem solve_eigen(double beta, int K, const EigenOptions& options) {
    check_beta(beta);
    if (K < 1) throw DomainError("solve_eigen: K must be >= 1");
    const int P = options.degree > 0 ? options.degree : std::max(64, 3 * K + 32);
    if (P + 1 < K) throw ResolutionError("solve_eigen: degree too low for the requested number of modes");
    auto coarse = galerkin(beta, K, P);
    auto fine = galerkin(beta, K, P + 16);
    const double lk = coarse->lambdas.back();
    const double change = std::abs(fine->lambdas.back() - lk) / lk;
    if (!(change <= options.resolution_tol)) {
        throw ResolutionError("solve_eigen: lambda_K not resolved at degree " + std::to_string(P) +
                              " (relative change " + std::to_string(change) + ")");
    }
    for (int k = 0; k < K; ++k) {
        if (!(coarse->lambdas[k] > 0.0) || (k > 0 && !(coarse->lambdas[k] > coarse->lambdas[k - 1]))) {
            throw NumericError("solve_eigen: eigenvalues not positive and simple");
        }
    }
    return EigenSystem(coarse);
}

EigenSystem bessel_eigen(double beta, int K) {
    check_beta(beta);
    if (K < 1) throw DomainError("bessel_eigen: K must be >= 1");
    auto impl = std::make_shared<BesselImpl>();
    impl->beta = beta;
    impl->count = K;
    impl->nu = std::abs(1.0 - beta) / (2.0 - beta);
    const double q = 2.0 / (2.0 - beta);
    for (int k = 1; k <= K; ++k) {
        const double j = bessel_j_zero(impl->nu, k);
        const double jn1 = bessel_j(impl->nu + 1.0, j);
        impl->zeros.push_back(j);
        impl->lambdas.push_back(std::pow(0.5 * (2.0 - beta) * j, 2));
        // int_0^1 v^2 dx = (q/2) J_{nu+1}(j)^2; v'(1) = -(2-beta)/2 j J_{nu+1}(j) before scaling
        const double norm = 1.0 / std::sqrt(0.5 * q * jn1 * jn1);
        impl->norms.push_back(jn1 > 0.0 ? norm : -norm);
    }
    return EigenSystem(impl);
}

SubstitutionCheck bessel_substitution_check(const EigenSystem& sys, double tol) {
    const double beta = sys.beta();
    const int K = sys.count();
    const double h = 2.0e-4;
    std::vector<double> v(K), dv(K);
    auto flux = [&](double x, std::vector<double>& out) {
        sys.eval_all(x, v, dv);
        for (int k = 0; k < K; ++k) out[k] = std::pow(x, beta) * dv[k];
    };
    std::vector<double> num(K, 0.0), den(K, 0.0);
    std::vector<double> fm2(K), fm1(K), fp1(K), fp2(K);
    for (double x = 0.05; x <= 0.95 + 1e-12; x += 0.0025) {
        flux(x - 2 * h, fm2);
        flux(x - h, fm1);
        flux(x + h, fp1);
        flux(x + 2 * h, fp2);
        sys.eval_all(x, v, dv);
        for (int k = 0; k < K; ++k) {
            const double dflux = (fm2[k] - 8.0 * fm1[k] + 8.0 * fp1[k] - fp2[k]) / (12.0 * h);
            const double lv = sys.lambdas()[k] * v[k];
            num[k] += std::pow(-dflux - lv, 2);
            den[k] += lv * lv;
        }
    }
    double worst = 0.0;
    for (int k = 0; k < K; ++k) worst = std::max(worst, std::sqrt(num[k] / den[k]));
    return SubstitutionCheck{worst, worst <= tol};
}

FluxReport flux_limit_check(const std::function<std::pair<double, double>(double)>& fn, double beta,
                            double tol) {
    FluxReport rep{};
    for (int j = 1; j <= 12; ++j) {
        const double x = std::pow(10.0, -j);
        const auto [v, dv] = fn(x);
        const double f = std::pow(x, beta) * dv;
        rep.x.push_back(x);
        rep.flux.push_back(f);
        rep.product.push_back(v * f);
    }
    // Aitken extrapolation of the last three samples
    auto extrapolate = [](const std::vector<double>& s) {
        const std::size_t n = s.size();
        const double d1 = s[n - 2] - s[n - 3];
        const double d2 = s[n - 1] - s[n - 2];
        const double dd = d2 - d1;
        if (std::abs(dd) <= 1e-14 * (std::abs(s[n - 1]) + std::abs(d2)) || d2 * d1 <= 0.0) return s[n - 1];
        return s[n - 1] - d2 * d2 / dd;
    };
    rep.limit = extrapolate(rep.flux);
    rep.product_limit = extrapolate(rep.product);
    const std::size_t n = rep.flux.size();
    const double last = std::abs(rep.flux[n - 1] - rep.flux[n - 2]);
    const double before = std::abs(rep.flux[n - 2] - rep.flux[n - 3]);
    rep.converged = std::isfinite(rep.limit) && (last <= 1e-10 * std::max(1.0, std::abs(rep.limit)) || last < 0.5 * before);
    rep.vanishes = std::isfinite(rep.limit) && std::abs(rep.limit) <= tol;
    rep.product_vanishes = std::isfinite(rep.product_limit) && std::abs(rep.product_limit) <= tol;
    return rep;
}

FluxReport flux_limit_check(const EigenSystem& sys, int k, double tol) {
    check_mode(k, sys.count());
    return flux_limit_check(
        [&](double x) {
            std::vector<double> v(sys.count()), dv(sys.count());
            sys.eval_all(x, v, dv);
            return std::pair{v[k - 1], dv[k - 1]};
        },
        sys.beta(), tol);
}

OrthogonalityReport orthogonality_report(const EigenSystem& sys, const QuadResolution& res) {
    const double beta = sys.beta();
    const int K = sys.count();
    const XQuadrature plain = unit_interval_rule(beta, 0.0, res);
    const XQuadrature weighted = unit_interval_rule(beta, beta < 1.0 ? -beta : 0.0, res);
    OrthogonalityReport rep;
    rep.gram_l2 = Eigen::MatrixXd::Zero(K, K);
    rep.gram_weighted = Eigen::MatrixXd::Zero(K, K);
    Eigen::VectorXd v(K), dv(K);
    for (std::size_t i = 0; i < plain.x.size(); ++i) {
        sys.eval_all(plain.x[i], std::span(v.data(), K), std::span(dv.data(), K));
        rep.gram_l2.noalias() += plain.w[i] * v * v.transpose();
    }
    for (std::size_t i = 0; i < weighted.x.size(); ++i) {
        sys.eval_all(weighted.x[i], std::span(v.data(), K), std::span(dv.data(), K));
        rep.gram_weighted.noalias() += weighted.w[i] * std::pow(weighted.x[i], beta) * dv * dv.transpose();
    }
    rep.max_offdiag_l2 = rep.max_diag_l2_error = rep.max_offdiag_weighted = rep.max_weighted_diag_error = 0.0;
    const auto& lam = sys.lambdas();
    for (int i = 0; i < K; ++i) {
        rep.max_diag_l2_error = std::max(rep.max_diag_l2_error, std::abs(rep.gram_l2(i, i) - 1.0));
        rep.max_weighted_diag_error =
            std::max(rep.max_weighted_diag_error, std::abs(rep.gram_weighted(i, i) - lam[i]) / lam[i]);
        for (int j = 0; j < K; ++j) {
            if (i == j) continue;
            rep.max_offdiag_l2 = std::max(rep.max_offdiag_l2, std::abs(rep.gram_l2(i, j)));
            rep.max_offdiag_weighted = std::max(
                rep.max_offdiag_weighted, std::abs(rep.gram_weighted(i, j)) / std::sqrt(lam[i] * lam[j]));
        }
    }
    return rep;
}

}  // namespace hbfrac
