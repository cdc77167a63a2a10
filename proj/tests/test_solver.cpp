#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hbfrac/errors.hpp"
#include "hbfrac/solver.hpp"
#include "hbfrac/special_functions.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

using namespace hbfrac;
using std::numbers::pi;

namespace {

struct ModeRef {
    double alpha, theta, a, lambda, phi;
    const char* source;
    double t, value;
};

// mpmath: erfc closed forms at alpha = 1/2, power series otherwise, tanh-sinh
// quadrature for the convolution.
const ModeRef kModeReference[] = {
#include "data/mode_reference.inc"
};

SampledFunction source_named(const std::string& name) {
    if (name == "zero") return SampledFunction();
    if (name == "const") return SampledFunction::constant(1.3);
    if (name == "sin") return SampledFunction::sine(1.0, 1.0);
    return SampledFunction::polynomial({0.0, 0.0, 1.0});
}

ModeODE make_ode(double alpha, double theta, double a, double lambda, double phi, SampledFunction f) {
    ModeODE o;
    o.alpha = alpha;
    o.lambda = lambda;
    o.phi_k = phi;
    o.f_k = std::move(f);
    o.warp = TimeWarp(theta, a);
    return o;
}

SampledFunction eigenfunction(const EigenSystem& sys, int k) {
    return SampledFunction::callable([sys, k](double x) { return sys.value(k, x); },
                                     [sys, k](double x) { return sys.derivative(k, x); });
}

std::vector<double> uniform(int n) {
    std::vector<double> x;
    for (int i = 0; i <= n; ++i) x.push_back(static_cast<double>(i) / n);
    return x;
}

ProblemSpec smooth_spec(double beta) {
    ProblemSpec sp;
    sp.alpha = 0.6;
    sp.theta = 0.3;
    sp.beta = beta;
    sp.a = 0.0;
    sp.T = 1.0;
    sp.phi = SampledFunction::polynomial({0.0, 1.0, -1.0});
    sp.f = SourceTerm::constant(1.0);
    return sp;
}

}  // namespace

TEST_CASE("problem validation") {
    ProblemSpec sp = smooth_spec(0.5);
    CHECK_NOTHROW(sp.validate());
    auto bad = [&](auto mutate) {
        ProblemSpec s = sp;
        mutate(s);
        CHECK_THROWS_AS(s.validate(), DomainError);
    };
    bad([](ProblemSpec& s) { s.alpha = 0.0; });
    bad([](ProblemSpec& s) { s.alpha = 1.2; });
    bad([](ProblemSpec& s) { s.theta = 1.0; });
    bad([](ProblemSpec& s) { s.beta = 1.0; });
    bad([](ProblemSpec& s) { s.beta = 2.0; });
    bad([](ProblemSpec& s) { s.a = -0.1; });
    bad([](ProblemSpec& s) { s.T = 0.0; });
    bad([](ProblemSpec& s) { s.T = INFINITY; });
    CHECK(regime_of(0.5) == Regime::classical);
    CHECK(regime_of(1.5) == Regime::weak);
    CHECK(std::string(regime_name(Regime::weak)) == "weak");

    sp.phi = SampledFunction::constant(1.0);
    CHECK(compatibility_warnings(sp).size() == 2);
    sp.beta = 1.5;
    CHECK(compatibility_warnings(sp).size() == 1);
}

TEST_CASE("source terms") {
    const auto f = SourceTerm::separable({{SampledFunction::polynomial({0.0, 1.0}), SampledFunction::sine(1.0, 1.0)},
                                          {SampledFunction::constant(2.0), SampledFunction::constant(0.5)}});
    CHECK(f(0.3, 0.7) == doctest::Approx(0.3 * std::sin(0.7) + 1.0));
    CHECK_FALSE(f.is_zero());
    CHECK(SourceTerm::zero().is_zero());
    CHECK(SourceTerm::constant(0.0).is_zero());

    Eigen::MatrixXd vals(3, 5);
    std::vector<double> xs{0.0, 0.25, 0.5, 0.75, 1.0}, ts{0.0, 0.5, 1.0};
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 5; ++i) vals(j, i) = xs[i] + ts[j];
    const auto tab = SourceTerm::tabulated(xs, ts, vals);
    CHECK(tab.is_tabulated());
    CHECK(tab(0.3, 0.25) == doctest::Approx(0.55).epsilon(1e-12));
    CHECK_THROWS_AS(tab(0.3, 1.5), DomainError);
    CHECK_THROWS_AS(SourceTerm::tabulated(xs, ts, Eigen::MatrixXd(2, 5)), ContractError);
}

TEST_CASE("fourier_coeff") {
    const auto sys = solve_eigen(0.5, 6);
    const auto v1 = eigenfunction(sys, 1);
    for (int k = 1; k <= 6; ++k) CHECK(std::abs(fourier_coeff(v1, sys, k) - (k == 1 ? 1.0 : 0.0)) <= 1e-8);
    CHECK(fourier_coeff(SampledFunction(), sys, 3) == 0.0);
    CHECK_THROWS_AS(fourier_coeff(v1, sys, 7), ContractError);
    CHECK_THROWS_AS(fourier_coeff(v1, sys, 0), ContractError);

    // v_1 -> sqrt(2) sin(pi x) as beta -> 0
    const auto flat = solve_eigen(1e-3, 2);
    const double c = fourier_coeff(SampledFunction::sine(1.0, pi), flat, 1);
    CHECK(std::abs(c - 1.0 / std::sqrt(2.0)) <= 5e-3);

    const auto b = bessel_eigen(1e-9, 3);
    CHECK(fourier_coeff(SampledFunction::sine(1.0, pi), b, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-8));
}

TEST_CASE("mode solutions against arbitrary-precision references") {
    for (const auto& r : kModeReference) {
        const auto ode = make_ode(r.alpha, r.theta, r.a, r.lambda, r.phi, source_named(r.source));
        INFO(r.alpha, " ", r.theta, " ", r.a, " ", r.lambda, " ", r.source, " ", r.t);
        CHECK(std::abs(mode_value(ode, r.t) - r.value) <= 1e-10);
        CHECK(std::abs(mode_value_alt(ode, r.t) - r.value) <= 1e-10);
    }
}

TEST_CASE("mode solution examples") {
    // homogeneous part
    auto o = make_ode(0.6, 0.3, 0.5, 3.0, 1.0, SampledFunction());
    for (double t : {0.6, 1.0, 2.0}) {
        const double s = o.warp.forward(t);
        CHECK(mode_value(o, t) == doctest::Approx(ml_eval(0.6, 1.0, o.lambda_star() * std::pow(s, 0.6))).epsilon(1e-14));
    }
    CHECK(mode_value(o, 0.5) == 1.0);
    CHECK_THROWS_AS(mode_value(o, 0.4), DomainError);

    // lambda -> 0
    o.lambda = 1e-14;
    o.phi_k = 0.37;
    CHECK(mode_value(o, 2.0) == doctest::Approx(0.37).epsilon(1e-12));

    // classical relaxation
    auto c = make_ode(1.0, 0.0, 0.0, 2.5, 0.8, SampledFunction());
    for (double t : {0.1, 1.0, 3.0}) CHECK(mode_value(c, t) == doctest::Approx(0.8 * std::exp(-2.5 * t)).epsilon(1e-13));
    c.f_k = SampledFunction::sine(1.0, 1.0);
    // u' = -2.5 u + sin t
    const double t = 2.0;
    const double exact = 0.8 * std::exp(-2.5 * t) +
                         (2.5 * std::sin(t) - std::cos(t) + std::exp(-2.5 * t)) / (1.0 + 2.5 * 2.5);
    CHECK(mode_value(c, t) == doctest::Approx(exact).epsilon(1e-11));
    CHECK(mode_value_alt(c, t) == doctest::Approx(exact).epsilon(1e-11));

    // steady state c / lambda, approached algebraically
    const auto st = make_ode(0.7, 0.0, 0.0, 2.0, 0.0, SampledFunction::constant(3.0));
    CHECK(std::abs(mode_value(st, 1e9) - 1.5) / 1.5 <= 1e-4);

    const auto tr = mode_solution(st, {0.5, 1.0});
    CHECK(tr.values.size() == 2);
    CHECK(tr.method_tag == ModeMethod::direct_kernel);
    CHECK(mode_solution_alt(st, {0.5}).method_tag == ModeMethod::split_kernel);
}

TEST_CASE("representation equivalence") {
    const std::vector<SampledFunction> sources{SampledFunction(), SampledFunction::constant(1.0),
                                               SampledFunction::sine(1.0, 1.0)};
    for (double alpha : {0.3, 0.7})
        for (double theta : {-0.5, 0.0, 0.5})
            for (double lambda : {0.5, 2.0, 10.0})
                for (const auto& f : sources) {
                    const auto o = make_ode(alpha, theta, 0.5, lambda, 0.7, f);
                    for (double t : {0.5 + 1e-6, 0.8, 1.4, 2.0}) CHECK(std::abs(mode_value(o, t) - mode_value_alt(o, t)) <= 1e-8);
                }
    // the same at a = 0, where f(t(sigma)) is not smooth at sigma = 0
    const auto o = make_ode(0.5, 0.3, 0.0, 2.0, 0.0, SampledFunction::sine(1.0, 1.0));
    CHECK(std::abs(mode_value(o, 1.0) - mode_value_alt(o, 1.0)) <= 1e-8);
}

TEST_CASE("homogeneous decay") {
    for (double alpha : {0.3, 0.5, 0.8}) {
        std::vector<double> ray;
        for (int i = 0; i < 400; ++i) ray.push_back(std::pow(10.0, -3.0 + 8.0 * i / 399.0));
        const double M = ml_bound_fit(alpha, 1.0, ray).M;
        const auto o = make_ode(alpha, 0.4, 0.5, 5.0, -1.3, SampledFunction());
        const double pa = std::pow(o.warp.p(), alpha);
        double prev = std::abs(o.phi_k);
        for (int j = 1; j <= 60; ++j) {
            const double t = 0.5 + 0.05 * j * j;
            const double u = std::abs(mode_value(o, t));
            CHECK(u <= prev + 1e-15);
            const double s = o.warp.forward(t);
            CHECK(u <= M * std::abs(o.phi_k) * pa / (pa + o.lambda * std::pow(s, alpha)) * (1.0 + 1e-12));
            prev = u;
        }
    }
}

TEST_CASE("tail_estimate") {
    const double beta = 0.5;
    const auto sys = solve_eigen(beta, 40);
    // single eigenfunction: equality at m = 0
    std::vector<double> c1(40, 0.0);
    c1[0] = 1.0;
    const auto eq = tail_estimate(c1, sys.lambdas(), 0, sys.lambda(1));
    CHECK(eq.holds);
    CHECK(std::abs(eq.partial_sums.back() - sys.lambda(1)) <= 1e-12);

    const auto zero = tail_estimate(std::vector<double>(5, 0.0), sys.lambdas(), 0, 0.0);
    CHECK(zero.holds);
    CHECK(zero.partial_sums.back() == 0.0);

    // g = x^(1/2) - x^2: x^beta g' = 1/2 - 2 x^(3/2), A g = 3 x^(1/2)
    const auto g = SampledFunction::callable([](double x) { return std::sqrt(x) - x * x; },
                                             [](double x) { return 0.5 / std::sqrt(x) - 2.0 * x; });
    const auto gn = fourier_coeffs(g, sys, 40);
    // int x^beta g'^2 by quadrature
    const auto r = unit_interval_rule(beta, -beta);
    double energy = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        const double x = r.x[i], d = g.derivative(x);
        energy += r.w[i] * std::pow(x, beta) * d * d;
    }
    const auto rep0 = tail_estimate(gn, sys.lambdas(), 0, energy);
    CHECK(rep0.holds);
    for (std::size_t k = 1; k < rep0.partial_sums.size(); ++k) CHECK(rep0.partial_sums[k] >= rep0.partial_sums[k - 1]);
    CHECK(rep0.partial_sums.back() >= 0.99 * energy);

    // sum lambda^2 g_n^2 <= ||A g||^2 = 9/2
    const auto rep1 = tail_estimate(gn, sys.lambdas(), 1, 4.5);
    CHECK(rep1.holds);
    for (std::size_t k = 1; k < rep1.partial_sums.size(); ++k) CHECK(rep1.partial_sums[k] >= rep1.partial_sums[k - 1]);
    CHECK(rep1.tail_bound >= 0.0);

    CHECK_FALSE(tail_estimate({1.0}, {2.0}, 0, 1.0).holds);
    CHECK_THROWS_AS(tail_estimate({1.0, 1.0}, {2.0}, 0, 1.0), ContractError);
}

TEST_CASE("assemble") {
    const double beta = 0.5;
    const auto sys = solve_eigen(beta, 12);
    ProblemSpec sp;
    sp.alpha = 0.5;
    sp.theta = 0.2;
    sp.beta = beta;
    sp.a = 0.2;
    sp.T = 1.5;
    sp.phi = eigenfunction(sys, 1);
    const auto xs = uniform(20);
    const std::vector<double> ts{0.2, 0.5, 1.0, 1.5};

    const auto one = assemble(sp, sys, 1, xs, ts);
    CHECK(one.K == 1);
    CHECK(one.regime == Regime::classical);
    const auto ode = build_mode_odes(sp, sys, 1)[0];
    for (std::size_t j = 0; j < ts.size(); ++j) {
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double expect = mode_value(ode, ts[j]) * (xs[i] == 1.0 ? 0.0 : sys.value(1, xs[i]));
            CHECK(one.values(j, i) == doctest::Approx(expect).epsilon(1e-14).scale(1.0));
        }
        CHECK(one.values(j, xs.size() - 1) == 0.0);
    }
    // automatic truncation stops once the tail and the last mode are both small,
    // which for an eigenfunction happens at the second mode
    const auto autoK = assemble(sp, sys, 0, xs, ts);
    CHECK(autoK.K == 2);

    sp.phi = SampledFunction::polynomial({0.0, 1.0, -1.0});
    sp.f = SourceTerm::separable({{SampledFunction::constant(1.0), SampledFunction::cosine(1.0, 2.0)}});
    const auto many = assemble(sp, sys, 12, xs, ts);
    for (std::size_t j = 0; j < ts.size(); ++j) CHECK(many.values(j, xs.size() - 1) == 0.0);
    // t = a reproduces the projection of phi
    const auto odes = build_mode_odes(sp, sys, 12);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double proj = 0.0;
        for (int k = 1; k <= 12; ++k) proj += odes[k - 1].phi_k * (xs[i] == 1.0 ? 0.0 : sys.value(k, xs[i]));
        CHECK(many.values(0, i) == doctest::Approx(proj).epsilon(1e-12).scale(1.0));
    }
    CHECK(many.diagnostics.tail_estimate > 0.0);
    CHECK_THROWS_AS(assemble(sp, sys, 13, xs, ts), ContractError);
    AssembleOptions strict;
    strict.explicit_tol = 1e-9;
    CHECK_THROWS_AS(assemble(sp, sys, 12, xs, ts, strict), ResolutionError);
    CHECK_THROWS_AS(assemble(sp, sys, 0, xs, ts), ResolutionError);
    CHECK_THROWS_AS(assemble(sp, sys, 4, xs, {0.1}), DomainError);
}

TEST_CASE("initial condition recovery") {
    for (double beta : {0.5, 1.5}) {
        const auto sys = solve_eigen(beta, 8);
        ProblemSpec sp;
        sp.alpha = 0.6;
        sp.theta = 0.3;
        sp.beta = beta;
        sp.T = 1.0;
        sp.phi = SampledFunction::polynomial({0.0, 1.0, -1.0});
        const auto f = assemble(sp, sys, 8, {0.5}, {1e-12, 1e-9, 1e-6, 1e-3});
        double prev = 0.0;
        for (int j = 0; j < 4; ++j) {
            double d = 0.0;
            for (int k = 0; k < 8; ++k) {
                const double e = f.modal->coeffs(j, k) - f.modal->odes[k].phi_k;
                d += e * e;
            }
            CHECK(std::sqrt(d) >= prev);
            prev = std::sqrt(d);
        }
        double d0 = 0.0;
        for (int k = 0; k < 8; ++k) d0 += std::pow(f.modal->coeffs(0, k) - f.modal->odes[k].phi_k, 2);
        CHECK(std::sqrt(d0) <= 1e-3);
    }
}

TEST_CASE("uniqueness: zero data gives the zero field") {
    for (double beta : {0.3, 1.7}) {
        const auto sys = solve_eigen(beta, 10);
        ProblemSpec sp;
        sp.beta = beta;
        sp.T = 2.0;
        const auto f = assemble(sp, sys, 10, uniform(10), {0.0, 0.5, 2.0});
        CHECK(f.values.cwiseAbs().maxCoeff() == 0.0);
        if (beta < 1.0) CHECK(residual_strong(f, sp).l2 == 0.0);
        const auto n = solution_norms(f, sp);
        CHECK(n.sup_l2 == 0.0);
        CHECK(n.sup_energy == 0.0);
        CHECK(n.series_phi == 0.0);
    }
}

TEST_CASE("strong residual") {
    const auto sys = solve_eigen(0.5, 16);
    const auto sp = smooth_spec(0.5);
    const auto field = assemble(sp, sys, 16, uniform(20), {0.05, 0.3, 1.0});
    const auto r = residual_strong(field, sp);
    CHECK(r.relative <= 1e-4);
    CHECK(r.times.size() == 3);

    // time-dependent source goes through the tabulated remainder
    ProblemSpec sv = sp;
    sv.f = SourceTerm::separable({{SampledFunction::polynomial({0.0, 1.0}), SampledFunction::sine(1.0, 3.0)}});
    const auto fv = assemble(sv, sys, 6, uniform(10), {0.2, 1.0});
    CHECK(residual_strong(fv, sv).relative <= 1e-4);

    // manufactured E_{alpha,1} v_1
    ProblemSpec m;
    m.alpha = 0.4;
    m.theta = -0.3;
    m.beta = 0.5;
    m.a = 0.5;
    m.T = 2.0;
    m.phi = eigenfunction(sys, 1);
    const auto fm = assemble(m, sys, 1, uniform(10), {0.7, 1.2, 2.0});
    CHECK(residual_strong(fm, m).relative <= 1e-6);

    const auto weak_sys = solve_eigen(1.5, 4);
    const auto w = smooth_spec(1.5);
    CHECK_THROWS_AS(residual_strong(assemble(w, weak_sys, 4, uniform(4), {1.0}), w), ContractError);
}

TEST_CASE("weak residual") {
    const auto sys = solve_eigen(1.5, 16);
    const auto sp = smooth_spec(1.5);
    const auto field = assemble(sp, sys, 16, uniform(20), {0.05, 0.3, 1.0});
    CHECK(field.regime == Regime::weak);
    const auto r = residual_weak(field, sp, 16);
    CHECK(r.violation.size() == 16);
    CHECK(r.max_violation <= 1e-4);

    // a smooth test outside the span: the violation is of the size of the truncation
    const auto w = SampledFunction::polynomial({1.0, 0.0, -1.0});
    const auto rw = residual_weak(field, sp, {w});
    CHECK(rw.max_violation <= 10.0 * field.diagnostics.tail_estimate);

    ProblemSpec z;
    z.beta = 1.5;
    const auto fz = assemble(z, sys, 5, uniform(4), {0.5, 1.0});
    CHECK(residual_weak(fz, z, 5).max_violation == 0.0);

    const auto strong_sys = solve_eigen(0.5, 4);
    const auto s = smooth_spec(0.5);
    CHECK_THROWS_AS(residual_weak(assemble(s, strong_sys, 4, uniform(4), {1.0}), s, 4), ContractError);
    CHECK_THROWS_AS(residual_weak(field, sp, {SampledFunction::callable([](double x) { return 1.0 - x; })}), ContractError);
}

TEST_CASE("solution norms") {
    for (double beta : {0.5, 1.5}) {
        const auto sys = solve_eigen(beta, 10);
        ProblemSpec sp = smooth_spec(beta);
        sp.phi = eigenfunction(sys, 1);
        sp.f = SourceTerm::zero();
        const auto one = assemble(sp, sys, 1, uniform(8), {0.0, 0.5, 1.0});
        const auto n = solution_norms(one, sp);
        const double u0 = one.modal->coeffs(0, 0);
        CHECK(n.sup_energy == doctest::Approx(std::sqrt(sys.lambda(1)) * std::abs(u0)).epsilon(1e-14));
        CHECK(n.sup_l2 == doctest::Approx(std::abs(u0)).epsilon(1e-14));
        CHECK(n.series_phi == doctest::Approx(std::pow(sys.lambda(1) * u0, 2)).epsilon(1e-12));

        const auto full = assemble(smooth_spec(beta), sys, 10, uniform(8), {0.3, 1.0});
        const auto nf = solution_norms(full, smooth_spec(beta));
        CHECK(nf.parseval_defect <= 1e-8);
        CHECK(nf.sup_w12 >= nf.sup_energy);
        CHECK(std::isfinite(nf.series_f_a));
        CHECK(nf.series_df == 0.0);
    }
    // source with time dependence feeds the derivative series
    const auto sys = solve_eigen(0.5, 4);
    ProblemSpec sp = smooth_spec(0.5);
    sp.f = SourceTerm::separable({{SampledFunction::polynomial({0.0, 1.0, -1.0}), SampledFunction::sine(1.0, 1.0)}});
    const auto n = solution_norms(assemble(sp, sys, 4, uniform(4), {1.0}), sp);
    CHECK(n.series_df > 0.0);
    CHECK(n.series_f_a == 0.0);
}

TEST_CASE("convergence diagnostics of the source") {
    // f = 1 - x^(1/2) at beta = 3/2: x^beta f' = -x/2, A f = 1/2
    const double beta = 1.5;
    const auto sys = solve_eigen(beta, 40);
    const auto f = SampledFunction::callable([](double x) { return 1.0 - std::sqrt(x); });
    const auto c = fourier_coeffs(f, sys, 40);
    const auto rep = tail_estimate(c, sys.lambdas(), 1, 0.25);
    CHECK(rep.holds);
    for (std::size_t k = 1; k < rep.partial_sums.size(); ++k) CHECK(rep.partial_sums[k] >= rep.partial_sums[k - 1]);
    CHECK(rep.partial_sums.back() >= 0.9 * 0.25);
}

TEST_CASE("graded times") {
    ProblemSpec sp = smooth_spec(0.5);
    sp.a = 0.3;
    sp.T = 2.0;
    const auto t = graded_times(sp, 16);
    CHECK(t.size() == 16);
    CHECK(t.back() == 2.0);
    CHECK(t.front() > 0.3);
    for (std::size_t j = 1; j < t.size(); ++j) CHECK(t[j] > t[j - 1]);
    CHECK(t[1] - t[0] < t[15] - t[14]);
}
