#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hbfrac/errors.hpp"
#include "hbfrac/fractional_ops.hpp"
#include "hbfrac/quadrature.hpp"
#include "hbfrac/special_functions.hpp"

#include <cmath>
#include <vector>

using namespace hbfrac;

namespace {

// E_{alpha,1}(lambda* s^alpha) with s = t^p - a^p, and its t-derivative.
SampledFunction relaxation(double alpha, double lambda, const TimeWarp& w) {
    const double p = w.p();
    const double ls = -lambda / std::pow(p, alpha);
    return SampledFunction::callable(
        [=](double t) { return ml_eval(alpha, 1.0, ls * std::pow(w.forward(t), alpha)); },
        [=](double t) {
            const double s = w.forward(t);
            return ls * std::pow(s, alpha - 1.0) * ml_eval(alpha, alpha, ls * std::pow(s, alpha)) * p *
                   std::pow(t, p - 1.0);
        });
}

}  // namespace

TEST_CASE("time warp") {
    CHECK(warp_forward(TimeWarp(0.0, 0.0), 2.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(warp_forward(TimeWarp(0.5, 1.0), 1.0) == 0.0);
    const TimeWarp w(0.5, 1.0);
    CHECK(w.forward(4.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(w.inverse(1.0) == doctest::Approx(4.0).epsilon(1e-15));
    for (double theta : {-0.5, 0.0, 0.3, 0.9}) {
        for (double a : {0.0, 0.5, 2.0}) {
            const TimeWarp v(theta, a);
            for (double t : {a + 1e-6, a + 0.1, a + 1.0, a + 7.0}) {
                CHECK(v.inverse(v.forward(t)) == doctest::Approx(t).epsilon(1e-13));
            }
            CHECK(v.forward(a + 0.2) < v.forward(a + 0.3));
        }
    }
    CHECK_THROWS_AS(TimeWarp(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(TimeWarp(0.0, -1.0), DomainError);
    CHECK_THROWS_AS(w.forward(0.5), DomainError);
    CHECK_THROWS_AS(w.inverse(-0.1), DomainError);
}

TEST_CASE("gauss-jacobi rules") {
    // int_{-1}^{1} (1-x)^a (1+x)^b x^k against the Beta-function closed form via x = 2u - 1
    for (double a : {-0.7, -0.5, 0.0, 0.4, 2.0}) {
        for (double b : {-0.3, 0.0, 1.5}) {
            const auto rule = gauss_jacobi(10, a, b);
            double m0 = 0.0, m1 = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                m0 += rule.weights[i];
                m1 += rule.weights[i] * (1.0 + rule.nodes[i]);
            }
            const double beta_ab = std::exp(std::lgamma(a + 1) + std::lgamma(b + 1) - std::lgamma(a + b + 2));
            const double beta_ab1 = std::exp(std::lgamma(a + 1) + std::lgamma(b + 2) - std::lgamma(a + b + 3));
            CHECK(m0 == doctest::Approx(std::pow(2.0, a + b + 1) * beta_ab).epsilon(1e-13));
            CHECK(m1 == doctest::Approx(std::pow(2.0, a + b + 2) * beta_ab1).epsilon(1e-13));
        }
    }
    const auto gl = gauss_legendre(8);
    double q = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) q += gl.weights[i] * std::pow(gl.nodes[i], 14);
    CHECK(q == doctest::Approx(2.0 / 15.0).epsilon(1e-14));
}

TEST_CASE("sampled functions") {
    const auto poly = SampledFunction::polynomial({1.0, -2.0, 3.0});
    CHECK(poly(2.0) == doctest::Approx(9.0));
    CHECK(poly.derivative(2.0) == doctest::Approx(10.0));
    CHECK(SampledFunction::polynomial({4.0}).is_constant());
    CHECK(SampledFunction().is_constant());
    CHECK(SampledFunction()(3.0) == 0.0);

    const auto s = SampledFunction::sine(2.0, 3.0);
    CHECK(s(0.5) == doctest::Approx(2.0 * std::sin(1.5)));
    CHECK(s.derivative(0.5) == doctest::Approx(6.0 * std::cos(1.5)));
    const auto sum = s + poly;
    CHECK(sum(0.5) == doctest::Approx(s(0.5) + poly(0.5)));
    const auto prod = s * poly;
    CHECK(prod.derivative(0.5) == doctest::Approx(s.derivative(0.5) * poly(0.5) + s(0.5) * poly.derivative(0.5)));
    CHECK(poly.scaled(2.0)(2.0) == doctest::Approx(18.0));
    CHECK(poly.shifted(1.0)(2.0) == doctest::Approx(10.0));

    const TimeWarp w(0.25, 1.0);
    const auto wp = SampledFunction::warp_power(w, 1.5, 2.0);
    CHECK(wp(3.0) == doctest::Approx(2.0 * std::pow(w.forward(3.0), 1.5)));
    const double h = 1e-6;
    CHECK(wp.derivative(3.0) == doctest::Approx((wp(3.0 + h) - wp(3.0 - h)) / (2 * h)).epsilon(1e-7));

    // monotone data stays monotone under interpolation
    std::vector<double> xs, ys;
    for (int i = 0; i <= 20; ++i) {
        xs.push_back(i * 0.05);
        ys.push_back(i < 10 ? 0.0 : 1.0);
    }
    const auto tab = SampledFunction::tabulated(xs, ys);
    CHECK(tab.is_tabulated());
    double prev = -1.0;
    for (double x = 0.0; x <= 1.0; x += 0.001) {
        const double v = tab(x);
        CHECK(v >= prev - 1e-15);
        CHECK(v >= -1e-15);
        CHECK(v <= 1.0 + 1e-15);
        prev = v;
    }
    CHECK(tab(0.55) == doctest::Approx(1.0));
    CHECK_THROWS_AS(tab(1.5), DomainError);
    CHECK_THROWS_AS(SampledFunction::tabulated({0.0, 0.0, 1.0}, {1.0, 2.0, 3.0}), DomainError);
    const auto lin = SampledFunction::tabulated({0.0, 1.0}, {1.0, 3.0});
    CHECK(lin(0.25) == doctest::Approx(1.5));
}

TEST_CASE("ek_integral") {
    for (double delta : {0.3, 0.7, 1.0, 2.5}) {
        for (double b : {0.5, 1.0, 2.0}) {
            const double v = ek_integral(SampledFunction::constant(1.0), EKParams{0.0, delta, b, 0.0}, 1.0);
            CHECK(std::abs(v - 1.0 / std::tgamma(delta + 1.0)) <= 1e-8);
        }
    }
    CHECK(ek_integral(SampledFunction::sine(1.0, 1.0), EKParams{0.2, 0.5, 1.0, 0.7}, 0.7) == 0.0);
    for (double t : {0.3, 1.0, 4.0}) {
        const double v = ek_integral(SampledFunction::constant(1.0), EKParams{0.0, 0.6, 1.0, 0.0}, t);
        CHECK(std::abs(v - 1.0 / std::tgamma(1.6)) <= 1e-8);
    }
    // I^{gamma,delta}_{beta;0+} t^{beta k} = Gamma(gamma+k+1)/Gamma(gamma+delta+k+1) t^{beta k}
    const double g = 0.3, d = 0.6, b = 0.7, k = 1.5;
    const auto mono = SampledFunction::callable([=](double x) { return std::pow(x, b * k); });
    for (double t : {0.5, 1.3}) {
        const double ref = std::tgamma(g + k + 1) / std::tgamma(g + d + k + 1) * std::pow(t, b * k);
        CHECK(std::abs(ek_integral(mono, EKParams{g, d, b, 0.0}, t) - ref) <= 1e-8);
    }
    CHECK_THROWS_AS(ek_integral(mono, EKParams{0.0, 0.0, 1.0, 0.0}, 1.0), DomainError);
    CHECK_THROWS_AS(ek_integral(mono, EKParams{0.0, 0.5, 1.0, 1.0}, 0.5), DomainError);
}

TEST_CASE("caputo_l1") {
    const auto grid = graded_grid(1.0, 64, 1.0);
    for (double v : caputo_l1(SampledFunction::constant(1.0), 0.4, grid)) CHECK(v == 0.0);
    const auto lin = caputo_l1(SampledFunction::polynomial({0.0, 1.0}), 0.5, grid);
    CHECK(lin.back() == doctest::Approx(1.0 / std::tgamma(1.5)).epsilon(1e-13));
    CHECK(lin.front() == 0.0);

    // s^2: error decays at the L1 rate 2 - alpha
    const double alpha = 0.6;
    double prev_err = 0.0;
    for (int N : {32, 64, 128, 256}) {
        const auto out = caputo_l1(SampledFunction::polynomial({0.0, 0.0, 1.0}), alpha, graded_grid(1.0, N, 1.0));
        const double err = std::abs(out.back() - 2.0 / std::tgamma(3.0 - alpha));
        if (prev_err > 0.0) {
            const double order = std::log2(prev_err / err);
            CHECK(order == doctest::Approx(2.0 - alpha).epsilon(0.05));
        }
        prev_err = err;
    }
    CHECK_THROWS_AS(caputo_l1(SampledFunction::constant(1.0), 1.0, grid), DomainError);
}

TEST_CASE("hb_caputo basic cases") {
    for (double alpha : {0.3, 0.6, 1.0}) {
        CHECK(hb_caputo(SampledFunction::constant(3.0), alpha, TimeWarp(0.4, 0.5), 1.2) == 0.0);
    }
    const TimeWarp id(0.0, 0.0);
    for (double alpha : {0.3, 0.5, 0.8}) {
        for (double k : {1.0, 2.0, 1.5}) {
            const auto f = SampledFunction::callable([k](double t) { return std::pow(t, k); });
            for (double t : {0.4, 1.0, 2.0}) {
                const double ref = std::tgamma(k + 1) / std::tgamma(k + 1 - alpha) * std::pow(t, k - alpha);
                CHECK(std::abs(hb_caputo(f, alpha, id, t) - ref) <= 1e-6 * std::abs(ref));
            }
        }
    }
    // powers of warped time for general theta, a
    for (double theta : {-0.5, 0.3}) {
        const TimeWarp w(theta, 0.5);
        for (double k : {1.0, 2.3}) {
            const auto f = SampledFunction::warp_power(w, k);
            const double alpha = 0.45;
            const double t = 1.7;
            const double s = w.forward(t);
            const double ref =
                std::pow(w.p(), alpha) * std::tgamma(k + 1) / std::tgamma(k + 1 - alpha) * std::pow(s, k - alpha);
            CHECK(std::abs(hb_caputo(f, alpha, w, t) - ref) <= 1e-6 * std::abs(ref));
        }
    }
    CHECK_THROWS_AS(hb_caputo(SampledFunction::sine(1, 1), 0.5, id, 0.0), DomainError);
    CHECK_THROWS_AS(hb_caputo(SampledFunction::sine(1, 1), 1.2, id, 1.0), DomainError);
    CHECK_THROWS_AS(hb_caputo(SampledFunction::sine(1, 1), 0.0, id, 1.0), DomainError);
}

TEST_CASE("hb_caputo alpha = 1 is t^theta f'") {
    const TimeWarp w(0.4, 0.5);
    const auto f = SampledFunction::sine(1.0, 2.0);
    const double t = 1.3;
    CHECK(hb_caputo(f, 1.0, w, t) == doctest::Approx(std::pow(t, 0.4) * 2.0 * std::cos(2.6)).epsilon(1e-14));
    const auto g = SampledFunction::callable([](double x) { return std::sin(2.0 * x); });
    CHECK(hb_caputo(g, 1.0, w, t) == doctest::Approx(std::pow(t, 0.4) * 2.0 * std::cos(2.6)).epsilon(1e-5));
}

TEST_CASE("hb_caputo regularization and linearity") {
    const TimeWarp w(0.25, 0.5);
    const auto f1 = SampledFunction::sine(1.0, 1.7, 0.3);
    const auto f2 = SampledFunction::polynomial({0.2, -1.0, 0.5});
    // slopes over the finest cells are large, so rounding sits near 1e-11
    for (double alpha : {0.3, 0.7}) {
        for (double t : {0.6, 1.5}) {
            const double d1 = hb_caputo(f1, alpha, w, t);
            const double d1s = hb_caputo(f1.shifted(-f1(w.a)), alpha, w, t);
            CHECK(std::abs(d1 - d1s) <= 1e-10 * (1.0 + std::abs(d1)));
            const double d2 = hb_caputo(f2, alpha, w, t);
            const double mix = hb_caputo(f1.scaled(2.0) + f2.scaled(-3.0), alpha, w, t);
            CHECK(std::abs(mix - (2.0 * d1 - 3.0 * d2)) <= 1e-10 * (1.0 + std::abs(mix)));
        }
    }
}

TEST_CASE("eigen-relaxation identity") {
    double worst = 0.0;
    for (double alpha : {0.3, 0.7}) {
        for (double theta : {-0.5, 0.0, 0.5}) {
            for (double lambda : {0.5, 1.0, 5.0}) {
                const TimeWarp w(theta, 0.5);
                const auto f = relaxation(alpha, lambda, w);
                for (double t : {0.51, 1.0, 2.0}) {
                    const double d = hb_caputo(f, alpha, w, t);
                    worst = std::max(worst, std::abs(d + lambda * f(t)) / std::abs(lambda * f(t)));
                }
            }
        }
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("hb_caputo against the Erdelyi-Kober route") {
    // a = 0: both routes resolve the endpoint fully
    for (double alpha : {0.3, 0.7}) {
        for (double theta : {-0.5, 0.5}) {
            const TimeWarp w(theta, 0.0);
            const auto f = relaxation(alpha, 2.0, w);
            for (double t : {0.5, 1.5}) {
                const double l1 = hb_caputo(f, alpha, w, t);
                const double ek = hb_caputo_ek(f, alpha, w, t);
                CHECK(std::abs(l1 - ek) <= 1e-6 * std::abs(l1));
            }
        }
    }
    // a > 0: the t-parametrized integrand cannot be resolved within ~1e-13 a^p of a
    for (double alpha : {0.3, 0.7}) {
        const TimeWarp w(0.2, 0.5);
        const auto f = relaxation(alpha, 2.0, w);
        const double l1 = hb_caputo(f, alpha, w, 1.4);
        CHECK(std::abs(l1 - hb_caputo_ek(f, alpha, w, 1.4)) <= 2e-3 * std::abs(l1));
    }
    const TimeWarp w(0.0, 0.0);
    const auto sine = SampledFunction::sine(1.0, 1.0);
    CHECK(std::abs(hb_caputo(sine, 0.5, w, 1.0) - hb_caputo_ek(sine, 0.5, w, 1.0)) <= 1e-7);
}

TEST_CASE("kernel equivalence") {
    for (double alpha : {0.3, 0.5, 0.7, 0.95}) {
        for (double ls : {-0.5, -3.0, -20.0}) {
            for (double r : {1e-4, 0.01, 0.3, 1.0, 2.5}) {
                const double lhs = std::pow(r, alpha - 1) / std::tgamma(alpha) +
                                   ls * std::pow(r, 2 * alpha - 1) * ml_eval(alpha, 2 * alpha, ls * std::pow(r, alpha));
                const double rhs = std::pow(r, alpha - 1) * ml_eval(alpha, alpha, ls * std::pow(r, alpha));
                CHECK(std::abs(lhs - rhs) <= 1e-11 * std::max(1.0, std::abs(rhs)));
            }
        }
    }
}
