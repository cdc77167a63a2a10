#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hbfrac/errors.hpp"
#include "hbfrac/special_functions.hpp"

#include <boost/multiprecision/mpfr.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

using namespace hbfrac;
using std::numbers::pi;

namespace {

struct MLRef {
    double alpha, beta, z, value;
};

// Generated by tools/oracles/ml_reference.py (mpmath, high-precision series and
// the algebraic expansion far out on the negative ray).
const MLRef kReference[] = {
#include "data/ml_reference.inc"
};

// J_nu(x) from its ascending series in 256-bit arithmetic.
double bessel_series_mp(double nu, double x) {
    using mp = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<256>>;
    const mp half_x = mp(x) / 2;
    const mp q = -half_x * half_x;
    mp term = boost::multiprecision::pow(half_x, mp(nu)) / boost::multiprecision::tgamma(mp(nu) + 1);
    mp sum = term;
    for (int m = 1; m < 400; ++m) {
        term *= q / (mp(m) * (mp(m) + nu));
        sum += term;
    }
    return sum.convert_to<double>();
}

}  // namespace

TEST_CASE("ml_eval examples") {
    CHECK(ml_eval(1.0, 1.0, 1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
    CHECK(ml_eval(0.7, 1.3, 0.0) == doctest::Approx(1.0 / std::tgamma(1.3)).epsilon(1e-15));
    CHECK(std::abs(ml_eval(2.0, 1.0, -pi * pi / 4.0)) < 1e-14);
    const double lhs = ml_eval(0.5, 1.0, -1.0);
    const double rhs = 1.0 - ml_eval(0.5, 1.5, -1.0);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-14));
}

TEST_CASE("ml_eval against frozen high-precision references") {
    int checked = 0;
    for (const auto& r : kReference) {
        const double got = ml_eval(r.alpha, r.beta, r.z);
        const double err = std::abs(got - r.value);
        INFO("alpha=" << r.alpha << " beta=" << r.beta << " z=" << r.z << " got=" << got
                      << " ref=" << r.value);
        CHECK(err <= 1e-12 * std::abs(r.value) + 1e-16);
        ++checked;
    }
    CHECK(checked > 250);
}

TEST_CASE("ml_eval domain errors") {
    CHECK_THROWS_AS(ml_eval(0.0, 1.0, -1.0), DomainError);
    CHECK_THROWS_AS(ml_eval(-0.5, 1.0, -1.0), DomainError);
    CHECK_THROWS_AS(ml_eval(0.5, 1.0, std::nan("")), DomainError);
    CHECK_THROWS_AS(ml_eval(0.5, 1.0, INFINITY), DomainError);
}

TEST_CASE("ml recurrence identity") {
    for (double alpha : {0.3, 0.5, 0.8, 1.0, 1.4, 1.8}) {
        for (double beta : {0.3, 1.0, 1.7, 2.5}) {
            for (double z = -40.0; z <= 5.0; z += 0.73) {
                const double e = ml_eval(alpha, beta, z);
                const double r = e - 1.0 / std::tgamma(beta) - z * ml_eval(alpha, alpha + beta, z);
                INFO("alpha=" << alpha << " beta=" << beta << " z=" << z);
                CHECK(std::abs(r) <= 1e-11 * (1.0 + std::abs(e)));
            }
        }
    }
}

TEST_CASE("ml special-case reductions") {
    double worst = 0.0;
    for (double x = 0.0; x <= 10.0; x += 0.01) {
        worst = std::max(worst, std::abs(ml_eval(1.0, 1.0, x) - std::exp(x)) / std::exp(x));
        worst = std::max(worst, std::abs(ml_eval(1.0, 1.0, -x) - std::exp(-x)) / std::exp(-x));
        worst = std::max(worst, std::abs(ml_eval(2.0, 1.0, -x * x) - std::cos(x)));
        const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
        worst = std::max(worst, std::abs(ml_eval(2.0, 2.0, -x * x) - sinc));
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("E_{alpha,1} is positive and non-increasing on the negative ray") {
    for (double alpha : {0.2, 0.45, 0.7, 0.95}) {
        double prev = 1.0;
        for (double x = 0.0; x <= 1.0e4; x = x * 1.05 + 0.01) {
            const double e = ml_eval(alpha, 1.0, -x);
            INFO("alpha=" << alpha << " x=" << x);
            CHECK(e > 0.0);
            CHECK(e <= prev * (1.0 + 1e-14));
            prev = e;
        }
    }
}

TEST_CASE("gamma_eval") {
    CHECK(gamma_eval(1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(gamma_eval(0.5) == doctest::Approx(std::sqrt(pi)).epsilon(1e-15));
    CHECK(gamma_eval(5.0) == doctest::Approx(24.0).epsilon(1e-15));
    CHECK_THROWS_AS(gamma_eval(0.0), DomainError);
    CHECK_THROWS_AS(gamma_eval(-3.0), DomainError);
    CHECK(rgamma(-2.0) == 0.0);
    // factorial ladder
    double f = 1.0;
    for (int n = 1; n < 40; ++n) {
        CHECK(gamma_eval(n + 1.0) == doctest::Approx(f * n).epsilon(1e-14));
        f *= n;
    }
}

TEST_CASE("bessel_j") {
    CHECK(bessel_j(0.0, 0.0) == 1.0);
    CHECK(std::abs(bessel_j(0.5, pi)) < 1e-15);
    CHECK(bessel_j(0.5, pi / 2) == doctest::Approx(2.0 / pi).epsilon(1e-14));
    for (double x = 0.05; x <= 30.0; x += 0.37) {
        CHECK(bessel_j(0.5, x) * std::sqrt(pi * x / 2.0) ==
              doctest::Approx(std::sin(x)).epsilon(1e-10).scale(1.0));
    }
    for (double nu : {0.0, 0.2, 1.0 / 3.0, 0.75, 1.4}) {
        for (double x : {0.1, 1.0, 3.7, 9.0, 15.5}) {
            INFO("nu=" << nu << " x=" << x);
            const double ref = bessel_series_mp(nu, x);
            CHECK(std::abs(bessel_j(nu, x) - ref) <= 1e-10 * std::abs(ref) + 1e-15);
        }
    }
    CHECK_THROWS_AS(bessel_j(0.5, -1.0), DomainError);
}

TEST_CASE("bessel_j_zero") {
    CHECK(bessel_j_zero(0.5, 1) == doctest::Approx(pi).epsilon(1e-12));
    CHECK(bessel_j_zero(0.5, 3) == doctest::Approx(3 * pi).epsilon(1e-12));
    CHECK(bessel_j_zero(0.0, 1) == doctest::Approx(2.404825557695773).epsilon(1e-12));
    CHECK_THROWS_AS(bessel_j_zero(0.5, 0), DomainError);
    for (double nu : {0.0, 1.0 / 3.0, 0.6, 1.0}) {
        double prev = 0.0;
        for (int k = 1; k <= 12; ++k) {
            const double j = bessel_j_zero(nu, k);
            CHECK(j > prev);
            CHECK(std::abs(bessel_j(nu, j)) < 1e-12);
            if (k > 1) {
                // a sign change between consecutive zeros, none in between
                const double mid = bessel_j(nu, 0.5 * (prev + j));
                const double left = bessel_j(nu, prev + 1e-3);
                CHECK((mid > 0) == (left > 0));
            }
            prev = j;
        }
    }
}

TEST_CASE("ml_bound_fit") {
    std::vector<double> xs;
    for (int i = 0; i <= 100; ++i) xs.push_back(i);
    const auto fit1 = ml_bound_fit(1.0, 1.0, xs);
    CHECK(fit1.M >= 1.0);
    CHECK(std::isfinite(fit1.M));
    CHECK(fit1.sample_count == 101);
    CHECK(fit1.sector_mu > pi / 2);
    CHECK(fit1.sector_mu < pi);
    const auto fit2 = ml_bound_fit(0.5, 1.0, xs);
    CHECK(std::isfinite(fit2.M));
    std::vector<double> dense;
    for (int i = 0; i <= 4000; ++i) dense.push_back(0.025 * i);
    CHECK(std::isfinite(ml_bound_fit(0.8, 0.8, dense).M));
    CHECK_THROWS_AS(ml_bound_fit(2.0, 1.0, xs), DomainError);
}
