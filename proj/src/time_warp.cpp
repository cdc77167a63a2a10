#include "hbfrac/time_warp.hpp"

#include "hbfrac/errors.hpp"

#include <cmath>

namespace hbfrac {

TimeWarp::TimeWarp(double theta_, double a_) : theta(theta_), a(a_) {
    if (!std::isfinite(theta) || !(theta < 1.0)) throw DomainError("TimeWarp: theta must be < 1");
    if (!std::isfinite(a) || a < 0.0) throw DomainError("TimeWarp: a must be nonnegative");
}

double TimeWarp::forward(double t) const {
    if (!(t >= a) || !std::isfinite(t)) throw DomainError("warp_forward: t must satisfy t >= a");
    if (t == a) return 0.0;
    if (a == 0.0) return std::pow(t, p());
    // a^p ((t/a)^p - 1) keeps digits when t is close to a
    return std::pow(a, p()) * std::expm1(p() * std::log(t / a));
}

double TimeWarp::inverse(double s) const {
    if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("warp_inverse: s must be >= 0");
    if (s == 0.0) return a;
    if (a == 0.0) return std::pow(s, 1.0 / p());
    const double ap = std::pow(a, p());
    return a * std::exp(std::log1p(s / ap) / p());
}

double warp_forward(const TimeWarp& warp, double t) {
    return warp.forward(t);
}

double warp_inverse(const TimeWarp& warp, double s) {
    return warp.inverse(s);
}

}  // namespace hbfrac
