#pragma once

namespace hbfrac {

/// Warped time s = t^p - a^p with p = 1 - theta. The hyper-Bessel Caputo-like
/// derivative of order alpha in t is p^alpha times the classical Caputo derivative
/// in s.
struct TimeWarp {
    double theta = 0.0;
    double a = 0.0;

    TimeWarp() = default;
    TimeWarp(double theta_, double a_);

    double p() const { return 1.0 - theta; }
    double forward(double t) const;
    double inverse(double s) const;
};

double warp_forward(const TimeWarp& warp, double t);
double warp_inverse(const TimeWarp& warp, double s);

}  // namespace hbfrac
