#pragma once

#include "hbfrac/time_warp.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace hbfrac {

/// A real function of one variable: either a closed-form expression (with its
/// derivative where known) or a table interpolated by a monotone cubic (PCHIP).
/// Copies share the immutable representation.
class SampledFunction {
public:
    using Fn = std::function<double(double)>;

    /// The zero function.
    SampledFunction();

    static SampledFunction constant(double c);
    /// c[0] + c[1] x + c[2] x^2 + ...
    static SampledFunction polynomial(std::vector<double> coeffs);
    /// amplitude * sin(frequency * x + phase)
    static SampledFunction sine(double amplitude, double frequency, double phase = 0.0);
    static SampledFunction cosine(double amplitude, double frequency, double phase = 0.0);
    /// coeff * (t^p - a^p)^exponent, for t >= a
    static SampledFunction warp_power(const TimeWarp& warp, double exponent, double coeff = 1.0);
    /// Monotone cubic through (nodes, values). Fewer than four nodes fall back to
    /// linear interpolation. Evaluation outside [nodes.front(), nodes.back()] throws.
    static SampledFunction tabulated(std::vector<double> nodes, std::vector<double> values);
    /// Arbitrary callable; df may be empty.
    static SampledFunction callable(Fn f, Fn df = {});

    double operator()(double x) const;
    /// Throws ContractError when no derivative is available.
    double derivative(double x) const;
    bool has_derivative() const;

    bool is_constant() const;
    bool is_tabulated() const;
    /// Tabulation nodes (empty for closed forms).
    const std::vector<double>& nodes() const;

    SampledFunction operator+(const SampledFunction& other) const;
    SampledFunction operator-(const SampledFunction& other) const;
    SampledFunction operator*(const SampledFunction& other) const;
    SampledFunction scaled(double c) const;
    /// x -> f(x) + c
    SampledFunction shifted(double c) const;

    struct Rep;

private:
    explicit SampledFunction(std::shared_ptr<const Rep> rep);
    std::shared_ptr<const Rep> rep_;
};

}  // namespace hbfrac
