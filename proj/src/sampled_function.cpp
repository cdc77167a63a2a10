#include "hbfrac/sampled_function.hpp"

#include "hbfrac/errors.hpp"

#include <algorithm>
#include <cmath>

// Boost 1.74's pchip calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

namespace hbfrac {

struct SampledFunction::Rep {
    Fn f;
    Fn df;
    bool constant = false;
    std::vector<double> nodes;
};

namespace {

std::shared_ptr<const SampledFunction::Rep> make_rep(SampledFunction::Fn f, SampledFunction::Fn df,
                                                     bool constant = false,
                                                     std::vector<double> nodes = {}) {
    auto rep = std::make_shared<SampledFunction::Rep>();
    rep->f = std::move(f);
    rep->df = std::move(df);
    rep->constant = constant;
    rep->nodes = std::move(nodes);
    return rep;
}

}  // namespace

SampledFunction::SampledFunction() : SampledFunction(constant(0.0)) {}

SampledFunction::SampledFunction(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}

SampledFunction SampledFunction::constant(double c) {
    if (!std::isfinite(c)) throw DomainError("SampledFunction: non-finite constant");
    return SampledFunction(make_rep([c](double) { return c; }, [](double) { return 0.0; }, true));
}

SampledFunction SampledFunction::polynomial(std::vector<double> coeffs) {
    if (coeffs.empty()) return constant(0.0);
    if (std::all_of(coeffs.begin() + 1, coeffs.end(), [](double c) { return c == 0.0; })) {
        return constant(coeffs.front());
    }
    auto f = [coeffs](double x) {
        double acc = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
        return acc;
    };
    auto df = [coeffs](double x) {
        double acc = 0.0;
        for (std::size_t k = coeffs.size() - 1; k >= 1; --k) acc = acc * x + k * coeffs[k];
        return acc;
    };
    return SampledFunction(make_rep(f, df));
}

SampledFunction SampledFunction::sine(double amplitude, double frequency, double phase) {
    return SampledFunction(make_rep(
        [=](double x) { return amplitude * std::sin(frequency * x + phase); },
        [=](double x) { return amplitude * frequency * std::cos(frequency * x + phase); }));
}

SampledFunction SampledFunction::cosine(double amplitude, double frequency, double phase) {
    return SampledFunction(make_rep(
        [=](double x) { return amplitude * std::cos(frequency * x + phase); },
        [=](double x) { return -amplitude * frequency * std::sin(frequency * x + phase); }));
}

SampledFunction SampledFunction::warp_power(const TimeWarp& warp, double exponent, double coeff) {
    if (exponent == 0.0) return constant(coeff);
    if (exponent < 0.0) throw DomainError("warp_power: exponent must be nonnegative");
    auto f = [=](double t) { return coeff * std::pow(warp.forward(t), exponent); };
    // d/dt s^e = e s^(e-1) p t^(p-1)
    auto df = [=](double t) {
        const double s = warp.forward(t);
        return coeff * exponent * std::pow(s, exponent - 1.0) * warp.p() * std::pow(t, warp.p() - 1.0);
    };
    return SampledFunction(make_rep(f, df));
}

SampledFunction SampledFunction::tabulated(std::vector<double> nodes, std::vector<double> values) {
    if (nodes.size() != values.size() || nodes.empty()) {
        throw DomainError("tabulated: nodes and values must be nonempty and of equal length");
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!std::isfinite(nodes[i]) || !std::isfinite(values[i])) {
            throw DomainError("tabulated: non-finite entry");
        }
        if (i > 0 && !(nodes[i] > nodes[i - 1])) {
            throw DomainError("tabulated: nodes must be strictly increasing");
        }
    }
    if (nodes.size() == 1) {
        // single value, defined only at its node
        const double x0 = nodes[0];
        const double y0 = values[0];
        return SampledFunction(make_rep(
            [=](double x) {
                if (x != x0) throw DomainError("tabulated: evaluation outside the table");
                return y0;
            },
            {}, false, nodes));
    }
    const double lo = nodes.front();
    const double hi = nodes.back();
    auto check = [lo, hi](double x) {
        if (!(x >= lo && x <= hi)) throw DomainError("tabulated: evaluation outside the table");
    };
    if (nodes.size() < 4) {
        auto xs = std::make_shared<const std::vector<double>>(nodes);
        auto ys = std::make_shared<const std::vector<double>>(values);
        auto segment = [xs](double x) {
            const auto it = std::upper_bound(xs->begin(), xs->end(), x);
            std::size_t i = std::clamp<std::size_t>(it - xs->begin(), 1, xs->size() - 1);
            return i - 1;
        };
        auto f = [=](double x) {
            check(x);
            const std::size_t i = segment(x);
            const double w = (x - (*xs)[i]) / ((*xs)[i + 1] - (*xs)[i]);
            return (1.0 - w) * (*ys)[i] + w * (*ys)[i + 1];
        };
        auto df = [=](double x) {
            check(x);
            const std::size_t i = segment(x);
            return ((*ys)[i + 1] - (*ys)[i]) / ((*xs)[i + 1] - (*xs)[i]);
        };
        return SampledFunction(make_rep(f, df, false, nodes));
    }
    auto xs = nodes;
    auto ys = values;
    auto spline = std::make_shared<const boost::math::interpolators::pchip<std::vector<double>>>(
        std::move(xs), std::move(ys));
    auto f = [=](double x) {
        check(x);
        return (*spline)(x);
    };
    auto df = [=](double x) {
        check(x);
        return spline->prime(x);
    };
    return SampledFunction(make_rep(f, df, false, std::move(nodes)));
}

SampledFunction SampledFunction::callable(Fn f, Fn df) {
    if (!f) throw ContractError("callable: empty function");
    return SampledFunction(make_rep(std::move(f), std::move(df)));
}

double SampledFunction::operator()(double x) const {
    return rep_->f(x);
}

double SampledFunction::derivative(double x) const {
    if (!rep_->df) throw ContractError("SampledFunction: no derivative available");
    return rep_->df(x);
}

bool SampledFunction::has_derivative() const {
    return static_cast<bool>(rep_->df);
}

bool SampledFunction::is_constant() const {
    return rep_->constant;
}

bool SampledFunction::is_tabulated() const {
    return !rep_->nodes.empty();
}

const std::vector<double>& SampledFunction::nodes() const {
    return rep_->nodes;
}

SampledFunction SampledFunction::operator+(const SampledFunction& other) const {
    if (is_constant() && other.is_constant()) return constant((*this)(0.0) + other(0.0));
    auto a = rep_;
    auto b = other.rep_;
    Fn df;
    if (a->df && b->df) df = [a, b](double x) { return a->df(x) + b->df(x); };
    return SampledFunction(make_rep([a, b](double x) { return a->f(x) + b->f(x); }, df));
}

SampledFunction SampledFunction::operator-(const SampledFunction& other) const {
    return *this + other.scaled(-1.0);
}

SampledFunction SampledFunction::operator*(const SampledFunction& other) const {
    if (is_constant() && other.is_constant()) return constant((*this)(0.0) * other(0.0));
    auto a = rep_;
    auto b = other.rep_;
    Fn df;
    if (a->df && b->df) {
        df = [a, b](double x) { return a->df(x) * b->f(x) + a->f(x) * b->df(x); };
    }
    return SampledFunction(make_rep([a, b](double x) { return a->f(x) * b->f(x); }, df));
}

SampledFunction SampledFunction::scaled(double c) const {
    if (is_constant()) return constant(c * (*this)(0.0));
    auto a = rep_;
    Fn df;
    if (a->df) df = [a, c](double x) { return c * a->df(x); };
    return SampledFunction(make_rep([a, c](double x) { return c * a->f(x); }, df, false, a->nodes));
}

SampledFunction SampledFunction::shifted(double c) const {
    return *this + constant(c);
}

}  // namespace hbfrac
