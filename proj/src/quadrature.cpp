#include "hbfrac/quadrature.hpp"

#include "hbfrac/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace hbfrac {

JacobiRecurrence jacobi_recurrence(int n, double a, double b) {
    if (n < 1) throw DomainError("jacobi_recurrence: n must be positive");
    if (!(a > -1.0) || !(b > -1.0)) throw DomainError("jacobi_recurrence: exponents must exceed -1");
    JacobiRecurrence rec;
    rec.diag.resize(n);
    rec.off.resize(n);
    for (int k = 0; k < n; ++k) {
        const double s = 2.0 * k + a + b;
        rec.diag[k] = k == 0 ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
        const double k1 = k + 1.0;
        const double s1 = 2.0 * k1 + a + b;
        double off2;
        if (k == 0) {
            // (k1 + a + b) / (s1 - 1) cancels; avoids 0/0 at a + b = -1
            off2 = 4.0 * (1.0 + a) * (1.0 + b) / (s1 * s1 * (s1 + 1.0));
        } else {
            off2 = 4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0));
        }
        rec.off[k] = std::sqrt(off2);
    }
    rec.mu0 = std::exp((a + b + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
                       std::lgamma(a + b + 2.0));
    return rec;
}

QuadRule gauss_jacobi(int n, double a, double b) {
    const JacobiRecurrence rec = jacobi_recurrence(n, a, b);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        J(k, k) = rec.diag[k];
        if (k + 1 < n) {
            J(k, k + 1) = rec.off[k];
            J(k + 1, k) = rec.off[k];
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    if (es.info() != Eigen::Success) throw NumericError("gauss_jacobi: eigen-decomposition failed");

    QuadRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = rec.mu0 * v0 * v0;
    }
    return rule;
}

QuadRule gauss_legendre(int n) {
    return gauss_jacobi(n, 0.0, 0.0);
}

const QuadRule& cached_gauss_jacobi(int n, double a, double b) {
    static std::mutex mutex;
    static std::map<std::tuple<int, double, double>, std::unique_ptr<QuadRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{n, a, b}];
    if (!slot) slot = std::make_unique<QuadRule>(gauss_jacobi(n, a, b));
    return *slot;
}

const QuadRule& cached_gauss_legendre(int n) {
    return cached_gauss_jacobi(n, 0.0, 0.0);
}

}  // namespace hbfrac
