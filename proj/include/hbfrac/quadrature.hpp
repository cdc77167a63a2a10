#pragma once

#include <vector>

namespace hbfrac {

struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Three-term recurrence of the orthonormal Jacobi polynomials for the weight
/// (1-x)^a (1+x)^b: x p_k = off[k] p_{k+1} + diag[k] p_k + off[k-1] p_{k-1},
/// p_0 = 1 / sqrt(mu0).
struct JacobiRecurrence {
    std::vector<double> diag;
    std::vector<double> off;
    double mu0;
};

JacobiRecurrence jacobi_recurrence(int n, double a, double b);

/// n-point Gauss rule for the weight (1-x)^a (1+x)^b on [-1, 1] (Golub-Welsch).
QuadRule gauss_jacobi(int n, double a, double b);

/// n-point Gauss-Legendre rule on [-1, 1].
QuadRule gauss_legendre(int n);

/// Same rules, cached per (n, a, b). Thread-safe.
const QuadRule& cached_gauss_jacobi(int n, double a, double b);
const QuadRule& cached_gauss_legendre(int n);

}  // namespace hbfrac
