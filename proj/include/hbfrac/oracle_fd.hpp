#pragma once

#include "hbfrac/solver.hpp"

#include <vector>

namespace hbfrac {

/// Spatial nodes x_i = (i/Nx)^x_grading and warped-time nodes s_n = S (n/Nt)^s_grading.
struct FDMesh {
    std::vector<double> x;
    std::vector<double> s;
    double x_grading = 1.0;
    double s_grading = 1.0;

    int nx() const { return static_cast<int>(x.size()) - 1; }
    int nt() const { return static_cast<int>(s.size()) - 1; }
};

/// Gradings of 0 pick 2/(2-beta) in x and (2-alpha)/alpha in s.
FDMesh make_fd_mesh(const ProblemSpec& spec, int Nx, int Nt, double x_grading = 0.0, double s_grading = 0.0);

/// 512 x 512, except 512 x 2048 for alpha = 1 where the stencil is first-order backward Euler.
FDMesh default_fd_mesh(const ProblemSpec& spec);

/// L1 scheme in s = t^p - a^p scaled by p^alpha, conservative fluxes
/// kappa_{i+1/2} (u_{i+1} - u_i) with kappa = 1 / int_{x_i}^{x_{i+1}} x^-beta dx and a
/// lumped mass. For beta > 1 the first face gets kappa = 0, which is the zero flux
/// limit at x = 0; for beta < 1 u(0) = 0. The returned field has one row per s node.
SolutionField fd_solve(const ProblemSpec& spec, const FDMesh& mesh);

struct CompareReport {
    std::vector<double> t;
    std::vector<double> l2_diff, sup_diff;
    std::vector<double> rel_l2, rel_sup;
    double max_rel_l2 = 0.0;
    double max_rel_sup = 0.0;
};

/// Differences of `other` against `reference` at the given times. Rows are
/// interpolated linearly in t unless a node matches; `other` is interpolated linearly
/// in x onto the reference nodes, and L2 norms use the trapezoid rule there.
/// ContractError if a time lies outside either field.
CompareReport compare(const SolutionField& reference, const SolutionField& other, const std::vector<double>& t_subset);

}  // namespace hbfrac
