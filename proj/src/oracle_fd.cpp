#include "hbfrac/oracle_fd.hpp"

#include "hbfrac/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hbfrac {

namespace {

// A^(1-alpha) - (A-h)^(1-alpha)
double power_gap(double A, double h, double one_minus_alpha) {
    if (h >= A) return std::pow(A, one_minus_alpha);
    return -std::pow(A, one_minus_alpha) * std::expm1(one_minus_alpha * std::log1p(-h / A));
}

// Thomas algorithm; lower[0] and upper[n-1] unused.
void solve_tridiagonal(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper,
                       std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (diag[i - 1] == 0.0) throw NumericError("fd_solve: singular tridiagonal system");
        const double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    if (diag[n - 1] == 0.0) throw NumericError("fd_solve: singular tridiagonal system");
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

// Row of `field` at time t, linear between neighbouring nodes.
std::vector<double> row_at(const SolutionField& field, double t) {
    const auto& tg = field.t_grid;
    if (tg.empty()) throw ContractError("compare: empty field");
    const double tol = 1e-12 * std::max(1.0, std::abs(t));
    if (t < tg.front() - tol || t > tg.back() + tol) throw ContractError("compare: time outside the field's range");
    std::vector<double> out(field.x_grid.size());
    auto it = std::lower_bound(tg.begin(), tg.end(), t - tol);
    std::size_t j = static_cast<std::size_t>(it - tg.begin());
    if (j < tg.size() && std::abs(tg[j] - t) <= tol) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = field.values(j, i);
        return out;
    }
    j = std::clamp<std::size_t>(j, 1, tg.size() - 1);
    const double w = (t - tg[j - 1]) / (tg[j] - tg[j - 1]);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - w) * field.values(j - 1, i) + w * field.values(j, i);
    return out;
}

double interp_x(const std::vector<double>& x, const std::vector<double>& u, double at) {
    if (at <= x.front()) return u.front();
    if (at >= x.back()) return u.back();
    const auto it = std::upper_bound(x.begin(), x.end(), at);
    const std::size_t i = static_cast<std::size_t>(it - x.begin());
    const double w = (at - x[i - 1]) / (x[i] - x[i - 1]);
    return (1.0 - w) * u[i - 1] + w * u[i];
}

}  // namespace

FDMesh make_fd_mesh(const ProblemSpec& spec, int Nx, int Nt, double x_grading, double s_grading) {
    spec.validate();
    if (Nx < 2 || Nt < 1) throw DomainError("make_fd_mesh: need Nx >= 2 and Nt >= 1");
    FDMesh m;
    m.x_grading = x_grading > 0.0 ? x_grading : 2.0 / (2.0 - spec.beta);
    m.s_grading = s_grading > 0.0 ? s_grading : (2.0 - spec.alpha) / spec.alpha;
    m.x.resize(Nx + 1);
    for (int i = 0; i <= Nx; ++i) m.x[i] = std::pow(static_cast<double>(i) / Nx, m.x_grading);
    m.x[Nx] = 1.0;
    m.s = graded_grid(spec.warp().forward(spec.T), Nt, m.s_grading);
    return m;
}

FDMesh default_fd_mesh(const ProblemSpec& spec) {
    return make_fd_mesh(spec, 512, spec.alpha == 1.0 ? 2048 : 512);
}

SolutionField fd_solve(const ProblemSpec& spec, const FDMesh& mesh) {
    spec.validate();
    const int N = mesh.nx();
    const int Nt = mesh.nt();
    if (N < 2 || Nt < 1) throw ResolutionError("fd_solve: mesh too small");
    if (mesh.x.front() != 0.0 || mesh.x.back() != 1.0) throw ContractError("fd_solve: x nodes must span [0,1]");
    for (int i = 0; i < N; ++i) {
        if (!(mesh.x[i + 1] > mesh.x[i])) throw ContractError("fd_solve: x nodes must increase");
    }
    if (mesh.s.front() != 0.0) throw ContractError("fd_solve: s nodes must start at 0");
    for (int n = 0; n < Nt; ++n) {
        if (!(mesh.s[n + 1] > mesh.s[n])) throw ContractError("fd_solve: s nodes must increase");
    }

    const double beta = spec.beta, alpha = spec.alpha;
    const TimeWarp warp = spec.warp();
    const auto& x = mesh.x;

    // face conductances
    std::vector<double> kappa(N);
    for (int i = 0; i < N; ++i) {
        if (x[i] == 0.0 && beta > 1.0) {
            kappa[i] = 0.0;
            continue;
        }
        const double lo = x[i] == 0.0 ? 0.0 : std::pow(x[i], 1.0 - beta);
        const double hi = std::pow(x[i + 1], 1.0 - beta);
        kappa[i] = (1.0 - beta) / (hi - lo);
        if (!(kappa[i] > 0.0) || !std::isfinite(kappa[i])) {
            throw ResolutionError("fd_solve: mesh cell too small for the degenerate coefficient");
        }
    }
    std::vector<double> vol(N + 1, 0.0);
    vol[0] = 0.5 * x[1];
    for (int i = 1; i < N; ++i) vol[i] = 0.5 * (x[i + 1] - x[i - 1]);

    const int first = beta < 1.0 ? 1 : 0;
    const int m = N - first;  // unknowns first..N-1

    std::vector<double> t(Nt + 1);
    for (int n = 0; n <= Nt; ++n) t[n] = n == 0 ? spec.a : n == Nt ? spec.T : warp.inverse(mesh.s[n]);

    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(Nt + 1, N + 1);
    for (int i = first; i < N; ++i) U(0, i) = spec.phi(x[i]);
    const bool zero_source = spec.f.is_zero();

    const double scale = std::pow(warp.p(), alpha) / std::tgamma(2.0 - alpha);
    const double oma = 1.0 - alpha;
    std::vector<double> c(Nt);
    std::vector<double> lower(m), diag(m), upper(m), rhs(m);
    for (int n = 1; n <= Nt; ++n) {
        for (int j = 0; j < n; ++j) {
            const double h = mesh.s[j + 1] - mesh.s[j];
            c[j] = scale * power_gap(mesh.s[n] - mesh.s[j], h, oma) / h;
        }
        for (int r = 0; r < m; ++r) {
            const int i = first + r;
            double hist = 0.0;
            for (int j = 0; j + 1 < n; ++j) hist += c[j] * (U(j + 1, i) - U(j, i));
            const double src = zero_source ? 0.0 : spec.f(x[i], t[n]);
            const double left = i > 0 ? kappa[i - 1] : 0.0;
            const double right = kappa[i];
            lower[r] = -left;
            upper[r] = -right;
            diag[r] = vol[i] * c[n - 1] + left + right;
            rhs[r] = vol[i] * (src + c[n - 1] * U(n - 1, i) - hist);
        }
        solve_tridiagonal(lower, diag, upper, rhs);
        for (int r = 0; r < m; ++r) U(n, first + r) = rhs[r];
    }

    SolutionField field;
    field.x_grid = x;
    field.t_grid = t;
    field.values = std::move(U);
    field.K = 0;
    field.regime = regime_of(beta);
    field.diagnostics.warnings = compatibility_warnings(spec);
    return field;
}

CompareReport compare(const SolutionField& reference, const SolutionField& other, const std::vector<double>& t_subset) {
    CompareReport rep;
    const auto& x = reference.x_grid;
    if (x.size() < 2 || other.x_grid.size() < 2) throw ContractError("compare: fields need at least two x nodes");
    for (double t : t_subset) {
        const std::vector<double> a = row_at(reference, t);
        const std::vector<double> b0 = row_at(other, t);
        std::vector<double> d(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) d[i] = interp_x(other.x_grid, b0, x[i]) - a[i];
        double l2 = 0.0, ref2 = 0.0, sup = 0.0, refsup = 0.0;
        for (std::size_t i = 0; i + 1 < x.size(); ++i) {
            const double h = x[i + 1] - x[i];
            l2 += 0.5 * h * (d[i] * d[i] + d[i + 1] * d[i + 1]);
            ref2 += 0.5 * h * (a[i] * a[i] + a[i + 1] * a[i + 1]);
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            sup = std::max(sup, std::abs(d[i]));
            refsup = std::max(refsup, std::abs(a[i]));
        }
        rep.t.push_back(t);
        rep.l2_diff.push_back(std::sqrt(l2));
        rep.sup_diff.push_back(sup);
        const double rl2 = ref2 > 0.0 ? std::sqrt(l2 / ref2) : std::sqrt(l2);
        const double rsup = refsup > 0.0 ? sup / refsup : sup;
        rep.rel_l2.push_back(rl2);
        rep.rel_sup.push_back(rsup);
        rep.max_rel_l2 = std::max(rep.max_rel_l2, rl2);
        rep.max_rel_sup = std::max(rep.max_rel_sup, rsup);
    }
    return rep;
}

}  // namespace hbfrac
