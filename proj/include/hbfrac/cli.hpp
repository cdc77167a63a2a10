#pragma once

#include "hbfrac/sampled_function.hpp"
#include "hbfrac/solver.hpp"
#include "hbfrac/spectral.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace hbfrac::cli {

enum ExitCode : int { ok = 0, usage = 1, domain = 2, resolution = 3, verification = 4 };

/// Flat key = value configuration. Expressions:
///   space  zero | poly:c0,c1,... | sin:A,w[,phase] | cos:A,w[,phase] | mode:k[,c] | table:PATH
///   time   zero | const:c | poly:... | sin:... | cos:... | warp:e[,c]   (c (t^p - a^p)^e)
/// Sums are written with " + ", an optional "c*" scales a term. A source is a sum of
/// "SPACE @ TIME" products, a bare "const:c", or "table:PATH".
struct RunConfig {
    double alpha = 0.6;
    double theta = 0.3;
    double beta = 0.5;
    double a = 0.0;
    double T = 1.0;
    std::string phi = "poly:0,1,-1";
    std::string f = "const:1";
    int modes = 16;  ///< 0 means auto
    int eigen_modes = 0;  ///< eigenpairs computed for solves; 0 picks modes + 8 (64 for auto)
    int nx = 101;
    int nt = 11;
    int fd_nx = 0;  ///< 0 picks the default FD mesh
    int fd_nt = 0;
    double tol = 1e-2;
    std::string out = "out";
    std::string format = "csv";
    std::string oracle = "galerkin";
    std::vector<int> k_ladder{1, 2, 4, 8, 16};
    std::vector<int> fd_ladder{64, 128, 256};
};

/// Throws ConfigError for unknown keys and malformed values.
void set_key(RunConfig& cfg, const std::string& key, const std::string& value);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

/// `sys` resolves mode:k; it may be null when no mode expression is used.
SampledFunction parse_space(const std::string& expr, const EigenSystem* sys);
SampledFunction parse_time(const std::string& expr, const TimeWarp& warp);
SourceTerm parse_source(const std::string& expr, const TimeWarp& warp, const EigenSystem* sys);
ProblemSpec build_problem(const RunConfig& cfg, const EigenSystem* sys);

int cmd_eigen(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_convergence(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Dispatches by name and maps exceptions to exit codes.
int run(const std::string& command, const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// "%.16e"
std::string format_number(double v);

}  // namespace hbfrac::cli
