#pragma once

#include "qkext/kernel.hpp"
#include "qkext/pqc.hpp"
#include "qkext/sparsity.hpp"

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace qkext::analysis {

struct ErrorReport {
    double error = 0.0;
    long unknown_count = 0; // |S̄| counting both symmetric positions
    double frobenius_num = 0.0;
    double frobenius_den = 0.0;
    bool unknown_set_empty = false; // nothing to estimate; error = 0 by convention
};

/// Relative Frobenius error of the estimate over the unknown set:
/// ||K - Khat||_F / ||K||_F restricted to entries off the pattern.
ErrorReport completion_error(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimate,
                             const sparsity::SparsityPattern& pattern);

inline ErrorReport completion_error(const kernel::KernelMatrix& truth,
                                    const Eigen::MatrixXd& estimate,
                                    const sparsity::SparsityPattern& pattern) {
    return completion_error(truth.values, estimate, pattern);
}

/// Count of singular values above rel_tol * sigma_max (symmetric input, so
/// singular values are |eigenvalues|). rel_tol < 0 selects n * 2^-52 * 1e2.
int numerical_rank(const Eigen::MatrixXd& m, double rel_tol = -1.0);

/// min(N, 4^w); the 4^w branch saturates safely for large w.
long rank_bound(long n, int width);

struct OverlapCondition {
    bool satisfied = false;
    double ratio = 0.0; // u / r
};

/// The necessary condition u >= r for exact recovery of a rank-r matrix.
OverlapCondition overlap_condition(long u, long r);

struct ExpressibilityReport {
    double kl = 0.0;
    double neg_log_kl = 0.0;
    long samples = 0;
    int bins = 0;
    int width = 0;
    bool degenerate = false; // parameterless circuit: fidelity is a point mass
    std::vector<double> empirical_mass;
    std::vector<double> haar_mass;
};

/// Analytic probability masses of the Haar fidelity law over `bins` uniform
/// bins of [0,1]: mass_b = (1-lo)^(2^w-1) - (1-hi)^(2^w-1). Sums to 1.
std::vector<double> haar_bin_masses(int width, int bins);

/// KL divergence of a fidelity sample against the binned Haar law. F = 1
/// lands in the last bin; empty empirical bins contribute zero.
ExpressibilityReport expressibility_from_fidelities(int width,
                                                    const std::vector<double>& fidelities,
                                                    int bins);

/// Expressibility of a circuit: KL between the fidelity histogram of
/// `samples` random parameter pairs (each angle uniform on [0, 2pi)) and the
/// Haar law. Smaller = more Haar-like.
ExpressibilityReport expressibility(const pqc::CircuitTemplate& tmpl, long samples, int bins,
                                    std::mt19937_64& rng);

struct HaarRankReport {
    int width = 0;
    int n = 0;
    std::vector<int> ranks; // one per trial
    long bound = 0;         // min(N, 4^w)
    double saturation_fraction = 0.0;
};

/// Builds `trials` kernel matrices from N Haar-random states each and
/// reports how often the numerical rank saturates min(N, 4^w).
HaarRankReport haar_rank_conjecture_check(int width, int n, int trials, std::mt19937_64& rng);

} // namespace qkext::analysis
