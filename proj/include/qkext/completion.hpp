#pragma once

#include "qkext/errors.hpp"
#include "qkext/sparsity.hpp"

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace qkext::completion {

/// Non-convergence that still carries the best iterate reached.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what_arg, Eigen::MatrixXd best_iterate)
        : NumericalError(what_arg), best_iterate_(std::move(best_iterate)) {}

    const Eigen::MatrixXd& best_iterate() const { return best_iterate_; }

private:
    Eigen::MatrixXd best_iterate_;
};

/// Frobenius-nearest matrix to `block` that is PSD with exactly unit
/// diagonal (Higham's alternating projections with Dykstra correction,
/// finished with an eigenvalue clip and diagonal rescale).
Eigen::MatrixXd nearest_correlation(const Eigen::MatrixXd& block, double tol = 1e-8,
                                    int max_iter = 500);

/// Constrained variant: additionally holds the trailing principal corner
/// (the last `corner` rows/columns) fixed at `fixed_corner`, which must
/// itself be a valid correlation matrix so the feasible set is nonempty.
/// Solved by a semismooth Newton iteration on the projection dual
/// (alternating projections stall when the pinned corner is nearly
/// singular); tol bounds the constraint residual before the pinned entries
/// are written back exactly. May fail to converge when `fixed_corner` is
/// itself singular, which leaves the dual unattained.
Eigen::MatrixXd nearest_correlation_fixed_corner(const Eigen::MatrixXd& block, int corner,
                                                 const Eigen::MatrixXd& fixed_corner,
                                                 double tol = 1e-9, int max_iter = 2000);

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix via
/// eigendecomposition: eigenvalues > rank_tol * lambda_max are inverted, the
/// rest zeroed. rank_tol < 0 selects the default n * 2^-52 * 1e3.
/// Eigenvalues below -rank_tol * lambda_max raise ValidationError.
Eigen::MatrixXd psd_pseudoinverse(const Eigen::MatrixXd& m, double rank_tol = -1.0,
                                  int* effective_rank = nullptr);

struct CompletionStep {
    std::vector<int> supernode; // rows filled at this step
    int overlap = 0;            // |U|, size of the bridging corner
    int overlap_rank = 0;       // effective rank kept in pinv(K[U,U])
};

struct CompletionResult {
    Eigen::MatrixXd matrix;
    std::vector<CompletionStep> steps;
    int repaired_blocks = 0;
    double min_eigenvalue = 0.0;
};

struct CompletionOptions {
    double rank_tol = -1.0; // pseudoinverse cutoff; < 0 = default
    bool repair = false;    // joint PSD repair of the known blocks first
};

/// Maximum-determinant PSD completion of a chained block pattern. Walks
/// supernodes bottom-right to top-left, filling the unknown rows A against
/// the completed trailing set via K[A,U] pinv(K[U,U]) Khat[U,F] and
/// mirroring; zero overlap fills zeros. Known entries pass through
/// unchanged (post-repair values when repair is on). Repair projects the
/// known entries jointly onto unit diagonal and per-block positive
/// semidefiniteness by cyclic Dykstra projections, so overlapping blocks
/// stay consistent without pinning any of them.
CompletionResult complete_max_det(const sparsity::SparseKernelView& view,
                                  const CompletionOptions& opts = {});

struct MaxDetReport {
    bool skipped = false; // completion not strictly PD; checks not applicable
    bool inverse_sparsity_pass = false;
    double inverse_sparsity_max_violation = 0.0; // max |Khat^-1| off S over max |Khat^-1|
    bool local_max_pass = false;
    int perturbations_tested = 0;
    double log_det = 0.0;
};

/// Checks the two signatures of the max-det completion: the inverse vanishes
/// off the pattern, and random feasible perturbations supported off the
/// pattern do not increase log det.
MaxDetReport verify_max_det(const CompletionResult& result,
                            const sparsity::SparseKernelView& view, int trials,
                            std::mt19937_64& rng);

} // namespace qkext::completion
