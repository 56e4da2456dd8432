#pragma once

#include "qkext/pqc.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>

namespace qkext::kernel {

enum class DataSource { uniform_random, correlated_synthetic, file };

std::string to_string(DataSource source);
DataSource data_source_from_string(const std::string& name);

/// Rows are feature vectors x_l; columns are features.
struct DataSet {
    Eigen::MatrixXd points;
    DataSource source = DataSource::uniform_random;

    Eigen::Index size() const { return points.rows(); }
    Eigen::Index dim() const { return points.cols(); }
};

/// Throws ValidationError unless points is non-empty with finite entries.
void validate(const DataSet& data);

struct KernelMeta {
    std::string circuit_id;
    int width = 0;
    int layers = 0;
    long shots = 0; // 0 = exact (noise-free) entries
    std::uint64_t seed = 0;
};

/// Dense symmetric matrix of kernel values K_lm = |<psi_l|psi_m>|^2.
struct KernelMatrix {
    Eigen::MatrixXd values;
    KernelMeta meta;

    Eigen::Index size() const { return values.rows(); }
};

/// |<0|U'(x_l) U(x_m)|0>|^2 for one pair of feature vectors.
double kernel_entry(const pqc::CircuitTemplate& tmpl, Eigen::Ref<const Eigen::VectorXd> x_l,
                    Eigen::Ref<const Eigen::VectorXd> x_m);

/// Exact kernel matrix: lower triangle computed entrywise, mirrored, unit
/// diagonal set explicitly. meta.shots = 0.
KernelMatrix build_kernel_matrix(const pqc::CircuitTemplate& tmpl, const DataSet& data);

/// Finite-shot estimate: every off-diagonal entry of the lower triangle is
/// replaced by Binomial(R, K_lm)/R and mirrored; the diagonal stays exactly 1
/// (a p=1 binomial is degenerate). The result is generally not PSD.
KernelMatrix apply_shot_noise(const KernelMatrix& exact, long shots, std::mt19937_64& rng);

} // namespace qkext::kernel
