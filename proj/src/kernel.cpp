#include "qkext/kernel.hpp"

#include "qkext/errors.hpp"

#include <random>

namespace qkext::kernel {

std::string to_string(DataSource source) {
    switch (source) {
    case DataSource::uniform_random: return "uniform_random";
    case DataSource::correlated_synthetic: return "correlated_synthetic";
    case DataSource::file: return "file";
    }
    return "?";
}

DataSource data_source_from_string(const std::string& name) {
    if (name == "uniform_random" || name == "uniform") return DataSource::uniform_random;
    if (name == "correlated_synthetic" || name == "correlated")
        return DataSource::correlated_synthetic;
    if (name == "file") return DataSource::file;
    throw ValidationError("unknown data source: " + name);
}

void validate(const DataSet& data) {
    if (data.points.rows() < 1 || data.points.cols() < 1) {
        throw ValidationError("data set must have at least one point and one feature");
    }
    if (!data.points.allFinite()) {
        throw ValidationError("data set contains non-finite entries");
    }
}

double kernel_entry(const pqc::CircuitTemplate& tmpl, Eigen::Ref<const Eigen::VectorXd> x_l,
                    Eigen::Ref<const Eigen::VectorXd> x_m) {
    return pqc::fidelity(tmpl, std::span<const double>(x_l.data(), size_t(x_l.size())),
                         std::span<const double>(x_m.data(), size_t(x_m.size())));
}

KernelMatrix build_kernel_matrix(const pqc::CircuitTemplate& tmpl, const DataSet& data) {
    validate(data);
    if (data.dim() != tmpl.param_count()) {
        throw ValidationError("data has " + std::to_string(data.dim()) +
                              " features but the circuit binds " +
                              std::to_string(tmpl.param_count()) + " parameters");
    }
    const Eigen::Index n = data.size();
    KernelMatrix k;
    k.values.resize(n, n);
    for (Eigen::Index l = 0; l < n; ++l) {
        k.values(l, l) = 1.0;
        for (Eigen::Index m = 0; m < l; ++m) {
            const double v = kernel_entry(tmpl, data.points.row(l).transpose(),
                                          data.points.row(m).transpose());
            k.values(l, m) = v;
            k.values(m, l) = v; // mirrored, not recomputed
        }
    }
    k.meta.circuit_id = tmpl.id();
    k.meta.width = tmpl.width();
    k.meta.layers = tmpl.layers();
    k.meta.shots = 0;
    return k;
}

KernelMatrix apply_shot_noise(const KernelMatrix& exact, long shots, std::mt19937_64& rng) {
    if (exact.meta.shots != 0) {
        throw ValidationError("kernel matrix already carries shot noise (shots = " +
                              std::to_string(exact.meta.shots) + ")");
    }
    if (shots < 1) {
        throw ValidationError("shot count must be >= 1");
    }
    const Eigen::Index n = exact.size();
    KernelMatrix noisy;
    noisy.meta = exact.meta;
    noisy.meta.shots = shots;
    noisy.values.resize(n, n);
    for (Eigen::Index l = 0; l < n; ++l) {
        noisy.values(l, l) = 1.0; // Binomial(R, 1)/R is R/R
        for (Eigen::Index m = 0; m < l; ++m) {
            const double p = std::clamp(exact.values(l, m), 0.0, 1.0);
            std::binomial_distribution<long> binom(shots, p);
            const double v = double(binom(rng)) / double(shots);
            noisy.values(l, m) = v;
            noisy.values(m, l) = v;
        }
    }
    return noisy;
}

} // namespace qkext::kernel
