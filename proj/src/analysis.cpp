#include "qkext/analysis.hpp"

#include "qkext/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace qkext::analysis {

ErrorReport completion_error(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimate,
                             const sparsity::SparsityPattern& pattern) {
    const int n = pattern.size();
    if (truth.rows() != n || truth.cols() != n || estimate.rows() != n ||
        estimate.cols() != n) {
        throw ValidationError("completion_error: matrix sizes must match the pattern");
    }
    ErrorReport report;
    double num_sq = 0.0;
    double den_sq = 0.0;
    for (int l = 0; l < n; ++l) {
        for (int m = 0; m < n; ++m) {
            if (pattern.contains(l, m)) {
                continue;
            }
            const double t = truth(l, m);
            const double d = t - estimate(l, m);
            num_sq += d * d;
            den_sq += t * t;
            ++report.unknown_count;
        }
    }
    if (report.unknown_count == 0) {
        report.unknown_set_empty = true;
        report.error = 0.0;
        return report;
    }
    if (den_sq == 0.0) {
        throw NumericalError("completion_error: ground truth vanishes on the unknown set");
    }
    report.frobenius_num = std::sqrt(num_sq);
    report.frobenius_den = std::sqrt(den_sq);
    report.error = report.frobenius_num / report.frobenius_den;
    return report;
}

int numerical_rank(const Eigen::MatrixXd& m, double rel_tol) {
    if (m.rows() != m.cols() || m.size() == 0) {
        throw ValidationError("numerical_rank: input must be square and non-empty");
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw ValidationError("numerical_rank: input must be symmetric");
    }
    if (rel_tol < 0.0) {
        rel_tol = double(m.rows()) * std::ldexp(1.0, -52) * 1e2;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()),
                                                       Eigen::EigenvaluesOnly);
    const Eigen::VectorXd sigma = eig.eigenvalues().cwiseAbs();
    const double sigma_max = sigma.maxCoeff();
    if (sigma_max == 0.0) {
        return 0;
    }
    return int((sigma.array() > rel_tol * sigma_max).count());
}

long rank_bound(long n, int width) {
    if (n < 1 || width < 1) {
        throw ValidationError("rank_bound requires N >= 1 and w >= 1");
    }
    if (width > 31) {
        return n; // 4^w overflows and certainly exceeds any practical N
    }
    const long pow4 = 1L << (2 * width);
    return std::min(n, pow4);
}

OverlapCondition overlap_condition(long u, long r) {
    if (r == 0) {
        throw ValidationError("overlap_condition: rank must be nonzero");
    }
    if (u < 0 || r < 1) {
        throw ValidationError("overlap_condition requires u >= 0 and r >= 1");
    }
    return {u >= r, double(u) / double(r)};
}

std::vector<double> haar_bin_masses(int width, int bins) {
    if (width < 1 || bins < 1) {
        throw ValidationError("haar_bin_masses requires width >= 1 and bins >= 1");
    }
    const double e = std::ldexp(1.0, width) - 1.0; // 2^w - 1
    std::vector<double> mass(size_t(bins), 0.0);
    for (int b = 0; b < bins; ++b) {
        const double lo = double(b) / bins;
        const double hi = double(b + 1) / bins;
        mass[size_t(b)] = std::pow(1.0 - lo, e) - std::pow(1.0 - hi, e);
    }
    return mass;
}

ExpressibilityReport expressibility_from_fidelities(int width,
                                                    const std::vector<double>& fidelities,
                                                    int bins) {
    if (fidelities.empty()) {
        throw ValidationError("expressibility needs at least one fidelity sample");
    }
    ExpressibilityReport report;
    report.width = width;
    report.bins = bins;
    report.samples = long(fidelities.size());
    report.haar_mass = haar_bin_masses(width, bins);
    report.empirical_mass.assign(size_t(bins), 0.0);
    for (const double f : fidelities) {
        if (!(f >= 0.0 && f <= 1.0)) {
            throw ValidationError("fidelity sample outside [0,1]");
        }
        const int b = std::min(bins - 1, int(f * bins)); // F = 1 joins the last bin
        report.empirical_mass[size_t(b)] += 1.0;
    }
    for (double& p : report.empirical_mass) {
        p /= double(fidelities.size());
    }
    double kl = 0.0;
    for (int b = 0; b < bins; ++b) {
        const double p = report.empirical_mass[size_t(b)];
        if (p > 0.0) { // empty bins contribute 0 (p log p -> 0)
            kl += p * std::log(p / report.haar_mass[size_t(b)]);
        }
    }
    report.kl = std::max(kl, 0.0);
    report.neg_log_kl = report.kl > 0.0 ? -std::log(report.kl)
                                        : std::numeric_limits<double>::infinity();
    return report;
}

ExpressibilityReport expressibility(const pqc::CircuitTemplate& tmpl, long samples, int bins,
                                    std::mt19937_64& rng) {
    if (samples < 1000) {
        throw ValidationError("expressibility needs at least 1000 samples");
    }
    if (bins < 10) {
        throw ValidationError("expressibility needs at least 10 bins");
    }
    const int p = tmpl.param_count();
    if (p == 0) {
        // Parameterless circuit: the fidelity distribution is a point mass
        // at F = 1, so the histogram is known without sampling.
        ExpressibilityReport report;
        report.width = tmpl.width();
        report.bins = bins;
        report.samples = samples;
        report.degenerate = true;
        report.haar_mass = haar_bin_masses(tmpl.width(), bins);
        report.empirical_mass.assign(size_t(bins), 0.0);
        report.empirical_mass.back() = 1.0;
        report.kl = std::log(1.0 / report.haar_mass.back());
        report.neg_log_kl = report.kl > 0.0 ? -std::log(report.kl)
                                            : std::numeric_limits<double>::infinity();
        return report;
    }
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::vector<double> params_a(size_t(p), 0.0);
    std::vector<double> params_b(size_t(p), 0.0);
    std::vector<double> fidelities;
    fidelities.reserve(size_t(samples));
    for (long s = 0; s < samples; ++s) {
        for (double& v : params_a) v = angle(rng);
        for (double& v : params_b) v = angle(rng);
        fidelities.push_back(pqc::fidelity(tmpl, params_a, params_b));
    }
    ExpressibilityReport report = expressibility_from_fidelities(tmpl.width(), fidelities, bins);
    return report;
}

HaarRankReport haar_rank_conjecture_check(int width, int n, int trials, std::mt19937_64& rng) {
    if (n < 1 || trials < 1) {
        throw ValidationError("haar_rank_conjecture_check requires N >= 1 and trials >= 1");
    }
    HaarRankReport report;
    report.width = width;
    report.n = n;
    report.bound = rank_bound(n, width);
    report.ranks.reserve(size_t(trials));
    int saturated = 0;
    for (int t = 0; t < trials; ++t) {
        std::vector<pqc::StateVector> states;
        states.reserve(size_t(n));
        for (int i = 0; i < n; ++i) {
            states.push_back(pqc::haar_state(width, rng));
        }
        Eigen::MatrixXd k(n, n);
        for (int l = 0; l < n; ++l) {
            k(l, l) = 1.0;
            for (int m = 0; m < l; ++m) {
                const double f = std::norm(states[size_t(l)].dot(states[size_t(m)]));
                k(l, m) = f;
                k(m, l) = f;
            }
        }
        const int r = numerical_rank(k);
        report.ranks.push_back(r);
        if (r == report.bound) {
            ++saturated;
        }
    }
    report.saturation_fraction = double(saturated) / double(trials);
    return report;
}

} // namespace qkext::analysis
