#include "oracles.hpp"

#include "qkext/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>

namespace oracles {

using qkext::pqc::StateVector;

Eigen::MatrixXd gram_matrix(const qkext::pqc::CircuitTemplate& tmpl,
                            const Eigen::MatrixXd& points) {
    const Eigen::Index n = points.rows();
    std::vector<StateVector> states;
    states.reserve(size_t(n));
    for (Eigen::Index l = 0; l < n; ++l) {
        const Eigen::VectorXd row = points.row(l).transpose();
        states.push_back(
            qkext::pqc::simulate(tmpl, std::span<const double>(row.data(), size_t(row.size()))));
    }
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index l = 0; l < n; ++l) {
        for (Eigen::Index m = 0; m < n; ++m) {
            k(l, m) = std::norm(states[size_t(l)].dot(states[size_t(m)]));
        }
    }
    return k;
}

Eigen::Vector3d bloch_vector(const StateVector& psi) {
    const std::complex<double> a0 = psi[0];
    const std::complex<double> a1 = psi[1];
    const std::complex<double> cross = std::conj(a0) * a1;
    return {2.0 * cross.real(), 2.0 * cross.imag(), std::norm(a0) - std::norm(a1)};
}

Eigen::MatrixXd bloch_gram(const std::vector<StateVector>& states) {
    const Eigen::Index n = Eigen::Index(states.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index l = 0; l < n; ++l) {
        const Eigen::Vector3d bl = bloch_vector(states[size_t(l)]);
        for (Eigen::Index m = 0; m < n; ++m) {
            const Eigen::Vector3d bm = bloch_vector(states[size_t(m)]);
            k(l, m) = 0.5 * (1.0 + bl.dot(bm));
        }
    }
    return k;
}

Eigen::MatrixXd max_det_projected_gradient(const qkext::sparsity::SparseKernelView& view,
                                           const Eigen::MatrixXd& feasible_start,
                                           double grad_tol, int max_iter) {
    const qkext::sparsity::SparsityPattern& pattern = view.pattern();
    const int n = pattern.size();
    std::vector<std::pair<int, int>> unknown;
    for (int l = 0; l < n; ++l) {
        for (int m = 0; m <= l; ++m) {
            if (!pattern.contains(l, m)) {
                unknown.emplace_back(l, m);
            }
        }
    }
    Eigen::MatrixXd x = feasible_start;
    if (unknown.empty()) {
        return x;
    }

    auto log_det = [](const Eigen::MatrixXd& m) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
        if (eig.eigenvalues().minCoeff() <= 0.0) {
            return -std::numeric_limits<double>::infinity();
        }
        return eig.eigenvalues().array().log().sum();
    };

    double step = 1.0;
    double fx = log_det(x);
    if (!std::isfinite(fx)) {
        throw qkext::ValidationError("projected-gradient oracle needs a PD starting point");
    }
    for (int iter = 0; iter < max_iter; ++iter) {
        const Eigen::MatrixXd inv = x.inverse();
        // Gradient of log det restricted to the free (unknown) entries.
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
        double gmax = 0.0;
        for (const auto& [l, m] : unknown) {
            g(l, m) = inv(l, m);
            g(m, l) = inv(m, l);
            gmax = std::max(gmax, std::abs(inv(l, m)));
        }
        if (gmax <= grad_tol * std::max(1.0, inv.cwiseAbs().maxCoeff())) {
            return x;
        }
        const double g2 = g.squaredNorm();
        bool moved = false;
        while (step > 1e-18) {
            const Eigen::MatrixXd cand = x + step * g;
            const double fc = log_det(cand);
            if (fc >= fx + 0.25 * step * g2) { // Armijo with curvature slack
                x = cand;
                fx = fc;
                step *= 2.0;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) {
            return x; // step collapsed: numerically at the optimum
        }
    }
    return x;
}

namespace {

// Grows induced (chordless) paths from a root; a vertex adjacent to the root
// closes a cycle whose only extra edge is the closing one, so any closure at
// total length >= 4 is a chordless cycle.
bool chordless_dfs(const std::vector<std::vector<bool>>& adj, std::vector<int>& path,
                   std::vector<bool>& in_path) {
    const int n = int(adj.size());
    const int root = path.front();
    const int last = path.back();
    for (int next = 0; next < n; ++next) {
        if (in_path[size_t(next)] || !adj[size_t(last)][size_t(next)]) {
            continue;
        }
        if (path.size() >= 2) {
            bool chord_to_inner = false;
            for (size_t i = 1; i + 1 < path.size(); ++i) {
                if (adj[size_t(path[i])][size_t(next)]) {
                    chord_to_inner = true;
                    break;
                }
            }
            if (chord_to_inner) {
                continue;
            }
            if (adj[size_t(next)][size_t(root)]) {
                if (path.size() + 1 >= 4) {
                    return true; // root..last,next,root with no chords
                }
                continue; // triangle: cannot extend past a root neighbour
            }
        }
        path.push_back(next);
        in_path[size_t(next)] = true;
        if (chordless_dfs(adj, path, in_path)) {
            return true;
        }
        in_path[size_t(next)] = false;
        path.pop_back();
    }
    return false;
}

} // namespace

bool has_chordless_cycle(const std::vector<std::vector<bool>>& adjacency) {
    const int n = int(adjacency.size());
    for (int root = 0; root < n; ++root) {
        std::vector<int> path{root};
        std::vector<bool> in_path(size_t(n), false);
        in_path[size_t(root)] = true;
        if (chordless_dfs(adjacency, path, in_path)) {
            return true;
        }
    }
    return false;
}

bool has_chordless_cycle(const qkext::sparsity::SparsityPattern& pattern) {
    const int n = pattern.size();
    std::vector<std::vector<bool>> adj(size_t(n), std::vector<bool>(size_t(n), false));
    for (int l = 0; l < n; ++l) {
        for (int m = 0; m < n; ++m) {
            adj[size_t(l)][size_t(m)] = l != m && pattern.contains(l, m);
        }
    }
    return has_chordless_cycle(adj);
}

qkext::sparsity::SparsityPattern random_pattern(int n, std::mt19937_64& rng) {
    std::vector<qkext::sparsity::Block> blocks;
    int start = 0;
    int end = std::uniform_int_distribution<int>(0, n - 1)(rng);
    blocks.push_back({start, end});
    while (end < n - 1) {
        start = std::uniform_int_distribution<int>(start + 1, end + 1)(rng);
        end = std::uniform_int_distribution<int>(end + 1, n - 1)(rng);
        blocks.push_back({start, end});
    }
    return qkext::sparsity::SparsityPattern(n, std::move(blocks));
}

Eigen::MatrixXd random_correlation(int n, std::mt19937_64& rng, double eig_floor) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            a(i, j) = gauss(rng);
        }
    }
    Eigen::MatrixXd g = a * a.transpose() / double(n);
    g += eig_floor * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd s = g.diagonal().array().rsqrt();
    Eigen::MatrixXd c = s.asDiagonal() * g * s.asDiagonal();
    c = 0.5 * (c + c.transpose());
    c.diagonal().setOnes();
    return c;
}

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = double(samples.size());
    double d = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - double(i) / n));
        d = std::max(d, std::abs(double(i + 1) / n - f));
    }
    return d;
}

double median(std::vector<double> values) {
    if (values.empty()) {
        throw qkext::ValidationError("median of an empty sample");
    }
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

} // namespace oracles
