#include "oracles.hpp"
#include "qkext/analysis.hpp"
#include "qkext/errors.hpp"
#include "qkext/pqc.hpp"
#include "qkext/rng.hpp"
#include "qkext/sparsity.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

using Catch::Approx;
using qkext::NumericalError;
using qkext::ValidationError;
using qkext::analysis::ErrorReport;
using qkext::analysis::ExpressibilityReport;
using qkext::sparsity::SparsityPattern;

TEST_CASE("completion error of the truth itself is zero", "[analysis]") {
    auto rng = qkext::make_rng(8);
    const Eigen::MatrixXd k = oracles::random_correlation(6, rng);
    const SparsityPattern p = qkext::sparsity::two_block_pattern(4, 2, 1);
    const ErrorReport report = qkext::analysis::completion_error(k, k, p);
    CHECK(report.error == 0.0);
    CHECK_FALSE(report.unknown_set_empty);
    CHECK(report.unknown_count > 0);
}

TEST_CASE("zero fill scores exactly one", "[analysis]") {
    auto rng = qkext::make_rng(9);
    const Eigen::MatrixXd k = oracles::random_correlation(6, rng);
    const SparsityPattern p = qkext::sparsity::two_block_pattern(4, 2, 0);
    const qkext::sparsity::SparseKernelView view(p, k);
    const ErrorReport report = qkext::analysis::completion_error(k, view.zero_filled(), p);
    CHECK(report.error == 1.0); // num and den accumulate identically
}

TEST_CASE("3x3 single-entry example", "[analysis]") {
    Eigen::MatrixXd truth(3, 3);
    truth << 1.0, 0.5, 0.3, 0.5, 1.0, 0.5, 0.3, 0.5, 1.0;
    Eigen::MatrixXd estimate = truth;
    estimate(0, 2) = estimate(2, 0) = 0.25;
    const ErrorReport report =
        qkext::analysis::completion_error(truth, estimate, qkext::sparsity::band_pattern(3, 1));
    CHECK(report.unknown_count == 2); // both symmetric positions
    CHECK(report.frobenius_num == Approx(0.05 * std::sqrt(2.0)).margin(1e-15));
    CHECK(report.frobenius_den == Approx(0.3 * std::sqrt(2.0)).margin(1e-15));
    CHECK(report.error == Approx(0.05 / 0.3).margin(1e-12));
}

TEST_CASE("empty unknown set is flagged", "[analysis]") {
    auto rng = qkext::make_rng(10);
    const Eigen::MatrixXd k = oracles::random_correlation(4, rng);
    const ErrorReport report =
        qkext::analysis::completion_error(k, k, SparsityPattern(4, {{0, 3}}));
    CHECK(report.unknown_set_empty);
    CHECK(report.error == 0.0);
    CHECK(report.unknown_count == 0);
}

TEST_CASE("degenerate denominator raises", "[analysis]") {
    Eigen::MatrixXd truth = Eigen::MatrixXd::Identity(4, 4); // zero off-pattern
    Eigen::MatrixXd estimate = truth;
    estimate(3, 0) = estimate(0, 3) = 0.2;
    const SparsityPattern p = qkext::sparsity::two_block_pattern(2, 2, 0);
    CHECK_THROWS_AS(qkext::analysis::completion_error(truth, estimate, p), NumericalError);
}

TEST_CASE("completion error is scale-consistent", "[analysis]") {
    auto rng = qkext::make_rng(11);
    const Eigen::MatrixXd k = oracles::random_correlation(5, rng);
    const SparsityPattern p = qkext::sparsity::band_pattern(5, 2);
    Eigen::MatrixXd base = k;
    Eigen::MatrixXd scaled = k;
    for (int l = 0; l < 5; ++l) {
        for (int m = 0; m < 5; ++m) {
            if (!p.contains(l, m)) {
                base(l, m) = k(l, m) + 0.01;
                scaled(l, m) = k(l, m) + 0.03; // residual scaled by 3
            }
        }
    }
    const ErrorReport a = qkext::analysis::completion_error(k, base, p);
    const ErrorReport b = qkext::analysis::completion_error(k, scaled, p);
    CHECK(b.frobenius_num == Approx(3.0 * a.frobenius_num).epsilon(1e-12));
    CHECK(b.frobenius_den == a.frobenius_den);
    CHECK(b.error == Approx(3.0 * a.error).epsilon(1e-12));
}

TEST_CASE("completion error validates dimensions", "[analysis]") {
    const SparsityPattern p = qkext::sparsity::band_pattern(4, 1);
    CHECK_THROWS_AS(qkext::analysis::completion_error(Eigen::MatrixXd::Identity(4, 4),
                                                      Eigen::MatrixXd::Identity(3, 3), p),
                    ValidationError);
    CHECK_THROWS_AS(qkext::analysis::completion_error(Eigen::MatrixXd::Identity(5, 5),
                                                      Eigen::MatrixXd::Identity(5, 5), p),
                    ValidationError);
}

TEST_CASE("numerical rank basics", "[analysis]") {
    CHECK(qkext::analysis::numerical_rank(Eigen::MatrixXd::Identity(7, 7)) == 7);

    Eigen::VectorXd v(5);
    v << 1.0, -2.0, 0.5, 3.0, 0.0;
    CHECK(qkext::analysis::numerical_rank(v * v.transpose()) == 1);

    CHECK(qkext::analysis::numerical_rank(Eigen::MatrixXd::Zero(4, 4)) == 0);

    // A generous tolerance hides the small eigenvalue.
    Eigen::MatrixXd two = Eigen::MatrixXd::Zero(3, 3);
    two(0, 0) = 1.0;
    two(1, 1) = 1e-6;
    CHECK(qkext::analysis::numerical_rank(two) == 2);
    CHECK(qkext::analysis::numerical_rank(two, 1e-3) == 1);

    CHECK_THROWS_AS(qkext::analysis::numerical_rank(Eigen::MatrixXd::Ones(2, 3)),
                    ValidationError);
    Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(3, 3);
    asym(0, 1) = 0.5;
    CHECK_THROWS_AS(qkext::analysis::numerical_rank(asym), ValidationError);
}

TEST_CASE("single-qubit Haar kernels have rank four", "[analysis]") {
    auto rng = qkext::make_rng(12);
    std::vector<qkext::pqc::StateVector> states;
    for (int i = 0; i < 10; ++i) {
        states.push_back(qkext::pqc::haar_state(1, rng));
    }
    Eigen::MatrixXd k(10, 10);
    for (int l = 0; l < 10; ++l) {
        for (int m = 0; m < 10; ++m) {
            k(l, m) = std::norm(states[size_t(l)].dot(states[size_t(m)]));
        }
    }
    // The Bloch-sphere identity gives the same matrix and explains the rank.
    const Eigen::MatrixXd bloch = oracles::bloch_gram(states);
    CHECK((k - bloch).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(qkext::analysis::numerical_rank(k) == 4);
    CHECK(qkext::analysis::numerical_rank(bloch) == 4);
}

TEST_CASE("rank bound", "[analysis]") {
    CHECK(qkext::analysis::rank_bound(500, 2) == 16);
    CHECK(qkext::analysis::rank_bound(3, 5) == 3);
    CHECK(qkext::analysis::rank_bound(1000, 4) == 256);
    CHECK(qkext::analysis::rank_bound(12, 40) == 12); // 4^40 overflows; N wins
    CHECK_THROWS_AS(qkext::analysis::rank_bound(0, 2), ValidationError);
    CHECK_THROWS_AS(qkext::analysis::rank_bound(5, 0), ValidationError);
}

TEST_CASE("overlap condition", "[analysis]") {
    const auto at = qkext::analysis::overlap_condition(16, 16);
    CHECK(at.satisfied);
    CHECK(at.ratio == 1.0);

    const auto below = qkext::analysis::overlap_condition(4, 16);
    CHECK_FALSE(below.satisfied);
    CHECK(below.ratio == 0.25);

    const auto above = qkext::analysis::overlap_condition(450, 16);
    CHECK(above.satisfied);
    CHECK(above.ratio == Approx(28.125));

    CHECK_THROWS_AS(qkext::analysis::overlap_condition(4, 0), ValidationError);
    CHECK_THROWS_AS(qkext::analysis::overlap_condition(-1, 4), ValidationError);
}

TEST_CASE("haar bin masses", "[analysis]") {
    const std::vector<double> w1 = qkext::analysis::haar_bin_masses(1, 75);
    REQUIRE(w1.size() == 75);
    for (double mass : w1) {
        CHECK(mass == Approx(1.0 / 75.0).margin(1e-12));
    }
    for (int w = 1; w <= 3; ++w) {
        const std::vector<double> masses = qkext::analysis::haar_bin_masses(w, 60);
        const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
        CHECK(total == Approx(1.0).margin(1e-12));
        for (double mass : masses) {
            CHECK(mass >= 0.0);
        }
    }
    // Mass decreases toward F = 1 for w >= 2 (density is decreasing).
    const std::vector<double> w2 = qkext::analysis::haar_bin_masses(2, 20);
    for (size_t b = 1; b < w2.size(); ++b) {
        CHECK(w2[b] <= w2[b - 1]);
    }
    CHECK_THROWS_AS(qkext::analysis::haar_bin_masses(0, 10), ValidationError);
    CHECK_THROWS_AS(qkext::analysis::haar_bin_masses(1, 0), ValidationError);
}

TEST_CASE("histogram self-test against exact Haar sampling", "[analysis]") {
    // Inverse-CDF sampling is an independent route to the Haar fidelity law:
    // F = 1 - (1-u)^(1/(2^w-1)).
    auto rng = qkext::make_rng(314);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int w = 1; w <= 2; ++w) {
        const double e = std::ldexp(1.0, w) - 1.0;
        std::vector<double> fidelities(10000);
        for (double& f : fidelities) {
            f = 1.0 - std::pow(1.0 - unit(rng), 1.0 / e);
        }
        const ExpressibilityReport report =
            qkext::analysis::expressibility_from_fidelities(w, fidelities, 75);
        CHECK(report.kl >= 0.0);
        CHECK(report.kl < 0.01);
        CHECK(report.samples == 10000);
        CHECK(report.bins == 75);
        const double total = std::accumulate(report.empirical_mass.begin(),
                                             report.empirical_mass.end(), 0.0);
        CHECK(total == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("histogram edge cases", "[analysis]") {
    // F = 1 lands in the last bin, F = 0 in the first.
    const std::vector<double> ends = {0.0, 1.0};
    const ExpressibilityReport report =
        qkext::analysis::expressibility_from_fidelities(1, ends, 10);
    CHECK(report.empirical_mass.front() == 0.5);
    CHECK(report.empirical_mass.back() == 0.5);

    CHECK_THROWS_AS(qkext::analysis::expressibility_from_fidelities(1, {1.2}, 10),
                    ValidationError);
    CHECK_THROWS_AS(qkext::analysis::expressibility_from_fidelities(1, {-0.1}, 10),
                    ValidationError);
    CHECK_THROWS_AS(qkext::analysis::expressibility_from_fidelities(1, {}, 10),
                    ValidationError);
}

TEST_CASE("expressibility of a circuit ensemble", "[analysis]") {
    const auto tmpl = qkext::pqc::builtin_template("rx_rz", 1, 1);
    auto rng = qkext::make_rng(51);
    const ExpressibilityReport report = qkext::analysis::expressibility(tmpl, 2000, 30, rng);
    CHECK(report.width == 1);
    CHECK(report.samples == 2000);
    CHECK(report.bins == 30);
    CHECK_FALSE(report.degenerate);
    CHECK(report.kl >= 0.0);
    CHECK(std::isfinite(report.kl));
    if (report.kl > 0.0) {
        CHECK(report.neg_log_kl == Approx(-std::log(report.kl)));
    }

    // Same seed, same estimate.
    auto rng_b = qkext::make_rng(51);
    CHECK(qkext::analysis::expressibility(tmpl, 2000, 30, rng_b).kl == report.kl);

    CHECK_THROWS_AS(qkext::analysis::expressibility(tmpl, 999, 30, rng), ValidationError);
    CHECK_THROWS_AS(qkext::analysis::expressibility(tmpl, 2000, 9, rng), ValidationError);
}

TEST_CASE("parameterless circuits are degenerate point masses", "[analysis]") {
    const qkext::pqc::CircuitTemplate identity("id", 1, {}, 1);
    auto rng = qkext::make_rng(52);
    const ExpressibilityReport report =
        qkext::analysis::expressibility(identity, 1000, 75, rng);
    CHECK(report.degenerate);
    CHECK(report.empirical_mass.back() == 1.0);
    CHECK(report.kl == Approx(std::log(75.0)).margin(1e-12)); // uniform Haar bins at w=1
    CHECK(report.neg_log_kl == Approx(-std::log(std::log(75.0))));
}

TEST_CASE("haar rank conjecture check", "[analysis]") {
    auto rng = qkext::make_rng(53);
    const auto w1 = qkext::analysis::haar_rank_conjecture_check(1, 10, 10, rng);
    CHECK(w1.width == 1);
    CHECK(w1.n == 10);
    CHECK(w1.bound == 4);
    REQUIRE(w1.ranks.size() == 10);
    for (int rank : w1.ranks) {
        CHECK(rank == 4);
    }
    CHECK(w1.saturation_fraction == 1.0);

    const auto small = qkext::analysis::haar_rank_conjecture_check(1, 3, 2, rng);
    CHECK(small.bound == 3);
    for (int rank : small.ranks) {
        CHECK(rank == 3); // N branch: three generic pure states
    }

    CHECK_THROWS_AS(qkext::analysis::haar_rank_conjecture_check(1, 10, 0, rng),
                    ValidationError);
}
