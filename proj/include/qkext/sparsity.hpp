#pragma once

#include <Eigen/Dense>

#include <vector>

namespace qkext::sparsity {

/// Inclusive index range [start, end] of one diagonal block.
struct Block {
    int start = 0;
    int end = 0;

    int size() const { return end - start + 1; }
    bool operator==(const Block&) const = default;
};

/// An ordered chain of diagonal blocks covering {0..N-1}. Consecutive blocks
/// may overlap (or just touch); the known set S is the union of the blocks'
/// index squares. This is exactly the family of patterns whose graph is
/// chordal with a path clique tree, which the completion walk relies on.
class SparsityPattern {
public:
    SparsityPattern(int n, std::vector<Block> blocks);

    int size() const { return n_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    int block_count() const { return static_cast<int>(blocks_.size()); }

    /// Overlap u_b = end_b - start_{b+1} + 1 between blocks b and b+1.
    int overlap(int b) const;

    /// True iff (l, m) lies inside some block; symmetric in (l, m).
    bool contains(int l, int m) const;

    /// Share of known strictly-lower-triangle entries; 1.0 for N = 1.
    double sampling_fraction() const;

private:
    int n_ = 0;
    std::vector<Block> blocks_;
    std::vector<int> cover_; // cover_[i] = max end over blocks starting at or before i
};

/// Pattern with blocks [0, N-1] and [N-u, N+n-1] over an (N+n)-sized matrix:
/// an existing N-point kernel extended by n new points with u re-sent rows.
SparsityPattern two_block_pattern(int n_old, int n_new, int overlap);

/// Pattern whose known set is {(l, m) : |l - m| <= bandwidth}: N - bandwidth
/// blocks of size bandwidth+1 stepping down the diagonal.
SparsityPattern band_pattern(int n, int bandwidth);

bool membership(const SparsityPattern& pattern, int l, int m);

/// Supernodes in walk order, bottom-right block first: the first entry is all
/// rows of the last block, each later entry is the rows a block adds over its
/// successor. Blocks swallowed by their successor contribute nothing and are
/// omitted. The returned sets partition {0..N-1}.
std::vector<std::vector<int>> supernodes(const SparsityPattern& pattern);

double sampling_fraction(const SparsityPattern& pattern);

/// A kernel matrix restricted to a pattern: known entries are stored in a
/// zero-filled dense matrix (the K' of the completion problem).
class SparseKernelView {
public:
    /// Subsamples a full matrix at the pattern's known entries.
    SparseKernelView(SparsityPattern pattern, const Eigen::MatrixXd& full);

    /// Rebuilds a view from explicit (l, m, value) coordinates, l >= m.
    /// Every known entry must be supplied exactly once.
    static SparseKernelView from_entries(
        SparsityPattern pattern, const std::vector<std::tuple<int, int, double>>& entries);

    const SparsityPattern& pattern() const { return pattern_; }

    /// Known entries at their positions, zeros elsewhere.
    const Eigen::MatrixXd& zero_filled() const { return values_; }

    /// Value at a known position; ValidationError off the pattern.
    double at(int l, int m) const;

    /// The dense submatrix of one block.
    Eigen::MatrixXd block_values(int b) const;

    /// Overwrites the entries of one block (used by per-block repair).
    void set_block_values(int b, const Eigen::MatrixXd& values);

private:
    explicit SparseKernelView(SparsityPattern pattern);

    SparsityPattern pattern_;
    Eigen::MatrixXd values_;
};

} // namespace qkext::sparsity
