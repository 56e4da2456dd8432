#include "qkext/sparsity.hpp"

#include "qkext/errors.hpp"

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>

namespace qkext::sparsity {

SparsityPattern::SparsityPattern(int n, std::vector<Block> blocks)
    : n_(n), blocks_(std::move(blocks)) {
    if (n_ < 1) {
        throw ValidationError("pattern size must be >= 1");
    }
    if (blocks_.empty()) {
        throw ValidationError("pattern needs at least one block");
    }
    for (const Block& b : blocks_) {
        if (b.start < 0 || b.start > b.end || b.end >= n_) {
            throw ValidationError("block [" + std::to_string(b.start) + ", " +
                                  std::to_string(b.end) + "] out of range for N = " +
                                  std::to_string(n_));
        }
    }
    for (size_t i = 0; i + 1 < blocks_.size(); ++i) {
        if (blocks_[i + 1].start < blocks_[i].start) {
            throw ValidationError("blocks must be sorted by start index");
        }
        if (blocks_[i + 1].end < blocks_[i].end) {
            // A block nested strictly inside its predecessor adds no entries
            // and breaks the path clique tree the completion walk assumes.
            throw ValidationError("block " + std::to_string(i + 1) +
                                  " is nested inside its predecessor");
        }
        if (blocks_[i + 1].start > blocks_[i].end + 1) {
            throw ValidationError("gap between blocks " + std::to_string(i) + " and " +
                                  std::to_string(i + 1) + ": diagonal not covered");
        }
    }
    if (blocks_.front().start != 0) {
        throw ValidationError("first block must start at index 0");
    }
    if (blocks_.back().end != n_ - 1) {
        throw ValidationError("last block must end at index N-1");
    }
    cover_.assign(size_t(n_), 0);
    int best = -1;
    size_t next = 0;
    for (int i = 0; i < n_; ++i) {
        while (next < blocks_.size() && blocks_[next].start <= i) {
            best = std::max(best, blocks_[next].end);
            ++next;
        }
        cover_[size_t(i)] = best;
    }
}

int SparsityPattern::overlap(int b) const {
    if (b < 0 || b + 1 >= block_count()) {
        throw ValidationError("overlap index out of range");
    }
    return blocks_[size_t(b)].end - blocks_[size_t(b) + 1].start + 1;
}

bool SparsityPattern::contains(int l, int m) const {
    if (l < 0 || l >= n_ || m < 0 || m >= n_) {
        throw ValidationError("pattern membership index out of range");
    }
    const int lo = std::min(l, m);
    const int hi = std::max(l, m);
    // The widest block starting at or before lo decides membership.
    return cover_[size_t(lo)] >= hi;
}

double SparsityPattern::sampling_fraction() const {
    if (n_ == 1) {
        return 1.0;
    }
    long long known = 0;
    for (int m = 0; m < n_; ++m) {
        known += cover_[size_t(m)] - m; // strictly-below-diagonal entries in column m
    }
    const long long total = (long long)(n_) * (n_ - 1) / 2;
    return double(known) / double(total);
}

SparsityPattern two_block_pattern(int n_old, int n_new, int overlap) {
    if (n_old < 1 || n_new < 1) {
        throw ValidationError("two_block_pattern requires N >= 1 and n >= 1");
    }
    if (overlap < 0 || overlap > n_old) {
        throw ValidationError("overlap must lie in [0, " + std::to_string(n_old) + "]");
    }
    return SparsityPattern(n_old + n_new,
                           {{0, n_old - 1}, {n_old - overlap, n_old + n_new - 1}});
}

SparsityPattern band_pattern(int n, int bandwidth) {
    if (n < 1) {
        throw ValidationError("band_pattern requires N >= 1");
    }
    if (bandwidth < 0 || bandwidth > n - 1) {
        throw ValidationError("bandwidth must lie in [0, N-1]");
    }
    std::vector<Block> blocks;
    blocks.reserve(size_t(n - bandwidth));
    for (int b = 0; b + bandwidth < n; ++b) {
        blocks.push_back({b, b + bandwidth});
    }
    return SparsityPattern(n, std::move(blocks));
}

bool membership(const SparsityPattern& pattern, int l, int m) {
    return pattern.contains(l, m);
}

std::vector<std::vector<int>> supernodes(const SparsityPattern& pattern) {
    const auto& blocks = pattern.blocks();
    std::vector<std::vector<int>> result;
    // Bottom-right block contributes all of its rows; each block above adds
    // only the rows below its successor's start.
    for (int k = pattern.block_count() - 1; k >= 0; --k) {
        const int lo = blocks[size_t(k)].start;
        const int hi = (k + 1 < pattern.block_count()) ? blocks[size_t(k) + 1].start - 1
                                                       : blocks[size_t(k)].end;
        if (lo > hi) {
            continue; // swallowed by the successor block
        }
        std::vector<int> rows(size_t(hi - lo + 1));
        std::iota(rows.begin(), rows.end(), lo);
        result.push_back(std::move(rows));
    }
    return result;
}

double sampling_fraction(const SparsityPattern& pattern) {
    return pattern.sampling_fraction();
}

SparseKernelView::SparseKernelView(SparsityPattern pattern)
    : pattern_(std::move(pattern)), values_(Eigen::MatrixXd::Zero(pattern_.size(), pattern_.size())) {}

SparseKernelView::SparseKernelView(SparsityPattern pattern, const Eigen::MatrixXd& full)
    : SparseKernelView(std::move(pattern)) {
    const int n = pattern_.size();
    if (full.rows() != n || full.cols() != n) {
        throw ValidationError("matrix size does not match pattern size");
    }
    for (const Block& b : pattern_.blocks()) {
        values_.block(b.start, b.start, b.size(), b.size()) =
            full.block(b.start, b.start, b.size(), b.size());
    }
}

SparseKernelView SparseKernelView::from_entries(
    SparsityPattern pattern, const std::vector<std::tuple<int, int, double>>& entries) {
    SparseKernelView view(std::move(pattern));
    const int n = view.pattern_.size();
    Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(n, n);
    for (const auto& [l, m, v] : entries) {
        if (l < 0 || l >= n || m < 0 || m >= n || l < m) {
            throw ValidationError("view entry indices must satisfy 0 <= m <= l < N");
        }
        if (!view.pattern_.contains(l, m)) {
            throw ValidationError("view entry (" + std::to_string(l) + ", " + std::to_string(m) +
                                  ") lies outside the pattern");
        }
        if (seen(l, m)) {
            throw ValidationError("duplicate view entry (" + std::to_string(l) + ", " +
                                  std::to_string(m) + ")");
        }
        seen(l, m) = 1;
        view.values_(l, m) = v;
        view.values_(m, l) = v;
    }
    for (int l = 0; l < n; ++l) {
        for (int m = 0; m <= l; ++m) {
            if (view.pattern_.contains(l, m) && !seen(l, m)) {
                throw ValidationError("view is missing known entry (" + std::to_string(l) +
                                      ", " + std::to_string(m) + ")");
            }
        }
    }
    return view;
}

double SparseKernelView::at(int l, int m) const {
    if (!pattern_.contains(l, m)) {
        throw ValidationError("entry (" + std::to_string(l) + ", " + std::to_string(m) +
                              ") is not in the pattern");
    }
    return values_(l, m);
}

Eigen::MatrixXd SparseKernelView::block_values(int b) const {
    if (b < 0 || b >= pattern_.block_count()) {
        throw ValidationError("block index out of range");
    }
    const Block& blk = pattern_.blocks()[size_t(b)];
    return values_.block(blk.start, blk.start, blk.size(), blk.size());
}

void SparseKernelView::set_block_values(int b, const Eigen::MatrixXd& values) {
    if (b < 0 || b >= pattern_.block_count()) {
        throw ValidationError("block index out of range");
    }
    const Block& blk = pattern_.blocks()[size_t(b)];
    if (values.rows() != blk.size() || values.cols() != blk.size()) {
        throw ValidationError("block value size mismatch");
    }
    values_.block(blk.start, blk.start, blk.size(), blk.size()) = values;
}

} // namespace qkext::sparsity
