#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace mdmc {

using Index = std::int64_t;
using IndexPair = std::pair<Index, Index>;

/// Symmetric sparsity pattern over n nodes. Only the lower triangle is
/// stored ((i, j) with i >= j), compressed by column with rows ascending.
/// The diagonal is always present, so the first row of column j is j.
/// Queries reflect across the diagonal.
class SparsityPattern {
public:
    SparsityPattern() = default;

    /// Canonical pattern from an edge list: diagonal added, duplicates
    /// merged, symmetry closed. Throws InvalidArgument on out-of-range
    /// indices.
    static SparsityPattern build(Index n, std::span<const IndexPair> edges);
    static SparsityPattern build(Index n, const std::vector<IndexPair>& edges) {
        return build(n, std::span<const IndexPair>(edges));
    }
    static SparsityPattern diagonal(Index n) {
        return build(n, std::span<const IndexPair>{});
    }
    static SparsityPattern full(Index n);

    Index n() const { return n_; }
    Index nnz() const { return static_cast<Index>(rows_.size()); }
    Index offdiag_count() const { return nnz() - n_; }

    /// Stored rows of column j (ascending, first entry is the diagonal j).
    std::span<const Index> column(Index j) const {
        return {rows_.data() + colptr_[j], rows_.data() + colptr_[j + 1]};
    }
    /// Strictly-below-diagonal rows of column j.
    std::span<const Index> below(Index j) const {
        return {rows_.data() + colptr_[j] + 1, rows_.data() + colptr_[j + 1]};
    }
    Index column_start(Index j) const { return colptr_[j]; }

    bool contains(Index i, Index j) const { return entry_index(i, j) >= 0; }
    /// Index of entry (i, j) in storage order, or -1 if absent. The pair is
    /// canonicalized to the lower triangle first.
    Index entry_index(Index i, Index j) const;
    /// (row, col) of stored entry e, with row >= col.
    IndexPair entry(Index e) const { return {rows_[e], entry_col_[e]}; }
    Index entry_row(Index e) const { return rows_[e]; }
    Index entry_col(Index e) const { return entry_col_[e]; }

    bool operator==(const SparsityPattern& other) const {
        return n_ == other.n_ && colptr_ == other.colptr_ && rows_ == other.rows_;
    }

private:
    Index n_ = 0;
    std::vector<Index> colptr_;     // size n + 1
    std::vector<Index> rows_;       // concatenated columns
    std::vector<Index> entry_col_;  // column of each stored entry
};

/// True iff every entry of p is also in q. Requires equal n.
bool is_subpattern(const SparsityPattern& p, const SparsityPattern& q);

using PatternPtr = std::shared_ptr<const SparsityPattern>;

/// Real symmetric matrix with values attached to a shared SparsityPattern.
class SparseSymMatrix {
public:
    SparseSymMatrix() = default;
    explicit SparseSymMatrix(PatternPtr p)
        : pattern_(std::move(p)), values_(pattern_->nnz(), 0.0) {}
    SparseSymMatrix(PatternPtr p, std::vector<double> values);

    const SparsityPattern& pattern() const { return *pattern_; }
    const PatternPtr& pattern_ptr() const { return pattern_; }
    Index n() const { return pattern_ ? pattern_->n() : 0; }
    Index nnz() const { return pattern_ ? pattern_->nnz() : 0; }

    std::span<const double> values() const { return values_; }
    std::vector<double>& values() { return values_; }
    double value(Index e) const { return values_[e]; }

    /// Entry (i, j) with symmetric reflection; 0 when the pair is absent.
    double get(Index i, Index j) const {
        const Index e = pattern_->entry_index(i, j);
        return e >= 0 ? values_[e] : 0.0;
    }
    void set(Index i, Index j, double v);

    Eigen::MatrixXd dense() const;
    bool all_finite() const;

private:
    PatternPtr pattern_;
    std::vector<double> values_;
};

/// Projection P_P(M): keep entries of M on pattern P, drop the rest.
SparseSymMatrix project(const Eigen::MatrixXd& m, PatternPtr p);
SparseSymMatrix project(const SparseSymMatrix& m, PatternPtr p);

/// Matrix inner product A . B = tr(AB) = sum_ij A_ij B_ij, iterating the
/// entries of a; entries of b outside a's pattern must be zero for this to
/// equal the full inner product.
double sym_dot(const SparseSymMatrix& a, const SparseSymMatrix& b);

/// Centered n x N matrix of samples, column-major (one sample per column).
class SampleMatrix {
public:
    SampleMatrix() = default;
    /// data holds N samples of dimension n, column-major. When center is
    /// true (the default) the per-variable mean is subtracted.
    SampleMatrix(Index n, Index num_samples, std::vector<double> data, bool center = true);

    Index n() const { return n_; }
    Index samples() const { return num_samples_; }
    double at(Index var, Index sample) const { return data_[sample * n_ + var]; }
    std::span<const double> raw() const { return data_; }

private:
    Index n_ = 0;
    Index num_samples_ = 0;
    std::vector<double> data_;
};

/// Dense block of the sample covariance (1/N) X X^T over the half-open
/// ranges [row0, row1) x [col0, col1). Accumulation order over samples is
/// fixed, so a given entry's value does not depend on the block partition.
Eigen::MatrixXd sample_cov_block(const SampleMatrix& x, Index row0, Index row1,
                                 Index col0, Index col1);

}  // namespace mdmc
