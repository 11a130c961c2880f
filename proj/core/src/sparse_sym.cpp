#include "mdmc/sparse_sym.hpp"

#include "mdmc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mdmc {

SparsityPattern SparsityPattern::build(Index n, std::span<const IndexPair> edges) {
    if (n < 0) throw InvalidArgument("pattern size must be nonnegative");
    std::vector<IndexPair> lower;
    lower.reserve(edges.size() + static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) lower.emplace_back(i, i);
    for (const auto& [a, b] : edges) {
        if (a < 0 || a >= n || b < 0 || b >= n)
            throw InvalidArgument("edge index out of range: (" + std::to_string(a) +
                                  ", " + std::to_string(b) + ") with n = " + std::to_string(n));
        lower.emplace_back(std::max(a, b), std::min(a, b));
    }
    // sort by (col, row), dedupe
    std::sort(lower.begin(), lower.end(), [](const IndexPair& x, const IndexPair& y) {
        return x.second != y.second ? x.second < y.second : x.first < y.first;
    });
    lower.erase(std::unique(lower.begin(), lower.end()), lower.end());

    SparsityPattern p;
    p.n_ = n;
    p.colptr_.assign(static_cast<std::size_t>(n) + 1, 0);
    p.rows_.reserve(lower.size());
    p.entry_col_.reserve(lower.size());
    for (const auto& [r, c] : lower) {
        ++p.colptr_[c + 1];
        p.rows_.push_back(r);
        p.entry_col_.push_back(c);
    }
    std::partial_sum(p.colptr_.begin(), p.colptr_.end(), p.colptr_.begin());
    return p;
}

SparsityPattern SparsityPattern::full(Index n) {
    std::vector<IndexPair> edges;
    edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (Index j = 0; j < n; ++j)
        for (Index i = j + 1; i < n; ++i) edges.emplace_back(i, j);
    return build(n, edges);
}

Index SparsityPattern::entry_index(Index i, Index j) const {
    if (i < 0 || i >= n_ || j < 0 || j >= n_) return -1;
    if (i < j) std::swap(i, j);
    const auto col = column(j);
    const auto it = std::lower_bound(col.begin(), col.end(), i);
    if (it == col.end() || *it != i) return -1;
    return colptr_[j] + static_cast<Index>(it - col.begin());
}

bool is_subpattern(const SparsityPattern& p, const SparsityPattern& q) {
    if (p.n() != q.n())
        throw InvalidArgument("is_subpattern: patterns have different sizes");
    for (Index j = 0; j < p.n(); ++j) {
        const auto pc = p.column(j);
        const auto qc = q.column(j);
        // both ascending: march through q once
        std::size_t t = 0;
        for (const Index r : pc) {
            while (t < qc.size() && qc[t] < r) ++t;
            if (t == qc.size() || qc[t] != r) return false;
        }
    }
    return true;
}

SparseSymMatrix::SparseSymMatrix(PatternPtr p, std::vector<double> values)
    : pattern_(std::move(p)), values_(std::move(values)) {
    if (static_cast<Index>(values_.size()) != pattern_->nnz())
        throw InvalidArgument("value array length does not match pattern nnz");
}

void SparseSymMatrix::set(Index i, Index j, double v) {
    const Index e = pattern_->entry_index(i, j);
    if (e < 0) throw InvalidArgument("set: entry not in pattern");
    values_[e] = v;
}

Eigen::MatrixXd SparseSymMatrix::dense() const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n(), n());
    for (Index e = 0; e < nnz(); ++e) {
        const auto [i, j] = pattern_->entry(e);
        out(i, j) = values_[e];
        out(j, i) = values_[e];
    }
    return out;
}

bool SparseSymMatrix::all_finite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return std::isfinite(v); });
}

SparseSymMatrix project(const Eigen::MatrixXd& m, PatternPtr p) {
    if (m.rows() != p->n() || m.cols() != p->n())
        throw InvalidArgument("project: dimension mismatch");
    SparseSymMatrix out(std::move(p));
    const auto& pat = out.pattern();
    for (Index e = 0; e < pat.nnz(); ++e) {
        const auto [i, j] = pat.entry(e);
        out.values()[e] = m(i, j);
    }
    return out;
}

SparseSymMatrix project(const SparseSymMatrix& m, PatternPtr p) {
    if (m.n() != p->n()) throw InvalidArgument("project: dimension mismatch");
    SparseSymMatrix out(std::move(p));
    const auto& pat = out.pattern();
    for (Index e = 0; e < pat.nnz(); ++e) {
        const auto [i, j] = pat.entry(e);
        out.values()[e] = m.get(i, j);
    }
    return out;
}

double sym_dot(const SparseSymMatrix& a, const SparseSymMatrix& b) {
    if (a.n() != b.n()) throw InvalidArgument("sym_dot: dimension mismatch");
    const auto& pat = a.pattern();
    double acc = 0.0;
    if (&pat == &b.pattern() || pat == b.pattern()) {
        for (Index e = 0; e < pat.nnz(); ++e) {
            const double w = pat.entry_row(e) == pat.entry_col(e) ? 1.0 : 2.0;
            acc += w * a.value(e) * b.value(e);
        }
    } else {
        for (Index e = 0; e < pat.nnz(); ++e) {
            const auto [i, j] = pat.entry(e);
            const double w = i == j ? 1.0 : 2.0;
            acc += w * a.value(e) * b.get(i, j);
        }
    }
    return acc;
}

SampleMatrix::SampleMatrix(Index n, Index num_samples, std::vector<double> data, bool center)
    : n_(n), num_samples_(num_samples), data_(std::move(data)) {
    if (n < 0 || num_samples <= 0)
        throw InvalidArgument("sample matrix needs n >= 0 and at least one sample");
    if (static_cast<Index>(data_.size()) != n * num_samples)
        throw InvalidArgument("sample data length does not match n * N");
    if (center) {
        for (Index v = 0; v < n_; ++v) {
            double mean = 0.0;
            for (Index s = 0; s < num_samples_; ++s) mean += data_[s * n_ + v];
            mean /= static_cast<double>(num_samples_);
            for (Index s = 0; s < num_samples_; ++s) data_[s * n_ + v] -= mean;
        }
    }
}

Eigen::MatrixXd sample_cov_block(const SampleMatrix& x, Index row0, Index row1,
                                 Index col0, Index col1) {
    if (row0 < 0 || col0 < 0 || row1 > x.n() || col1 > x.n())
        throw InvalidArgument("sample_cov_block: range outside [0, n)");
    if (row0 >= row1 || col0 >= col1)
        throw InvalidArgument("sample_cov_block: empty range");
    const Index nr = row1 - row0;
    const Index nc = col1 - col0;
    const Index ns = x.samples();
    Eigen::MatrixXd out(nr, nc);
    // per-entry sequential accumulation over samples: the value of a given
    // (i, j) is independent of the block partition
    for (Index j = 0; j < nc; ++j) {
        for (Index i = 0; i < nr; ++i) {
            double acc = 0.0;
            const Index gi = row0 + i;
            const Index gj = col0 + j;
            for (Index s = 0; s < ns; ++s) acc += x.at(gi, s) * x.at(gj, s);
            out(i, j) = acc / static_cast<double>(ns);
        }
    }
    return out;
}

}  // namespace mdmc
