#pragma once

#include "mdmc/chordal.hpp"
#include "mdmc/sparse_sym.hpp"

#include <memory>

namespace mdmc {

/// Numeric lower-triangular factor over the embedding pattern. For a factor
/// of X (positive definite on the embedding), X = L L^T with zero fill and
/// log_det() = log det X. Factors produced by complete_factor additionally
/// retain the dual-side source matrix for Hessian solves.
class ChordalFactor {
public:
    const CliqueTreePtr& tree() const { return tree_; }
    double log_det() const { return logdet_; }
    /// Factor values in the embedding's kernel layout.
    std::span<const double> factor_values() const { return lvals_; }
    bool has_source() const { return !svals_.empty(); }

private:
    friend ChordalFactor factor_primal(const SparseSymMatrix&, CliqueTreePtr);
    friend ChordalFactor complete_factor(const SparseSymMatrix&, CliqueTreePtr);
    friend SparseSymMatrix projected_inverse(const ChordalFactor&);
    friend SparseSymMatrix reconstruct(const ChordalFactor&);
    friend SparseSymMatrix hess_f_mvp(const ChordalFactor&, const SparseSymMatrix&);
    friend SparseSymMatrix hess_fstar_mvp(const ChordalFactor&, const SparseSymMatrix&);

    struct Cache;

    CliqueTreePtr tree_;
    std::vector<double> lvals_;
    std::vector<double> svals_;  // completion source, kernel layout (else empty)
    double logdet_ = 0.0;
    std::shared_ptr<Cache> cache_;
};

/// Sparse Cholesky of X on the embedding (zero fill by chordality). Throws
/// NotPositiveDefinite with the failing clique and column when X is not in
/// the interior of the sparse PSD cone.
ChordalFactor factor_primal(const SparseSymMatrix& x, CliqueTreePtr t);

/// P(X^{-1}): the dense inverse restricted to the embedding pattern,
/// computed by the clique-wise backward recursion on the factor.
SparseSymMatrix projected_inverse(const ChordalFactor& f);

/// Hessian action P(X^{-1} Y X^{-1}) on the pattern, evaluated by
/// differentiating the factorization and projected-inverse recursions along
/// Y; no dense intermediates are formed.
SparseSymMatrix hess_f_mvp(const ChordalFactor& f, const SparseSymMatrix& y);

/// Factor of the unique X on the embedding with P(X^{-1}) = S; equivalently
/// X^{-1} is the maximum-determinant completion of S. Throws NotCompletable
/// with the clique whose principal submatrix of S fails to be positive
/// definite.
ChordalFactor complete_factor(const SparseSymMatrix& s, CliqueTreePtr t);

/// X = P(L L^T) reassembled from a factor. For a completion factor this is
/// the negated gradient of the dual barrier: grad f*(S) = -X.
SparseSymMatrix reconstruct(const ChordalFactor& f);

struct FStarResult {
    double value;          // n + log det X
    ChordalFactor factor;  // completion factor of S
};

/// Dual barrier value at S (interior of the completable cone) together with
/// the completion factor backing its derivatives.
FStarResult f_star(const SparseSymMatrix& s, CliqueTreePtr t);

/// Inverse Hessian action: the Z on the pattern with
/// P(X^{-1} Z X^{-1}) = Y, via the linearized completion recursion (direct
/// clique solves, no iterative loop). f must come from complete_factor.
SparseSymMatrix hess_fstar_mvp(const ChordalFactor& f, const SparseSymMatrix& y);

struct CompletionOptions {
    double tol = 1e-12;       // on inverse entries off the mask, relative
    long max_sweeps = 100000;
    Index dense_limit = 400;
};

/// Test oracle: maximum-determinant completion of the entries of s on g by
/// cyclic coordinate ascent over the missing entries, each step zeroing the
/// matching inverse entry in closed form. Runs until the largest off-mask
/// inverse entry falls below tol relative to the largest inverse entry.
/// Independent of the clique-tree kernels above.
Eigen::MatrixXd dense_maxdet_completion(const Eigen::MatrixXd& s, const SparsityPattern& g,
                                        const CompletionOptions& opts = {});

}  // namespace mdmc
