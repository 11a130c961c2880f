#pragma once

#include "mdmc/sparse_sym.hpp"

#include <memory>

namespace mdmc {

/// Elimination ordering. perm[k] is the input-label vertex eliminated at
/// step k; iperm is its inverse.
struct Ordering {
    std::vector<Index> perm;
    std::vector<Index> iperm;

    static Ordering identity(Index n);
    static Ordering from_perm(std::vector<Index> perm);
    Index n() const { return static_cast<Index>(perm.size()); }
    bool valid() const;
};

/// Greedy minimum-degree ordering on the graph of the pattern (quotient
/// graph with element absorption, exact external degrees, ties broken by
/// smallest vertex label).
Ordering fill_reducing_order(const SparsityPattern& g);

/// Chordal embedding of a pattern: the fill pattern of symbolic elimination
/// under a given ordering. Holds both the embedding in input labels and the
/// column structures in elimination order that the numeric kernels use.
class ChordalEmbedding {
public:
    PatternPtr g;      // original pattern
    PatternPtr gt;     // embedding, input labels; g is a subpattern
    Ordering ordering;
    std::vector<Index> etree;                // parent of elimination position, -1 at roots
    std::vector<IndexPair> added_edges;      // gt minus g, input labels (i > j), sorted

    // structure in elimination order: strictly-below-diagonal rows per column
    std::vector<Index> colptr;  // size n + 1
    std::vector<Index> rows;    // ascending within each column

    // kernel value layout: per column [diagonal, belowrows...]; these map
    // kernel entries to gt-pattern entries and back
    std::vector<Index> kcolptr;        // size n + 1
    std::vector<Index> kentry_to_gt;   // kernel entry -> gt entry
    std::vector<Index> gt_to_kentry;   // gt entry -> kernel entry

    Index n() const { return ordering.n(); }
    Index m() const { return static_cast<Index>(added_edges.size()); }
    Index kernel_nnz() const { return static_cast<Index>(kentry_to_gt.size()); }

    std::span<const Index> below(Index col) const {
        return {rows.data() + colptr[col], rows.data() + colptr[col + 1]};
    }
    Index kdiag(Index col) const { return kcolptr[col]; }

    /// Values of a matrix on gt (or any subpattern of gt) rearranged into
    /// kernel layout; absent entries become zero.
    std::vector<double> to_kernel(const SparseSymMatrix& a) const;
    /// Kernel-layout values back to a matrix on gt.
    SparseSymMatrix from_kernel(std::span<const double> v) const;
};

using EmbeddingPtr = std::shared_ptr<const ChordalEmbedding>;

/// Symbolic elimination of g under ord. The embedding admits ord as a
/// perfect elimination ordering by construction.
ChordalEmbedding symbolic_embed(const SparsityPattern& g, const Ordering& ord);

/// Clique tree over the maximal cliques of the embedding. Columns are in
/// elimination order throughout; each clique is snode ++ sep, both
/// ascending, with every separator element greater than every snode column.
class CliqueTree {
public:
    struct Clique {
        std::vector<Index> snode;
        std::vector<Index> sep;
        Index parent = -1;  // clique id, -1 at roots
        Index size() const { return static_cast<Index>(snode.size() + sep.size()); }
    };

    EmbeddingPtr embedding;
    std::vector<Clique> cliques;
    std::vector<Index> postorder;  // clique ids, children before parents
    std::vector<Index> owner;      // column -> clique id owning it as snode member

    Index n() const { return embedding->n(); }
    Index max_clique_size() const;
};

using CliqueTreePtr = std::shared_ptr<const CliqueTree>;

/// Builds the clique tree; verifies zero-fill (perfect elimination) and the
/// running intersection property, throwing InvalidArgument on failure.
CliqueTree build_clique_tree(EmbeddingPtr e);

/// Coarsens the embedding by merging a child clique into its parent while
/// the number of explicit zeros added stays within fill_budget per merge.
/// Returns a new embedding over a denser chordal pattern (same ordering,
/// same original g, larger gt). fill_budget <= 0 returns a copy.
ChordalEmbedding amalgamate(const ChordalEmbedding& e, long fill_budget);

/// Orthonormal basis over the added edges of the embedding: A maps
/// y in R^m to the symmetric matrix with (i, j) = (j, i) = y_e / sqrt(2) on
/// added edge e, and its adjoint recovers y exactly.
class EdgeBasis {
public:
    EdgeBasis() = default;
    explicit EdgeBasis(EmbeddingPtr e);

    Index m() const { return static_cast<Index>(gt_entries_.size()); }
    const std::vector<IndexPair>& edges() const { return edges_; }

    /// A(y) as a matrix on gt (zeros elsewhere).
    SparseSymMatrix apply(std::span<const double> y) const;
    /// gt_values -= A(y), in place on a gt-layout value array.
    void subtract_into(std::span<const double> y, std::span<double> gt_values) const;
    /// A^T(M) for M on gt.
    std::vector<double> adjoint(const SparseSymMatrix& m) const;
    std::vector<double> adjoint(std::span<const double> gt_values) const;

    const EmbeddingPtr& embedding() const { return embedding_; }

private:
    EmbeddingPtr embedding_;
    std::vector<IndexPair> edges_;   // input labels, (i > j), sorted
    std::vector<Index> gt_entries_;  // entry index of each edge in gt
};

EdgeBasis edge_basis(EmbeddingPtr e);

}  // namespace mdmc
