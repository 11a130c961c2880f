#pragma once

// Shared random-instance helpers for the test suites. Everything is seeded
// and deterministic.

#include "mdmc/barrier.hpp"
#include "mdmc/chordal.hpp"
#include "mdmc/sparse_sym.hpp"

#include <Eigen/Dense>

#include <random>

namespace mdmc::testing {

/// Random symmetric pattern on n nodes with roughly edge_frac of all pairs.
inline SparsityPattern random_pattern(Index n, double edge_frac, std::mt19937& gen) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<IndexPair> edges;
    for (Index j = 0; j < n; ++j)
        for (Index i = j + 1; i < n; ++i)
            if (u(gen) < edge_frac) edges.emplace_back(i, j);
    return SparsityPattern::build(n, edges);
}

/// Random chordal embedding of a random pattern (the embedding pattern is
/// chordal by construction).
inline EmbeddingPtr random_chordal(Index n, double edge_frac, std::mt19937& gen) {
    const SparsityPattern g = random_pattern(n, edge_frac, gen);
    return std::make_shared<const ChordalEmbedding>(
        symbolic_embed(g, fill_reducing_order(g)));
}

/// Dense symmetric positive definite matrix with controlled off-diagonal
/// mass: I + strength * (Q + Q^T)/2 normalized to spectral radius below one.
inline Eigen::MatrixXd random_spd(Index n, double strength, std::mt19937& gen) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd q(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) q(i, j) = nd(gen);
    Eigen::MatrixXd sym = 0.5 * (q + q.transpose());
    const double radius = sym.cwiseAbs().rowwise().sum().maxCoeff();
    return Eigen::MatrixXd::Identity(n, n) + (strength / std::max(radius, 1.0)) * sym;
}

/// Interior point of the completable cone on the embedding: projection of a
/// dense SPD matrix. strength < 1 keeps every clique submatrix comfortably
/// positive definite.
inline SparseSymMatrix random_dual_point(const EmbeddingPtr& e, double strength,
                                         std::mt19937& gen) {
    return project(random_spd(e->n(), strength, gen), e->gt);
}

/// Random direction on the embedding pattern.
inline SparseSymMatrix random_direction(const PatternPtr& p, std::mt19937& gen) {
    std::normal_distribution<double> nd(0.0, 1.0);
    SparseSymMatrix y(p);
    for (auto& v : y.values()) v = nd(gen);
    return y;
}

/// Diagonally dominant matrix supported on g (a safe member of the cone of
/// matrices with PD completions).
inline SparseSymMatrix random_completable(const PatternPtr& p, double strength,
                                          std::mt19937& gen) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SparseSymMatrix a(p);
    const auto& pat = *p;
    std::vector<double> rowsum(pat.n(), 0.0);
    for (Index e = 0; e < pat.nnz(); ++e) {
        const auto [i, j] = pat.entry(e);
        if (i == j) continue;
        const double v = strength * u(gen);
        a.values()[e] = v;
        rowsum[i] += std::abs(v);
        rowsum[j] += std::abs(v);
    }
    for (Index i = 0; i < pat.n(); ++i)
        a.values()[pat.entry_index(i, i)] = 1.0 + rowsum[i];
    return a;
}

}  // namespace mdmc::testing
