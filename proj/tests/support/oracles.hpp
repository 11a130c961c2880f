#pragma once

// Small brute-force oracles, independent of the library's data structures.

#include "mdmc/sparse_sym.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <functional>
#include <set>
#include <vector>

namespace mdmc::testing {

/// Dense boolean symbolic elimination: returns the filled adjacency (in
/// input labels) of eliminating the graph under perm, diagonal excluded.
inline std::set<std::pair<Index, Index>> dense_fill_oracle(
    const SparsityPattern& g, const std::vector<Index>& perm) {
    const Index n = g.n();
    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
    for (Index e = 0; e < g.nnz(); ++e) {
        const auto [i, j] = g.entry(e);
        if (i == j) continue;
        adj[i][j] = adj[j][i] = 1;
    }
    std::vector<char> eliminated(n, 0);
    for (const Index v : perm) {
        std::vector<Index> nb;
        for (Index u = 0; u < n; ++u)
            if (!eliminated[u] && u != v && adj[v][u]) nb.push_back(u);
        for (std::size_t a = 0; a < nb.size(); ++a)
            for (std::size_t b = a + 1; b < nb.size(); ++b)
                adj[nb[a]][nb[b]] = adj[nb[b]][nb[a]] = 1;
        eliminated[v] = 1;
    }
    std::set<std::pair<Index, Index>> out;
    for (Index j = 0; j < n; ++j)
        for (Index i = j + 1; i < n; ++i)
            if (adj[i][j]) out.insert({i, j});
    return out;
}

/// Bron-Kerbosch maximal clique enumeration (input labels, sorted sets).
inline std::set<std::vector<Index>> maximal_cliques_oracle(const SparsityPattern& g) {
    const Index n = g.n();
    std::vector<std::set<Index>> adj(n);
    for (Index e = 0; e < g.nnz(); ++e) {
        const auto [i, j] = g.entry(e);
        if (i == j) continue;
        adj[i].insert(j);
        adj[j].insert(i);
    }
    std::set<std::vector<Index>> out;
    std::vector<Index> r;
    std::set<Index> p, x;
    for (Index v = 0; v < n; ++v) p.insert(v);

    std::function<void(std::vector<Index>&, std::set<Index>, std::set<Index>)> bk =
        [&](std::vector<Index>& rr, std::set<Index> pp, std::set<Index> xx) {
            if (pp.empty() && xx.empty()) {
                std::vector<Index> c = rr;
                std::sort(c.begin(), c.end());
                out.insert(c);
                return;
            }
            const std::set<Index> pc = pp;
            for (const Index v : pc) {
                std::set<Index> pv, xv;
                for (const Index u : pp)
                    if (adj[v].count(u)) pv.insert(u);
                for (const Index u : xx)
                    if (adj[v].count(u)) xv.insert(u);
                rr.push_back(v);
                bk(rr, pv, xv);
                rr.pop_back();
                pp.erase(v);
                xx.insert(v);
            }
        };
    bk(r, p, x);
    return out;
}

/// All permutations of {0..n-1}; n must be tiny.
inline std::vector<std::vector<Index>> all_permutations(Index n) {
    std::vector<Index> p(n);
    for (Index i = 0; i < n; ++i) p[i] = i;
    std::vector<std::vector<Index>> out;
    do {
        out.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
}

}  // namespace mdmc::testing
