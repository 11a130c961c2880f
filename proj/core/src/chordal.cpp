#include "mdmc/chordal.hpp"

#include "mdmc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace mdmc {

Ordering Ordering::identity(Index n) {
    Ordering o;
    o.perm.resize(n);
    o.iperm.resize(n);
    std::iota(o.perm.begin(), o.perm.end(), Index{0});
    std::iota(o.iperm.begin(), o.iperm.end(), Index{0});
    return o;
}

Ordering Ordering::from_perm(std::vector<Index> perm) {
    Ordering o;
    o.perm = std::move(perm);
    const Index n = o.n();
    o.iperm.assign(n, -1);
    for (Index k = 0; k < n; ++k) {
        const Index v = o.perm[k];
        if (v < 0 || v >= n || o.iperm[v] != -1)
            throw InvalidArgument("ordering is not a permutation");
        o.iperm[v] = k;
    }
    return o;
}

bool Ordering::valid() const {
    const Index n = this->n();
    if (static_cast<Index>(iperm.size()) != n) return false;
    for (Index k = 0; k < n; ++k) {
        if (perm[k] < 0 || perm[k] >= n || iperm[perm[k]] != k) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Minimum degree ordering (quotient graph with element absorption)
// ---------------------------------------------------------------------------

Ordering fill_reducing_order(const SparsityPattern& g) {
    const Index n = g.n();
    std::vector<std::vector<Index>> var_adj(n);
    for (Index e = 0; e < g.nnz(); ++e) {
        const auto [i, j] = g.entry(e);
        if (i == j) continue;
        var_adj[i].push_back(j);
        var_adj[j].push_back(i);
    }
    for (auto& a : var_adj) std::sort(a.begin(), a.end());

    std::vector<std::vector<Index>> var_elems(n);
    std::vector<std::vector<Index>> elem_vars;
    std::vector<char> absorbed;
    std::vector<char> alive(n, 1);
    std::vector<Index> degree(n);
    std::vector<Index> mark(n, -1);

    using HeapItem = std::pair<Index, Index>;  // (degree, vertex)
    std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;
    for (Index v = 0; v < n; ++v) {
        degree[v] = static_cast<Index>(var_adj[v].size());
        heap.push({degree[v], v});
    }

    auto compact_alive = [&](std::vector<Index>& list) {
        list.erase(std::remove_if(list.begin(), list.end(),
                                  [&](Index w) { return !alive[w]; }),
                   list.end());
    };

    std::vector<Index> perm;
    perm.reserve(n);
    std::vector<Index> lp;
    std::vector<Index> mark2(n, -1);
    Index epoch = 0;

    for (Index step = 0; step < n; ++step) {
        Index v = -1;
        while (!heap.empty()) {
            const auto [d, u] = heap.top();
            if (alive[u] && d == degree[u]) {
                v = u;
                break;
            }
            heap.pop();  // stale
        }
        if (v < 0) throw Error("minimum degree: heap exhausted");
        heap.pop();
        perm.push_back(v);
        alive[v] = 0;

        // gather the pivot's neighborhood
        lp.clear();
        for (const Index u : var_adj[v]) {
            if (alive[u] && mark[u] != step) {
                mark[u] = step;
                lp.push_back(u);
            }
        }
        for (const Index e : var_elems[v]) {
            if (absorbed[e]) continue;
            for (const Index u : elem_vars[e]) {
                if (alive[u] && mark[u] != step) {
                    mark[u] = step;
                    lp.push_back(u);
                }
            }
            absorbed[e] = 1;  // every element touching the pivot is covered
        }
        if (lp.empty()) continue;
        std::sort(lp.begin(), lp.end());

        const Index eid = static_cast<Index>(elem_vars.size());
        elem_vars.push_back(lp);
        absorbed.push_back(0);

        for (const Index u : lp) {
            // edges inside the new element are now implied by it
            var_adj[u].erase(std::remove_if(var_adj[u].begin(), var_adj[u].end(),
                                            [&](Index w) {
                                                return !alive[w] || mark[w] == step;
                                            }),
                             var_adj[u].end());
            var_elems[u].erase(std::remove_if(var_elems[u].begin(), var_elems[u].end(),
                                              [&](Index e) { return absorbed[e]; }),
                               var_elems[u].end());
            var_elems[u].push_back(eid);
        }

        // exact external degrees of the affected variables
        for (const Index u : lp) {
            Index count = 0;
            ++epoch;
            mark2[u] = epoch;
            for (const Index w : var_adj[u]) {
                if (alive[w] && mark2[w] != epoch) {
                    mark2[w] = epoch;
                    ++count;
                }
            }
            for (const Index e : var_elems[u]) {
                compact_alive(elem_vars[e]);
                for (const Index w : elem_vars[e]) {
                    if (mark2[w] != epoch) {
                        mark2[w] = epoch;
                        ++count;
                    }
                }
            }
            degree[u] = count;
            heap.push({count, u});
        }
    }
    return Ordering::from_perm(std::move(perm));
}

// ---------------------------------------------------------------------------
// Symbolic elimination
// ---------------------------------------------------------------------------

namespace {

// Fill arrays of an embedding given per-column below-diagonal structures in
// elimination order. Shared by symbolic_embed and amalgamate.
ChordalEmbedding embedding_from_structs(PatternPtr g, Ordering ord,
                                        const std::vector<std::vector<Index>>& st) {
    const Index n = g->n();
    ChordalEmbedding e;
    e.g = std::move(g);
    e.ordering = std::move(ord);
    e.etree.assign(n, -1);
    e.colptr.assign(n + 1, 0);
    std::size_t total = 0;
    for (Index j = 0; j < n; ++j) {
        total += st[j].size();
        e.colptr[j + 1] = e.colptr[j] + static_cast<Index>(st[j].size());
        if (!st[j].empty()) e.etree[j] = st[j].front();
    }
    e.rows.reserve(total);
    for (Index j = 0; j < n; ++j) e.rows.insert(e.rows.end(), st[j].begin(), st[j].end());

    // embedding pattern in input labels
    std::vector<IndexPair> pairs;
    pairs.reserve(total);
    for (Index j = 0; j < n; ++j) {
        const Index cj = e.ordering.perm[j];
        for (const Index i : st[j]) pairs.emplace_back(e.ordering.perm[i], cj);
    }
    e.gt = std::make_shared<SparsityPattern>(SparsityPattern::build(n, pairs));

    // fill edges
    for (Index k = 0; k < e.gt->nnz(); ++k) {
        const auto [i, j] = e.gt->entry(k);
        if (i != j && !e.g->contains(i, j)) e.added_edges.emplace_back(i, j);
    }

    // kernel layout: per column [diag, below...]
    e.kcolptr.assign(n + 1, 0);
    for (Index j = 0; j < n; ++j)
        e.kcolptr[j + 1] = e.kcolptr[j] + 1 + (e.colptr[j + 1] - e.colptr[j]);
    e.kentry_to_gt.assign(e.kcolptr[n], -1);
    e.gt_to_kentry.assign(e.gt->nnz(), -1);
    for (Index j = 0; j < n; ++j) {
        const Index cj = e.ordering.perm[j];
        Index k = e.kcolptr[j];
        const Index d = e.gt->entry_index(cj, cj);
        e.kentry_to_gt[k] = d;
        e.gt_to_kentry[d] = k;
        ++k;
        for (const Index i : st[j]) {
            const Index t = e.gt->entry_index(e.ordering.perm[i], cj);
            e.kentry_to_gt[k] = t;
            e.gt_to_kentry[t] = k;
            ++k;
        }
    }
    return e;
}

}  // namespace

ChordalEmbedding symbolic_embed(const SparsityPattern& g, const Ordering& ord) {
    const Index n = g.n();
    if (ord.n() != n || !ord.valid())
        throw InvalidArgument("symbolic_embed: invalid ordering");

    // original entries in elimination order
    std::vector<std::vector<Index>> plower(n);
    for (Index e = 0; e < g.nnz(); ++e) {
        const auto [i, j] = g.entry(e);
        if (i == j) continue;
        const Index a = ord.iperm[i];
        const Index b = ord.iperm[j];
        plower[std::min(a, b)].push_back(std::max(a, b));
    }

    std::vector<std::vector<Index>> st(n);
    std::vector<std::vector<Index>> kids(n);
    std::vector<Index> gather;
    for (Index j = 0; j < n; ++j) {
        gather.assign(plower[j].begin(), plower[j].end());
        for (const Index c : kids[j]) {
            // child struct minus its first element (which is j)
            gather.insert(gather.end(), st[c].begin() + 1, st[c].end());
        }
        std::sort(gather.begin(), gather.end());
        gather.erase(std::unique(gather.begin(), gather.end()), gather.end());
        st[j] = gather;
        if (!st[j].empty()) kids[st[j].front()].push_back(j);
        plower[j].clear();
        plower[j].shrink_to_fit();
    }

    auto gp = std::make_shared<SparsityPattern>(g);
    return embedding_from_structs(gp, ord, st);
}

std::vector<double> ChordalEmbedding::to_kernel(const SparseSymMatrix& a) const {
    std::vector<double> out(kernel_nnz(), 0.0);
    if (a.pattern() == *gt) {
        for (Index k = 0; k < kernel_nnz(); ++k) out[k] = a.value(kentry_to_gt[k]);
        return out;
    }
    if (a.n() != n()) throw InvalidArgument("to_kernel: dimension mismatch");
    const auto& pat = a.pattern();
    for (Index e = 0; e < pat.nnz(); ++e) {
        const auto [i, j] = pat.entry(e);
        const Index t = gt->entry_index(i, j);
        if (t < 0)
            throw InvalidArgument("to_kernel: matrix has an entry outside the embedding");
        out[gt_to_kentry[t]] = a.value(e);
    }
    return out;
}

SparseSymMatrix ChordalEmbedding::from_kernel(std::span<const double> v) const {
    SparseSymMatrix out(gt);
    for (Index k = 0; k < kernel_nnz(); ++k) out.values()[kentry_to_gt[k]] = v[k];
    return out;
}

// ---------------------------------------------------------------------------
// Clique tree
// ---------------------------------------------------------------------------

Index CliqueTree::max_clique_size() const {
    Index best = 0;
    for (const auto& c : cliques) best = std::max(best, c.size());
    return best;
}

CliqueTree build_clique_tree(EmbeddingPtr e) {
    const Index n = e->n();
    CliqueTree t;
    t.embedding = e;
    if (n == 0) return t;

    // zero-fill (perfect elimination) verification
    for (Index j = 0; j < n; ++j) {
        const auto bj = e->below(j);
        if (bj.empty()) continue;
        const Index p = bj.front();
        const auto bp = e->below(p);
        std::size_t u = 0;
        for (std::size_t k = 1; k < bj.size(); ++k) {
            while (u < bp.size() && bp[u] < bj[k]) ++u;
            if (u == bp.size() || bp[u] != bj[k])
                throw InvalidArgument(
                    "embedding is not chordal under its ordering (fill at column " +
                    std::to_string(j) + ")");
        }
    }

    std::vector<Index> colcount(n);
    for (Index j = 0; j < n; ++j)
        colcount[j] = 1 + static_cast<Index>(e->below(j).size());

    std::vector<std::vector<Index>> kids(n);
    for (Index j = 0; j < n; ++j)
        if (e->etree[j] >= 0) kids[e->etree[j]].push_back(j);

    // supernode chains: j continues the chain of its smallest child whose
    // column count exceeds its own by exactly one
    std::vector<Index> leader(n);
    t.owner.assign(n, -1);
    for (Index j = 0; j < n; ++j) {
        Index chain = -1;
        for (const Index c : kids[j]) {
            if (colcount[c] == colcount[j] + 1) {
                chain = c;
                break;  // kids ascend, first match is smallest
            }
        }
        leader[j] = chain >= 0 ? leader[chain] : j;
    }

    std::vector<Index> clique_of_leader(n, -1);
    for (Index j = 0; j < n; ++j) {
        const Index r = leader[j];
        if (clique_of_leader[r] < 0) {
            clique_of_leader[r] = static_cast<Index>(t.cliques.size());
            t.cliques.emplace_back();
        }
        const Index id = clique_of_leader[r];
        t.cliques[id].snode.push_back(j);  // ascending since j ascends
        t.owner[j] = id;
    }
    for (auto& c : t.cliques) {
        const Index top = c.snode.back();
        const auto b = e->below(top);
        c.sep.assign(b.begin(), b.end());
        c.parent = c.sep.empty() ? -1 : t.owner[c.sep.front()];
    }

    // chain consistency: each snode column's structure is the clique suffix
    for (std::size_t id = 0; id < t.cliques.size(); ++id) {
        const auto& c = t.cliques[id];
        for (std::size_t k = 0; k < c.snode.size(); ++k) {
            const auto b = e->below(c.snode[k]);
            const std::size_t expect = (c.snode.size() - 1 - k) + c.sep.size();
            if (b.size() != expect)
                throw Error("clique tree: supernode chain is inconsistent");
        }
    }

    // running intersection: sep must lie inside the parent clique
    for (const auto& c : t.cliques) {
        if (c.parent < 0) continue;
        const auto& p = t.cliques[c.parent];
        std::size_t a = 0, b = 0;
        for (const Index v : c.sep) {
            while (a < p.snode.size() && p.snode[a] < v) ++a;
            if (a < p.snode.size() && p.snode[a] == v) continue;
            while (b < p.sep.size() && p.sep[b] < v) ++b;
            if (b == p.sep.size() || p.sep[b] != v)
                throw Error("clique tree: running intersection property violated");
        }
    }

    // postorder (children before parents), deterministic by clique id
    std::vector<std::vector<Index>> ckids(t.cliques.size());
    std::vector<Index> roots;
    for (std::size_t id = 0; id < t.cliques.size(); ++id) {
        const Index p = t.cliques[id].parent;
        if (p >= 0)
            ckids[p].push_back(static_cast<Index>(id));
        else
            roots.push_back(static_cast<Index>(id));
    }
    t.postorder.reserve(t.cliques.size());
    std::vector<std::pair<Index, std::size_t>> stack;
    for (const Index r : roots) {
        stack.push_back({r, 0});
        while (!stack.empty()) {
            auto& [id, next] = stack.back();
            if (next < ckids[id].size()) {
                const Index child = ckids[id][next++];
                stack.push_back({child, 0});
            } else {
                t.postorder.push_back(id);
                stack.pop_back();
            }
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Supernode amalgamation
// ---------------------------------------------------------------------------

ChordalEmbedding amalgamate(const ChordalEmbedding& e, long fill_budget) {
    if (fill_budget <= 0) return e;
    auto shared = std::make_shared<ChordalEmbedding>(e);
    const CliqueTree base = build_clique_tree(shared);
    const Index nc = static_cast<Index>(base.cliques.size());

    struct Group {
        std::vector<Index> snode;  // ascending
        std::vector<Index> all;    // snode ++ sep, ascending
    };
    std::vector<Group> groups(nc);
    std::vector<Index> dsu(nc);
    std::vector<Index> parent(nc);
    for (Index id = 0; id < nc; ++id) {
        const auto& c = base.cliques[id];
        groups[id].snode = c.snode;
        groups[id].all = c.snode;
        groups[id].all.insert(groups[id].all.end(), c.sep.begin(), c.sep.end());
        dsu[id] = id;
        parent[id] = c.parent;
    }
    auto find = [&](Index x) {
        while (dsu[x] != x) x = dsu[x] = dsu[dsu[x]];
        return x;
    };

    bool changed = true;
    int pass = 0;
    while (changed && pass++ < 8) {
        changed = false;
        for (const Index id : base.postorder) {
            const Index c = find(id);
            Index p = parent[c] >= 0 ? find(parent[c]) : -1;
            if (p < 0 || p == c) continue;
            Group& gc = groups[c];
            Group& gp = groups[p];
            if (gc.snode.back() >= gp.snode.front()) continue;
            // separator of c must lie inside p (it does along original
            // parent links; merged groups only grow)
            const Index sep_size = static_cast<Index>(gc.all.size() - gc.snode.size());
            bool inside = true;
            {
                std::size_t a = 0;
                for (std::size_t k = gc.snode.size(); k < gc.all.size(); ++k) {
                    const Index v = gc.all[k];
                    while (a < gp.all.size() && gp.all[a] < v) ++a;
                    if (a == gp.all.size() || gp.all[a] != v) {
                        inside = false;
                        break;
                    }
                }
            }
            if (!inside) continue;
            const long added = static_cast<long>(gc.snode.size()) *
                               static_cast<long>(gp.all.size() - sep_size);
            if (added > fill_budget) continue;

            // merge c into p
            Group merged;
            merged.snode.reserve(gc.snode.size() + gp.snode.size());
            merged.snode.insert(merged.snode.end(), gc.snode.begin(), gc.snode.end());
            merged.snode.insert(merged.snode.end(), gp.snode.begin(), gp.snode.end());
            merged.all.reserve(gc.snode.size() + gp.all.size());
            std::merge(gc.snode.begin(), gc.snode.end(), gp.all.begin(), gp.all.end(),
                       std::back_inserter(merged.all));
            groups[p] = std::move(merged);
            dsu[c] = p;
            if (parent[c] >= 0 && find(parent[c]) == p) parent[c] = -1;
            changed = true;
        }
    }

    // new column structures: suffix of the group clique for snode members
    const Index n = e.n();
    std::vector<std::vector<Index>> st(n);
    for (Index id = 0; id < nc; ++id) {
        if (find(id) != id) continue;
        const Group& g = groups[id];
        for (const Index j : g.snode) {
            auto it = std::upper_bound(g.all.begin(), g.all.end(), j);
            st[j].assign(it, g.all.end());
        }
    }
    return embedding_from_structs(e.g, e.ordering, st);
}

// ---------------------------------------------------------------------------
// Edge basis
// ---------------------------------------------------------------------------

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kSqrt2 = 1.4142135623730950488;
}  // namespace

EdgeBasis::EdgeBasis(EmbeddingPtr e) : embedding_(std::move(e)) {
    edges_ = embedding_->added_edges;
    gt_entries_.reserve(edges_.size());
    for (const auto& [i, j] : edges_) {
        const Index t = embedding_->gt->entry_index(i, j);
        if (t < 0) throw Error("edge basis: added edge missing from embedding");
        gt_entries_.push_back(t);
    }
}

EdgeBasis edge_basis(EmbeddingPtr e) { return EdgeBasis(std::move(e)); }

SparseSymMatrix EdgeBasis::apply(std::span<const double> y) const {
    if (static_cast<Index>(y.size()) != m())
        throw InvalidArgument("edge basis: y has wrong length");
    SparseSymMatrix out(embedding_->gt);
    for (Index k = 0; k < m(); ++k) out.values()[gt_entries_[k]] = y[k] * kInvSqrt2;
    return out;
}

void EdgeBasis::subtract_into(std::span<const double> y, std::span<double> gt_values) const {
    for (Index k = 0; k < m(); ++k) gt_values[gt_entries_[k]] -= y[k] * kInvSqrt2;
}

std::vector<double> EdgeBasis::adjoint(const SparseSymMatrix& mat) const {
    if (!(mat.pattern() == *embedding_->gt))
        throw InvalidArgument("edge basis: adjoint input must live on the embedding");
    return adjoint(mat.values());
}

std::vector<double> EdgeBasis::adjoint(std::span<const double> gt_values) const {
    std::vector<double> out(m());
    for (Index k = 0; k < m(); ++k) out[k] = kSqrt2 * gt_values[gt_entries_[k]];
    return out;
}

}  // namespace mdmc
