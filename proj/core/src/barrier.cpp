#include "mdmc/barrier.hpp"

#include "mdmc/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace mdmc {

struct ChordalFactor::Cache {
    std::once_flag zflag;
    std::vector<double> zvals;  // projected inverse, kernel layout
};

namespace {

// Row-list state for the left-looking sweeps. For each processed column k,
// pos[k] walks its below-diagonal rows; head[r] chains the columns whose
// current row is r.
struct RowLists {
    std::vector<Index> head, next, pos;
    explicit RowLists(Index n) : head(n, -1), next(n, -1), pos(n, 0) {}
    void attach(Index k, Index row) {
        next[k] = head[row];
        head[row] = k;
    }
};

const ChordalEmbedding& emb_of(const CliqueTree& t) { return *t.embedding; }

// ---------------------------------------------------------------------------
// Sparse Cholesky (left-looking) and its directional derivative
// ---------------------------------------------------------------------------

// Factors kernel-layout values kv into lv. Returns log det (L L^T).
double chol_kernel(const CliqueTree& tree, std::span<const double> kv,
                   std::vector<double>& lv) {
    const auto& e = emb_of(tree);
    const Index n = e.n();
    lv.assign(kv.begin(), kv.end());
    std::vector<double> x(n, 0.0);
    RowLists rl(n);
    double logdet = 0.0;

    for (Index j = 0; j < n; ++j) {
        const auto bj = e.below(j);
        const Index base = e.kdiag(j) + 1;
        x[j] = lv[e.kdiag(j)];
        for (std::size_t t = 0; t < bj.size(); ++t) x[bj[t]] = lv[base + t];

        for (Index k = rl.head[j]; k >= 0;) {
            const Index knext = rl.next[k];
            const auto bk = e.below(k);
            const Index kbase = e.kdiag(k) + 1;
            Index p = rl.pos[k];
            const double ljk = lv[kbase + p];
            for (std::size_t t = p; t < bk.size(); ++t) x[bk[t]] -= lv[kbase + t] * ljk;
            rl.pos[k] = ++p;
            if (p < static_cast<Index>(bk.size())) rl.attach(k, bk[p]);
            k = knext;
        }

        const double d = x[j];
        if (!(d > 0.0)) {
            const Index clique = tree.owner.empty() ? -1 : tree.owner[j];
            throw NotPositiveDefinite("matrix is not positive definite on the embedding "
                                      "(pivot at elimination column " +
                                          std::to_string(j) + ")",
                                      clique, j);
        }
        const double ljj = std::sqrt(d);
        logdet += 2.0 * std::log(ljj);
        lv[e.kdiag(j)] = ljj;
        x[j] = 0.0;
        for (std::size_t t = 0; t < bj.size(); ++t) {
            lv[base + t] = x[bj[t]] / ljj;
            x[bj[t]] = 0.0;
        }
        if (!bj.empty()) {
            rl.pos[j] = 0;
            rl.attach(j, bj.front());
        }
    }
    return logdet;
}

// d(chol): given the factor lv of X and a direction xd on the pattern,
// computes the matching factor perturbation ld.
void chol_tangent(const CliqueTree& tree, std::span<const double> lv,
                  std::span<const double> xd, std::vector<double>& ld) {
    const auto& e = emb_of(tree);
    const Index n = e.n();
    ld.assign(xd.begin(), xd.end());
    std::vector<double> x(n, 0.0);
    RowLists rl(n);

    for (Index j = 0; j < n; ++j) {
        const auto bj = e.below(j);
        const Index base = e.kdiag(j) + 1;
        x[j] = ld[e.kdiag(j)];
        for (std::size_t t = 0; t < bj.size(); ++t) x[bj[t]] = ld[base + t];

        for (Index k = rl.head[j]; k >= 0;) {
            const Index knext = rl.next[k];
            const auto bk = e.below(k);
            const Index kbase = e.kdiag(k) + 1;
            Index p = rl.pos[k];
            const double ljk = lv[kbase + p];
            const double ljk_d = ld[kbase + p];
            for (std::size_t t = p; t < bk.size(); ++t)
                x[bk[t]] -= ld[kbase + t] * ljk + lv[kbase + t] * ljk_d;
            rl.pos[k] = ++p;
            if (p < static_cast<Index>(bk.size())) rl.attach(k, bk[p]);
            k = knext;
        }

        const double ljj = lv[e.kdiag(j)];
        const double ljj_d = x[j] / (2.0 * ljj);
        ld[e.kdiag(j)] = ljj_d;
        x[j] = 0.0;
        for (std::size_t t = 0; t < bj.size(); ++t) {
            ld[base + t] = (x[bj[t]] - lv[base + t] * ljj_d) / ljj;
            x[bj[t]] = 0.0;
        }
        if (!bj.empty()) {
            rl.pos[j] = 0;
            rl.attach(j, bj.front());
        }
    }
}

// ---------------------------------------------------------------------------
// Projected inverse (backward recursion) and its directional derivative
// ---------------------------------------------------------------------------

// z := P(X^{-1}) from the factor, processing columns last to first; the
// needed z entries all lie inside the column's clique, hence on the pattern.
void takahashi_kernel(const CliqueTree& tree, std::span<const double> lv,
                      std::vector<double>& z) {
    const auto& e = emb_of(tree);
    const Index n = e.n();
    z.assign(lv.size(), 0.0);
    std::vector<double> w, v;

    for (Index j = n - 1; j >= 0; --j) {
        const double ljj = lv[e.kdiag(j)];
        const auto bj = e.below(j);
        const std::size_t r = bj.size();
        if (r == 0) {
            z[e.kdiag(j)] = 1.0 / (ljj * ljj);
            continue;
        }
        const Index base = e.kdiag(j) + 1;
        w.resize(r);
        v.assign(r, 0.0);
        for (std::size_t t = 0; t < r; ++t) w[t] = lv[base + t] / ljj;

        for (std::size_t tb = 0; tb < r; ++tb) {
            const Index b = bj[tb];
            v[tb] += z[e.kdiag(b)] * w[tb];
            const auto bb = e.below(b);
            const Index bbase = e.kdiag(b) + 1;
            std::size_t tc = 0, tr = tb + 1;
            while (tc < bb.size() && tr < r) {
                if (bb[tc] < bj[tr]) {
                    ++tc;
                } else if (bb[tc] > bj[tr]) {
                    ++tr;
                } else {
                    const double zv = z[bbase + tc];
                    v[tb] += zv * w[tr];
                    v[tr] += zv * w[tb];
                    ++tc;
                    ++tr;
                }
            }
        }
        double wd = 0.0;
        for (std::size_t t = 0; t < r; ++t) {
            z[base + t] = -v[t];
            wd += w[t] * v[t];
        }
        z[e.kdiag(j)] = 1.0 / (ljj * ljj) + wd;
    }
}

// d(projected inverse): propagates (lv, ld, z) to zd.
void takahashi_tangent(const CliqueTree& tree, std::span<const double> lv,
                       std::span<const double> ld, std::span<const double> z,
                       std::vector<double>& zd) {
    const auto& e = emb_of(tree);
    const Index n = e.n();
    zd.assign(z.size(), 0.0);
    std::vector<double> w, v, wdot, vdot;

    for (Index j = n - 1; j >= 0; --j) {
        const double ljj = lv[e.kdiag(j)];
        const double ljj_d = ld[e.kdiag(j)];
        const auto bj = e.below(j);
        const std::size_t r = bj.size();
        if (r == 0) {
            zd[e.kdiag(j)] = -2.0 * ljj_d / (ljj * ljj * ljj);
            continue;
        }
        const Index base = e.kdiag(j) + 1;
        w.resize(r);
        wdot.resize(r);
        v.assign(r, 0.0);
        vdot.assign(r, 0.0);
        for (std::size_t t = 0; t < r; ++t) {
            w[t] = lv[base + t] / ljj;
            wdot[t] = (ld[base + t] - w[t] * ljj_d) / ljj;
        }

        for (std::size_t tb = 0; tb < r; ++tb) {
            const Index b = bj[tb];
            v[tb] += z[e.kdiag(b)] * w[tb];
            vdot[tb] += zd[e.kdiag(b)] * w[tb] + z[e.kdiag(b)] * wdot[tb];
            const auto bb = e.below(b);
            const Index bbase = e.kdiag(b) + 1;
            std::size_t tc = 0, tr = tb + 1;
            while (tc < bb.size() && tr < r) {
                if (bb[tc] < bj[tr]) {
                    ++tc;
                } else if (bb[tc] > bj[tr]) {
                    ++tr;
                } else {
                    const double zv = z[bbase + tc];
                    const double zv_d = zd[bbase + tc];
                    v[tb] += zv * w[tr];
                    v[tr] += zv * w[tb];
                    vdot[tb] += zv_d * w[tr] + zv * wdot[tr];
                    vdot[tr] += zv_d * w[tb] + zv * wdot[tb];
                    ++tc;
                    ++tr;
                }
            }
        }
        double acc = 0.0;
        for (std::size_t t = 0; t < r; ++t) {
            zd[base + t] = -vdot[t];
            acc += wdot[t] * v[t] + w[t] * vdot[t];
        }
        zd[e.kdiag(j)] = -2.0 * ljj_d / (ljj * ljj * ljj) + acc;
    }
}

// ---------------------------------------------------------------------------
// P(L L^T) and its bilinear derivative P(Ld L^T + L Ld^T)
// ---------------------------------------------------------------------------

void llt_kernel(const CliqueTree& tree, std::span<const double> lv,
                std::vector<double>& xv) {
    const auto& e = emb_of(tree);
    const Index n = e.n();
    xv.assign(lv.size(), 0.0);
    std::vector<double> x(n, 0.0);
    RowLists rl(n);

    for (Index j = 0; j < n; ++j) {
        const auto bj = e.below(j);
        const Index base = e.kdiag(j) + 1;

        for (Index k = rl.head[j]; k >= 0;) {
            const Index knext = rl.next[k];
            const auto bk = e.below(k);
            const Index kbase = e.kdiag(k) + 1;
            Index p = rl.pos[k];
            const double ljk = lv[kbase + p];
            // t = p covers the diagonal contribution: bk[p] == j
            for (std::size_t t = p; t < bk.size(); ++t) x[bk[t]] += lv[kbase + t] * ljk;
            rl.pos[k] = ++p;
            if (p < static_cast<Index>(bk.size())) rl.attach(k, bk[p]);
            k = knext;
        }

        const double ljj = lv[e.kdiag(j)];
        x[j] += ljj * ljj;
        xv[e.kdiag(j)] = x[j];
        x[j] = 0.0;
        for (std::size_t t = 0; t < bj.size(); ++t) {
            const Index i = bj[t];
            x[i] += lv[base + t] * ljj;
            xv[base + t] = x[i];
            x[i] = 0.0;
        }
        if (!bj.empty()) {
            rl.pos[j] = 0;
            rl.attach(j, bj.front());
        }
    }
}

void llt_bilinear(const CliqueTree& tree, std::span<const double> lv,
                  std::span<const double> ld, std::vector<double>& xd) {
    const auto& e = emb_of(tree);
    const Index n = e.n();
    xd.assign(lv.size(), 0.0);
    std::vector<double> x(n, 0.0);
    RowLists rl(n);

    for (Index j = 0; j < n; ++j) {
        const auto bj = e.below(j);
        const Index base = e.kdiag(j) + 1;

        for (Index k = rl.head[j]; k >= 0;) {
            const Index knext = rl.next[k];
            const auto bk = e.below(k);
            const Index kbase = e.kdiag(k) + 1;
            Index p = rl.pos[k];
            const double ljk = lv[kbase + p];
            const double ljk_d = ld[kbase + p];
            for (std::size_t t = p; t < bk.size(); ++t)
                x[bk[t]] += ld[kbase + t] * ljk + lv[kbase + t] * ljk_d;
            rl.pos[k] = ++p;
            if (p < static_cast<Index>(bk.size())) rl.attach(k, bk[p]);
            k = knext;
        }

        const double ljj = lv[e.kdiag(j)];
        const double ljj_d = ld[e.kdiag(j)];
        x[j] += 2.0 * ljj * ljj_d;
        xd[e.kdiag(j)] = x[j];
        x[j] = 0.0;
        for (std::size_t t = 0; t < bj.size(); ++t) {
            const Index i = bj[t];
            x[i] += ld[base + t] * ljj + lv[base + t] * ljj_d;
            xd[base + t] = x[i];
            x[i] = 0.0;
        }
        if (!bj.empty()) {
            rl.pos[j] = 0;
            rl.attach(j, bj.front());
        }
    }
}

// ---------------------------------------------------------------------------
// Completion (frontal, per clique) and its directional derivative
// ---------------------------------------------------------------------------

// Gathers S(C, C) for the sorted column set C into a dense symmetric matrix.
void gather_frontal(const ChordalEmbedding& e, std::span<const double> sv,
                    const std::vector<Index>& cols, Eigen::MatrixXd& f) {
    const Index p = static_cast<Index>(cols.size());
    f.resize(p, p);
    for (Index bq = 0; bq < p; ++bq) {
        const Index b = cols[bq];
        f(bq, bq) = sv[e.kdiag(b)];
        const auto bb = e.below(b);
        const Index bbase = e.kdiag(b) + 1;
        std::size_t tc = 0;
        Index aq = bq + 1;
        while (aq < p && tc < bb.size()) {
            if (bb[tc] < cols[aq]) {
                ++tc;
            } else if (bb[tc] == cols[aq]) {
                f(aq, bq) = sv[bbase + tc];
                f(bq, aq) = sv[bbase + tc];
                ++tc;
                ++aq;
            } else {
                throw Error("frontal gather: clique pair missing from the pattern");
            }
        }
        if (aq < p) throw Error("frontal gather: clique pair missing from the pattern");
    }
}

// One clique's completion columns. With the frontal matrix reversed, the
// trailing principal blocks used by successive supernode columns become
// nested leading blocks of one Cholesky factor.
struct CliqueWork {
    Eigen::MatrixXd f, frev, r, fd, fdrev;
    Eigen::VectorXd rhs, w, rhsd, wd, tmp;
};

void complete_clique(const ChordalEmbedding& e, const CliqueTree::Clique& c,
                     Index clique_id, std::span<const double> sv,
                     std::vector<double>& lv, CliqueWork& wk,
                     // when non-null: tangent pass inputs/outputs
                     std::span<const double> yv = {}, std::vector<double>* ldot = nullptr) {
    std::vector<Index> cols(c.snode);
    cols.insert(cols.end(), c.sep.begin(), c.sep.end());
    const Index p = static_cast<Index>(cols.size());
    gather_frontal(e, sv, cols, wk.f);
    wk.frev.resize(p, p);
    for (Index a = 0; a < p; ++a)
        for (Index b = 0; b < p; ++b) wk.frev(a, b) = wk.f(p - 1 - a, p - 1 - b);

    Eigen::LLT<Eigen::MatrixXd> llt(wk.frev);
    if (llt.info() != Eigen::Success)
        throw NotCompletable("clique " + std::to_string(clique_id) +
                                 " principal submatrix is not positive definite",
                             clique_id);
    wk.r = llt.matrixL();

    const bool tangent = ldot != nullptr;
    if (tangent) {
        gather_frontal(e, yv, cols, wk.fd);
        wk.fdrev.resize(p, p);
        for (Index a = 0; a < p; ++a)
            for (Index b = 0; b < p; ++b) wk.fdrev(a, b) = wk.fd(p - 1 - a, p - 1 - b);
    }

    const Index s = static_cast<Index>(c.snode.size());
    for (Index k = s - 1; k >= 0; --k) {
        const Index j = c.snode[k];
        const Index mlen = p - 1 - k;
        const Index kd = e.kdiag(j);
        wk.rhs.resize(mlen);
        for (Index a = 0; a < mlen; ++a) wk.rhs[a] = wk.f(p - 1 - a, k);
        auto rl = wk.r.topLeftCorner(mlen, mlen);
        wk.w = wk.rhs;
        if (mlen > 0) {
            rl.triangularView<Eigen::Lower>().solveInPlace(wk.w);
            rl.transpose().triangularView<Eigen::Upper>().solveInPlace(wk.w);
            wk.w = -wk.w;
        }
        const double d = wk.f(k, k) + wk.w.dot(wk.rhs);
        if (!(d > 0.0))
            throw NotCompletable("clique " + std::to_string(clique_id) +
                                     " Schur complement is not positive",
                                 clique_id);
        const double ljj = 1.0 / std::sqrt(d);
        lv[kd] = ljj;
        for (Index a = 0; a < mlen; ++a) lv[kd + 1 + (mlen - 1 - a)] = wk.w[a] * ljj;

        if (tangent) {
            wk.rhsd.resize(mlen);
            for (Index a = 0; a < mlen; ++a) wk.rhsd[a] = wk.fdrev(a, p - 1 - k);
            wk.tmp = wk.rhsd;
            if (mlen > 0) {
                wk.tmp.noalias() += wk.fdrev.topLeftCorner(mlen, mlen) * wk.w;
                rl.triangularView<Eigen::Lower>().solveInPlace(wk.tmp);
                rl.transpose().triangularView<Eigen::Upper>().solveInPlace(wk.tmp);
            }
            wk.wd = -wk.tmp;
            const double dd = wk.fdrev(p - 1 - k, p - 1 - k) + wk.wd.dot(wk.rhs) +
                              wk.w.dot(wk.rhsd);
            const double ljj_d = -0.5 * dd * ljj * ljj * ljj;
            (*ldot)[kd] = ljj_d;
            for (Index a = 0; a < mlen; ++a)
                (*ldot)[kd + 1 + (mlen - 1 - a)] = wk.wd[a] * ljj + wk.w[a] * ljj_d;
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

ChordalFactor factor_primal(const SparseSymMatrix& x, CliqueTreePtr t) {
    const auto& e = emb_of(*t);
    ChordalFactor f;
    f.tree_ = std::move(t);
    f.cache_ = std::make_shared<ChordalFactor::Cache>();
    const std::vector<double> kv = e.to_kernel(x);
    f.logdet_ = chol_kernel(*f.tree_, kv, f.lvals_);
    return f;
}

SparseSymMatrix projected_inverse(const ChordalFactor& f) {
    std::call_once(f.cache_->zflag, [&] {
        takahashi_kernel(*f.tree_, f.lvals_, f.cache_->zvals);
    });
    return emb_of(*f.tree_).from_kernel(f.cache_->zvals);
}

SparseSymMatrix hess_f_mvp(const ChordalFactor& f, const SparseSymMatrix& y) {
    const auto& e = emb_of(*f.tree_);
    std::call_once(f.cache_->zflag, [&] {
        takahashi_kernel(*f.tree_, f.lvals_, f.cache_->zvals);
    });
    const std::vector<double> yd = e.to_kernel(y);
    std::vector<double> ld, zd;
    chol_tangent(*f.tree_, f.lvals_, yd, ld);
    takahashi_tangent(*f.tree_, f.lvals_, ld, f.cache_->zvals, zd);
    for (double& v : zd) v = -v;
    return e.from_kernel(zd);
}

ChordalFactor complete_factor(const SparseSymMatrix& s, CliqueTreePtr t) {
    const auto& e = emb_of(*t);
    ChordalFactor f;
    f.tree_ = t;
    f.cache_ = std::make_shared<ChordalFactor::Cache>();
    f.svals_ = e.to_kernel(s);
    f.lvals_.assign(f.svals_.size(), 0.0);
    CliqueWork wk;
    for (const Index id : t->postorder)
        complete_clique(e, t->cliques[id], id, f.svals_, f.lvals_, wk);
    f.logdet_ = 0.0;
    for (Index j = 0; j < e.n(); ++j) f.logdet_ += 2.0 * std::log(f.lvals_[e.kdiag(j)]);
    return f;
}

SparseSymMatrix reconstruct(const ChordalFactor& f) {
    std::vector<double> xv;
    llt_kernel(*f.tree_, f.lvals_, xv);
    return emb_of(*f.tree_).from_kernel(xv);
}

FStarResult f_star(const SparseSymMatrix& s, CliqueTreePtr t) {
    ChordalFactor f = complete_factor(s, std::move(t));
    const double n = static_cast<double>(f.tree()->n());
    const double value = n + f.log_det();
    return {value, std::move(f)};
}

SparseSymMatrix hess_fstar_mvp(const ChordalFactor& f, const SparseSymMatrix& y) {
    if (!f.has_source())
        throw InvalidArgument("hess_fstar_mvp needs a factor from complete_factor");
    const auto& t = *f.tree_;
    const auto& e = emb_of(t);
    const std::vector<double> yv = e.to_kernel(y);
    std::vector<double> lv_scratch(f.lvals_.size(), 0.0);
    std::vector<double> ld(f.lvals_.size(), 0.0);
    CliqueWork wk;
    for (const Index id : t.postorder)
        complete_clique(e, t.cliques[id], id, f.svals_, lv_scratch, wk, yv, &ld);
    std::vector<double> xd;
    llt_bilinear(t, f.lvals_, ld, xd);
    for (double& v : xd) v = -v;
    return e.from_kernel(xd);
}

// ---------------------------------------------------------------------------
// Dense completion oracle (coordinate ascent)
// ---------------------------------------------------------------------------

namespace {

double max_abs(const Eigen::MatrixXd& k) { return k.cwiseAbs().maxCoeff(); }

double offmask_residual(const Eigen::MatrixXd& k, const std::vector<IndexPair>& missing) {
    double r = 0.0;
    for (const auto& [i, j] : missing) r = std::max(r, std::abs(k(i, j)));
    return r;
}

}  // namespace

Eigen::MatrixXd dense_maxdet_completion(const Eigen::MatrixXd& s, const SparsityPattern& g,
                                        const CompletionOptions& opts) {
    const Index n = g.n();
    if (s.rows() != n || s.cols() != n)
        throw InvalidArgument("dense_maxdet_completion: dimension mismatch");
    if (n > opts.dense_limit)
        throw InvalidArgument("dense_maxdet_completion: n exceeds the dense limit");

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (Index e = 0; e < g.nnz(); ++e) {
        const auto [i, j] = g.entry(e);
        w(i, j) = s(i, j);
        w(j, i) = s(i, j);
    }
    std::vector<IndexPair> missing;
    for (Index j = 0; j < n; ++j)
        for (Index i = j + 1; i < n; ++i)
            if (!g.contains(i, j)) missing.emplace_back(i, j);

    if (missing.empty()) {
        if (Eigen::LLT<Eigen::MatrixXd>(w).info() != Eigen::Success)
            throw NotCompletable("matrix on a full mask is not positive definite");
        return w;
    }

    // diagonal homotopy: inflate the diagonal until positive definite, then
    // walk sigma back to zero, re-running coordinate ascent at each stage
    double sigma = 0.0;
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
        const double lmin = es.eigenvalues().minCoeff();
        if (lmin <= 0.0) sigma = -lmin * 1.1 + 1e-8 * std::max(1.0, max_abs(w));
    }
    w.diagonal().array() += sigma;

    Eigen::MatrixXd k;
    Eigen::MatrixXd b(n, 2);
    long sweeps = 0;
    auto refresh_inverse = [&] {
        Eigen::LLT<Eigen::MatrixXd> llt(w);
        if (llt.info() != Eigen::Success)
            throw NotCompletable("coordinate ascent left the positive definite cone");
        k = llt.solve(Eigen::MatrixXd::Identity(n, n));
    };
    while (true) {
        // coordinate ascent at the current sigma
        const double stage_tol = sigma > 0.0 ? 1e-8 : opts.tol;
        refresh_inverse();
        while (true) {
            if (++sweeps > opts.max_sweeps)
                throw Error("dense_maxdet_completion: sweep cap reached before convergence");
            for (const auto& [i, j] : missing) {
                const double det2 = k(i, i) * k(j, j) - k(i, j) * k(i, j);
                const double delta = k(i, j) / det2;
                if (delta == 0.0) continue;
                w(i, j) += delta;
                w(j, i) += delta;
                // rank-two inverse update
                b.col(0) = k.col(i);
                b.col(1) = k.col(j);
                Eigen::Matrix2d p2;
                p2 << k(i, i), k(i, j), k(i, j), k(j, j);
                Eigen::Matrix2d m2;
                m2 << 0.0, delta, delta, 0.0;
                const Eigen::Matrix2d core =
                    (Eigen::Matrix2d::Identity() + m2 * p2).inverse() * m2;
                k.noalias() -= b * core * b.transpose();
            }
            refresh_inverse();
            if (offmask_residual(k, missing) <= stage_tol * std::max(1.0, max_abs(k)))
                break;
        }
        if (sigma == 0.0) break;

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
        const double lmin = es.eigenvalues().minCoeff();
        const double step = std::min(sigma, 0.9 * lmin);
        if (step <= sigma * 1e-6)
            throw NotCompletable(
                "no positive definite completion found (diagonal homotopy stalled)");
        sigma = std::max(0.0, sigma - step);
        if (sigma < 1e-14 * std::max(1.0, max_abs(w))) sigma = 0.0;
        // keep the specified entries exact: the diagonal carries s + sigma
        for (Index i = 0; i < n; ++i) w(i, i) = s(i, i) + sigma;
    }

    if (Eigen::LLT<Eigen::MatrixXd>(w).info() != Eigen::Success)
        throw NotCompletable("completion left the positive definite cone");
    return w;
}

}  // namespace mdmc
