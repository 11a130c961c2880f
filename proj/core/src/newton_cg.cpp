#include "mdmc/newton_cg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "mdmc/rng.hpp"

namespace mdmc {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

void SolverConfig::validate() const {
    if (!(gamma > 0.0 && gamma < 0.5))
        throw InvalidArgument("line search gamma must lie in (0, 0.5)");
    if (!(rho > 0.0 && rho < 1.0))
        throw InvalidArgument("line search rho must lie in (0, 1)");
    if (newton_tol <= 0.0) throw InvalidArgument("newton_tol must be positive");
    if (max_newton < 1) throw InvalidArgument("max_newton must be at least 1");
}

long SolverReport::cg_total() const {
    return std::accumulate(cg_iters.begin(), cg_iters.end(), 0L);
}

double SolverReport::cg_median() const {
    if (cg_iters.empty()) return 0.0;
    std::vector<int> sorted(cg_iters);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t h = sorted.size() / 2;
    return sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
}

void SolverReport::write_kv(std::ostream& out, bool timings) const {
    out << "n=" << n << "\n";
    out << "m=" << m << "\n";
    out << "newton_steps=" << newton_steps << "\n";
    out << "cg_total=" << cg_total() << "\n";
    out.precision(17);
    out << "gap=" << final_gap << "\n";
    out << "feas=" << final_feas << "\n";
    out << "converged=" << (converged ? "true" : "false") << "\n";
    out << "steepest_fallbacks=" << steepest_fallbacks << "\n";
    if (timings) {
        out << "seconds_embed=" << seconds_embed << "\n";
        out << "seconds_solve=" << seconds_solve << "\n";
    }
    if (diag) {
        out << "phi_max=" << diag->phi_max << "\n";
        out << "lambda_max_x0=" << diag->lambda_max_x0 << "\n";
        out << "lambda_min_xhat=" << diag->lambda_min_xhat << "\n";
        out << "kappa_bound=" << diag->kappa_bound << "\n";
        if (diag->kappa_final) out << "kappa_final=" << diag->kappa_final->kappa << "\n";
    }
}

void SolverReport::write_text(std::ostream& out) const {
    out << "dual Newton-CG: n = " << n << ", m = " << m << ", "
        << (converged ? "converged" : "NOT converged") << " in " << newton_steps
        << " steps, " << cg_total() << " CG iterations\n";
    out << "  gap = " << final_gap << ", feas = " << final_feas << "\n";
    out << "  embed " << seconds_embed << " s, solve " << seconds_solve << " s\n";
    out << "  step    cg   decrement      alpha\n";
    for (std::size_t k = 0; k < decrements.size(); ++k) {
        out << "  " << (k + 1) << "  " << cg_iters[k] << "  " << decrements[k] << "  "
            << (k < step_sizes.size() ? step_sizes[k] : 0.0) << "\n";
    }
}

DualState eval_state(const SparseSymMatrix& c, const EdgeBasis& basis, CliqueTreePtr tree,
                     std::span<const double> y) {
    const auto& e = *tree->embedding;
    DualState st;
    st.basis = &basis;
    st.y.assign(y.begin(), y.end());

    SparseSymMatrix s = c.pattern() == *e.gt ? c : project(c, e.gt);
    basis.subtract_into(y, s.values());
    st.s = std::move(s);
    st.factor = complete_factor(st.s, std::move(tree));
    st.g = static_cast<double>(e.n()) + st.factor.log_det();
    st.x = reconstruct(st.factor);
    st.grad = basis.adjoint(st.x);
    return st;
}

std::vector<double> hess_g_mvp(const DualState& st, std::span<const double> v) {
    const SparseSymMatrix av = st.basis->apply(v);
    const SparseSymMatrix hz = hess_fstar_mvp(st.factor, av);
    return st.basis->adjoint(hz);
}

CgResult cg_solve(const std::function<std::vector<double>(std::span<const double>)>& mvp,
                  std::span<const double> rhs, double tol, int max_iter) {
    const std::size_t m = rhs.size();
    CgResult res;
    res.x.assign(m, 0.0);
    const double nb = norm2(rhs);
    if (nb == 0.0 || max_iter <= 0) return res;

    std::vector<double> r(rhs.begin(), rhs.end());
    std::vector<double> p = r;
    double rr = nb * nb;
    for (int it = 0; it < max_iter; ++it) {
        const std::vector<double> hp = mvp(p);
        const double php = dot(p, hp);
        if (!(php > 0.0)) {
            res.breakdown = true;
            return res;
        }
        const double alpha = rr / php;
        for (std::size_t i = 0; i < m; ++i) {
            res.x[i] += alpha * p[i];
            r[i] -= alpha * hp[i];
        }
        const double rr_new = dot(r, r);
        ++res.iters;
        res.residuals.push_back(std::sqrt(rr_new) / nb);
        if (std::sqrt(rr_new) <= tol * nb) break;
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < m; ++i) p[i] = r[i] + beta * p[i];
    }
    return res;
}

LineSearchResult line_search(const SparseSymMatrix& c, const DualState& st,
                             std::span<const double> dy, const SolverConfig& cfg) {
    const double slope = dot(st.grad, dy);
    if (!(slope < 0.0))
        throw InvalidArgument("line search: not a descent direction");

    LineSearchResult out;
    std::vector<double> trial(st.y.size());
    double alpha = 1.0;
    while (alpha >= cfg.min_step) {
        ++out.trials;
        for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = st.y[i] + alpha * dy[i];
        try {
            DualState cand = eval_state(c, *st.basis, st.factor.tree(), trial);
            if (cand.g <= st.g + cfg.gamma * alpha * slope) {
                out.alpha = alpha;
                out.state = std::move(cand);
                return out;
            }
        } catch (const NotCompletable&) {
            // trial left dom g; shrink further
        }
        alpha *= cfg.rho;
    }
    throw StallError("line search: no admissible step above " +
                     std::to_string(cfg.min_step));
}

namespace {

struct EigenExtremes {
    double lmax, lmin;
};

// extremes of a sparse symmetric matrix: dense solve at small n, Lanczos on
// the sparse product otherwise
EigenExtremes sparse_extremes(const SparseSymMatrix& a, unsigned long long seed) {
    const Index n = a.n();
    if (n <= 400) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.dense(), Eigen::EigenvaluesOnly);
        return {es.eigenvalues().maxCoeff(), es.eigenvalues().minCoeff()};
    }
    const auto& pat = a.pattern();
    auto matvec = [&](const std::vector<double>& v) {
        std::vector<double> out(n, 0.0);
        for (Index e = 0; e < pat.nnz(); ++e) {
            const auto [i, j] = pat.entry(e);
            out[i] += a.value(e) * v[j];
            if (i != j) out[j] += a.value(e) * v[i];
        }
        return out;
    };
    const int iters = static_cast<int>(std::min<Index>(n, 80));
    std::vector<std::vector<double>> q;
    std::vector<double> alpha, beta;
    std::vector<double> v(n);
    for (Index i = 0; i < n; ++i) v[i] = rng::normal(seed, static_cast<std::uint64_t>(i));
    double nv = norm2(v);
    for (auto& x : v) x /= nv;
    q.push_back(v);
    for (int it = 0; it < iters; ++it) {
        std::vector<double> w = matvec(q.back());
        if (it > 0)
            for (Index i = 0; i < n; ++i) w[i] -= beta.back() * q[it - 1][i];
        alpha.push_back(dot(w, q.back()));
        for (Index i = 0; i < n; ++i) w[i] -= alpha.back() * q.back()[i];
        for (const auto& qk : q) {
            const double c = dot(w, qk);
            for (Index i = 0; i < n; ++i) w[i] -= c * qk[i];
        }
        const double nw = norm2(w);
        if (nw < 1e-13 * std::abs(alpha.front() + 1.0)) break;
        beta.push_back(nw);
        for (auto& x : w) x /= nw;
        q.push_back(std::move(w));
    }
    const int k = static_cast<int>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
    return {es.eigenvalues().maxCoeff(), es.eigenvalues().minCoeff()};
}

}  // namespace

SolveResult newton_solve(const SparseSymMatrix& c, CliqueTreePtr tree,
                         const EdgeBasis& basis, const SolverConfig& cfg) {
    cfg.validate();
    const auto& e = *tree->embedding;
    const Index n = e.n();
    const Index m = basis.m();

    SparseSymMatrix c_gt = c.pattern() == *e.gt ? c : project(c, e.gt);
    {
        const std::vector<double> ac = basis.adjoint(c_gt);
        for (const double v : ac)
            if (v != 0.0)
                throw InvalidArgument(
                    "newton_solve: input matrix must vanish on the added edges");
    }

    SolverReport rep;
    rep.n = n;
    rep.m = m;

    DualState state;
    try {
        state = eval_state(c_gt, basis, tree, std::vector<double>(m, 0.0));
    } catch (const NotCompletable& err) {
        throw NotCompletable(
            std::string("initial slack matrix has no positive definite completion "
                        "(thresholded matrix outside the dual cone interior): ") +
                err.what(),
            err.clique());
    }
    rep.g_history.push_back(state.g);
    if (cfg.collect_iterates) rep.iterates.push_back(state.y);
    const double g0 = state.g;
    const SparseSymMatrix x0 = state.x;

    bool hit_cap = true;
    for (int k = 0; k < cfg.max_newton && m > 0; ++k) {
        const double prev_dec =
            rep.decrements.empty() ? std::numeric_limits<double>::infinity()
                                   : rep.decrements.back();
        const double cg_tol = std::clamp(std::sqrt(prev_dec), cfg.cg_tol_floor,
                                         cfg.cg_tol_cap);

        std::vector<double> rhs(m);
        for (Index i = 0; i < m; ++i) rhs[i] = -state.grad[i];
        CgResult cg = cg_solve(
            [&](std::span<const double> v) { return hess_g_mvp(state, v); }, rhs,
            cg_tol, cfg.cg_max_iter);

        std::vector<double> dy = std::move(cg.x);
        bool fallback = cg.breakdown;
        double slope = dot(dy, state.grad);
        if (!fallback && !(slope < 0.0)) fallback = true;
        if (fallback) {
            dy = rhs;  // steepest descent
            slope = dot(dy, state.grad);
            ++rep.steepest_fallbacks;
        }
        const double decrement = std::abs(slope);
        rep.cg_iters.push_back(cg.iters);
        rep.decrements.push_back(decrement);
        ++rep.newton_steps;

        const bool final_step = decrement < cfg.newton_tol;
        try {
            LineSearchResult ls = line_search(c_gt, state, dy, cfg);
            state = std::move(ls.state);
            rep.step_sizes.push_back(ls.alpha);
        } catch (const StallError&) {
            if (final_step) {
                // converged; the last refinement step is below line-search
                // resolution
                rep.step_sizes.push_back(0.0);
                hit_cap = false;
                rep.converged = true;
                break;
            }
            throw;
        }
        rep.g_history.push_back(state.g);
        rep.hyp_lhs.push_back(dot(state.grad, state.y));
        if (cfg.collect_iterates) rep.iterates.push_back(state.y);

        if (final_step) {
            hit_cap = false;
            rep.converged = true;
            break;
        }
    }
    if (m == 0) {
        hit_cap = false;
        rep.converged = true;
    }

    // gap and feasibility of the projected estimator
    SparseSymMatrix x_hat = project(state.x, c.pattern() == *e.gt ? e.g : c.pattern_ptr());
    rep.final_gap = std::abs(sym_dot(x_hat, state.s) - static_cast<double>(n)) /
                    static_cast<double>(n);
    double feas = 0.0;
    for (const double v : basis.adjoint(state.x)) feas = std::max(feas, std::abs(v));
    rep.final_feas = feas / kSqrt2;  // largest added-edge entry of X

    if (cfg.diagnostics) {
        SolverDiagnostics d;
        d.phi_max = g0 - state.g;
        d.lambda_max_x0 = sparse_extremes(x0, cfg.seed + 11).lmax;
        d.lambda_min_xhat = sparse_extremes(state.x, cfg.seed + 13).lmin;
        const double ratio = d.phi_max * d.phi_max * d.lambda_max_x0 /
                             std::max(d.lambda_min_xhat, 1e-300);
        d.kappa_bound = 4.0 * (1.0 + ratio) * (1.0 + ratio);
        if (m >= 1)
            d.kappa_final = estimate_condition(state, static_cast<int>(std::min<Index>(m, 60)),
                                               cfg.seed + 17);
        rep.diag = std::move(d);
    }

    if (hit_cap) {
        rep.converged = false;
        throw MaxNewtonExceeded("newton_solve: decrement still " +
                                    std::to_string(rep.decrements.empty()
                                                       ? 0.0
                                                       : rep.decrements.back()) +
                                    " after " + std::to_string(cfg.max_newton) + " steps",
                                std::move(rep));
    }
    return {std::move(x_hat), std::move(state.y), std::move(rep)};
}

ConditionEstimate estimate_condition(const DualState& st, int iters,
                                     unsigned long long seed) {
    const Index m = static_cast<Index>(st.y.size());
    if (m < 1) throw InvalidArgument("estimate_condition needs m >= 1");
    iters = static_cast<int>(std::min<Index>(iters, m));

    std::vector<std::vector<double>> q;
    std::vector<double> alpha, beta;
    std::vector<double> v(m);
    for (Index i = 0; i < m; ++i) v[i] = rng::normal(seed, static_cast<std::uint64_t>(i));
    const double nv = norm2(v);
    for (auto& x : v) x /= nv;
    q.push_back(v);

    bool exhausted = false;
    for (int it = 0; it < iters; ++it) {
        std::vector<double> w = hess_g_mvp(st, q.back());
        if (it > 0)
            for (Index i = 0; i < m; ++i) w[i] -= beta.back() * q[it - 1][i];
        alpha.push_back(dot(w, q.back()));
        for (Index i = 0; i < m; ++i) w[i] -= alpha.back() * q.back()[i];
        // full reorthogonalization, twice
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& qk : q) {
                const double cproj = dot(w, qk);
                for (Index i = 0; i < m; ++i) w[i] -= cproj * qk[i];
            }
        }
        const double nw = norm2(w);
        if (nw < 1e-12 * std::max(1.0, std::abs(alpha.front()))) {
            exhausted = true;
            break;
        }
        beta.push_back(nw);
        for (auto& x : w) x /= nw;
        q.push_back(std::move(w));
    }

    const int k = static_cast<int>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
    ConditionEstimate out;
    out.lambda_max = es.eigenvalues().maxCoeff();
    out.lambda_min = es.eigenvalues().minCoeff();
    out.kappa = out.lambda_max / out.lambda_min;
    out.exact = exhausted || k == m;
    return out;
}

double phi_diag(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw InvalidArgument("phi: matrix must be square");
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("phi: matrix is not positive definite");
    double logdet = 0.0;
    for (Index i = 0; i < m.rows(); ++i) logdet += 2.0 * std::log(llt.matrixLLT()(i, i));
    return m.trace() - logdet - static_cast<double>(m.rows());
}

}  // namespace mdmc
