#include "mdmc/pipeline.hpp"

#include "mdmc/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>

namespace mdmc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr double kZeroEntry = 1e-12;  // |x| below this is a numerical zero

}  // namespace

MdmcResult solve_mdmc(const SparseSymMatrix& c, const MdmcOptions& opts) {
    const auto t0 = Clock::now();
    const Ordering ord = fill_reducing_order(c.pattern());
    ChordalEmbedding emb = symbolic_embed(c.pattern(), ord);
    if (opts.amalgamate > 0) emb = amalgamate(emb, opts.amalgamate);
    auto eptr = std::make_shared<const ChordalEmbedding>(std::move(emb));
    auto tree = std::make_shared<const CliqueTree>(build_clique_tree(eptr));
    const EdgeBasis basis(eptr);
    const double t_embed = seconds_since(t0);

    EmbedInfo info;
    info.n = eptr->n();
    info.g_nnz = eptr->g->nnz();
    info.gt_nnz = eptr->gt->nnz();
    info.m = eptr->m();
    info.max_clique = tree->max_clique_size();
    info.seconds = t_embed;

    const auto t1 = Clock::now();
    try {
        SolveResult sr = newton_solve(c, tree, basis, opts.solver);
        sr.report.seconds_embed = t_embed;
        sr.report.seconds_solve = seconds_since(t1);
        return {std::move(sr.x_hat), std::move(sr.y), std::move(sr.report), info};
    } catch (const MaxNewtonExceeded& e) {
        SolverReport rep = e.report();
        rep.seconds_embed = t_embed;
        rep.seconds_solve = seconds_since(t1);
        throw MaxNewtonExceeded(e.what(), std::move(rep));
    }
}

namespace {

template <typename Source>
EstimateResult estimate_impl(const Source& source, const LambdaSpec& lambda,
                             const SparsityPattern* prior, const EstimateConfig& cfg) {
    const auto t0 = Clock::now();
    ThresholdResult thr =
        threshold_covariance(source, lambda, prior, cfg.block_size, cfg.threads);
    const double t_thresh = seconds_since(t0);

    MdmcResult mr = solve_mdmc(thr.matrix, {cfg.solver, cfg.amalgamate});
    EstimateResult out;
    out.x_hat = std::move(mr.x_hat);
    out.y = std::move(mr.y);
    out.report = std::move(mr.report);
    out.warnings = std::move(thr.warnings);
    out.embed = mr.embed;
    out.seconds_threshold = t_thresh;
    return out;
}

}  // namespace

EstimateResult rgl_estimate(const SampleMatrix& samples, const LambdaSpec& lambda,
                            const SparsityPattern* prior, const EstimateConfig& cfg) {
    return estimate_impl(samples, lambda, prior, cfg);
}

EstimateResult rgl_estimate(const Eigen::MatrixXd& cov, const LambdaSpec& lambda,
                            const SparsityPattern* prior, const EstimateConfig& cfg) {
    return estimate_impl(cov, lambda, prior, cfg);
}

KktReport kkt_check(const SparseSymMatrix& x_hat, const Eigen::MatrixXd& c,
                    const LambdaSpec& lambda, const SparsityPattern& h, double tol) {
    const Index n = x_hat.n();
    if (c.rows() != n || c.cols() != n || h.n() != n)
        throw InvalidArgument("kkt_check: dimension mismatch");

    const Eigen::MatrixXd xd = x_hat.dense();
    Eigen::LLT<Eigen::MatrixXd> llt(xd);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("kkt_check: estimator is not positive definite");
    const Eigen::MatrixXd k = llt.solve(Eigen::MatrixXd::Identity(n, n));

    KktReport rep;
    rep.tol = tol;
    auto record = [&](int clause, Index i, Index j, double amount) {
        rep.max_violation = std::max(rep.max_violation, amount);
        if (amount > (clause == 4 ? 0.0 : tol)) {
            if (rep.violations.size() < 32) rep.violations.push_back({clause, i, j, amount});
        }
    };

    for (Index i = 0; i < n; ++i) {
        ++rep.checked;
        record(1, i, i, std::abs(k(i, i) - c(i, i)));
    }
    for (Index j = 0; j < n; ++j) {
        for (Index i = j + 1; i < n; ++i) {
            if (!h.contains(i, j)) {
                // structural zero: any stored nonzero here is a violation
                const double x = x_hat.get(i, j);
                if (x != 0.0) record(4, i, j, std::abs(x));
                continue;
            }
            ++rep.checked;
            const double x = x_hat.get(i, j);
            const double l = lambda.value(i, j);
            if (std::abs(x) >= kZeroEntry) {
                const double target = c(i, j) + l * (x > 0 ? 1.0 : -1.0);
                record(2, i, j, std::abs(k(i, j) - target));
            } else {
                const double lo = c(i, j) - l;
                const double hi = c(i, j) + l;
                const double excess =
                    std::max({lo - k(i, j), k(i, j) - hi, 0.0});
                record(3, i, j, excess);
            }
        }
    }
    rep.pass = rep.violations.empty();
    return rep;
}

Eigen::MatrixXd ic_complement(const Eigen::MatrixXd& m, const SparsityPattern& g,
                              const CompletionOptions& opts) {
    const Index n = g.n();
    if (m.rows() != n || m.cols() != n)
        throw InvalidArgument("ic_complement: dimension mismatch");
    const Eigen::MatrixXd w = dense_maxdet_completion(m, g, opts);
    Eigen::MatrixXd nmat = w;
    for (Index j = 0; j < n; ++j) {
        for (Index i = j; i < n; ++i) {
            if (g.contains(i, j)) {
                nmat(i, j) = 0.0;  // exactly zero on the pattern
                nmat(j, i) = 0.0;
            } else {
                nmat(i, j) -= m(i, j);
                nmat(j, i) = nmat(i, j);
            }
        }
    }
    return nmat;
}

SignConsistency sign_consistency_check(const Eigen::MatrixXd& m, const SparsityPattern& g,
                                       const CompletionOptions& opts) {
    const Eigen::MatrixXd w = dense_maxdet_completion(m, g, opts);
    const Eigen::MatrixXd k = w.llt().solve(Eigen::MatrixXd::Identity(g.n(), g.n()));
    SignConsistency out;
    for (Index e = 0; e < g.nnz(); ++e) {
        const auto [i, j] = g.entry(e);
        if (i == j || m(i, j) == 0.0) continue;
        const double kij = k(i, j);
        if (std::abs(kij) < kZeroEntry) {
            ++out.indeterminate;
            continue;
        }
        if ((m(i, j) > 0) == (kij > 0)) {
            ++out.violations;
            out.opposite = false;
        }
    }
    return out;
}

Theorem1Diagnostic theorem1_check(const Eigen::MatrixXd& c, const LambdaSpec& lambda,
                                  const SparsityPattern* h, Index dense_limit) {
    const Index n = c.rows();
    if (c.cols() != n) throw InvalidArgument("theorem1_check: matrix must be square");
    if (n > dense_limit)
        throw InvalidArgument("theorem1_check: n exceeds the dense limit");

    Theorem1Diagnostic out;

    // threshold densely, project onto the prior
    Eigen::MatrixXd ch = Eigen::MatrixXd::Zero(n, n);
    std::vector<IndexPair> nonzeros;
    for (Index j = 0; j < n; ++j) {
        for (Index i = j; i < n; ++i) {
            if (i == j) {
                if (c(i, i) <= 0.0)
                    throw InvalidArgument("theorem1_check: nonpositive diagonal");
                ch(i, i) = c(i, i);
                continue;
            }
            if (h && !h->contains(i, j)) continue;
            const double v = soft_threshold_entry(c(i, j), lambda.value(i, j), false);
            if (v != 0.0) {
                ch(i, j) = v;
                ch(j, i) = v;
                nonzeros.emplace_back(i, j);
            }
        }
    }
    auto gh = std::make_shared<SparsityPattern>(SparsityPattern::build(n, nonzeros));
    out.c_h = project(ch, gh);
    out.diagonal = ch.diagonal();

    Eigen::VectorXd dinv_sqrt = out.diagonal.array().rsqrt();
    const Eigen::MatrixXd ctilde = dinv_sqrt.asDiagonal() * ch * dinv_sqrt.asDiagonal();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ctilde, Eigen::EigenvaluesOnly);
    out.pd_ok = es.eigenvalues().minCoeff() > 0.0;

    if (out.pd_ok) {
        try {
            const SignConsistency sc = sign_consistency_check(ctilde, *gh);
            out.sign_ok = sc.ok();
            out.sign_indeterminate = sc.indeterminate;
            const Eigen::MatrixXd nmat = ic_complement(ctilde, *gh);
            out.complement_norm = nmat.cwiseAbs().maxCoeff();
            out.evaluable = true;
        } catch (const NotCompletable&) {
            out.evaluable = false;
        }
    }

    // the interval condition only needs certifying on pairs the threshold
    // removed; pairs outside the prior are hard constraints
    double rhs = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
        for (Index i = j + 1; i < n; ++i) {
            if (h && !h->contains(i, j)) continue;
            if (gh->contains(i, j)) continue;
            const double num = lambda.value(i, j) - std::abs(c(i, j));
            rhs = std::min(rhs, num / std::sqrt(c(i, i) * c(j, j)));
        }
    }
    out.rhs_beta = rhs;
    out.surrogate_ok = out.evaluable && out.complement_norm <= rhs;
    return out;
}

double gl_objective(const Eigen::MatrixXd& x, const Eigen::MatrixXd& c,
                    const LambdaSpec& lambda) {
    const Index n = x.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(x);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("gl_objective: X is not positive definite");
    double logdet = 0.0;
    for (Index i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixLLT()(i, i));
    double penalty = 0.0;
    for (Index j = 0; j < n; ++j)
        for (Index i = j + 1; i < n; ++i)
            penalty += lambda.value(i, j) * std::abs(x(i, j));
    return (c * x).trace() - logdet + penalty;
}

}  // namespace mdmc
