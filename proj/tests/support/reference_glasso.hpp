#pragma once

// Dense reference solver for the penalized maximum-likelihood problem
//
//   minimize  tr(C X) - log det X + sum_{i<j in H} lambda_ij |X_ij|
//   over      X positive definite, X_ij = 0 off H
//
// by monotone FISTA (proximal gradient with acceleration and restart),
// run until the gradient-map norm drops below a tolerance. First-order and
// dense throughout: independent of the clique-tree Newton-CG machinery it
// is used to certify.

#include "mdmc/threshold.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <optional>

namespace mdmc::testing {

struct GlassoOptions {
    double grad_map_tol = 1e-9;
    long max_iter = 200000;
};

inline double glasso_objective(const Eigen::MatrixXd& x, const Eigen::MatrixXd& c,
                               const LambdaSpec& lambda) {
    Eigen::LLT<Eigen::MatrixXd> llt(x);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    double logdet = 0.0;
    for (Index i = 0; i < x.rows(); ++i) logdet += 2.0 * std::log(llt.matrixLLT()(i, i));
    double pen = 0.0;
    for (Index j = 0; j < x.cols(); ++j)
        for (Index i = j + 1; i < x.rows(); ++i)
            pen += lambda.value(i, j) * std::abs(x(i, j));
    return (c * x).trace() - logdet + pen;
}

/// One proximal step from v with step size t: soft-threshold off-diagonals
/// on H, zero off H, keep the diagonal.
inline Eigen::MatrixXd glasso_prox(const Eigen::MatrixXd& v, const SparsityPattern* h,
                                   const LambdaSpec& lambda, double t) {
    const Index n = v.rows();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i) out(i, i) = v(i, i);
    for (Index j = 0; j < n; ++j) {
        for (Index i = j + 1; i < n; ++i) {
            if (h && !h->contains(i, j)) continue;
            const double s = soft_threshold_entry(v(i, j), t * lambda.value(i, j), false);
            out(i, j) = s;
            out(j, i) = s;
        }
    }
    return out;
}

inline Eigen::MatrixXd reference_glasso(const Eigen::MatrixXd& c, const LambdaSpec& lambda,
                                        const SparsityPattern* h = nullptr,
                                        const GlassoOptions& opts = {}) {
    const Index n = c.rows();
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i) x(i, i) = 1.0 / c(i, i);

    auto smooth = [&](const Eigen::MatrixXd& m, Eigen::MatrixXd* grad) {
        Eigen::LLT<Eigen::MatrixXd> llt(m);
        if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
        const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
        if (grad) *grad = c - inv;
        double logdet = 0.0;
        for (Index i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixLLT()(i, i));
        return (c * m).trace() - logdet;
    };

    Eigen::MatrixXd y = x;      // extrapolated point
    Eigen::MatrixXd x_prev = x;
    double theta = 1.0;
    double t = 1.0;
    double best_obj = glasso_objective(x, c, lambda);
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());

    for (long it = 0; it < opts.max_iter; ++it) {
        Eigen::MatrixXd grad;
        double fy = smooth(y, &grad);
        if (!std::isfinite(fy)) {  // extrapolation left the cone: restart
            y = x;
            theta = 1.0;
            fy = smooth(y, &grad);
        }

        // backtracking on the quadratic model around y
        Eigen::MatrixXd xn;
        while (true) {
            xn = glasso_prox(y - t * grad, h, lambda, t);
            const double fxn = smooth(xn, nullptr);
            const Eigen::MatrixXd d = xn - y;
            const double model = fy + (grad.array() * d.array()).sum() +
                                 d.squaredNorm() / (2.0 * t);
            if (std::isfinite(fxn) && fxn <= model + 1e-14 * std::abs(model)) break;
            t *= 0.5;
            if (t < 1e-18) return x;  // step collapsed; return the best point
        }

        // monotone safeguard: fall back to a plain step from x when the
        // accelerated step increased the objective
        const double obj_acc = glasso_objective(xn, c, lambda);
        if (obj_acc > best_obj) {
            Eigen::MatrixXd gx;
            smooth(x, &gx);
            Eigen::MatrixXd xn_plain;
            double tp = t;
            while (true) {
                xn_plain = glasso_prox(x - tp * gx, h, lambda, tp);
                const double fp = smooth(xn_plain, nullptr);
                const Eigen::MatrixXd d = xn_plain - x;
                const double model = smooth(x, nullptr) +
                                     (gx.array() * d.array()).sum() +
                                     d.squaredNorm() / (2.0 * tp);
                if (std::isfinite(fp) && fp <= model + 1e-14 * std::abs(model)) break;
                tp *= 0.5;
                if (tp < 1e-18) break;
            }
            if (glasso_objective(xn_plain, c, lambda) <= obj_acc) {
                xn = xn_plain;
                theta = 1.0;  // restart acceleration
            }
        }

        // gradient map stopping test at the new point
        Eigen::MatrixXd gn;
        smooth(xn, &gn);
        const Eigen::MatrixXd gmap = (xn - glasso_prox(xn - t * gn, h, lambda, t)) / t;
        x_prev = x;
        x = xn;
        best_obj = std::min(best_obj, glasso_objective(x, c, lambda));
        if (gmap.norm() <= opts.grad_map_tol * scale) return x;

        const double theta_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        y = x + ((theta - 1.0) / theta_new) * (x - x_prev);
        theta = theta_new;
        t = std::min(t * 1.5, 1.0);  // gentle step recovery
    }
    return x;
}

}  // namespace mdmc::testing
