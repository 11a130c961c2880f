#pragma once

#include "mdmc/barrier.hpp"
#include "mdmc/errors.hpp"

#include <functional>
#include <iosfwd>
#include <optional>

namespace mdmc {

struct SolverConfig {
    double newton_tol = 1e-7;  // Newton decrement threshold
    int max_newton = 50;
    double gamma = 0.01;  // Armijo slope fraction, in (0, 0.5)
    double rho = 0.5;     // backtracking ratio, in (0, 1)
    int cg_max_iter = 500;
    double cg_tol_cap = 0.1;     // forcing sequence: min(cap, sqrt(prev decrement))
    double cg_tol_floor = 1e-12;
    double min_step = 1e-16;
    unsigned long long seed = 0;
    bool collect_iterates = false;  // keep y_k history
    bool diagnostics = false;       // condition numbers, eigen extremes, phi

    void validate() const;
};

struct ConditionEstimate {
    double kappa = 0.0;
    double lambda_max = 0.0;
    double lambda_min = 0.0;
    bool exact = false;  // Krylov space was exhausted, extremes are exact
};

struct SolverDiagnostics {
    double phi_max = 0.0;  // g(y0) - g(y_final)
    double lambda_max_x0 = 0.0;
    double lambda_min_xhat = 0.0;
    double kappa_bound = 0.0;  // 4 (1 + phi^2 lmax(X0)/lmin(Xhat))^2
    std::optional<ConditionEstimate> kappa_final;
};

struct SolverReport {
    Index n = 0;
    Index m = 0;
    int newton_steps = 0;
    std::vector<int> cg_iters;        // per Newton step
    std::vector<double> decrements;   // per Newton step
    std::vector<double> g_history;    // g at accepted iterates, starting at y0
    std::vector<double> step_sizes;   // accepted alpha per step
    std::vector<double> hyp_lhs;      // grad_k . (y_k - y0) per accepted iterate
    int steepest_fallbacks = 0;
    double final_gap = 0.0;
    double final_feas = 0.0;
    double seconds_embed = 0.0;
    double seconds_solve = 0.0;
    bool converged = false;
    std::optional<SolverDiagnostics> diag;
    std::vector<std::vector<double>> iterates;  // when collect_iterates

    long cg_total() const;
    double cg_median() const;
    /// Machine-readable key=value lines. Timing keys are suppressed when
    /// timings is false so the remaining section is reproducible.
    void write_kv(std::ostream& out, bool timings = true) const;
    void write_text(std::ostream& out) const;
};

/// Newton cap reached before the decrement threshold; carries the partial
/// report (converged stays false).
class MaxNewtonExceeded : public Error {
public:
    MaxNewtonExceeded(const std::string& what, SolverReport report)
        : Error(what), report_(std::move(report)) {}
    const SolverReport& report() const { return report_; }

private:
    SolverReport report_;
};

/// Everything the dual objective g(y) = f*(C - A(y)) knows at one point:
/// the slack S, its completion factor, the primal matrix X = -grad f*(S),
/// the value and the gradient A^T(X).
struct DualState {
    std::vector<double> y;
    SparseSymMatrix s;      // on the embedding
    ChordalFactor factor;   // completion factor of s
    SparseSymMatrix x;      // on the embedding
    double g = 0.0;
    std::vector<double> grad;
    const EdgeBasis* basis = nullptr;
};

/// Evaluates the dual state at y. c must live on the embedding with zeros on
/// the added edges. Throws NotCompletable when y is outside dom g.
DualState eval_state(const SparseSymMatrix& c, const EdgeBasis& basis, CliqueTreePtr tree,
                     std::span<const double> y);

/// Hessian-vector product A^T(hess_fstar(A(v))) of the dual objective.
std::vector<double> hess_g_mvp(const DualState& st, std::span<const double> v);

struct CgResult {
    std::vector<double> x;
    int iters = 0;
    std::vector<double> residuals;  // relative residual after each iteration
    bool breakdown = false;         // nonpositive curvature encountered
};

/// Conjugate gradients from the origin for an SPD operator; stops when
/// ||r|| <= tol ||rhs|| or at max_iter.
CgResult cg_solve(const std::function<std::vector<double>(std::span<const double>)>& mvp,
                  std::span<const double> rhs, double tol, int max_iter);

struct LineSearchResult {
    double alpha = 0.0;
    DualState state;
    int trials = 0;
};

/// Armijo backtracking over alpha in {1, rho, rho^2, ...}. Trial points
/// outside dom g count as failures and backtracking continues. Throws
/// StallError below cfg.min_step and InvalidArgument when dy is not a
/// descent direction.
LineSearchResult line_search(const SparseSymMatrix& c, const DualState& st,
                             std::span<const double> dy, const SolverConfig& cfg);

struct SolveResult {
    SparseSymMatrix x_hat;  // on the original pattern
    std::vector<double> y;
    SolverReport report;
};

/// Full dual Newton-CG solve starting at y = 0. c must be zero on the added
/// edges of the embedding (it may live on the original pattern directly).
SolveResult newton_solve(const SparseSymMatrix& c, CliqueTreePtr tree,
                         const EdgeBasis& basis, const SolverConfig& cfg = {});

/// Extremal eigenvalue estimates of the dual Hessian at st by a Lanczos
/// iteration with full reorthogonalization (at most iters matrix products).
ConditionEstimate estimate_condition(const DualState& st, int iters,
                                     unsigned long long seed = 1);

/// phi(M) = tr M - log det M - n for positive definite M.
double phi_diag(const Eigen::MatrixXd& m);

}  // namespace mdmc
