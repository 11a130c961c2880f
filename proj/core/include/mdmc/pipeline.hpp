#pragma once

#include "mdmc/newton_cg.hpp"
#include "mdmc/threshold.hpp"

namespace mdmc {

struct EmbedInfo {
    Index n = 0;
    Index g_nnz = 0;
    Index gt_nnz = 0;
    Index m = 0;
    Index max_clique = 0;
    double seconds = 0.0;
};

struct MdmcOptions {
    SolverConfig solver;
    long amalgamate = 0;  // clique-merge fill budget, 0 disables
};

struct MdmcResult {
    SparseSymMatrix x_hat;
    std::vector<double> y;
    SolverReport report;
    EmbedInfo embed;
};

/// Orders, embeds and solves the max-determinant completion problem for a
/// sparse matrix (its pattern is the constraint set). Embedding and solve
/// times land in the report.
MdmcResult solve_mdmc(const SparseSymMatrix& c, const MdmcOptions& opts = {});

struct EstimateConfig {
    SolverConfig solver;
    Index block_size = 4000;
    long amalgamate = 0;
    int threads = 1;
};

struct EstimateResult {
    SparseSymMatrix x_hat;  // on the thresholded pattern
    std::vector<double> y;
    SolverReport report;
    ThresholdWarnings warnings;
    EmbedInfo embed;
    double seconds_threshold = 0.0;
};

/// threshold -> embed -> solve: the full estimator.
EstimateResult rgl_estimate(const SampleMatrix& samples, const LambdaSpec& lambda,
                            const SparsityPattern* prior = nullptr,
                            const EstimateConfig& cfg = {});
EstimateResult rgl_estimate(const Eigen::MatrixXd& cov, const LambdaSpec& lambda,
                            const SparsityPattern* prior = nullptr,
                            const EstimateConfig& cfg = {});

// KKT clauses: 1 diagonal equality, 2 gradient equality at nonzero entries,
// 3 interval at zero entries, 4 structural zeros off the prior pattern.
struct KktViolation {
    int clause = 0;
    Index i = 0, j = 0;
    double amount = 0.0;
};

struct KktReport {
    bool pass = false;
    double tol = 0.0;
    double max_violation = 0.0;
    long checked = 0;
    std::vector<KktViolation> violations;  // capped
};

/// Replays the stationarity conditions of the penalized problem against a
/// dense inverse of x_hat. Entries of x_hat smaller than 1e-12 in magnitude
/// are routed to the interval clause.
KktReport kkt_check(const SparseSymMatrix& x_hat, const Eigen::MatrixXd& c,
                    const LambdaSpec& lambda, const SparsityPattern& h, double tol);

/// Inverse-consistent complement: N = maxdet_completion(M, G) - M, exactly
/// zero on G, with (M + N)^{-1} vanishing off G.
Eigen::MatrixXd ic_complement(const Eigen::MatrixXd& m, const SparsityPattern& g,
                              const CompletionOptions& opts = {});

struct SignConsistency {
    bool opposite = true;      // every decided pair had opposite signs
    long indeterminate = 0;    // inverse entries below 1e-12, undecided
    long violations = 0;
    bool ok() const { return opposite && indeterminate == 0; }
};

/// Checks that each nonzero off-diagonal M_ij and the matching entry of
/// (M + N)^{-1} carry opposite signs.
SignConsistency sign_consistency_check(const Eigen::MatrixXd& m, const SparsityPattern& g,
                                       const CompletionOptions& opts = {});

struct Theorem1Diagnostic {
    SparseSymMatrix c_h;       // thresholded, projected covariance
    Eigen::VectorXd diagonal;  // of c_h
    bool pd_ok = false;        // normalized matrix positive definite
    bool sign_ok = false;
    long sign_indeterminate = 0;
    bool evaluable = false;     // pd_ok held, so the sign/surrogate ran
    double complement_norm = 0.0;  // max-norm of this instance's complement:
                                   // a lower bound on the worst case, so the
                                   // surrogate check is necessary-direction
                                   // only, not a certificate
    double rhs_beta = 0.0;         // min over thresholded-away pairs
    bool surrogate_ok = false;
};

/// Small-scale equivalence diagnostic: thresholds c, normalizes by the
/// diagonal, and evaluates the positive definiteness, sign consistency, and
/// complement-norm surrogate conditions.
Theorem1Diagnostic theorem1_check(const Eigen::MatrixXd& c, const LambdaSpec& lambda,
                                  const SparsityPattern* h = nullptr,
                                  Index dense_limit = 400);

/// tr(CX) - log det X + sum_{i<j} lambda_ij |X_ij|. Throws when X is not
/// positive definite.
double gl_objective(const Eigen::MatrixXd& x, const Eigen::MatrixXd& c,
                    const LambdaSpec& lambda);

}  // namespace mdmc
