#pragma once

#include "mdmc/pipeline.hpp"

#include <cstdint>
#include <iosfwd>

namespace mdmc {

/// Corrupted banded test matrix: diagonal fixed at 5, off-diagonal band
/// entries drawn uniformly from [-2, 0) and then dropped with probability
/// 0.3. Deterministic in (n, bandwidth, seed) via the counter generator;
/// bandwidth must be odd and smaller than n.
SparseSymMatrix gen_banded(Index n, Index bandwidth, std::uint64_t seed);

struct GraphCase {
    SampleMatrix samples;
    SparseSymMatrix true_inv;  // ground-truth inverse covariance on g
};

/// Ground-truth inverse covariance on a pattern: off-diagonals uniform in
/// [-1, 1] corrupted to zero with probability 0.3, diagonal set to
/// 1 + sum_j |row j| (diagonally dominant), plus N Gaussian samples with the
/// matching covariance. Sampling runs densely up to dense_limit and through
/// a sparse factor of the embedding above it.
GraphCase gen_graph_case(const SparsityPattern& g, Index num_samples, std::uint64_t seed,
                         Index dense_limit = 400);

struct ScalingConfig {
    Index bandwidth = 101;
    std::uint64_t seed = 7;
    SolverConfig solver;
    long amalgamate = 48;  // clique merging keeps the many tiny band cliques in check
};

struct SizeResult {
    Index n = 0;
    Index m = 0;
    double seconds_embed = 0.0;
    double seconds_solve = 0.0;
    double gap = 0.0;
    double feas = 0.0;
    int newton_steps = 0;
    double cg_median = 0.0;
    bool ok = false;
    std::string error;
};

struct ScalingReport {
    std::vector<SizeResult> rows;
    double loglog_slope = 0.0;  // least squares on (log n, log total seconds)

    void write_text(std::ostream& out) const;
    void write_kv(std::ostream& out, bool timings = true) const;
};

/// Runs embed + solve on the banded family at each size and fits the
/// log-log runtime slope. Failing sizes are recorded and skipped in the fit.
ScalingReport scaling_run(std::span<const Index> sizes, const ScalingConfig& cfg = {});

}  // namespace mdmc
