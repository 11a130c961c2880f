#include "mdmc/bench.hpp"

#include "mdmc/errors.hpp"
#include "mdmc/rng.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <ostream>

namespace mdmc {

namespace {

// substream tags for the counter generator
constexpr std::uint64_t kValueStream = 0x76616c75ULL;    // entry magnitudes
constexpr std::uint64_t kCorruptStream = 0x636f7272ULL;  // drop decisions
constexpr std::uint64_t kSampleStream = 0x73616d70ULL;   // gaussian draws

std::uint64_t pair_counter(Index n, Index i, Index j) {
    return static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(n) +
           static_cast<std::uint64_t>(j);
}

}  // namespace

SparseSymMatrix gen_banded(Index n, Index bandwidth, std::uint64_t seed) {
    if (bandwidth % 2 == 0) throw InvalidArgument("gen_banded: bandwidth must be odd");
    if (bandwidth >= n) throw InvalidArgument("gen_banded: bandwidth must be below n");
    const Index half = (bandwidth - 1) / 2;

    std::vector<IndexPair> pairs;
    std::vector<double> vals;
    for (Index j = 0; j < n; ++j) {
        for (Index i = j + 1; i <= std::min<Index>(j + half, n - 1); ++i) {
            const std::uint64_t c = pair_counter(n, i, j);
            const double v = rng::uniform(seed ^ kValueStream, c, -2.0, 0.0);
            if (rng::uniform01(seed ^ kCorruptStream, c) < 0.3) continue;  // corrupted
            pairs.emplace_back(i, j);
            vals.push_back(v);
        }
    }
    auto pat = std::make_shared<SparsityPattern>(SparsityPattern::build(n, pairs));
    SparseSymMatrix out(pat);
    for (std::size_t k = 0; k < pairs.size(); ++k)
        out.values()[pat->entry_index(pairs[k].first, pairs[k].second)] = vals[k];
    for (Index i = 0; i < n; ++i) out.values()[pat->entry_index(i, i)] = 5.0;
    return out;
}

GraphCase gen_graph_case(const SparsityPattern& g, Index num_samples, std::uint64_t seed,
                         Index dense_limit) {
    const Index n = g.n();
    SparseSymMatrix sigma_inv(std::make_shared<SparsityPattern>(g));
    const auto& pat = sigma_inv.pattern();

    for (Index e = 0; e < pat.nnz(); ++e) {
        const auto [i, j] = pat.entry(e);
        if (i == j) continue;
        const std::uint64_t c = pair_counter(n, i, j);
        double v = rng::uniform(seed ^ kValueStream, c, -1.0, 1.0);
        if (rng::uniform01(seed ^ kCorruptStream, c) < 0.3) v = 0.0;  // corrupted
        sigma_inv.values()[e] = v;
    }
    // diagonal dominance: 1 + sum of absolute off-diagonal row entries
    std::vector<double> rowsum(n, 0.0);
    for (Index e = 0; e < pat.nnz(); ++e) {
        const auto [i, j] = pat.entry(e);
        if (i == j) continue;
        rowsum[i] += std::abs(sigma_inv.value(e));
        rowsum[j] += std::abs(sigma_inv.value(e));
    }
    for (Index i = 0; i < n; ++i)
        sigma_inv.values()[pat.entry_index(i, i)] = 1.0 + rowsum[i];

    std::vector<double> data(static_cast<std::size_t>(n) * num_samples);
    if (n <= dense_limit) {
        // dense route: x = chol(Sigma) z
        const Eigen::MatrixXd si = sigma_inv.dense();
        const Eigen::MatrixXd sigma =
            si.llt().solve(Eigen::MatrixXd::Identity(n, n));
        Eigen::LLT<Eigen::MatrixXd> llt(sigma);
        if (llt.info() != Eigen::Success)
            throw Error("gen_graph_case: covariance factorization failed");
        const Eigen::MatrixXd l = llt.matrixL();
        Eigen::VectorXd z(n);
        for (Index s = 0; s < num_samples; ++s) {
            for (Index i = 0; i < n; ++i)
                z[i] = rng::normal(seed ^ kSampleStream,
                                   pair_counter(n, s, 0) + static_cast<std::uint64_t>(i));
            Eigen::Map<Eigen::VectorXd>(data.data() + s * n, n) = l * z;
        }
    } else {
        // structured route: factor Sigma^{-1} on its chordal embedding and
        // solve L^T y = z, giving cov(y) = (L L^T)^{-1}
        const Ordering ord = fill_reducing_order(g);
        auto eptr = std::make_shared<const ChordalEmbedding>(symbolic_embed(g, ord));
        auto tree = std::make_shared<const CliqueTree>(build_clique_tree(eptr));
        const ChordalFactor f = factor_primal(sigma_inv, tree);
        const auto& e = *eptr;
        const auto lv = f.factor_values();
        std::vector<double> y(n);
        for (Index s = 0; s < num_samples; ++s) {
            for (Index p = 0; p < n; ++p)
                y[p] = rng::normal(seed ^ kSampleStream,
                                   pair_counter(n, s, 0) + static_cast<std::uint64_t>(p));
            for (Index j = n - 1; j >= 0; --j) {
                const auto bj = e.below(j);
                const Index base = e.kdiag(j) + 1;
                double acc = y[j];
                for (std::size_t t = 0; t < bj.size(); ++t)
                    acc -= lv[base + t] * y[bj[t]];
                y[j] = acc / lv[e.kdiag(j)];
            }
            for (Index p = 0; p < n; ++p) data[s * n + e.ordering.perm[p]] = y[p];
        }
    }
    return {SampleMatrix(n, num_samples, std::move(data)), std::move(sigma_inv)};
}

void ScalingReport::write_text(std::ostream& out) const {
    out << "      n        m   embed(s)   solve(s)        gap       feas  newton  cg_med\n";
    for (const auto& r : rows) {
        if (!r.ok) {
            out << "  " << r.n << "  FAILED: " << r.error << "\n";
            continue;
        }
        out << "  " << r.n << "  " << r.m << "  " << r.seconds_embed << "  "
            << r.seconds_solve << "  " << r.gap << "  " << r.feas << "  "
            << r.newton_steps << "  " << r.cg_median << "\n";
    }
    out << "log-log slope of total runtime: " << loglog_slope << "\n";
}

void ScalingReport::write_kv(std::ostream& out, bool timings) const {
    out.precision(17);
    for (const auto& r : rows) {
        out << "size=" << r.n << " m=" << r.m << " ok=" << (r.ok ? 1 : 0)
            << " gap=" << r.gap << " feas=" << r.feas << " newton=" << r.newton_steps
            << " cg_median=" << r.cg_median;
        if (timings)
            out << " seconds_embed=" << r.seconds_embed
                << " seconds_solve=" << r.seconds_solve;
        out << "\n";
    }
    if (timings) out << "loglog_slope=" << loglog_slope << "\n";
}

ScalingReport scaling_run(std::span<const Index> sizes, const ScalingConfig& cfg) {
    for (std::size_t k = 1; k < sizes.size(); ++k)
        if (sizes[k] <= sizes[k - 1])
            throw InvalidArgument("scaling_run: sizes must be strictly increasing");

    ScalingReport rep;
    for (const Index n : sizes) {
        SizeResult row;
        row.n = n;
        try {
            const SparseSymMatrix c = gen_banded(n, cfg.bandwidth, cfg.seed);
            MdmcResult mr = solve_mdmc(c, {cfg.solver, cfg.amalgamate});
            row.m = mr.embed.m;
            row.seconds_embed = mr.report.seconds_embed;
            row.seconds_solve = mr.report.seconds_solve;
            row.gap = mr.report.final_gap;
            row.feas = mr.report.final_feas;
            row.newton_steps = mr.report.newton_steps;
            row.cg_median = mr.report.cg_median();
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rep.rows.push_back(std::move(row));
    }

    // least squares slope on (log n, log seconds)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long k = 0;
    for (const auto& r : rep.rows) {
        if (!r.ok) continue;
        const double total = r.seconds_embed + r.seconds_solve;
        if (total <= 0) continue;
        const double x = std::log(static_cast<double>(r.n));
        const double y = std::log(total);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++k;
    }
    rep.loglog_slope =
        k >= 2 ? (k * sxy - sx * sy) / (k * sxx - sx * sx) : 0.0;
    return rep;
}

}  // namespace mdmc
