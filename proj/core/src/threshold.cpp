#include "mdmc/threshold.hpp"

#include "mdmc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>

namespace mdmc {

LambdaSpec LambdaSpec::uniform(double lambda) {
    if (lambda < 0) throw InvalidArgument("lambda must be nonnegative");
    LambdaSpec spec;
    spec.default_ = lambda;
    return spec;
}

LambdaSpec LambdaSpec::table(SparseSymMatrix offdiag_weights, double default_value) {
    if (default_value < 0) throw InvalidArgument("default lambda must be nonnegative");
    for (const double w : offdiag_weights.values())
        if (w < 0) throw InvalidArgument("lambda table has a negative weight");
    LambdaSpec spec;
    spec.default_ = default_value;
    spec.table_ = std::move(offdiag_weights);
    return spec;
}

double soft_threshold_entry(double c, double lambda, bool diagonal) {
    if (lambda < 0) throw InvalidArgument("lambda must be nonnegative");
    if (diagonal) return c;
    if (c > lambda) return c - lambda;
    if (c < -lambda) return c + lambda;
    return 0.0;
}

namespace {

struct Triplet {
    Index i, j;
    double v;
};

// Threshold one block of the lower triangle: global columns [c0, c1),
// global rows [r0, r1) with the i >= j constraint applied entrywise.
// `block(bi, bj)` must return C(r0 + bi, c0 + bj).
template <typename BlockFn>
void threshold_block(Index r0, Index r1, Index c0, Index c1, BlockFn&& block,
                     const LambdaSpec& lambda, const SparsityPattern* prior,
                     std::vector<Triplet>& out, ThresholdWarnings& warn) {
    for (Index j = c0; j < c1; ++j) {
        for (Index i = std::max(r0, j); i < r1; ++i) {
            if (prior && !prior->contains(i, j)) continue;
            const double c = block(i - r0, j - c0);
            if (!std::isfinite(c))
                throw InvalidArgument("covariance entry (" + std::to_string(i) + ", " +
                                      std::to_string(j) + ") is not finite");
            if (i == j) {
                if (c <= 0)
                    throw InvalidArgument("covariance diagonal C(" + std::to_string(i) +
                                          ", " + std::to_string(i) +
                                          ") must be strictly positive");
                out.push_back({i, j, c});
                continue;
            }
            const double l = lambda.value(i, j);
            if (l == 0.0) ++warn.zero_lambda_count;
            if (std::abs(c) == l && c != 0.0) {
                ++warn.tie_count;
                if (warn.tie_sample.size() < 8) warn.tie_sample.push_back({i, j});
            }
            const double v = soft_threshold_entry(c, l, false);
            if (v != 0.0) out.push_back({i, j, v});
        }
    }
}

struct BlockTask {
    Index r0, r1, c0, c1;
};

ThresholdResult assemble(std::vector<std::vector<Triplet>> per_block,
                         std::vector<ThresholdWarnings> warns, Index n) {
    ThresholdWarnings warn;
    std::size_t total = 0;
    for (const auto& v : per_block) total += v.size();
    std::vector<Triplet> all;
    all.reserve(total);
    for (auto& v : per_block) all.insert(all.end(), v.begin(), v.end());
    for (const auto& w : warns) {
        warn.tie_count += w.tie_count;
        warn.zero_lambda_count += w.zero_lambda_count;
        for (const auto& p : w.tie_sample)
            if (warn.tie_sample.size() < 8) warn.tie_sample.push_back(p);
    }
    std::sort(all.begin(), all.end(), [](const Triplet& a, const Triplet& b) {
        return a.j != b.j ? a.j < b.j : a.i < b.i;
    });
    std::vector<IndexPair> pairs;
    pairs.reserve(all.size());
    for (const auto& t : all) pairs.emplace_back(t.i, t.j);
    auto pat = std::make_shared<SparsityPattern>(SparsityPattern::build(n, pairs));
    SparseSymMatrix m(pat);
    for (const auto& t : all) m.values()[pat->entry_index(t.i, t.j)] = t.v;
    return {std::move(m), warn};
}

template <typename MakeBlock>
ThresholdResult run_blocks(Index n, const LambdaSpec& lambda, const SparsityPattern* prior,
                           Index block_size, int threads, MakeBlock&& make_block) {
    if (block_size < 1) throw InvalidArgument("block size must be >= 1");
    if (prior && prior->n() != n)
        throw InvalidArgument("prior pattern size does not match covariance size");
    const Index nb = (n + block_size - 1) / block_size;
    std::vector<BlockTask> tasks;
    for (Index bj = 0; bj < nb; ++bj) {
        for (Index bi = bj; bi < nb; ++bi) {
            tasks.push_back({bi * block_size, std::min(n, (bi + 1) * block_size),
                             bj * block_size, std::min(n, (bj + 1) * block_size)});
        }
    }
    std::vector<std::vector<Triplet>> per_block(tasks.size());
    std::vector<ThresholdWarnings> warns(tasks.size());

    auto run_task = [&](std::size_t t) {
        const auto& task = tasks[t];
        auto block = make_block(task);
        threshold_block(task.r0, task.r1, task.c0, task.c1, block, lambda, prior,
                        per_block[t], warns[t]);
    };

    threads = std::max(1, threads);
    if (threads == 1 || tasks.size() <= 1) {
        for (std::size_t t = 0; t < tasks.size(); ++t) run_task(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::future<void>> workers;
        const int nw = std::min<int>(threads, static_cast<int>(tasks.size()));
        for (int w = 0; w < nw; ++w) {
            workers.push_back(std::async(std::launch::async, [&] {
                for (std::size_t t = next.fetch_add(1); t < tasks.size();
                     t = next.fetch_add(1))
                    run_task(t);
            }));
        }
        for (auto& f : workers) f.get();  // rethrows worker errors
    }
    return assemble(std::move(per_block), std::move(warns), n);
}

}  // namespace

ThresholdResult threshold_covariance(const Eigen::MatrixXd& c, const LambdaSpec& lambda,
                                     const SparsityPattern* prior, Index block_size,
                                     int threads) {
    if (c.rows() != c.cols()) throw InvalidArgument("covariance must be square");
    const Index n = c.rows();
    return run_blocks(n, lambda, prior, block_size, threads, [&](const BlockTask& t) {
        return [&c, t](Index bi, Index bj) { return c(t.r0 + bi, t.c0 + bj); };
    });
}

ThresholdResult threshold_covariance(const SampleMatrix& x, const LambdaSpec& lambda,
                                     const SparsityPattern* prior, Index block_size,
                                     int threads) {
    const Index n = x.n();
    return run_blocks(n, lambda, prior, block_size, threads, [&](const BlockTask& t) {
        // form this covariance block from the samples, then discard it
        auto buf = std::make_shared<Eigen::MatrixXd>(
            sample_cov_block(x, t.r0, t.r1, t.c0, t.c1));
        return [buf](Index bi, Index bj) { return (*buf)(bi, bj); };
    });
}

}  // namespace mdmc
