#pragma once

#include "mdmc/sparse_sym.hpp"

#include <optional>

namespace mdmc {

/// Per-pair soft-threshold weights: either one scalar for every off-diagonal
/// pair, or a sparse table with a default for unlisted pairs. Diagonal pairs
/// are never thresholded and carry no weight.
class LambdaSpec {
public:
    static LambdaSpec uniform(double lambda);
    static LambdaSpec table(SparseSymMatrix offdiag_weights, double default_value);

    double value(Index i, Index j) const {
        if (!table_) return default_;
        const Index e = table_->pattern().entry_index(i, j);
        return e >= 0 ? table_->value(e) : default_;
    }
    double default_value() const { return default_; }
    bool is_uniform() const { return !table_.has_value(); }

private:
    double default_ = 0.0;
    std::optional<SparseSymMatrix> table_;
};

/// Soft-threshold tie and weight report (checked while thresholding, never
/// enforced): pairs with |C_ij| exactly equal to lambda_ij, and pairs whose
/// weight is zero.
struct ThresholdWarnings {
    long tie_count = 0;
    long zero_lambda_count = 0;
    std::vector<IndexPair> tie_sample;  // at most a handful, for messages

    bool clean() const { return tie_count == 0 && zero_lambda_count == 0; }
};

/// One entry of the soft-threshold map: diagonal entries pass through, an
/// off-diagonal c shrinks toward zero by lambda and maps to 0 when
/// |c| <= lambda. Throws InvalidArgument for negative lambda.
double soft_threshold_entry(double c, double lambda, bool diagonal);

struct ThresholdResult {
    SparseSymMatrix matrix;  // C_H: thresholded, projected, zeros dropped
    ThresholdWarnings warnings;
};

/// Blockwise soft-thresholding of a dense covariance. Off-diagonal survivors
/// keep shrunken values; exact zeros are dropped from the pattern; the
/// diagonal is always kept and must be strictly positive. When prior is
/// given, only its pairs are considered. Output is identical for any block
/// size and thread count.
ThresholdResult threshold_covariance(const Eigen::MatrixXd& c, const LambdaSpec& lambda,
                                     const SparsityPattern* prior = nullptr,
                                     Index block_size = 4000, int threads = 1);

/// Same, forming covariance blocks on the fly from samples; peak additional
/// memory is O(block_size^2 + n) beyond inputs and output.
ThresholdResult threshold_covariance(const SampleMatrix& x, const LambdaSpec& lambda,
                                     const SparsityPattern* prior = nullptr,
                                     Index block_size = 4000, int threads = 1);

}  // namespace mdmc
