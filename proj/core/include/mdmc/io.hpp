#pragma once

#include "mdmc/sparse_sym.hpp"

#include <string>

namespace mdmc::io {

/// Reads a `%%MatrixMarket matrix coordinate real symmetric` file
/// (1-based indices, either triangle accepted). Throws ParseError with the
/// offending line number on malformed input.
SparseSymMatrix read_matrix_market(const std::string& path);

/// Writes the lower triangle in coordinate symmetric format.
void write_matrix_market(const std::string& path, const SparseSymMatrix& m);

/// Reads just the sparsity structure. Accepts `coordinate real symmetric`
/// (nonzero structure taken) and `coordinate pattern symmetric` files.
SparsityPattern read_pattern(const std::string& path);

void write_pattern(const std::string& path, const SparsityPattern& p);

/// Sample file, either format (sniffed by magic):
///   text:   header line "n N", then N lines of n decimals (one sample per line)
///   binary: magic "SMPL", two little-endian 64-bit counts n and N, then
///           column-major 64-bit floats (n * N of them)
SampleMatrix read_samples(const std::string& path, bool center = true);

void write_samples_text(const std::string& path, const SampleMatrix& x);
void write_samples_binary(const std::string& path, const SampleMatrix& x);

}  // namespace mdmc::io
