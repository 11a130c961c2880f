#pragma once

#include <stdexcept>
#include <string>

namespace mdmc {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad caller input: dimension mismatches, out-of-range indices, invalid
/// parameter values.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, long line = -1)
        : Error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

/// A nonpositive pivot during sparse Cholesky: the input matrix is not
/// positive definite. Carries the clique and column where the pivot failed.
class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(const std::string& what, long clique = -1, long column = -1)
        : Error(what), clique_(clique), column_(column) {}
    long clique() const { return clique_; }
    long column() const { return column_; }

private:
    long clique_;
    long column_;
};

/// Some clique submatrix of S is not positive definite, certifying that S
/// has no positive definite completion.
class NotCompletable : public Error {
public:
    NotCompletable(const std::string& what, long clique = -1)
        : Error(what), clique_(clique) {}
    long clique() const { return clique_; }

private:
    long clique_;
};

/// The line search could not find an admissible step above its minimum.
class StallError : public Error {
public:
    using Error::Error;
};

}  // namespace mdmc
