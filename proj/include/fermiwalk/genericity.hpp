#pragma once

#include <cstdint>
#include <vector>

#include "fermiwalk/types.hpp"

namespace fqw {

// Result of exhaustively enumerating square minors of a matrix.
struct MinorRecord {
  int n = 0;          // minor size
  double min_abs = 0; // smallest |det| among all n x n minors
  std::vector<int> rows; // 1-based row sites of the argmin minor
  std::vector<int> cols; // 1-based column sites of the argmin minor
};

struct MinorScan {
  double min_abs = 0;               // minimum over every size scanned
  std::vector<MinorRecord> by_size; // sizes 1..n_max in order
};

// One Haar-distributed unitary together with its minor statistics.
// min_abs_minor / min_by_size are filled only when d <= 8 (the exhaustive
// scan cap); beyond that they stay NaN/empty.
struct HaarSample {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  Matrix U;
  double min_abs_minor = 0;
  std::vector<double> min_by_size; // [n-1] = min |det| over n x n minors
};

// Draw a d x d Haar unitary, deterministically in (seed, index).
// Each sample owns its own RNG stream keyed by the pair, so Monte Carlo
// loops may be distributed without changing any draw. The draw is a
// complex-Gaussian matrix, Householder orthonormalization, and a column
// phase normalization against the triangular factor's diagonal (without
// which the orthonormalized Gaussian is not Haar).
Matrix haar_unitary(int d, std::uint64_t seed, std::uint64_t index = 0);

// Enumerate |det U[rows, cols]| over all row/column subsets of each size
// n = 1..n_max. Exhaustive — binom(d,n)^2 determinants per size — and
// therefore capped at d <= 8 (BudgetError beyond).
MinorScan minor_scan(const Matrix& U, int n_max);

// Draw a Haar unitary and scan all of its minors (when d <= 8).
HaarSample haar_sample(int d, std::uint64_t seed, std::uint64_t index = 0);

} // namespace fqw
