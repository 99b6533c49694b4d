#pragma once

#include "fermiwalk/types.hpp"

namespace fqw {

// Column-stacking vectorization of B(H) with the Hilbert-Schmidt inner
// product. Matrix units are the implicit orthonormal operator basis, so the
// HS adjoint of a map is the conjugate transpose of its superoperator matrix.

Vector vectorize(const Matrix& X);
Matrix devectorize(const Vector& v, Eigen::Index rows);
Matrix kron(const Matrix& A, const Matrix& B);

// Superoperator matrix of X -> A X B.
Matrix sandwich_superop(const Matrix& A, const Matrix& B);

Complex hs_inner(const Matrix& X, const Matrix& Y);

// Operator 2-norm (largest singular value).
double opnorm(const Matrix& X);

// Choi matrix of a superoperator by index reshuffle; PSD iff the map is
// completely positive.
Matrix choi_matrix(const Matrix& S);

}  // namespace fqw
