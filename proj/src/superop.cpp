#include "fermiwalk/superop.hpp"

#include <cmath>

#include "fermiwalk/errors.hpp"

namespace fqw {

Vector vectorize(const Matrix& X) {
  return Eigen::Map<const Vector>(X.data(), X.size());
}

Matrix devectorize(const Vector& v, Eigen::Index rows) {
  if (rows <= 0 || v.size() % rows != 0)
    throw InvalidInput("vector length is not a multiple of the row count");
  return Eigen::Map<const Matrix>(v.data(), rows, v.size() / rows);
}

Matrix kron(const Matrix& A, const Matrix& B) {
  Matrix out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

Matrix sandwich_superop(const Matrix& A, const Matrix& B) {
  return kron(B.transpose(), A);
}

Complex hs_inner(const Matrix& X, const Matrix& Y) {
  return (X.adjoint() * Y).trace();
}

double opnorm(const Matrix& X) {
  if (X.size() == 0) return 0.0;
  return X.jacobiSvd().singularValues()(0);
}

Matrix choi_matrix(const Matrix& S) {
  const auto dim2 = S.rows();
  const auto D = static_cast<Eigen::Index>(std::llround(std::sqrt(double(dim2))));
  if (D * D != dim2 || S.cols() != dim2)
    throw InvalidInput("superoperator must be square with square dimension");
  Matrix C(dim2, dim2);
  for (Eigen::Index a = 0; a < D; ++a)
    for (Eigen::Index i = 0; i < D; ++i)
      for (Eigen::Index b = 0; b < D; ++b)
        for (Eigen::Index j = 0; j < D; ++j)
          C(a * D + i, b * D + j) = S(i + D * j, a + D * b);
  return C;
}

}  // namespace fqw
