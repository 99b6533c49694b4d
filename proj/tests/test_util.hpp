#pragma once

#include <Eigen/Dense>
#include <complex>
#include <random>

// Shared helpers for the test binaries. Deliberately independent of the
// library: random objects are built from first principles so they can serve
// as oracles.
namespace testutil {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

inline double gauss(std::mt19937_64& rng) {
  double u = 0.0;
  while (u == 0.0) u = uniform01(rng);
  const double v = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

inline Complex cgauss(std::mt19937_64& rng) {
  const double re = gauss(rng);
  const double im = gauss(rng);
  return {re, im};
}

inline Vector random_vector(int d, std::mt19937_64& rng) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = cgauss(rng);
  return v;
}

inline Matrix random_matrix(int r, int c, std::mt19937_64& rng) {
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = cgauss(rng);
  return m;
}

inline Matrix random_hermitian(int d, std::mt19937_64& rng) {
  Matrix m = random_matrix(d, d, rng);
  return 0.5 * (m + m.adjoint()).eval();
}

inline Matrix random_unitary(int d, std::mt19937_64& rng) {
  Matrix g = random_matrix(d, d, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) {
    const Complex rjj = r(j, j);
    q.col(j) *= rjj / std::abs(rjj);
  }
  return q;
}

inline double opnorm(const Matrix& m) {
  return m.jacobiSvd().singularValues()(0);
}

}  // namespace testutil
