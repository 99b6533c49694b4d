#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "fermiwalk/coupling.hpp"
#include "fermiwalk/errors.hpp"
#include "fermiwalk/fock.hpp"
#include "fermiwalk/genericity.hpp"
#include "fermiwalk/spectral.hpp"

using namespace fqw;

TEST_CASE("haar draws are unitary and seed-deterministic") {
  const Matrix U = haar_unitary(5, 42, 7);
  const Matrix again = haar_unitary(5, 42, 7);
  CHECK((U.array() == again.array()).all());
  CHECK((U.adjoint() * U - Matrix::Identity(5, 5)).norm() <= 1e-12);

  const Matrix other_index = haar_unitary(5, 42, 8);
  const Matrix other_seed = haar_unitary(5, 43, 7);
  CHECK((U - other_index).norm() > 1e-3);
  CHECK((U - other_seed).norm() > 1e-3);
  CHECK((other_index - other_seed).norm() > 1e-3);
}

TEST_CASE("single site draws a uniform phase") {
  const int N = 2000;
  Complex mean = 0.0;
  for (int i = 0; i < N; ++i) {
    const Matrix U = haar_unitary(1, 11, std::uint64_t(i));
    CHECK(std::abs(std::abs(U(0, 0)) - 1.0) <= 1e-12);
    mean += U(0, 0);
  }
  mean /= double(N);
  // Re and Im of a uniform phase each have variance 1/2.
  const double three_sigma = 3.0 * std::sqrt(0.5 / N);
  CHECK(std::abs(mean.real()) <= three_sigma);
  CHECK(std::abs(mean.imag()) <= three_sigma);
}

TEST_CASE("entry second moments match the flat 1/d profile") {
  const int d = 4, N = 10000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < N; ++i)
    acc += haar_unitary(d, 123, std::uint64_t(i)).cwiseAbs2();
  acc /= double(N);
  // |U_jk|^2 is Beta(1, d-1): mean 1/d, variance (d-1)/(d^2 (d+1)).
  const double sigma = std::sqrt((d - 1.0) / (double(d) * d * (d + 1.0)) / N);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c)
      CHECK(std::abs(acc(r, c) - 1.0 / d) <= 3.0 * sigma);
}

TEST_CASE("minor scan catches exact zeros and finds the argmin") {
  const int d = 4;
  const MinorScan scan = minor_scan(Matrix::Identity(d, d), d);
  CHECK(scan.min_abs == 0.0);
  CHECK(scan.by_size.size() == 4);
  CHECK(scan.by_size[0].min_abs == 0.0); // any off-diagonal 1x1 minor
  CHECK(scan.by_size[0].rows != scan.by_size[0].cols);
  // The full-size minor is det(I) = 1, reported exactly.
  CHECK(scan.by_size[3].min_abs == 1.0);
  CHECK(scan.by_size[3].rows == std::vector<int>{1, 2, 3, 4});

  // A matrix with every minor nonzero: all by-size minima strictly positive.
  const MinorScan generic = minor_scan(haar_unitary(d, 5), d);
  for (const MinorRecord& rec : generic.by_size) {
    CHECK(rec.min_abs > 0.0);
    CHECK(int(rec.rows.size()) == rec.n);
    CHECK(int(rec.cols.size()) == rec.n);
  }
}

TEST_CASE("minors are equivalent to corner minors after permutation") {
  const int d = 5, n = 3;
  const Matrix U = haar_unitary(d, 77);
  const std::vector<int> rows = {0, 2, 4};
  const std::vector<int> cols = {1, 2, 3};

  // Row permutation bringing `rows` to the top, column permutation bringing
  // `cols` to the left, both order-preserving inside and outside the subset.
  auto perm_order = [d](const std::vector<int>& sel) {
    std::vector<int> order = sel;
    for (int i = 0; i < d; ++i) {
      bool in = false;
      for (int s : sel) in = in || (s == i);
      if (!in) order.push_back(i);
    }
    return order;
  };
  const std::vector<int> rord = perm_order(rows), cord = perm_order(cols);
  Matrix moved(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) moved(r, c) = U(rord[r], cord[c]);

  Matrix sub(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) sub(r, c) = U(rows[r], cols[c]);
  CHECK((moved.topLeftCorner(n, n).array() == sub.array()).all());
  CHECK(moved.topLeftCorner(n, n).determinant() == sub.determinant());
}

TEST_CASE("smallest corner singular value has no atom at zero") {
  const int d = 4, n = 2, N = 4000;
  std::vector<double> smin;
  smin.reserve(N);
  for (int i = 0; i < N; ++i) {
    const Matrix U = haar_unitary(d, 314, std::uint64_t(i));
    Eigen::JacobiSVD<Matrix> svd(U.topLeftCorner(n, n));
    smin.push_back(svd.singularValues()(n - 1));
  }
  int below_tiny = 0, bin0 = 0, bin1 = 0;
  double minimum = 1.0;
  const double h = 0.02;
  for (double s : smin) {
    minimum = std::min(minimum, s);
    if (s < 1e-6) ++below_tiny;
    if (s < h)
      ++bin0;
    else if (s < 2 * h)
      ++bin1;
  }
  CHECK(below_tiny == 0);
  CHECK(minimum > 1e-6);
  // A continuous density vanishing at the origin puts no more mass in the
  // first bin than the second.
  CHECK(bin0 <= bin1);
}

TEST_CASE("a thousand draws keep every minor away from zero") {
  const int d = 4;
  double global_min = 1.0;
  for (int i = 0; i < 1000; ++i) {
    const HaarSample s = haar_sample(d, 2026, std::uint64_t(i));
    CHECK(s.min_by_size.size() == 4);
    global_min = std::min(global_min, s.min_abs_minor);
  }
  CHECK(global_min >= 1e-12);
}

TEST_CASE("scan budget and argument validation") {
  CHECK_THROWS_AS(minor_scan(haar_unitary(9, 1), 2), BudgetError);
  CHECK_THROWS_AS(minor_scan(haar_unitary(3, 1), 4), InvalidInput);
  CHECK_THROWS_AS(minor_scan(haar_unitary(3, 1), 0), InvalidInput);
  CHECK_THROWS_AS(minor_scan(Matrix::Identity(3, 2), 2), InvalidInput);
  CHECK_THROWS_AS(haar_unitary(0, 1), InvalidInput);

  // Beyond the scan cap the draw still works; the scan fields stay empty.
  const HaarSample big = haar_sample(9, 1);
  CHECK(big.U.rows() == 9);
  CHECK(big.min_by_size.empty());
  CHECK(std::isnan(big.min_abs_minor));
}

TEST_CASE("random walks generically pass the phase separation check") {
  for (int i = 0; i < 100; ++i) {
    const Matrix V = haar_unitary(4, 909, std::uint64_t(i));
    CHECK(check_phase_nondegeneracy(V).pass);
  }
}

TEST_CASE("random walks generically pass all spectral assumptions") {
  const FockBasis basis(4);
  const CouplingModel coupling = hopping_coupling(basis, 0.0);
  int passed = 0;
  const int N = 120;
  for (int i = 0; i < N; ++i) {
    const Matrix V = haar_unitary(4, 5150, std::uint64_t(i));
    if (check_assumptions(coupling, V).spectral_assumptions_pass()) ++passed;
  }
  CHECK(double(passed) / N > 0.99);
}
