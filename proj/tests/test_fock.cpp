#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "fermiwalk/errors.hpp"
#include "fermiwalk/fock.hpp"
#include "test_util.hpp"

using namespace fqw;
using testutil::cgauss;
using testutil::random_hermitian;
using testutil::random_unitary;
using testutil::random_vector;

namespace {

int perm_sign(const std::vector<int>& p) {
  int s = 1;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      if (p[i] > p[j]) s = -s;
  return s;
}

// Independent oracle: expand both wedges into sums of elementary tensors and
// take the tensor inner product term by term.
Complex wedge_inner_bruteforce(const std::vector<Vector>& u,
                               const std::vector<Vector>& v) {
  const int n = static_cast<int>(u.size());
  std::vector<int> pi(n), sigma(n);
  std::iota(pi.begin(), pi.end(), 0);
  Complex total = 0.0;
  do {
    std::iota(sigma.begin(), sigma.end(), 0);
    do {
      Complex term = double(perm_sign(pi) * perm_sign(sigma));
      for (int k = 0; k < n; ++k) term *= u[pi[k]].dot(v[sigma[k]]);
      total += term;
    } while (std::next_permutation(sigma.begin(), sigma.end()));
  } while (std::next_permutation(pi.begin(), pi.end()));
  double fact = 1.0;
  for (int k = 2; k <= n; ++k) fact *= k;
  return total / fact;
}

Matrix herm_exp_i(const Matrix& H) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  const auto& w = es.eigenvalues();
  Matrix phases = Matrix::Zero(H.rows(), H.cols());
  for (Eigen::Index k = 0; k < w.size(); ++k)
    phases(k, k) = std::exp(Complex(0.0, w(k)));
  return es.eigenvectors() * phases * es.eigenvectors().adjoint();
}

}  // namespace

TEST_CASE("basis enumeration is sector-major and lexicographic") {
  FockBasis b(3);
  CHECK(b.dim() == 8);
  CHECK(b.sector_dim(0) == 1);
  CHECK(b.sector_dim(1) == 3);
  CHECK(b.sector_dim(2) == 3);
  CHECK(b.sector_dim(3) == 1);
  CHECK(b.state(0).sites.empty());
  CHECK(b.state(4).sites == std::vector<int>{1, 2});
  CHECK(b.state(5).sites == std::vector<int>{1, 3});
  CHECK(b.state(6).sites == std::vector<int>{2, 3});
  CHECK(b.state(7).sites == std::vector<int>{1, 2, 3});
  CHECK(b.index_of({1, 3}) == 5);
  CHECK(b.sector_of(7) == 3);
  for (int n = 0; n <= 3; ++n) {
    for (int i = 0; i < b.sector_dim(n); ++i) {
      const auto& s = b.state(b.sector_offset(n) + i).sites;
      CHECK(static_cast<int>(s.size()) == n);
      CHECK(std::is_sorted(s.begin(), s.end()));
    }
  }
  CHECK(FockBasis(12).dim() == 4096);
  CHECK_THROWS_AS(FockBasis(0), InvalidInput);
  CHECK_THROWS_AS(FockBasis(13), InvalidInput);
}

TEST_CASE("canonical anticommutation relations hold elementwise") {
  for (int d : {2, 3, 4}) {
    FockBasis b(d);
    const Matrix id = Matrix::Identity(b.dim(), b.dim());
    for (int i = 1; i <= d; ++i) {
      const Matrix ai = annihilation_op(b, i);
      const Matrix ci = creation_op(b, i);
      CHECK((ci - ai.adjoint()).cwiseAbs().maxCoeff() == 0.0);
      for (int j = 1; j <= d; ++j) {
        const Matrix aj = annihilation_op(b, j);
        const Matrix cj = creation_op(b, j);
        const Matrix anti = ai * cj + cj * ai;
        const Matrix target = (i == j) ? id : Matrix::Zero(b.dim(), b.dim());
        CHECK((anti - target).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((ai * aj + aj * ai).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((ci * cj + cj * ci).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
}

TEST_CASE("annihilation sign on a three-site filled state") {
  FockBasis b(3);
  Vector filled = Vector::Zero(8);
  filled(b.index_of({1, 2, 3})) = 1.0;
  const Vector out = annihilation_op(b, 2) * filled;
  Vector expect = Vector::Zero(8);
  expect(b.index_of({1, 3})) = -1.0;
  CHECK((out - expect).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((annihilation_op(b, 1) * Vector::Unit(8, 0)).norm() == 0.0);
}

TEST_CASE("number operators count occupation and sum to the sector grading") {
  FockBasis b(4);
  Matrix total = Matrix::Zero(b.dim(), b.dim());
  for (int j = 1; j <= 4; ++j) {
    const Matrix nj = number_op(b, j);
    CHECK((nj - creation_op(b, j) * annihilation_op(b, j)).cwiseAbs().maxCoeff() <= 1e-12);
    total += nj;
  }
  for (int i = 0; i < b.dim(); ++i) CHECK(total(i, i) == double(b.sector_of(i)));
  CHECK((total - second_quantize_generator(b, Matrix::Identity(4, 4))).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("wedge inner product equals the Gram determinant") {
  std::mt19937_64 rng(20260816);
  for (int n : {2, 3}) {
    for (int rep = 0; rep < 4; ++rep) {
      std::vector<Vector> u, v;
      for (int k = 0; k < n; ++k) {
        u.push_back(random_vector(4, rng));
        v.push_back(random_vector(4, rng));
      }
      const Complex got = wedge_gram(u, v);
      const Complex want = wedge_inner_bruteforce(u, v);
      CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
    }
  }
  std::vector<Vector> dup = {random_vector(3, rng)};
  dup.push_back(dup[0]);
  CHECK(std::abs(wedge_gram(dup, dup)) <= 1e-12);
  CHECK_THROWS_AS(wedge_gram({}, {}), InvalidInput);
  CHECK_THROWS_AS(wedge_gram({dup[0]}, dup), InvalidInput);
}

TEST_CASE("second-quantized unitary matches the product construction") {
  std::mt19937_64 rng(7);
  FockBasis b(3);
  const Matrix U = random_unitary(3, rng);
  const Matrix G = second_quantize_unitary(b, U);
  Vector vac = Vector::Unit(b.dim(), 0);
  for (int idx = 0; idx < b.dim(); ++idx) {
    Vector col = vac;
    const auto& sites = b.state(idx).sites;
    for (auto it = sites.rbegin(); it != sites.rend(); ++it)
      col = creation_op(b, Vector(U.col(*it - 1))) * col;
    CHECK((G.col(idx) - col).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("second quantization is multiplicative, unitary, block diagonal") {
  std::mt19937_64 rng(11);
  FockBasis b(4);
  const Matrix U1 = random_unitary(4, rng);
  const Matrix U2 = random_unitary(4, rng);
  const Matrix G1 = second_quantize_unitary(b, U1);
  const Matrix G2 = second_quantize_unitary(b, U2);
  const Matrix G12 = second_quantize_unitary(b, Matrix(U1 * U2));
  CHECK((G1 * G2 - G12).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((G1.adjoint() * G1 - Matrix::Identity(16, 16)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((second_quantize_unitary(b, Matrix::Identity(4, 4)) - Matrix::Identity(16, 16))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK(std::abs(G1(15, 15) - U1.determinant()) <= 1e-10);
  for (int i = 0; i < b.dim(); ++i)
    for (int j = 0; j < b.dim(); ++j)
      if (b.sector_of(i) != b.sector_of(j)) CHECK(G1(i, j) == 0.0);
  CHECK_THROWS_AS(second_quantize_unitary(b, Matrix(2.0 * U1)), InvalidInput);
}

TEST_CASE("second-quantized generator obeys the one-body matrix elements") {
  std::mt19937_64 rng(13);
  FockBasis b(3);
  const Matrix H = random_hermitian(3, rng);
  const Matrix dG = second_quantize_generator(b, H);
  Matrix want = Matrix::Zero(b.dim(), b.dim());
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 3; ++j)
      want += H(i - 1, j - 1) * creation_op(b, i) * annihilation_op(b, j);
  CHECK((dG - want).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((dG - dG.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(second_quantize_generator(b, Matrix(H + Matrix::Identity(3, 3) * Complex(0, 1))),
                  InvalidInput);
}

TEST_CASE("diagonal generators lift to occupation sums") {
  FockBasis b(4);
  Matrix H = Matrix::Zero(4, 4);
  const double eps[4] = {0.3, -1.1, 2.0, 0.7};
  for (int j = 0; j < 4; ++j) H(j, j) = eps[j];
  const Matrix dG = second_quantize_generator(b, H);
  for (int idx = 0; idx < b.dim(); ++idx) {
    double want = 0.0;
    for (int j : b.state(idx).sites) want += eps[j - 1];
    CHECK(std::abs(dG(idx, idx) - want) <= 1e-14);
  }
  CHECK(dG.cwiseAbs().sum() == doctest::Approx(dG.cwiseAbs().trace()).epsilon(1e-14));
}

TEST_CASE("exponential intertwines the two second quantizations") {
  std::mt19937_64 rng(17);
  FockBasis b(3);
  const Matrix H = random_hermitian(3, rng);
  const Matrix lhs = herm_exp_i(second_quantize_generator(b, H));
  const Matrix rhs = second_quantize_unitary(b, herm_exp_i(H));
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("second quantization implements the Bogoliubov rotation") {
  std::mt19937_64 rng(19);
  FockBasis b(3);
  const Matrix U = random_unitary(3, rng);
  const Matrix G = second_quantize_unitary(b, U);
  const Vector phi = random_vector(3, rng);
  const Matrix lhs_c = G * creation_op(b, phi) * G.adjoint();
  const Matrix rhs_c = creation_op(b, Vector(U * phi));
  CHECK((lhs_c - rhs_c).cwiseAbs().maxCoeff() <= 1e-10);
  const Matrix lhs_a = G * annihilation_op(b, phi) * G.adjoint();
  const Matrix rhs_a = annihilation_op(b, Vector(U * phi));
  CHECK((lhs_a - rhs_a).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("invalid site indices are rejected") {
  FockBasis b(3);
  CHECK_THROWS_AS(creation_op(b, 0), InvalidInput);
  CHECK_THROWS_AS(annihilation_op(b, 4), InvalidInput);
  CHECK_THROWS_AS(number_op(b, -1), InvalidInput);
}
