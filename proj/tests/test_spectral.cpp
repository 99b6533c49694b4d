#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "fermiwalk/coupling.hpp"
#include "fermiwalk/dynamics.hpp"
#include "fermiwalk/errors.hpp"
#include "fermiwalk/fock.hpp"
#include "fermiwalk/spectral.hpp"
#include "fermiwalk/superop.hpp"
#include "test_util.hpp"

using namespace fqw;
using testutil::random_hermitian;
using testutil::random_matrix;
using testutil::random_unitary;

namespace {

const PeripheralCluster& find_cluster(const ContractionSplit& split, Complex value) {
  for (const auto& c : split.peripheral)
    if (std::abs(c.value - value) < 1e-6) return c;
  REQUIRE(false);
  return split.peripheral.front();
}

Matrix diag_phases(const std::vector<double>& phases) {
  Matrix V = Matrix::Zero(Eigen::Index(phases.size()), Eigen::Index(phases.size()));
  for (std::size_t k = 0; k < phases.size(); ++k)
    V(Eigen::Index(k), Eigen::Index(k)) = std::polar(1.0, phases[k]);
  return V;
}

}  // namespace

TEST_CASE("peripheral projectors of a similarity-transformed spectrum") {
  std::mt19937_64 rng(201);
  const double phi = 2.1;
  Vector d(4);
  d << Complex(1.0, 0.0), std::polar(1.0, phi), Complex(0.5, 0.0), Complex(0.3, 0.0);
  const Matrix X =
      Matrix::Identity(4, 4) + 0.25 * random_matrix(4, 4, rng);
  const Matrix Xinv = X.inverse();
  const Matrix A = X * d.asDiagonal() * Xinv;

  const auto split = contraction_split(A, 1e-9, 1e-8, 200);
  CHECK(split.peripheral_dim == 2);
  CHECK(split.peripheral.size() == 2);

  Matrix E = Matrix::Zero(4, 4);
  E(0, 0) = 1.0;
  E(1, 1) = 1.0;
  CHECK((split.P_circle - X * E * Xinv).norm() <= 1e-8);
  CHECK(split.gamma_raw == doctest::Approx(-std::log(0.5)).epsilon(1e-9));

  Matrix E1 = Matrix::Zero(4, 4);
  E1(0, 0) = 1.0;
  const auto& c1 = find_cluster(split, Complex(1.0, 0.0));
  CHECK(c1.multiplicity == 1);
  CHECK((c1.projector - X * E1 * Xinv).norm() <= 1e-8);
  Matrix E2 = Matrix::Zero(4, 4);
  E2(1, 1) = 1.0;
  const auto& c2 = find_cluster(split, std::polar(1.0, phi));
  CHECK((c2.projector - X * E2 * Xinv).norm() <= 1e-8);

  // The certified transient bound really dominates the powers it covers.
  const Matrix M = A * split.P_less;
  Matrix cur = M;
  for (int k = 1; k <= 60; ++k) {
    CHECK(cur.norm() <= split.c_bound * std::exp(-split.gamma_used * k) * (1 + 1e-12));
    cur = A * cur;
  }
}

TEST_CASE("guard-band eigenvalues refuse certification") {
  Matrix A = Matrix::Zero(3, 3);
  A(0, 0) = 1.0;
  A(1, 1) = 1.0 - 5e-9;
  A(2, 2) = 0.5;
  CHECK_THROWS_AS(contraction_split(A), AmbiguityError);

  A(1, 1) = 1.0 - 2e-8;  // just below the band: legitimate interior value
  const auto split = contraction_split(A);
  CHECK(split.peripheral_dim == 1);
  CHECK(split.gamma_raw == doctest::Approx(-std::log(1.0 - 2e-8)));
}

TEST_CASE("a transient-heavy interior block stays under the certified bound") {
  Matrix A = Matrix::Zero(3, 3);
  A(0, 0) = 1.0;
  A(1, 1) = 0.5;
  A(1, 2) = 100.0;
  A(2, 2) = 0.4;
  const auto split = contraction_split(A, 1e-9, 1e-8, 200);
  Matrix P = Matrix::Zero(3, 3);
  P(0, 0) = 1.0;
  CHECK((split.P_circle - P).norm() <= 1e-10);
  CHECK(split.c_bound >= 100.0);
  const Matrix M = A * split.P_less;
  Matrix cur = M;
  for (int k = 1; k <= 200; ++k) {
    CHECK(cur.norm() <= split.c_bound * std::exp(-split.gamma_used * k) * (1 + 1e-12));
    cur = A * cur;
  }
}

TEST_CASE("trivial coupling makes the one-step channel HS-unitary") {
  FockBasis basis(2);
  CouplingModel model = build_coupling_from_fock(basis, Matrix::Identity(4, 4));
  std::mt19937_64 rng(211);
  auto maps = build_channel_maps(model, random_unitary(2, rng));
  const auto split = contraction_split(maps.vphi);
  CHECK(split.peripheral_dim == 16);
  CHECK(split.P_less.norm() == 0.0);
  CHECK(std::isinf(split.gamma_raw));
  CHECK(split.c_bound == 0.0);
}

TEST_CASE("hopping channel: peripheral structure and steady state") {
  FockBasis basis(3);
  CouplingModel model = hopping_coupling(basis, 0.6);
  std::mt19937_64 rng(221);
  const Matrix V = random_unitary(3, rng);
  auto maps = build_channel_maps(model, V);

  const auto report = check_assumptions(model, V);
  REQUIRE(report.spectral_assumptions_pass());

  const auto split = contraction_split(maps.vphi, 1e-9, 1e-8, 200);
  for (const auto& c : split.peripheral) CHECK(std::abs(std::abs(c.value) - 1.0) <= 1e-12);

  // Fixed points: one per particle-number sector. The remaining peripheral
  // phases are the lifted walk determinant and its conjugate, carried by the
  // vacuum-filled coherences.
  const Complex detV = V.determinant();
  CHECK(find_cluster(split, Complex(1.0, 0.0)).multiplicity == 4);
  CHECK(find_cluster(split, detV).multiplicity == 1);
  CHECK(find_cluster(split, std::conj(detV)).multiplicity == 1);
  CHECK(split.peripheral_dim == 6);

  Matrix proj_sum = Matrix::Zero(64, 64);
  int mult_sum = 0;
  for (const auto& c : split.peripheral) {
    proj_sum += c.projector;
    mult_sum += c.multiplicity;
  }
  CHECK(mult_sum == 6);
  CHECK((proj_sum - split.P_circle).norm() <= 1e-8);

  // Power iteration of the state-picture channel converges to the
  // block-average steady state at the certified rate.
  Matrix rho0 = Matrix::Zero(8, 8);
  rho0(1, 1) = 0.65;  // one-particle state
  rho0(4, 4) = 0.35;  // two-particle state
  const Matrix target = steady_state(model, rho0);
  const Matrix Sadj = maps.vphi.adjoint();
  Vector v = vectorize(rho0);
  int steps = 0;
  double dist = std::numeric_limits<double>::infinity();
  while (steps < 5000 && dist > 1e-9) {
    v = Sadj * v;
    ++steps;
    dist = (devectorize(v, 8) - target).norm();
  }
  CHECK(dist <= 1e-9);
  // Certified decay: C e^{-gamma n} below 1e-9 caps the required steps.
  const int horizon =
      int(std::ceil(std::log(std::max(1.0, split.c_bound) / 1e-9) / split.gamma_used)) + 1;
  CHECK(steps <= horizon);

  // Eigenprojector route to the same limit.
  const Matrix P1 = find_cluster(split, Complex(1.0, 0.0)).projector;
  const Matrix via_projector = devectorize(P1.adjoint() * vectorize(rho0), 8);
  CHECK((via_projector - target).norm() <= 1e-8);
}

TEST_CASE("assumption checks separate generic from aligned walks") {
  FockBasis basis(4);
  CouplingModel model = hopping_coupling(basis, 0.3);
  std::mt19937_64 rng(231);

  SUBCASE("generic walk passes everything") {
    const Matrix V = random_unitary(4, rng);
    const auto report = check_assumptions(model, V, 1e-10, true);
    CHECK(report.phase_nondegeneracy.pass);
    CHECK(report.diagonal_overlaps.pass);
    CHECK(report.offdiagonal_connectivity.pass);
    CHECK(report.corner_algebra == TriState::yes);
  }

  SUBCASE("walk diagonal in the coupling eigenbasis fails the overlap checks") {
    REQUIRE(model.has_single_particle());
    const Matrix F = model.sp->eigenbasis;
    const Matrix D = diag_phases({0.31, 0.87, 1.91, 2.77});
    const Matrix V = F * D * F.adjoint();
    const auto report = check_assumptions(model, V, 1e-10, true);
    CHECK(report.phase_nondegeneracy.pass);
    CHECK_FALSE(report.diagonal_overlaps.pass);
    CHECK(report.diagonal_overlaps.margin <= 1e-12);
    CHECK_FALSE(report.offdiagonal_connectivity.pass);
    CHECK(report.corner_algebra == TriState::no);
  }

  SUBCASE("arithmetic-progression phases collide") {
    const Matrix V = diag_phases({0.3, 0.5, 0.7, 1.9});
    const auto res = check_phase_nondegeneracy(V);
    CHECK_FALSE(res.pass);
    CHECK(res.margin <= 1e-12);
  }
}

TEST_CASE("three-site corners are scalar and trivially complete") {
  FockBasis basis(3);
  CouplingModel model = hopping_coupling(basis, 0.2);
  std::mt19937_64 rng(241);
  CHECK(check_corner_algebra(model, random_unitary(3, rng)) == TriState::yes);
}

TEST_CASE("steady state rejects undamped vacuum-filled coherence") {
  FockBasis basis(3);
  CouplingModel model = hopping_coupling(basis, 0.5);

  Vector chi = Vector::Zero(8);
  chi(0) = 1.0 / std::sqrt(2.0);
  chi(7) = 1.0 / std::sqrt(2.0);
  const Matrix rho_bad = chi * chi.adjoint();
  CHECK_THROWS_AS(steady_state(model, rho_bad), HypothesisViolation);

  Matrix rho_ok = Matrix::Zero(8, 8);
  rho_ok(0, 0) = 0.5;
  rho_ok(7, 7) = 0.5;  // populations are fine, only coherence is obstructed
  const Matrix out = steady_state(model, rho_ok);
  CHECK(out(0, 0).real() == doctest::Approx(0.5));
  CHECK(out(7, 7).real() == doctest::Approx(0.5));

  // A number coupling separates vacuum and filled clusters, so the same
  // coherence is damped and the hypothesis imposes nothing.
  FockBasis basis2(2);
  CouplingModel number = build_coupling(basis2, Matrix::Identity(2, 2));
  Vector chi2 = Vector::Zero(4);
  chi2(0) = 1.0 / std::sqrt(2.0);
  chi2(3) = 1.0 / std::sqrt(2.0);
  const Matrix rho2 = chi2 * chi2.adjoint();
  const Matrix out2 = steady_state(number, rho2);
  CHECK(out2(0, 3) == Complex(0.0, 0.0));
}

TEST_CASE("block averaging preserves sector weights") {
  FockBasis basis(3);
  std::mt19937_64 rng(251);
  Matrix Y = random_matrix(8, 8, rng);
  Matrix rho = Y * Y.adjoint();
  rho /= rho.trace();
  const Matrix avg = steady_state_block_average(basis, rho);
  CHECK(std::abs(avg.trace() - Complex(1.0, 0.0)) <= 1e-12);
  for (int n = 0; n <= 3; ++n) {
    const auto off = basis.sector_offset(n);
    const auto sd = basis.sector_dim(n);
    const Complex want = rho.block(off, off, sd, sd).trace();
    CHECK(std::abs(avg.block(off, off, sd, sd).trace() - want) <= 1e-12);
    for (Eigen::Index q = 0; q < sd; ++q)
      CHECK(std::abs(avg(off + q, off + q) - want / double(sd)) <= 1e-12);
  }
}
