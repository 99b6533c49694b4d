#pragma once

#include <vector>

#include "fermiwalk/coupling.hpp"
#include "fermiwalk/types.hpp"

namespace fqw {

// One peripheral eigenvalue cluster of a superoperator with its spectral
// (generally oblique) projector.
struct PeripheralCluster {
  Complex value;  // cluster mean
  int multiplicity = 0;
  Matrix projector;
};

// Split of a superoperator spectrum into the peripheral part (moduli within
// circle_tol of one) and the strict contraction below it. Eigenvalues with
// moduli inside the guard band [1 - 10 circle_tol, 1 - circle_tol) make the
// split uncertifiable and raise an ambiguity error.
struct ContractionSplit {
  std::vector<Complex> eigenvalues;  // reordered: peripheral first
  Eigen::Index peripheral_dim = 0;
  Matrix P_circle;  // spectral projector onto the peripheral part
  Matrix P_less;    // complement
  std::vector<PeripheralCluster> peripheral;
  double gamma_raw = 0.0;   // -log(largest interior modulus)
  double gamma_used = 0.0;  // 0.99 gamma_raw, the certified decay rate
  double c_bound = 0.0;     // max_n ||S^n P_less||_F e^{gamma_used n}, if requested
  double circle_tol = 0.0;
};

ContractionSplit contraction_split(const Matrix& S, double circle_tol = 1e-9,
                                   double cluster_tol = 1e-8,
                                   int power_horizon = 0);

struct CheckResult {
  bool pass = false;
  double margin = 0.0;  // the minimized quantity the check thresholds
};

enum class TriState { yes, no, inconclusive };

// Phase nondegeneracy of the walk unitary: every difference of lifted
// eigenphase sums over distinct site subsets is separated from every other
// one, and from zero, by more than tol (mod 2 pi).
CheckResult check_phase_nondegeneracy(const Matrix& V, double tol = 1e-10);

// Every lifted eigenvector of the walk has nonzero overlap with every
// coupling cluster present in its sector (sectors 0 < n < d).
CheckResult check_diagonal_overlaps(const CouplingModel& coupling, const Matrix& V,
                                    double tol = 1e-10);

// Every pair of lifted eigenvectors in a sector is connected by at least one
// coupling cluster projector.
CheckResult check_offdiagonal_connectivity(const CouplingModel& coupling,
                                           const Matrix& V, double tol = 1e-10);

// Whether the corner restrictions of the lifted walk generate the full matrix
// algebra on each cluster range in sectors 1 < n < d. Meaningful for few-
// cluster couplings such as the single-link hop; word search is capped, so
// the answer may be inconclusive.
TriState check_corner_algebra(const CouplingModel& coupling, const Matrix& V);

struct AssumptionReport {
  CheckResult phase_nondegeneracy;
  CheckResult diagonal_overlaps;
  CheckResult offdiagonal_connectivity;
  TriState corner_algebra = TriState::inconclusive;

  bool spectral_assumptions_pass() const {
    return phase_nondegeneracy.pass && diagonal_overlaps.pass &&
           offdiagonal_connectivity.pass;
  }
};

AssumptionReport check_assumptions(const CouplingModel& coupling, const Matrix& V,
                                   double tol = 1e-10, bool corner = false);

// Sector-wise normalized identity with the same sector weights as rho0: the
// infinite-time state under the pinched dynamics.
Matrix steady_state_block_average(const FockBasis& basis, const Matrix& rho0);

// Steady state of the infinite-coupling channel for an admissible initial
// state. When the filled state is dark for the coupling, initial coherence
// between it and the vacuum survives forever; such states violate the
// block-average hypothesis and are rejected.
Matrix steady_state(const CouplingModel& coupling, const Matrix& rho0,
                    double coherence_tol = 1e-12);

}  // namespace fqw
