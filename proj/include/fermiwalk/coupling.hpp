#pragma once

#include <optional>
#include <vector>

#include "fermiwalk/fock.hpp"
#include "fermiwalk/types.hpp"

namespace fqw {

// Distinct eigenvalue clusters of a Hermitian operator with their orthogonal
// spectral projectors. Values ascend; clustering is single-linkage with gap
// cluster_tol, and representatives closer than 10 x cluster_tol raise an
// ambiguity error instead of guessing.
struct SpectralDecomposition {
  std::vector<double> values;
  std::vector<int> multiplicities;
  std::vector<Matrix> projectors;
  double cluster_tol = 1e-8;
};

SpectralDecomposition spectral_decompose(const Matrix& H, double cluster_tol = 1e-8);

struct SingleParticleData {
  Matrix tau;                    // d x d Hermitian coupling
  Matrix eigenbasis;             // columns f_j
  RealVector eigenvalues;        // raw eigenvalue per slot, eigenbasis order
  std::vector<int> slot_cluster; // single-particle cluster id per slot
  RealVector slot_rep;           // cluster representative value per slot
};

// Coupling operator on the Fock space together with its spectral structure.
// The single-particle route derives Fock eigenvalues symbolically, as sums of
// single-particle cluster representatives, so structural degeneracies such as
// opposite pairs cancelling are exact rather than tolerance luck.
struct CouplingModel {
  FockBasis basis;
  Matrix T;
  SpectralDecomposition spec;
  double gap = 0.0;  // min distance between distinct values, +inf for one value

  // Single-particle route only: wedge_frame columns are the eigen-wedge basis
  // states in Fock coordinates, state_cluster maps each wedge label (Fock
  // index) to its eigenvalue cluster.
  Matrix wedge_frame;
  std::vector<int> state_cluster;
  std::optional<SingleParticleData> sp;

  bool has_single_particle() const { return sp.has_value(); }
  int num_clusters() const { return static_cast<int>(spec.values.size()); }
  // Wedge labels of cluster c inside sector n (single-particle route).
  std::vector<int> sector_members(int c, int n) const;
  // Cluster ids with support in sector n, ascending.
  std::vector<int> sector_clusters(int n) const;
};

// Coupling from a single-particle Hermitian tau via additive second
// quantization.
CouplingModel build_coupling(const FockBasis& basis, const Matrix& tau,
                             double cluster_tol = 1e-8);

// Coupling from an arbitrary Hermitian operator on the Fock space (no
// single-particle structure; spectral data is numerical).
CouplingModel build_coupling_from_fock(const FockBasis& basis, const Matrix& T,
                                       double cluster_tol = 1e-8);

// Single-link hopping coupling between sites 1 and 2 with a tunable phase,
// with its closed-form eigenbasis: three eigenvalue clusters +1, -1, 0.
CouplingModel hopping_coupling(const FockBasis& basis, double phase);

// Extract the n-particle sector block of a Fock-space operator.
Matrix sector_block(const FockBasis& basis, const Matrix& M, int n);

struct SectorNondegeneracyReport {
  bool overall = false;
  std::vector<bool> per_sector;  // sectors 1..d-1, true when >= 2 clusters
  std::optional<bool> tau_scalar;
};

// A coupling is sector-nondegenerate when its restriction to every sector
// 0 < n < d is not a multiple of the identity. For single-particle couplings
// this is equivalent to tau not being a multiple of the identity.
SectorNondegeneracyReport check_sector_nondegeneracy(const CouplingModel& model);

}  // namespace fqw
