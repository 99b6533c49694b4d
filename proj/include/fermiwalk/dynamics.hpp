#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fermiwalk/coupling.hpp"
#include "fermiwalk/reservoir.hpp"
#include "fermiwalk/superop.hpp"

namespace fqw {

// One-step building blocks of the reduced Heisenberg dynamics for a walk
// unitary V and a coupling model: the walk rotation, the projector
// sandwiches, and the pinching. Superoperator matrices are materialized up
// to Fock dimension 32 (5 sites, 1024 x 1024 superoperators); path-sum
// propagation never needs them.
struct ChannelMaps {
  CouplingModel coupling;
  Matrix V;    // d x d walk unitary
  Matrix GV;   // second-quantized walk
  Matrix rot;    // superop of X -> GV^* X GV
  Matrix pinch;  // superop of the pinching over coupling projectors
  Matrix vphi;   // rot * pinch, the infinite-coupling one-step channel

  const FockBasis& basis() const { return coupling.basis; }
  bool has_superops() const { return vphi.size() > 0; }
};

ChannelMaps build_channel_maps(const CouplingModel& coupling, const Matrix& V);

enum class PropagatorMode { exact, truncated, ris };

struct PropagateOptions {
  double prune_tol = 0.0;           // 0 disables pruning
  std::uint64_t budget = 10000000;  // max path pairs for the exact sum
  int threads = 1;
};

struct PropagatorResult {
  Matrix value;
  PropagatorMode mode = PropagatorMode::exact;
  int t = 0;
  double lambda = 0.0;
  int truncation_order = -1;
  std::uint64_t paths_summed = 0;
  std::uint64_t paths_pruned = 0;
  double pruned_mass = 0.0;   // upper bound on the weight mass skipped
  bool pruning_active = false;
  std::optional<double> remainder_bound;
};

// Exact reduced Heisenberg dynamics at time t: Gaussian-weighted sum over
// pairs of eigenvalue paths. Deterministic for any thread count (fixed
// chunking and merge order, compensated accumulation).
PropagatorResult exact_propagate(const ChannelMaps& maps, const ReservoirSymbol& symbol,
                                 const Matrix& X, int t, double lambda,
                                 const PropagateOptions& opts = {});

// Large-coupling expansion of the propagator up to truncation order s:
// the infinite-coupling channel power plus all corrections with at most s
// off-diagonal slots. s = t reproduces the exact propagator.
struct RemainderCertificate {
  double gamma = 0.0;
  double c_fit = 0.0;
  double delta = 0.0;

  double bound(int t, double lambda, int s) const;
};

PropagatorResult truncated_propagate(const ChannelMaps& maps,
                                     const ReservoirSymbol& symbol, const Matrix& X,
                                     int t, double lambda, int s,
                                     const PropagateOptions& opts = {},
                                     const std::optional<RemainderCertificate>&
                                         certificate = std::nullopt);

// Fit the remainder prefactor on actual truncation errors over a lambda grid
// (the decay rates come from the channel spectrum and the coupling gap).
RemainderCertificate fit_remainder_certificate(const ChannelMaps& maps,
                                               const ReservoirSymbol& symbol,
                                               const Matrix& X, int t, int s,
                                               const std::vector<double>& lambda_grid,
                                               const PropagateOptions& opts = {});

// Repeated-interaction stepping for diagonal symbols: the weight factorizes
// over slots, so the propagator is an ordered product of one-step channels.
// Equals the exact propagator, slot for slot, when the symbol is diagonal.
PropagatorResult ris_propagate(const ChannelMaps& maps, const ReservoirSymbol& symbol,
                               const Matrix& X, int t, double lambda);

// Schroedinger picture: evolve a density matrix by the HS adjoint of the
// selected propagator.
Matrix evolve_state(const ChannelMaps& maps, const ReservoirSymbol& symbol,
                    const Matrix& rho, int t, double lambda, PropagatorMode mode,
                    int s = -1, const PropagateOptions& opts = {});

// Full superoperator matrix of the selected propagator.
Matrix propagator_superoperator(const ChannelMaps& maps, const ReservoirSymbol& symbol,
                                int t, double lambda, PropagatorMode mode, int s = -1,
                                const PropagateOptions& opts = {});

// Reject operators that are not density matrices: Hermitian, unit trace,
// positive semidefinite up to tight tolerances.
void validate_density(const Matrix& rho);

struct CptpReport {
  double unital_error = 0.0;  // ||map(1) - 1||
  double trace_error = 0.0;   // max_ab |tr(map*(E_ab)) - tr(E_ab)|, dual route
  double choi_min_eig = 0.0;
};

CptpReport cptp_verify(const Matrix& superop);

}  // namespace fqw
