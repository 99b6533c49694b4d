#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fermiwalk/dynamics.hpp"
#include "fermiwalk/reservoir.hpp"
#include "fermiwalk/types.hpp"

namespace fqw {

std::string mode_name(PropagatorMode mode);

// A fully resolved experiment description. Walk/observable/state sources are
// materialized into matrices at parse time; the coupling is kept as its
// source form (the builder needs the Fock basis, owned by the driver).
struct ExperimentConfig {
  int d = 0;

  Matrix V;                 // resolved walk unitary
  bool walk_is_haar = false;
  std::uint64_t walk_seed = 0;

  enum class CouplingKind { hop, tau, fock } coupling_kind = CouplingKind::hop;
  double hop_phase = 0.0;
  Matrix coupling_matrix;   // tau (d x d) or a full Fock-space generator

  ReservoirSymbol symbol = ReservoirSymbol::identity();

  Matrix observable;        // propagate input
  Matrix rho0;              // converge input

  std::vector<double> lambda_grid;
  std::vector<int> t_grid;
  PropagatorMode mode = PropagatorMode::exact;
  int s = -1;               // truncation order (truncated mode only)

  double prune_tol = 0.0;
  double circle_tol = 1e-9;
  double assumption_tol = 1e-10;
  double coherence_tol = 1e-12;
  std::uint64_t budget = 10000000;
  // Worker count is execution metadata, not experiment identity: it comes
  // from the command line only, never from the file, and stays out of the
  // resolved record and its hash (results must not depend on it).
  int threads = 1;
  bool emit_matrices = false;

  int samples = 100;        // genericity draws
  int n_max = 0;            // genericity minor-size bound (0 = all sizes)

  nlohmann::json resolved;  // normalized config, every default filled in
  std::uint64_t config_hash = 0;
};

// Overrides arriving from the command line; applied before resolution so the
// recorded config and its hash reflect what actually ran.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

ExperimentConfig parse_config(const nlohmann::json& j,
                              const ConfigOverrides& overrides = {});
ExperimentConfig load_config(const std::string& path,
                             const ConfigOverrides& overrides = {});

} // namespace fqw
