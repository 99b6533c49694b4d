#pragma once

#include <string>

#include "fermiwalk/config.hpp"
#include "fermiwalk/coupling.hpp"
#include "fermiwalk/fock.hpp"

namespace fqw {

// Materialize the coupling a config describes on a matching basis.
CouplingModel build_config_coupling(const ExperimentConfig& cfg,
                                    const FockBasis& basis);

// Experiment runners behind the command-line front end. Each one creates
// out_dir, records the resolved config with its hash and the code version,
// and writes its own CSV/JSON outputs. Outputs are byte-stable: rerunning a
// config (any worker count) reproduces every file exactly.
void run_propagate(const ExperimentConfig& cfg, const std::string& out_dir);
void run_spectral(const ExperimentConfig& cfg, const std::string& out_dir);
void run_converge(const ExperimentConfig& cfg, const std::string& out_dir);
void run_genericity(const ExperimentConfig& cfg, const std::string& out_dir);

} // namespace fqw
