#include "fermiwalk/driver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "fermiwalk/dynamics.hpp"
#include "fermiwalk/errors.hpp"
#include "fermiwalk/genericity.hpp"
#include "fermiwalk/serialize.hpp"
#include "fermiwalk/spectral.hpp"

namespace fqw {
namespace {

using nlohmann::json;

void write_resolved(const ExperimentConfig& cfg, const std::string& dir) {
  json j;
  j["code_version"] = kCodeVersion;
  j["config_hash"] = hash_hex(cfg.config_hash);
  j["config"] = cfg.resolved;
  write_text_file(dir + "/resolved_config.json", j.dump(2) + "\n");
}

std::string prepare_dir(const ExperimentConfig& cfg, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_resolved(cfg, dir);
  return dir + "/";
}

// One free-channel step: pinch across the coupling clusters, then conjugate
// by the lifted walk.
Matrix apply_pinched_step(const CouplingModel& coupling, const Matrix& GV,
                          const Matrix& X) {
  Matrix Y = Matrix::Zero(X.rows(), X.cols());
  for (const Matrix& P : coupling.spec.projectors) Y += P * X * P;
  return GV.adjoint() * Y * GV;
}

double trace_norm(const Matrix& M) {
  return Eigen::JacobiSVD<Matrix>(M).singularValues().sum();
}

json finite_or_null(double x) {
  return std::isfinite(x) ? json(x) : json(nullptr);
}

const char* tristate_name(TriState t) {
  switch (t) {
    case TriState::yes: return "yes";
    case TriState::no: return "no";
    case TriState::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

json check_to_json(const CheckResult& c) {
  return json{{"pass", c.pass}, {"margin", c.margin}};
}

void require_grids(const ExperimentConfig& cfg) {
  if (cfg.lambda_grid.empty())
    throw InvalidInput("/lambda_grid: this command needs a non-empty grid");
  if (cfg.t_grid.empty())
    throw InvalidInput("/t_grid: this command needs a non-empty grid");
}

} // namespace

CouplingModel build_config_coupling(const ExperimentConfig& cfg,
                                    const FockBasis& basis) {
  switch (cfg.coupling_kind) {
    case ExperimentConfig::CouplingKind::hop:
      return hopping_coupling(basis, cfg.hop_phase);
    case ExperimentConfig::CouplingKind::tau:
      return build_coupling(basis, cfg.coupling_matrix);
    case ExperimentConfig::CouplingKind::fock:
      return build_coupling_from_fock(basis, cfg.coupling_matrix);
  }
  throw Error("unreachable coupling kind");
}

void run_propagate(const ExperimentConfig& cfg, const std::string& out_dir) {
  require_grids(cfg);
  const FockBasis basis(cfg.d);
  const CouplingModel coupling = build_config_coupling(cfg, basis);
  const ChannelMaps maps = build_channel_maps(coupling, cfg.V);
  PropagateOptions opts;
  opts.prune_tol = cfg.prune_tol;
  opts.budget = cfg.budget;
  opts.threads = cfg.threads;

  auto propagate_one = [&](double lambda, int t) {
    switch (cfg.mode) {
      case PropagatorMode::exact:
        return exact_propagate(maps, cfg.symbol, cfg.observable, t, lambda,
                               opts);
      case PropagatorMode::truncated:
        return truncated_propagate(maps, cfg.symbol, cfg.observable, t, lambda,
                                   cfg.s, opts);
      case PropagatorMode::ris:
        return ris_propagate(maps, cfg.symbol, cfg.observable, t, lambda);
    }
    throw Error("unreachable propagator mode");
  };

  // Pinched-free references (V Phi)^t (X) for every requested t, built by
  // stepping once through the largest horizon.
  std::set<int> t_set(cfg.t_grid.begin(), cfg.t_grid.end());
  std::map<int, Matrix> pinched_ref;
  {
    Matrix Y = cfg.observable;
    const int t_max = *t_set.rbegin();
    for (int k = 1; k <= t_max; ++k) {
      Y = apply_pinched_step(coupling, maps.GV, Y);
      if (t_set.count(k)) pinched_ref[k] = Y;
    }
  }

  struct Row {
    double lambda;
    PropagatorResult res;
    double err_free, err_pinched;
  };
  std::vector<Row> rows;
  std::map<int, Matrix> free_ref; // same-mode result at lambda = 0
  for (double lambda : cfg.lambda_grid)
    for (int t : cfg.t_grid) {
      Row row;
      row.lambda = lambda;
      row.res = propagate_one(lambda, t);
      if (!free_ref.count(t))
        free_ref[t] =
            (lambda == 0.0) ? row.res.value : propagate_one(0.0, t).value;
      row.err_free = (row.res.value - free_ref[t]).norm();
      row.err_pinched = (row.res.value - pinched_ref[t]).norm();
      rows.push_back(std::move(row));
    }

  const std::string dir = prepare_dir(cfg, out_dir);
  const std::string hash = hash_hex(cfg.config_hash);
  CsvWriter csv(dir + "propagate.csv",
                {"config_hash", "code_version", "command", "mode", "s",
                 "prune_tol", "budget", "lambda", "t", "err_free",
                 "err_pinched", "paths_summed", "paths_pruned", "pruned_mass",
                 "pruning_active"});
  json records = json::array();
  for (const Row& row : rows) {
    const PropagatorResult& r = row.res;
    csv.row({hash, kCodeVersion, "propagate", mode_name(cfg.mode),
             fmt_int(cfg.s), fmt_double(cfg.prune_tol),
             fmt_int(std::int64_t(cfg.budget)), fmt_double(row.lambda),
             fmt_int(r.t), fmt_double(row.err_free),
             fmt_double(row.err_pinched), fmt_int(std::int64_t(r.paths_summed)),
             fmt_int(std::int64_t(r.paths_pruned)), fmt_double(r.pruned_mass),
             fmt_int(r.pruning_active ? 1 : 0)});
    json rec;
    rec["config_hash"] = hash;
    rec["mode"] = mode_name(cfg.mode);
    rec["s"] = cfg.s;
    rec["lambda"] = row.lambda;
    rec["t"] = r.t;
    rec["symbol"] = cfg.resolved["reservoir"];
    rec["err_free"] = row.err_free;
    rec["err_pinched"] = row.err_pinched;
    rec["paths"] = {{"summed", r.paths_summed},
                    {"pruned", r.paths_pruned},
                    {"pruned_mass", r.pruned_mass},
                    {"pruning_active", r.pruning_active}};
    if (cfg.emit_matrices) rec["result"] = matrix_to_json(r.value);
    records.push_back(std::move(rec));
  }
  json out;
  out["code_version"] = kCodeVersion;
  out["config_hash"] = hash;
  out["records"] = std::move(records);
  write_text_file(dir + "propagate.json", out.dump(2) + "\n");
}

void run_spectral(const ExperimentConfig& cfg, const std::string& out_dir) {
  const FockBasis basis(cfg.d);
  const CouplingModel coupling = build_config_coupling(cfg, basis);
  const ChannelMaps maps = build_channel_maps(coupling, cfg.V);
  if (!maps.has_superops())
    throw BudgetError(
        "spectral analysis needs materialized superoperators (at most 5 sites)");

  // Power horizon for the decay-constant fit; shortened on the largest
  // superoperators to keep the certified check affordable.
  const int horizon = (maps.vphi.rows() <= 256) ? 200 : 40;
  const ContractionSplit split =
      contraction_split(maps.vphi, cfg.circle_tol, 1e-8, horizon);
  const AssumptionReport report =
      check_assumptions(coupling, cfg.V, cfg.assumption_tol, true);

  // Unit-circle prediction: always 1; plus the determinant pair when the
  // filled state is dark for the coupling.
  const Eigen::Index D = basis.dim();
  const double mu_filled = coupling.T(D - 1, D - 1).real();
  const bool filled_dark = std::abs(mu_filled) <= 1e-8;
  const Complex detV = cfg.V.determinant();
  std::vector<Complex> predicted{Complex(1.0, 0.0)};
  if (filled_dark && std::abs(detV - 1.0) > 1e-8) {
    predicted.push_back(detV);
    predicted.push_back(std::conj(detV));
  }
  bool matched = true;
  for (const PeripheralCluster& pc : split.peripheral) {
    double best = 2.0;
    for (const Complex& p : predicted)
      best = std::min(best, std::abs(pc.value - p));
    matched = matched && best <= 1e-8;
  }
  int eig1_multiplicity = 0;
  for (const Complex& p : predicted) {
    bool present = false;
    for (const PeripheralCluster& pc : split.peripheral) {
      if (std::abs(pc.value - p) <= 1e-8) {
        present = true;
        if (std::abs(p - Complex(1.0, 0.0)) <= 1e-8)
          eig1_multiplicity = pc.multiplicity;
      }
    }
    matched = matched && present;
  }

  const std::string dir = prepare_dir(cfg, out_dir);
  const std::string hash = hash_hex(cfg.config_hash);
  CsvWriter csv(dir + "spectrum.csv",
                {"config_hash", "code_version", "command", "circle_tol",
                 "index", "re", "im", "modulus", "phase", "classification"});
  for (std::size_t k = 0; k < split.eigenvalues.size(); ++k) {
    const Complex z = split.eigenvalues[k];
    csv.row({hash, kCodeVersion, "spectral", fmt_double(cfg.circle_tol),
             fmt_int(std::int64_t(k)), fmt_double(z.real()),
             fmt_double(z.imag()), fmt_double(std::abs(z)),
             fmt_double(std::arg(z)),
             Eigen::Index(k) < split.peripheral_dim ? "peripheral"
                                                    : "interior"});
  }

  json out;
  out["code_version"] = kCodeVersion;
  out["config_hash"] = hash;
  out["tolerances"] = {{"circle", cfg.circle_tol},
                       {"assumption", cfg.assumption_tol}};
  out["assumptions"] = {
      {"phase_nondegeneracy", check_to_json(report.phase_nondegeneracy)},
      {"diagonal_overlaps", check_to_json(report.diagonal_overlaps)},
      {"offdiagonal_connectivity",
       check_to_json(report.offdiagonal_connectivity)},
      {"corner_algebra", tristate_name(report.corner_algebra)},
      {"all_pass", report.spectral_assumptions_pass()}};
  json peripheral = json::array();
  for (const PeripheralCluster& pc : split.peripheral)
    peripheral.push_back({{"value", {pc.value.real(), pc.value.imag()}},
                          {"multiplicity", pc.multiplicity}});
  out["split"] = {{"peripheral", std::move(peripheral)},
                  {"peripheral_dim", split.peripheral_dim},
                  {"gamma_raw", finite_or_null(split.gamma_raw)},
                  {"gamma_used", finite_or_null(split.gamma_used)},
                  {"c_bound", split.c_bound},
                  {"power_horizon", horizon}};
  json predicted_json = json::array();
  for (const Complex& p : predicted)
    predicted_json.push_back({p.real(), p.imag()});
  out["prediction"] = {{"filled_state_dark", filled_dark},
                       {"values", std::move(predicted_json)},
                       {"matched", matched},
                       {"eig1_multiplicity", eig1_multiplicity}};
  write_text_file(dir + "assumptions.json", out.dump(2) + "\n");
}

void run_converge(const ExperimentConfig& cfg, const std::string& out_dir) {
  require_grids(cfg);
  const FockBasis basis(cfg.d);
  const CouplingModel coupling = build_config_coupling(cfg, basis);
  validate_density(cfg.rho0);
  const Matrix steady = steady_state(coupling, cfg.rho0, cfg.coherence_tol);
  const ChannelMaps maps = build_channel_maps(coupling, cfg.V);
  PropagateOptions opts;
  opts.prune_tol = cfg.prune_tol;
  opts.budget = cfg.budget;
  opts.threads = cfg.threads;

  struct Row {
    double lambda;
    int t;
    double d_fro, d_tr;
  };
  std::vector<Row> rows;
  for (double lambda : cfg.lambda_grid)
    for (int t : cfg.t_grid) {
      const Matrix rho_t = evolve_state(maps, cfg.symbol, cfg.rho0, t, lambda,
                                        cfg.mode, cfg.s, opts);
      rows.push_back(
          {lambda, t, (rho_t - steady).norm(), trace_norm(rho_t - steady)});
    }

  const std::string dir = prepare_dir(cfg, out_dir);
  const std::string hash = hash_hex(cfg.config_hash);
  CsvWriter csv(dir + "converge.csv",
                {"config_hash", "code_version", "command", "mode", "s",
                 "coherence_tol", "lambda", "t", "distance_fro",
                 "distance_trace"});
  for (const Row& row : rows)
    csv.row({hash, kCodeVersion, "converge", mode_name(cfg.mode),
             fmt_int(cfg.s), fmt_double(cfg.coherence_tol),
             fmt_double(row.lambda), fmt_int(row.t), fmt_double(row.d_fro),
             fmt_double(row.d_tr)});

  json out;
  out["code_version"] = kCodeVersion;
  out["config_hash"] = hash;
  out["steady_state"] = matrix_to_json(steady);
  write_text_file(dir + "steady_state.json", out.dump(2) + "\n");
}

void run_genericity(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (cfg.d > 8)
    throw BudgetError("exhaustive minor scans are capped at 8 sites");
  const FockBasis basis(cfg.d);
  const CouplingModel coupling = build_config_coupling(cfg, basis);
  const int n_max = (cfg.n_max == 0) ? cfg.d : cfg.n_max;

  const std::string dir = prepare_dir(cfg, out_dir);
  const std::string hash = hash_hex(cfg.config_hash);
  std::vector<std::string> columns{"config_hash", "code_version", "command",
                                   "assumption_tol", "seed", "index"};
  for (int n = 1; n <= n_max; ++n)
    columns.push_back("min_minor_" + std::to_string(n));
  columns.insert(columns.end(), {"snd", "diag", "offdiag", "pass"});
  CsvWriter csv(dir + "genericity.csv", columns);

  int passed = 0;
  double min_minor = std::numeric_limits<double>::infinity();
  for (int i = 0; i < cfg.samples; ++i) {
    const Matrix U = haar_unitary(cfg.d, cfg.walk_seed, std::uint64_t(i));
    const MinorScan scan = minor_scan(U, n_max);
    const AssumptionReport rep =
        check_assumptions(coupling, U, cfg.assumption_tol);
    const bool pass = rep.spectral_assumptions_pass();
    if (pass) ++passed;
    min_minor = std::min(min_minor, scan.min_abs);

    std::vector<std::string> cells{hash,
                                   kCodeVersion,
                                   "genericity",
                                   fmt_double(cfg.assumption_tol),
                                   fmt_int(std::int64_t(cfg.walk_seed)),
                                   fmt_int(i)};
    for (const MinorRecord& rec : scan.by_size)
      cells.push_back(fmt_double(rec.min_abs));
    cells.push_back(fmt_int(rep.phase_nondegeneracy.pass ? 1 : 0));
    cells.push_back(fmt_int(rep.diagonal_overlaps.pass ? 1 : 0));
    cells.push_back(fmt_int(rep.offdiagonal_connectivity.pass ? 1 : 0));
    cells.push_back(fmt_int(pass ? 1 : 0));
    csv.row(cells);
  }

  json out;
  out["code_version"] = kCodeVersion;
  out["config_hash"] = hash;
  out["samples"] = cfg.samples;
  out["seed"] = cfg.walk_seed;
  out["n_max"] = n_max;
  out["pass_rate"] = double(passed) / double(cfg.samples);
  out["min_abs_minor"] = min_minor;
  write_text_file(dir + "genericity_summary.json", out.dump(2) + "\n");
}

} // namespace fqw
