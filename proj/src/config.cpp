#include "fermiwalk/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "fermiwalk/errors.hpp"
#include "fermiwalk/fock.hpp"
#include "fermiwalk/genericity.hpp"
#include "fermiwalk/serialize.hpp"

namespace fqw {
namespace {

using nlohmann::json;

void expect_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw InvalidInput(where + ": expected an object");
}

void expect_keys(const json& obj, const std::string& where,
                 std::initializer_list<const char*> allowed) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key()))
      throw InvalidInput(where + "/" + it.key() + ": unknown field");
}

std::int64_t as_int(const json& j, const std::string& where, std::int64_t lo,
                    std::int64_t hi) {
  if (!j.is_number_integer())
    throw InvalidInput(where + ": expected an integer");
  const std::int64_t v = j.get<std::int64_t>();
  if (v < lo || v > hi)
    throw InvalidInput(where + ": must lie in [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
  return v;
}

double as_double(const json& j, const std::string& where) {
  if (!j.is_number()) throw InvalidInput(where + ": expected a number");
  return j.get<double>();
}

double as_nonneg(const json& j, const std::string& where) {
  const double v = as_double(j, where);
  if (!(v >= 0.0)) throw InvalidInput(where + ": must be >= 0");
  return v;
}

std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw InvalidInput(where + ": expected a string");
  return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw InvalidInput(where + ": expected a boolean");
  return j.get<bool>();
}

RealMatrix as_real_matrix(const json& j, const std::string& where) {
  const Matrix M = matrix_from_json(j, where);
  if (M.imag().cwiseAbs().maxCoeff() != 0.0)
    throw InvalidInput(where + ": expected real entries");
  return M.real();
}

// Walk, coupling, reservoir, observable, and state sources all follow the
// same shape: an object dispatched on its "kind" field.
std::string kind_of(const json& obj, const std::string& where) {
  expect_object(obj, where);
  if (!obj.contains("kind"))
    throw InvalidInput(where + "/kind: missing field");
  return as_string(obj["kind"], where + "/kind");
}

json default_walk() { return json{{"kind", "haar"}, {"seed", 0}}; }

void resolve_walk(const json& obj, ExperimentConfig& cfg) {
  const std::string kind = kind_of(obj, "/walk");
  if (kind == "haar") {
    expect_keys(obj, "/walk", {"kind", "seed"});
    cfg.walk_is_haar = true;
    if (obj.contains("seed"))
      cfg.walk_seed =
          std::uint64_t(as_int(obj["seed"], "/walk/seed", 0, INT64_MAX));
    cfg.V = haar_unitary(cfg.d, cfg.walk_seed);
  } else if (kind == "matrix") {
    expect_keys(obj, "/walk", {"kind", "value"});
    if (!obj.contains("value"))
      throw InvalidInput("/walk/value: missing field");
    cfg.V = matrix_from_json(obj["value"], "/walk/value");
    if (cfg.V.rows() != cfg.d || cfg.V.cols() != cfg.d)
      throw InvalidInput("/walk/value: expected a " + std::to_string(cfg.d) +
                         " x " + std::to_string(cfg.d) + " matrix");
    const double err =
        (cfg.V.adjoint() * cfg.V - Matrix::Identity(cfg.d, cfg.d)).norm();
    if (err > 1e-8 * cfg.d)
      throw InvalidInput("/walk/value: matrix is not unitary");
  } else if (kind == "phases") {
    expect_keys(obj, "/walk", {"kind", "value"});
    if (!obj.contains("value") || !obj["value"].is_array() ||
        obj["value"].size() != std::size_t(cfg.d))
      throw InvalidInput("/walk/value: expected " + std::to_string(cfg.d) +
                         " phases");
    cfg.V = Matrix::Zero(cfg.d, cfg.d);
    for (int i = 0; i < cfg.d; ++i) {
      const double a =
          as_double(obj["value"][i], "/walk/value/" + std::to_string(i));
      cfg.V(i, i) = Complex(std::cos(a), std::sin(a));
    }
  } else {
    throw InvalidInput("/walk/kind: must be one of haar|matrix|phases");
  }
}

json default_coupling() { return json{{"kind", "hop"}, {"phase", 0.0}}; }

void resolve_coupling(const json& obj, ExperimentConfig& cfg) {
  const std::string kind = kind_of(obj, "/coupling");
  if (kind == "hop") {
    expect_keys(obj, "/coupling", {"kind", "phase"});
    cfg.coupling_kind = ExperimentConfig::CouplingKind::hop;
    if (obj.contains("phase"))
      cfg.hop_phase = as_double(obj["phase"], "/coupling/phase");
  } else if (kind == "tau" || kind == "fock") {
    expect_keys(obj, "/coupling", {"kind", "value"});
    cfg.coupling_kind = (kind == "tau") ? ExperimentConfig::CouplingKind::tau
                                        : ExperimentConfig::CouplingKind::fock;
    if (!obj.contains("value"))
      throw InvalidInput("/coupling/value: missing field");
    cfg.coupling_matrix = matrix_from_json(obj["value"], "/coupling/value");
    const Eigen::Index want =
        (kind == "tau") ? Eigen::Index(cfg.d) : Eigen::Index(1) << cfg.d;
    if (cfg.coupling_matrix.rows() != want || cfg.coupling_matrix.cols() != want)
      throw InvalidInput("/coupling/value: expected a " + std::to_string(want) +
                         " x " + std::to_string(want) + " matrix");
    if ((cfg.coupling_matrix - cfg.coupling_matrix.adjoint()).norm() >
        1e-10 * double(want))
      throw InvalidInput("/coupling/value: matrix is not Hermitian");
  } else {
    throw InvalidInput("/coupling/kind: must be one of hop|tau|fock");
  }
}

json default_reservoir() { return json{{"kind", "identity"}}; }

void resolve_reservoir(const json& obj, ExperimentConfig& cfg) {
  const std::string kind = kind_of(obj, "/reservoir");
  if (kind == "identity") {
    expect_keys(obj, "/reservoir", {"kind"});
    cfg.symbol = ReservoirSymbol::identity();
  } else if (kind == "diagonal") {
    expect_keys(obj, "/reservoir", {"kind", "values"});
    if (!obj.contains("values") || !obj["values"].is_array() ||
        obj["values"].empty())
      throw InvalidInput("/reservoir/values: expected a non-empty array");
    std::vector<double> vals;
    for (std::size_t i = 0; i < obj["values"].size(); ++i)
      vals.push_back(as_double(obj["values"][i],
                               "/reservoir/values/" + std::to_string(i)));
    cfg.symbol = ReservoirSymbol::diagonal(std::move(vals));
  } else if (kind == "thermal") {
    expect_keys(obj, "/reservoir", {"kind", "beta", "mu", "dispersion"});
    if (!obj.contains("beta"))
      throw InvalidInput("/reservoir/beta: missing field");
    const double beta = as_double(obj["beta"], "/reservoir/beta");
    if (!(beta > 0.0))
      throw InvalidInput("/reservoir/beta: must be > 0");
    const double mu =
        obj.contains("mu") ? as_double(obj["mu"], "/reservoir/mu") : 0.0;
    Dispersion disp;
    disp.e0 = 1.0;
    if (obj.contains("dispersion")) {
      const json& dj = obj["dispersion"];
      const std::string dk = kind_of(dj, "/reservoir/dispersion");
      expect_keys(dj, "/reservoir/dispersion", {"kind", "e0", "hop"});
      if (dk == "flat")
        disp.kind = Dispersion::Kind::flat;
      else if (dk == "cosine")
        disp.kind = Dispersion::Kind::cosine;
      else
        throw InvalidInput(
            "/reservoir/dispersion/kind: must be one of flat|cosine");
      if (dj.contains("e0"))
        disp.e0 = as_double(dj["e0"], "/reservoir/dispersion/e0");
      if (dj.contains("hop"))
        disp.hop = as_double(dj["hop"], "/reservoir/dispersion/hop");
    }
    cfg.symbol = ReservoirSymbol::thermal(beta, mu, disp);
  } else if (kind == "kernel-table") {
    expect_keys(obj, "/reservoir", {"kind", "values"});
    if (!obj.contains("values"))
      throw InvalidInput("/reservoir/values: missing field");
    const RealMatrix K = as_real_matrix(obj["values"], "/reservoir/values");
    if (K.rows() != K.cols())
      throw InvalidInput("/reservoir/values: expected a square matrix");
    if ((K - K.transpose()).norm() > 1e-12 * double(K.rows()))
      throw InvalidInput("/reservoir/values: expected a symmetric matrix");
    cfg.symbol = ReservoirSymbol::table(K);
  } else {
    throw InvalidInput(
        "/reservoir/kind: must be one of identity|diagonal|thermal|kernel-table");
  }
}

json default_observable() { return json{{"kind", "number"}, {"site", 1}}; }

void resolve_observable(const json& obj, const FockBasis& basis,
                        ExperimentConfig& cfg) {
  const std::string kind = kind_of(obj, "/observable");
  if (kind == "number") {
    expect_keys(obj, "/observable", {"kind", "site"});
    const int site =
        obj.contains("site")
            ? int(as_int(obj["site"], "/observable/site", 1, cfg.d))
            : 1;
    cfg.observable = number_op(basis, site);
  } else if (kind == "matrix") {
    expect_keys(obj, "/observable", {"kind", "value"});
    if (!obj.contains("value"))
      throw InvalidInput("/observable/value: missing field");
    cfg.observable = matrix_from_json(obj["value"], "/observable/value");
    if (cfg.observable.rows() != basis.dim() ||
        cfg.observable.cols() != basis.dim())
      throw InvalidInput("/observable/value: expected a " +
                         std::to_string(basis.dim()) + " x " +
                         std::to_string(basis.dim()) + " matrix");
  } else {
    throw InvalidInput("/observable/kind: must be one of number|matrix");
  }
}

json default_rho0() { return json{{"kind", "sites"}, {"sites", {1}}}; }

void resolve_rho0(const json& obj, const FockBasis& basis,
                  ExperimentConfig& cfg) {
  const std::string kind = kind_of(obj, "/rho0");
  const Eigen::Index D = basis.dim();
  if (kind == "sites") {
    expect_keys(obj, "/rho0", {"kind", "sites"});
    std::uint32_t mask = 0;
    if (obj.contains("sites")) {
      if (!obj["sites"].is_array())
        throw InvalidInput("/rho0/sites: expected an array of sites");
      for (std::size_t i = 0; i < obj["sites"].size(); ++i) {
        const int site = int(as_int(obj["sites"][i],
                                    "/rho0/sites/" + std::to_string(i), 1,
                                    cfg.d));
        const std::uint32_t bit = std::uint32_t(1) << (site - 1);
        if (mask & bit)
          throw InvalidInput("/rho0/sites/" + std::to_string(i) +
                             ": site listed twice");
        mask |= bit;
      }
    } else {
      mask = 1;
    }
    const int idx = basis.index_of_mask(mask);
    cfg.rho0 = Matrix::Zero(D, D);
    cfg.rho0(idx, idx) = 1.0;
  } else if (kind == "mixed") {
    expect_keys(obj, "/rho0", {"kind"});
    cfg.rho0 = Matrix::Identity(D, D) / double(D);
  } else if (kind == "matrix") {
    expect_keys(obj, "/rho0", {"kind", "value"});
    if (!obj.contains("value"))
      throw InvalidInput("/rho0/value: missing field");
    cfg.rho0 = matrix_from_json(obj["value"], "/rho0/value");
    if (cfg.rho0.rows() != D || cfg.rho0.cols() != D)
      throw InvalidInput("/rho0/value: expected a " + std::to_string(D) +
                         " x " + std::to_string(D) + " matrix");
  } else {
    throw InvalidInput("/rho0/kind: must be one of sites|mixed|matrix");
  }
}

} // namespace

std::string mode_name(PropagatorMode mode) {
  switch (mode) {
    case PropagatorMode::exact: return "exact";
    case PropagatorMode::truncated: return "truncated";
    case PropagatorMode::ris: return "ris";
  }
  return "exact";
}

ExperimentConfig parse_config(const json& j, const ConfigOverrides& overrides) {
  expect_object(j, "");
  expect_keys(j, "",
              {"d", "walk", "coupling", "reservoir", "observable", "rho0",
               "lambda_grid", "t_grid", "mode", "s", "tolerances", "budget",
               "emit_matrices", "samples", "n_max"});

  ExperimentConfig cfg;
  if (!j.contains("d")) throw InvalidInput("/d: missing field");
  cfg.d = int(as_int(j["d"], "/d", 1, 12));

  json walk = j.contains("walk") ? j["walk"] : default_walk();
  if (overrides.seed) {
    expect_object(walk, "/walk");
    if (!walk.contains("kind") || walk["kind"] == "haar") {
      walk["kind"] = "haar";
      walk["seed"] = *overrides.seed;
    }
  }
  resolve_walk(walk, cfg);
  if (overrides.seed && !cfg.walk_is_haar) cfg.walk_seed = *overrides.seed;

  const json coupling = j.contains("coupling") ? j["coupling"] : default_coupling();
  resolve_coupling(coupling, cfg);

  const json reservoir =
      j.contains("reservoir") ? j["reservoir"] : default_reservoir();
  resolve_reservoir(reservoir, cfg);

  const FockBasis basis(cfg.d);
  const json observable =
      j.contains("observable") ? j["observable"] : default_observable();
  resolve_observable(observable, basis, cfg);
  const json rho0 = j.contains("rho0") ? j["rho0"] : default_rho0();
  resolve_rho0(rho0, basis, cfg);

  if (j.contains("lambda_grid")) {
    if (!j["lambda_grid"].is_array())
      throw InvalidInput("/lambda_grid: expected an array");
    for (std::size_t i = 0; i < j["lambda_grid"].size(); ++i)
      cfg.lambda_grid.push_back(as_nonneg(
          j["lambda_grid"][i], "/lambda_grid/" + std::to_string(i)));
  }
  if (j.contains("t_grid")) {
    if (!j["t_grid"].is_array())
      throw InvalidInput("/t_grid: expected an array");
    for (std::size_t i = 0; i < j["t_grid"].size(); ++i)
      cfg.t_grid.push_back(
          int(as_int(j["t_grid"][i], "/t_grid/" + std::to_string(i), 1, 1000)));
  }

  if (j.contains("mode")) {
    const std::string m = as_string(j["mode"], "/mode");
    if (m == "exact")
      cfg.mode = PropagatorMode::exact;
    else if (m == "truncated")
      cfg.mode = PropagatorMode::truncated;
    else if (m == "ris")
      cfg.mode = PropagatorMode::ris;
    else
      throw InvalidInput("/mode: must be one of exact|truncated|ris");
  }
  if (j.contains("s")) cfg.s = int(as_int(j["s"], "/s", -1, 1000));
  if (cfg.mode == PropagatorMode::truncated && cfg.s < 0)
    throw InvalidInput("/s: truncated mode needs a truncation order >= 0");

  if (j.contains("tolerances")) {
    const json& tj = j["tolerances"];
    expect_object(tj, "/tolerances");
    expect_keys(tj, "/tolerances",
                {"prune", "circle", "assumption", "coherence"});
    if (tj.contains("prune"))
      cfg.prune_tol = as_nonneg(tj["prune"], "/tolerances/prune");
    if (tj.contains("circle"))
      cfg.circle_tol = as_nonneg(tj["circle"], "/tolerances/circle");
    if (tj.contains("assumption"))
      cfg.assumption_tol = as_nonneg(tj["assumption"], "/tolerances/assumption");
    if (tj.contains("coherence"))
      cfg.coherence_tol = as_nonneg(tj["coherence"], "/tolerances/coherence");
  }
  if (j.contains("budget"))
    cfg.budget = std::uint64_t(as_int(j["budget"], "/budget", 1, INT64_MAX));
  if (overrides.threads) {
    if (*overrides.threads < 1 || *overrides.threads > 256)
      throw InvalidInput("--threads: must lie in [1, 256]");
    cfg.threads = *overrides.threads;
  }
  if (j.contains("emit_matrices"))
    cfg.emit_matrices = as_bool(j["emit_matrices"], "/emit_matrices");
  if (j.contains("samples"))
    cfg.samples = int(as_int(j["samples"], "/samples", 1, 1000000));
  if (j.contains("n_max")) cfg.n_max = int(as_int(j["n_max"], "/n_max", 0, 12));
  if (cfg.n_max > cfg.d)
    throw InvalidInput("/n_max: exceeds the number of sites");

  // Normalized form: every consumed field spelled out, defaults included.
  json norm;
  norm["d"] = cfg.d;
  norm["walk"] = walk;
  norm["coupling"] = coupling;
  norm["reservoir"] = reservoir;
  norm["observable"] = observable;
  norm["rho0"] = rho0;
  norm["lambda_grid"] = cfg.lambda_grid;
  norm["t_grid"] = cfg.t_grid;
  norm["mode"] = mode_name(cfg.mode);
  norm["s"] = cfg.s;
  norm["tolerances"] = {{"prune", cfg.prune_tol},
                        {"circle", cfg.circle_tol},
                        {"assumption", cfg.assumption_tol},
                        {"coherence", cfg.coherence_tol}};
  norm["budget"] = cfg.budget;
  norm["emit_matrices"] = cfg.emit_matrices;
  norm["samples"] = cfg.samples;
  norm["n_max"] = cfg.n_max;
  cfg.resolved = std::move(norm);
  cfg.config_hash = fnv1a64(cfg.resolved.dump());
  return cfg;
}

ExperimentConfig load_config(const std::string& path,
                             const ConfigOverrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line/column position.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw InvalidInput("config parse error at line " + std::to_string(line) +
                       ", column " + std::to_string(col) + ": " + e.what());
  }
  return parse_config(j, overrides);
}

} // namespace fqw
