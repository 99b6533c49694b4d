#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fermiwalk/coupling.hpp"
#include "fermiwalk/dynamics.hpp"
#include "fermiwalk/errors.hpp"
#include "fermiwalk/fock.hpp"
#include "fermiwalk/genericity.hpp"
#include "fermiwalk/reservoir.hpp"
#include "fermiwalk/serialize.hpp"
#include "fermiwalk/spectral.hpp"
#include "fermiwalk/superop.hpp"

namespace py = pybind11;
using namespace fqw;

namespace {

PropagateOptions make_options(double prune_tol, std::uint64_t budget, int threads) {
  PropagateOptions opts;
  opts.prune_tol = prune_tol;
  opts.budget = budget;
  opts.threads = threads;
  return opts;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "fermionic quantum walk coupled to a traced bosonic reservoir";
  m.attr("__version__") = kCodeVersion;

  const auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
  py::register_exception<BudgetError>(m, "BudgetError", base.ptr());
  py::register_exception<HypothesisViolation>(m, "HypothesisViolation", base.ptr());
  py::register_exception<AmbiguityError>(m, "AmbiguityError", base.ptr());

  // --- Fock space -----------------------------------------------------------
  py::class_<MultiIndex>(m, "MultiIndex")
      .def_readonly("sites", &MultiIndex::sites)
      .def_readonly("mask", &MultiIndex::mask);

  py::class_<FockBasis>(m, "FockBasis")
      .def(py::init<int>(), py::arg("d"))
      .def_property_readonly("d", &FockBasis::d)
      .def_property_readonly("dim", &FockBasis::dim)
      .def("sector_dim", &FockBasis::sector_dim, py::arg("n"))
      .def("sector_offset", &FockBasis::sector_offset, py::arg("n"))
      .def("sector_of", &FockBasis::sector_of, py::arg("index"))
      .def("state", &FockBasis::state, py::arg("index"),
           py::return_value_policy::copy)
      .def("index_of_mask", &FockBasis::index_of_mask, py::arg("mask"))
      .def("index_of", &FockBasis::index_of, py::arg("sites"));

  m.def("creation_op",
        py::overload_cast<const FockBasis&, int>(&creation_op),
        py::arg("basis"), py::arg("site"));
  m.def("creation_op",
        py::overload_cast<const FockBasis&, const Vector&>(&creation_op),
        py::arg("basis"), py::arg("phi"));
  m.def("annihilation_op",
        py::overload_cast<const FockBasis&, int>(&annihilation_op),
        py::arg("basis"), py::arg("site"));
  m.def("annihilation_op",
        py::overload_cast<const FockBasis&, const Vector&>(&annihilation_op),
        py::arg("basis"), py::arg("phi"));
  m.def("number_op", &number_op, py::arg("basis"), py::arg("site"));
  m.def("second_quantize_unitary", &second_quantize_unitary, py::arg("basis"),
        py::arg("U"));
  m.def("second_quantize_generator", &second_quantize_generator, py::arg("basis"),
        py::arg("H"));
  m.def("wedge_gram", &wedge_gram, py::arg("bra"), py::arg("ket"));

  // --- Coupling -------------------------------------------------------------
  py::class_<SpectralDecomposition>(m, "SpectralDecomposition")
      .def_readonly("values", &SpectralDecomposition::values)
      .def_readonly("multiplicities", &SpectralDecomposition::multiplicities)
      .def_readonly("projectors", &SpectralDecomposition::projectors)
      .def_readonly("cluster_tol", &SpectralDecomposition::cluster_tol);

  py::class_<CouplingModel>(m, "CouplingModel")
      .def_readonly("basis", &CouplingModel::basis)
      .def_readonly("T", &CouplingModel::T)
      .def_readonly("spec", &CouplingModel::spec)
      .def_readonly("gap", &CouplingModel::gap)
      .def_property_readonly("num_clusters", &CouplingModel::num_clusters)
      .def_property_readonly("has_single_particle",
                             &CouplingModel::has_single_particle)
      .def("sector_members", &CouplingModel::sector_members, py::arg("c"),
           py::arg("n"))
      .def("sector_clusters", &CouplingModel::sector_clusters, py::arg("n"));

  m.def("spectral_decompose", &spectral_decompose, py::arg("H"),
        py::arg("cluster_tol") = 1e-8);
  m.def("build_coupling", &build_coupling, py::arg("basis"), py::arg("tau"),
        py::arg("cluster_tol") = 1e-8);
  m.def("build_coupling_from_fock", &build_coupling_from_fock, py::arg("basis"),
        py::arg("T"), py::arg("cluster_tol") = 1e-8);
  m.def("hopping_coupling", &hopping_coupling, py::arg("basis"), py::arg("phase"));
  m.def("sector_block", &sector_block, py::arg("basis"), py::arg("M"), py::arg("n"));

  // --- Reservoir ------------------------------------------------------------
  py::class_<Dispersion> dispersion(m, "Dispersion");
  py::enum_<Dispersion::Kind>(dispersion, "Kind")
      .value("flat", Dispersion::Kind::flat)
      .value("cosine", Dispersion::Kind::cosine);
  dispersion
      .def(py::init([](Dispersion::Kind kind, double e0, double hop) {
             return Dispersion{kind, e0, hop};
           }),
           py::arg("kind") = Dispersion::Kind::flat, py::arg("e0") = 0.0,
           py::arg("hop") = 0.0)
      .def_readwrite("kind", &Dispersion::kind)
      .def_readwrite("e0", &Dispersion::e0)
      .def_readwrite("hop", &Dispersion::hop);

  py::class_<ReservoirSymbol>(m, "ReservoirSymbol")
      .def_static("identity", &ReservoirSymbol::identity)
      .def_static("diagonal", &ReservoirSymbol::diagonal, py::arg("values"))
      .def_static("thermal", &ReservoirSymbol::thermal, py::arg("beta"),
                  py::arg("mu"), py::arg("dispersion"))
      .def_static("table", &ReservoirSymbol::table, py::arg("kernel"))
      .def_property_readonly("is_diagonal", &ReservoirSymbol::is_diagonal)
      .def("__call__", &ReservoirSymbol::operator(), py::arg("i"), py::arg("j"))
      .def("section", &ReservoirSymbol::section, py::arg("t"))
      .def("section_min_eigenvalue", &ReservoirSymbol::section_min_eigenvalue,
           py::arg("t"));

  m.def("gaussian_weight", &gaussian_weight, py::arg("symbol"), py::arg("theta"),
        py::arg("lam"));

  // --- Superoperator helpers -------------------------------------------------
  m.def("vectorize", &vectorize, py::arg("X"));
  m.def("devectorize", &devectorize, py::arg("v"), py::arg("rows"));
  m.def("kron", &kron, py::arg("A"), py::arg("B"));
  m.def("sandwich_superop", &sandwich_superop, py::arg("A"), py::arg("B"));
  m.def("opnorm", &opnorm, py::arg("X"));
  m.def("choi_matrix", &choi_matrix, py::arg("S"));

  // --- Dynamics ---------------------------------------------------------------
  py::enum_<PropagatorMode>(m, "PropagatorMode")
      .value("exact", PropagatorMode::exact)
      .value("truncated", PropagatorMode::truncated)
      .value("ris", PropagatorMode::ris);

  py::class_<ChannelMaps>(m, "ChannelMaps")
      .def_readonly("coupling", &ChannelMaps::coupling)
      .def_readonly("V", &ChannelMaps::V)
      .def_readonly("GV", &ChannelMaps::GV)
      .def_readonly("rot", &ChannelMaps::rot)
      .def_readonly("pinch", &ChannelMaps::pinch)
      .def_readonly("vphi", &ChannelMaps::vphi)
      .def_property_readonly("has_superops", &ChannelMaps::has_superops);

  m.def("build_channel_maps", &build_channel_maps, py::arg("coupling"),
        py::arg("V"));

  py::class_<PropagatorResult>(m, "PropagatorResult")
      .def_readonly("value", &PropagatorResult::value)
      .def_readonly("mode", &PropagatorResult::mode)
      .def_readonly("t", &PropagatorResult::t)
      .def_readonly("lam", &PropagatorResult::lambda)
      .def_readonly("truncation_order", &PropagatorResult::truncation_order)
      .def_readonly("paths_summed", &PropagatorResult::paths_summed)
      .def_readonly("paths_pruned", &PropagatorResult::paths_pruned)
      .def_readonly("pruned_mass", &PropagatorResult::pruned_mass)
      .def_readonly("pruning_active", &PropagatorResult::pruning_active)
      .def_readonly("remainder_bound", &PropagatorResult::remainder_bound);

  m.def(
      "exact_propagate",
      [](const ChannelMaps& maps, const ReservoirSymbol& symbol, const Matrix& X,
         int t, double lam, double prune_tol, std::uint64_t budget, int threads) {
        return exact_propagate(maps, symbol, X, t, lam,
                               make_options(prune_tol, budget, threads));
      },
      py::arg("maps"), py::arg("symbol"), py::arg("X"), py::arg("t"),
      py::arg("lam"), py::arg("prune_tol") = 0.0,
      py::arg("budget") = std::uint64_t(10000000), py::arg("threads") = 1);
  m.def(
      "truncated_propagate",
      [](const ChannelMaps& maps, const ReservoirSymbol& symbol, const Matrix& X,
         int t, double lam, int s, double prune_tol, std::uint64_t budget,
         int threads) {
        return truncated_propagate(maps, symbol, X, t, lam, s,
                                   make_options(prune_tol, budget, threads));
      },
      py::arg("maps"), py::arg("symbol"), py::arg("X"), py::arg("t"),
      py::arg("lam"), py::arg("s"), py::arg("prune_tol") = 0.0,
      py::arg("budget") = std::uint64_t(10000000), py::arg("threads") = 1);
  m.def("ris_propagate", &ris_propagate, py::arg("maps"), py::arg("symbol"),
        py::arg("X"), py::arg("t"), py::arg("lam"));
  m.def(
      "evolve_state",
      [](const ChannelMaps& maps, const ReservoirSymbol& symbol, const Matrix& rho,
         int t, double lam, PropagatorMode mode, int s, double prune_tol,
         std::uint64_t budget, int threads) {
        return evolve_state(maps, symbol, rho, t, lam, mode, s,
                            make_options(prune_tol, budget, threads));
      },
      py::arg("maps"), py::arg("symbol"), py::arg("rho"), py::arg("t"),
      py::arg("lam"), py::arg("mode") = PropagatorMode::exact, py::arg("s") = -1,
      py::arg("prune_tol") = 0.0, py::arg("budget") = std::uint64_t(10000000),
      py::arg("threads") = 1);
  m.def(
      "propagator_superoperator",
      [](const ChannelMaps& maps, const ReservoirSymbol& symbol, int t, double lam,
         PropagatorMode mode, int s, double prune_tol, std::uint64_t budget,
         int threads) {
        return propagator_superoperator(maps, symbol, t, lam, mode, s,
                                        make_options(prune_tol, budget, threads));
      },
      py::arg("maps"), py::arg("symbol"), py::arg("t"), py::arg("lam"),
      py::arg("mode") = PropagatorMode::exact, py::arg("s") = -1,
      py::arg("prune_tol") = 0.0, py::arg("budget") = std::uint64_t(10000000),
      py::arg("threads") = 1);

  py::class_<CptpReport>(m, "CptpReport")
      .def_readonly("unital_error", &CptpReport::unital_error)
      .def_readonly("trace_error", &CptpReport::trace_error)
      .def_readonly("choi_min_eig", &CptpReport::choi_min_eig);
  m.def("cptp_verify", &cptp_verify, py::arg("superop"));
  m.def("validate_density", &validate_density, py::arg("rho"));

  // --- Spectral analysis -------------------------------------------------------
  py::class_<PeripheralCluster>(m, "PeripheralCluster")
      .def_readonly("value", &PeripheralCluster::value)
      .def_readonly("multiplicity", &PeripheralCluster::multiplicity)
      .def_readonly("projector", &PeripheralCluster::projector);

  py::class_<ContractionSplit>(m, "ContractionSplit")
      .def_readonly("eigenvalues", &ContractionSplit::eigenvalues)
      .def_readonly("peripheral_dim", &ContractionSplit::peripheral_dim)
      .def_readonly("P_circle", &ContractionSplit::P_circle)
      .def_readonly("P_less", &ContractionSplit::P_less)
      .def_readonly("peripheral", &ContractionSplit::peripheral)
      .def_readonly("gamma_raw", &ContractionSplit::gamma_raw)
      .def_readonly("gamma_used", &ContractionSplit::gamma_used)
      .def_readonly("c_bound", &ContractionSplit::c_bound)
      .def_readonly("circle_tol", &ContractionSplit::circle_tol);

  m.def("contraction_split", &contraction_split, py::arg("S"),
        py::arg("circle_tol") = 1e-9, py::arg("cluster_tol") = 1e-8,
        py::arg("power_horizon") = 0);

  py::class_<CheckResult>(m, "CheckResult")
      .def_readonly("passed", &CheckResult::pass)
      .def_readonly("margin", &CheckResult::margin);

  py::enum_<TriState>(m, "TriState")
      .value("yes", TriState::yes)
      .value("no", TriState::no)
      .value("inconclusive", TriState::inconclusive);

  py::class_<AssumptionReport>(m, "AssumptionReport")
      .def_readonly("phase_nondegeneracy", &AssumptionReport::phase_nondegeneracy)
      .def_readonly("diagonal_overlaps", &AssumptionReport::diagonal_overlaps)
      .def_readonly("offdiagonal_connectivity",
                    &AssumptionReport::offdiagonal_connectivity)
      .def_readonly("corner_algebra", &AssumptionReport::corner_algebra)
      .def_property_readonly("spectral_assumptions_pass",
                             &AssumptionReport::spectral_assumptions_pass);

  m.def("check_phase_nondegeneracy", &check_phase_nondegeneracy, py::arg("V"),
        py::arg("tol") = 1e-10);
  m.def("check_diagonal_overlaps", &check_diagonal_overlaps, py::arg("coupling"),
        py::arg("V"), py::arg("tol") = 1e-10);
  m.def("check_offdiagonal_connectivity", &check_offdiagonal_connectivity,
        py::arg("coupling"), py::arg("V"), py::arg("tol") = 1e-10);
  m.def("check_assumptions", &check_assumptions, py::arg("coupling"), py::arg("V"),
        py::arg("tol") = 1e-10, py::arg("corner") = false);
  m.def("steady_state_block_average", &steady_state_block_average, py::arg("basis"),
        py::arg("rho0"));
  m.def("steady_state", &steady_state, py::arg("coupling"), py::arg("rho0"),
        py::arg("coherence_tol") = 1e-12);

  // --- Genericity ---------------------------------------------------------------
  py::class_<MinorRecord>(m, "MinorRecord")
      .def_readonly("n", &MinorRecord::n)
      .def_readonly("min_abs", &MinorRecord::min_abs)
      .def_readonly("rows", &MinorRecord::rows)
      .def_readonly("cols", &MinorRecord::cols);

  py::class_<MinorScan>(m, "MinorScan")
      .def_readonly("min_abs", &MinorScan::min_abs)
      .def_readonly("by_size", &MinorScan::by_size);

  py::class_<HaarSample>(m, "HaarSample")
      .def_readonly("seed", &HaarSample::seed)
      .def_readonly("index", &HaarSample::index)
      .def_readonly("U", &HaarSample::U)
      .def_readonly("min_abs_minor", &HaarSample::min_abs_minor)
      .def_readonly("min_by_size", &HaarSample::min_by_size);

  m.def("haar_unitary", &haar_unitary, py::arg("d"), py::arg("seed"),
        py::arg("index") = std::uint64_t(0));
  m.def("minor_scan", &minor_scan, py::arg("U"), py::arg("n_max"));
  m.def("haar_sample", &haar_sample, py::arg("d"), py::arg("seed"),
        py::arg("index") = std::uint64_t(0));
}
