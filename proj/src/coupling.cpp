#include "fermiwalk/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fermiwalk/errors.hpp"

namespace fqw {

namespace {

constexpr double kInputTol = 1e-10;

void check_hermitian(const Matrix& H, const char* what) {
  if (H.rows() != H.cols()) throw InvalidInput(std::string(what) + " must be square");
  const double scale = std::max(1.0, H.norm());
  if ((H - H.adjoint()).norm() / scale > kInputTol)
    throw InvalidInput(std::string(what) + " is not Hermitian");
}

struct Clusters {
  std::vector<int> id;       // cluster id per input position
  std::vector<double> rep;   // representative value per cluster, ascending
  std::vector<int> count;
};

Clusters cluster_values(const std::vector<double>& values, double tol) {
  const int n = static_cast<int>(values.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return values[a] < values[b]; });
  Clusters out;
  out.id.assign(n, -1);
  double sum = 0.0;
  int cnt = 0;
  for (int k = 0; k < n; ++k) {
    const double v = values[order[k]];
    if (cnt > 0 && v - values[order[k - 1]] > tol) {
      out.rep.push_back(sum / cnt);
      out.count.push_back(cnt);
      sum = 0.0;
      cnt = 0;
    }
    out.id[order[k]] = static_cast<int>(out.rep.size());
    sum += v;
    ++cnt;
  }
  if (cnt > 0) {
    out.rep.push_back(sum / cnt);
    out.count.push_back(cnt);
  }
  for (std::size_t c = 1; c < out.rep.size(); ++c)
    if (out.rep[c] - out.rep[c - 1] < 10.0 * tol)
      throw AmbiguityError(
          "eigenvalue clusters " + std::to_string(out.rep[c - 1]) + " and " +
          std::to_string(out.rep[c]) +
          " are separated by less than 10x the clustering tolerance");
  return out;
}

double min_gap(const std::vector<double>& ascending) {
  if (ascending.size() < 2) return std::numeric_limits<double>::infinity();
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < ascending.size(); ++i)
    g = std::min(g, ascending[i] - ascending[i - 1]);
  return g;
}

// Assemble the model pieces shared by the single-particle routes: structural
// Fock eigenvalues as sums of slot representatives, then projectors in the
// eigen-wedge frame.
CouplingModel finish_single_particle(const FockBasis& basis, const Matrix& tau,
                                     const Matrix& eigenbasis,
                                     const RealVector& eigenvalues,
                                     double cluster_tol) {
  std::vector<double> slot_vals(eigenvalues.data(),
                                eigenvalues.data() + eigenvalues.size());
  const Clusters slots = cluster_values(slot_vals, cluster_tol);

  const int D = basis.dim();
  std::vector<double> sums(D);
  for (int i = 0; i < D; ++i) {
    double s = 0.0;
    for (int j : basis.state(i).sites) s += slots.rep[slots.id[j - 1]];
    sums[i] = s;
  }
  const Clusters fock = cluster_values(sums, cluster_tol);

  CouplingModel model{basis,
                      second_quantize_generator(basis, tau),
                      {},
                      0.0,
                      second_quantize_unitary(basis, eigenbasis),
                      fock.id,
                      SingleParticleData{}};
  auto& sp = *model.sp;
  sp.tau = tau;
  sp.eigenbasis = eigenbasis;
  sp.eigenvalues = eigenvalues;
  sp.slot_cluster = slots.id;
  sp.slot_rep.resize(eigenvalues.size());
  for (int j = 0; j < eigenvalues.size(); ++j) sp.slot_rep(j) = slots.rep[slots.id[j]];

  model.spec.cluster_tol = cluster_tol;
  model.spec.values = fock.rep;
  model.spec.multiplicities = fock.count;
  model.spec.projectors.reserve(fock.rep.size());
  for (std::size_t c = 0; c < fock.rep.size(); ++c) {
    Matrix P = Matrix::Zero(D, D);
    for (int i = 0; i < D; ++i)
      if (fock.id[i] == static_cast<int>(c))
        P += model.wedge_frame.col(i) * model.wedge_frame.col(i).adjoint();
    model.spec.projectors.push_back(std::move(P));
  }
  model.gap = min_gap(model.spec.values);

  Matrix recon = Matrix::Zero(D, D);
  for (std::size_t c = 0; c < model.spec.values.size(); ++c)
    recon += model.spec.values[c] * model.spec.projectors[c];
  if ((recon - model.T).norm() / std::max(1.0, model.T.norm()) > 1e-8)
    throw AmbiguityError(
        "structural spectral data does not reconstruct the coupling; "
        "clustering tolerance is inconsistent with the input");
  return model;
}

}  // namespace

SpectralDecomposition spectral_decompose(const Matrix& H, double cluster_tol) {
  check_hermitian(H, "operator");
  if (cluster_tol <= 0.0) throw InvalidInput("cluster tolerance must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
  std::vector<double> vals(es.eigenvalues().data(),
                           es.eigenvalues().data() + es.eigenvalues().size());
  const Clusters cl = cluster_values(vals, cluster_tol);
  SpectralDecomposition out;
  out.cluster_tol = cluster_tol;
  out.values = cl.rep;
  out.multiplicities = cl.count;
  const auto n = H.rows();
  for (std::size_t c = 0; c < cl.rep.size(); ++c) {
    Matrix P = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < vals.size(); ++k)
      if (cl.id[k] == static_cast<int>(c))
        P += es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
    out.projectors.push_back(std::move(P));
  }
  return out;
}

std::vector<int> CouplingModel::sector_members(int c, int n) const {
  if (state_cluster.empty())
    throw InvalidInput("structural membership needs a single-particle coupling");
  std::vector<int> out;
  const int off = basis.sector_offset(n);
  for (int i = 0; i < basis.sector_dim(n); ++i)
    if (state_cluster[off + i] == c) out.push_back(off + i);
  return out;
}

std::vector<int> CouplingModel::sector_clusters(int n) const {
  std::vector<int> out;
  if (!state_cluster.empty()) {
    const int off = basis.sector_offset(n);
    std::vector<bool> seen(num_clusters(), false);
    for (int i = 0; i < basis.sector_dim(n); ++i) seen[state_cluster[off + i]] = true;
    for (int c = 0; c < num_clusters(); ++c)
      if (seen[c]) out.push_back(c);
    return out;
  }
  for (int c = 0; c < num_clusters(); ++c)
    if (sector_block(basis, spec.projectors[c], n).real().trace() > 0.5)
      out.push_back(c);
  return out;
}

CouplingModel build_coupling(const FockBasis& basis, const Matrix& tau,
                             double cluster_tol) {
  check_hermitian(tau, "coupling");
  if (tau.rows() != basis.d()) throw InvalidInput("coupling has wrong dimension");
  if (tau.norm() <= 1e-12)
    throw InvalidInput("zero coupling: the spectral gap is undefined");
  if (cluster_tol <= 0.0) throw InvalidInput("cluster tolerance must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix> es(tau);
  if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
  return finish_single_particle(basis, tau, es.eigenvectors(), es.eigenvalues(),
                                cluster_tol);
}

CouplingModel build_coupling_from_fock(const FockBasis& basis, const Matrix& T,
                                       double cluster_tol) {
  check_hermitian(T, "coupling");
  if (T.rows() != basis.dim())
    throw InvalidInput("Fock-space coupling has wrong dimension");
  if (T.norm() <= 1e-12)
    throw InvalidInput("zero coupling: the spectral gap is undefined");
  CouplingModel model{basis, T, spectral_decompose(T, cluster_tol), 0.0,
                      Matrix(),  {}, std::nullopt};
  model.gap = min_gap(model.spec.values);
  return model;
}

CouplingModel hopping_coupling(const FockBasis& basis, double phase) {
  const int d = basis.d();
  if (d < 3) throw InvalidInput("hopping coupling needs at least 3 sites");
  const Complex ph = std::exp(Complex(0.0, phase));
  Matrix tau = Matrix::Zero(d, d);
  tau(1, 0) = ph;
  tau(0, 1) = std::conj(ph);
  Matrix F = Matrix::Identity(d, d);
  const double rt = 1.0 / std::sqrt(2.0);
  F(0, 0) = rt;
  F(1, 0) = ph * rt;
  F(0, 1) = rt;
  F(1, 1) = -ph * rt;
  RealVector eps = RealVector::Zero(d);
  eps(0) = 1.0;
  eps(1) = -1.0;
  return finish_single_particle(basis, tau, F, eps, 1e-8);
}

Matrix sector_block(const FockBasis& basis, const Matrix& M, int n) {
  if (M.rows() != basis.dim() || M.cols() != basis.dim())
    throw InvalidInput("operator has wrong dimension for this basis");
  const int off = basis.sector_offset(n);
  const int sz = basis.sector_dim(n);
  return M.block(off, off, sz, sz);
}

SectorNondegeneracyReport check_sector_nondegeneracy(const CouplingModel& model) {
  SectorNondegeneracyReport report;
  const int d = model.basis.d();
  report.overall = true;
  for (int n = 1; n <= d - 1; ++n) {
    const bool ok = model.sector_clusters(n).size() >= 2;
    report.per_sector.push_back(ok);
    report.overall = report.overall && ok;
  }
  if (model.has_single_particle()) {
    std::vector<int> distinct(model.sp->slot_cluster);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    report.tau_scalar = distinct.size() < 2;
  }
  return report;
}

}  // namespace fqw
