#include "fermiwalk/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fermiwalk/dynamics.hpp"
#include "fermiwalk/errors.hpp"
#include "fermiwalk/fock.hpp"
#include "fermiwalk/superop.hpp"

namespace fqw {

namespace {

constexpr double kResidualTol = 1e-8;

// Unitary similarity exchanging the two diagonal entries of an upper
// triangular 2 x 2 block at position k. The first column of the rotation is
// the normalized eigenvector of the block for its lower eigenvalue.
void swap_adjacent(Matrix& T, Matrix& Q, std::vector<char>& sel, Eigen::Index k) {
  const Complex a = T(k, k), b = T(k, k + 1), c = T(k + 1, k + 1);
  Eigen::Vector2cd v;
  v << b, c - a;
  const double nv = v.norm();
  std::swap(sel[std::size_t(k)], sel[std::size_t(k + 1)]);
  if (nv < 1e-300) return;  // identical eigenvalues, order is immaterial
  v /= nv;
  Eigen::Matrix2cd G;
  G.col(0) = v;
  G.col(1) << -std::conj(v(1)), std::conj(v(0));
  const Eigen::Index n = T.rows();
  T.block(k, k, 2, n - k) = (G.adjoint() * T.block(k, k, 2, n - k)).eval();
  T.block(0, k, k + 2, 2) = (T.block(0, k, k + 2, 2) * G).eval();
  T(k + 1, k) = 0.0;
  Q.middleCols(k, 2) = (Q.middleCols(k, 2) * G).eval();
}

// Bubble the selected eigenvalues to the leading positions, swapping only
// across the selection boundary so clustered equal values are never mixed.
void move_selected_front(Matrix& T, Matrix& Q, std::vector<char>& sel) {
  const Eigen::Index n = T.rows();
  Eigen::Index target = 0;
  while (target < n && sel[std::size_t(target)]) ++target;
  for (Eigen::Index i = target; i < n; ++i) {
    if (!sel[std::size_t(i)]) continue;
    for (Eigen::Index k = i; k > target; --k) swap_adjacent(T, Q, sel, k - 1);
    ++target;
  }
}

// Spectral projector onto the leading p-dimensional invariant subspace of an
// upper triangular T: P = Q [[I, Y], [0, 0]] Q^* with T11 Y - Y T22 = T12,
// solved column by column through triangular backsubstitution.
Matrix schur_projector(const Matrix& T, const Matrix& Q, Eigen::Index p) {
  const Eigen::Index n = T.rows();
  if (p == 0) return Matrix::Zero(n, n);
  if (p == n) return Matrix::Identity(n, n);
  const Matrix T11 = T.topLeftCorner(p, p);
  const Matrix T22 = T.bottomRightCorner(n - p, n - p);
  const Matrix T12 = T.topRightCorner(p, n - p);
  Matrix Y(p, n - p);
  for (Eigen::Index j = 0; j < n - p; ++j) {
    Vector rhs = T12.col(j);
    for (Eigen::Index i = 0; i < j; ++i) rhs += Y.col(i) * T22(i, j);
    Matrix A = T11;
    A.diagonal().array() -= T22(j, j);
    Y.col(j) = A.triangularView<Eigen::Upper>().solve(rhs);
  }
  Matrix K = Matrix::Zero(n, n);
  K.topLeftCorner(p, p).setIdentity();
  K.topRightCorner(p, n - p) = Y;
  return Q * K * Q.adjoint();
}

void verify_projector(const Matrix& S, const Matrix& P, const char* what) {
  const double scaleP = std::max(1.0, P.norm());
  if ((P * P - P).norm() > kResidualTol * scaleP * scaleP)
    throw Error(std::string(what) + ": projector is not idempotent");
  const double scaleS = std::max(1.0, S.norm());
  if ((S * P - P * S).norm() > kResidualTol * scaleS * scaleP)
    throw Error(std::string(what) + ": projector does not commute with the map");
}

void check_walk_unitary(const Matrix& V) {
  if (V.rows() != V.cols() || V.rows() < 1)
    throw InvalidInput("walk unitary must be square");
  const Eigen::Index d = V.rows();
  if (d > 12) throw InvalidInput("walk dimension exceeds the 12-site cap");
  if ((V.adjoint() * V - Matrix::Identity(d, d)).norm() / std::sqrt(double(d)) >
      1e-10)
    throw InvalidInput("walk operator is not unitary");
}

struct WalkEigen {
  Matrix Psi;         // unitary eigenbasis, columns
  RealVector phases;  // eigenphase per column
};

WalkEigen walk_eigen(const Matrix& V) {
  check_walk_unitary(V);
  const Eigen::Index d = V.rows();
  Eigen::ComplexSchur<Matrix> schur(V, true);
  if (schur.info() != Eigen::Success)
    throw Error("walk eigendecomposition did not converge");
  const Matrix T = schur.matrixT();
  const Matrix Q = schur.matrixU();
  const Vector evs = T.diagonal();
  if ((V * Q - Q * evs.asDiagonal().toDenseMatrix()).norm() > kResidualTol)
    throw Error("walk eigendecomposition residual is too large");
  WalkEigen out;
  out.Psi = Q;
  out.phases = RealVector(d);
  for (Eigen::Index k = 0; k < d; ++k) out.phases(k) = std::arg(evs(k));
  return out;
}

Matrix gather_columns(const Matrix& M, const std::vector<int>& cols) {
  Matrix out(M.rows(), Eigen::Index(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(Eigen::Index(j)) = M.col(cols[j]);
  return out;
}

Matrix gather_square(const Matrix& M, const std::vector<int>& rows,
                     const std::vector<int>& cols) {
  Matrix out(Eigen::Index(rows.size()), Eigen::Index(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(Eigen::Index(i), Eigen::Index(j)) = M(rows[i] - 1, cols[j] - 1);
  return out;
}

// Orthonormal span tracker over vectorized matrices (modified Gram-Schmidt,
// re-orthogonalized once).
class SpanBasis {
 public:
  bool add(const Matrix& M) {
    Vector v = vectorize(M);
    const double scale = std::max(1.0, v.norm());
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis_) v -= b * b.dot(v);
    if (v.norm() <= 1e-9 * scale) return false;
    basis_.push_back(v.normalized());
    return true;
  }

  std::size_t dim() const { return basis_.size(); }

 private:
  std::vector<Vector> basis_;
};

int cluster_of_state(const CouplingModel& coupling, Eigen::Index idx) {
  if (!coupling.state_cluster.empty())
    return coupling.state_cluster[std::size_t(idx)];
  int best = 0;
  double best_val = -1.0;
  for (int c = 0; c < coupling.num_clusters(); ++c) {
    const double v = coupling.spec.projectors[c](idx, idx).real();
    if (v > best_val) {
      best_val = v;
      best = c;
    }
  }
  return best;
}

}  // namespace

ContractionSplit contraction_split(const Matrix& S, double circle_tol,
                                   double cluster_tol, int power_horizon) {
  if (S.rows() != S.cols() || S.rows() < 1)
    throw InvalidInput("spectral split needs a square matrix");
  const Eigen::Index n = S.rows();

  Eigen::ComplexSchur<Matrix> schur(S, true);
  if (schur.info() != Eigen::Success)
    throw Error("Schur decomposition did not converge");
  Matrix T = schur.matrixT();
  Matrix Q = schur.matrixU();

  std::vector<char> sel(std::size_t(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mod = std::abs(T(i, i));
    if (mod >= 1.0 - circle_tol) {
      sel[std::size_t(i)] = 1;
    } else if (mod >= 1.0 - 10.0 * circle_tol) {
      throw AmbiguityError(
          "eigenvalue modulus " + std::to_string(mod) +
          " falls in the guard band below the unit circle; the peripheral "
          "split cannot be certified at this tolerance");
    }
  }

  move_selected_front(T, Q, sel);
  const double scale = std::max(1.0, S.norm());
  if ((Q * T * Q.adjoint() - S).norm() > kResidualTol * scale)
    throw Error("spectral reordering lost accuracy");

  ContractionSplit out;
  out.circle_tol = circle_tol;
  Eigen::Index p = 0;
  while (p < n && sel[std::size_t(p)]) ++p;
  out.peripheral_dim = p;
  out.eigenvalues.resize(std::size_t(n));
  for (Eigen::Index i = 0; i < n; ++i) out.eigenvalues[std::size_t(i)] = T(i, i);

  out.P_circle = schur_projector(T, Q, p);
  verify_projector(S, out.P_circle, "peripheral split");
  out.P_less = Matrix::Identity(n, n) - out.P_circle;

  double interior_max = 0.0;
  for (Eigen::Index i = p; i < n; ++i)
    interior_max = std::max(interior_max, std::abs(T(i, i)));
  if (p == n || interior_max < 1e-300) {
    out.gamma_raw = std::numeric_limits<double>::infinity();
    out.gamma_used = out.gamma_raw;
  } else {
    out.gamma_raw = -std::log(interior_max);
    out.gamma_used = 0.99 * out.gamma_raw;
  }

  // Single-linkage clusters among the peripheral eigenvalues.
  if (p > 0) {
    std::vector<int> parent(static_cast<std::size_t>(p));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int i) {
      while (parent[std::size_t(i)] != i) i = parent[std::size_t(i)];
      return i;
    };
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = i + 1; j < p; ++j)
        if (std::abs(out.eigenvalues[std::size_t(i)] -
                     out.eigenvalues[std::size_t(j)]) <= cluster_tol)
          parent[std::size_t(find(int(i)))] = find(int(j));
    std::vector<int> roots;
    for (int i = 0; i < int(p); ++i)
      if (find(i) == i) roots.push_back(i);
    std::vector<std::vector<int>> groups(roots.size());
    for (int i = 0; i < int(p); ++i) {
      const int r = find(i);
      const auto at = std::find(roots.begin(), roots.end(), r) - roots.begin();
      groups[std::size_t(at)].push_back(i);
    }
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    for (const auto& g : groups) {
      PeripheralCluster cluster;
      Complex mean = 0.0;
      for (int i : g) mean += out.eigenvalues[std::size_t(i)];
      cluster.value = mean / double(g.size());
      cluster.multiplicity = int(g.size());
      if (groups.size() == 1) {
        cluster.projector = out.P_circle;
      } else {
        Matrix T2 = T;
        Matrix Q2 = Q;
        std::vector<char> sel2(std::size_t(n), 0);
        for (int i : g) sel2[std::size_t(i)] = 1;
        move_selected_front(T2, Q2, sel2);
        cluster.projector = schur_projector(T2, Q2, Eigen::Index(g.size()));
        verify_projector(S, cluster.projector, "peripheral cluster");
      }
      out.peripheral.push_back(std::move(cluster));
    }
  }

  if (power_horizon > 0 && p < n && std::isfinite(out.gamma_used)) {
    Matrix cur = S * out.P_less;
    double bound = 0.0;
    for (int k = 1; k <= power_horizon; ++k) {
      bound = std::max(bound, cur.norm() * std::exp(out.gamma_used * k));
      if (k < power_horizon) cur = S * cur;
    }
    out.c_bound = bound;
  }
  return out;
}

CheckResult check_phase_nondegeneracy(const Matrix& V, double tol) {
  const WalkEigen we = walk_eigen(V);
  const int d = int(V.rows());
  const std::size_t subsets = std::size_t(1) << d;
  std::vector<double> phi(subsets, 0.0);
  for (std::size_t mask = 1; mask < subsets; ++mask) {
    const int low = __builtin_ctzll(mask);
    phi[mask] = phi[mask & (mask - 1)] + we.phases(low);
  }

  // The conjugation superoperator X -> G X G* has eigenvalue
  // exp(i(phi_J - phi_K)) on each dyad pair (J, K), and the phase difference
  // depends only on the reduced disjoint pair (J \ K, K \ J): pairs sharing a
  // symmetric difference collide identically, for any walk. The meaningful
  // separation condition therefore quantifies over disjoint pairs (A, B) —
  // 3^d of them, enumerated by submasks of each complement. Distinctness of
  // all reduced differences mod 2pi pins the unit eigenvalue's multiplicity
  // to exactly 2^d and makes the full-support phases (det V among them)
  // simple.
  constexpr double kTwoPi = 2.0 * M_PI;
  std::size_t reduced_pairs = 1;
  for (int i = 0; i < d; ++i) reduced_pairs *= 3;
  std::vector<double> diffs;
  diffs.reserve(reduced_pairs);
  const std::size_t full = subsets - 1;
  for (std::size_t a = 0; a < subsets; ++a) {
    const std::size_t comp = full & ~a;
    std::size_t b = comp;
    while (true) {
      double x = std::remainder(phi[b] - phi[a], kTwoPi);
      if (x < 0.0) x += kTwoPi;
      diffs.push_back(x);
      if (b == 0) break;
      b = (b - 1) & comp;
    }
  }
  std::sort(diffs.begin(), diffs.end());
  double min_gap = kTwoPi - diffs.back() + diffs.front();
  for (std::size_t i = 1; i < diffs.size(); ++i)
    min_gap = std::min(min_gap, diffs[i] - diffs[i - 1]);

  CheckResult res;
  res.margin = min_gap;
  res.pass = min_gap > tol;
  return res;
}

CheckResult check_diagonal_overlaps(const CouplingModel& coupling, const Matrix& V,
                                    double tol) {
  const FockBasis& basis = coupling.basis;
  if (V.rows() != basis.d()) throw InvalidInput("walk dimension mismatch");
  const WalkEigen we = walk_eigen(V);
  const Matrix GPsi = second_quantize_unitary(basis, we.Psi);

  std::optional<Matrix> C;
  if (coupling.has_single_particle())
    C = (coupling.sp->eigenbasis.adjoint() * we.Psi).eval();

  double min_overlap = std::numeric_limits<double>::infinity();
  for (int n = 1; n < basis.d(); ++n) {
    const auto clusters = coupling.sector_clusters(n);
    const Eigen::Index off = basis.sector_offset(n);
    const Eigen::Index sd = basis.sector_dim(n);
    for (Eigen::Index q = 0; q < sd; ++q) {
      const Eigen::Index idx = off + q;
      const Vector col = GPsi.col(idx);
      for (int c : clusters) {
        const double ov = col.dot(coupling.spec.projectors[c] * col).real();
        min_overlap = std::min(min_overlap, ov);
        if (C) {
          // Independent route through minors of the basis-change matrix.
          double minor_sum = 0.0;
          for (int member : coupling.sector_members(c, n)) {
            const Matrix sub = gather_square(*C, basis.state(member).sites,
                                             basis.state(idx).sites);
            minor_sum += std::norm(sub.determinant());
          }
          if (std::abs(minor_sum - ov) > 1e-10)
            throw Error("overlap cross-check through minors failed");
        }
      }
    }
  }
  CheckResult res;
  res.margin = min_overlap;
  res.pass = min_overlap > tol;
  return res;
}

CheckResult check_offdiagonal_connectivity(const CouplingModel& coupling,
                                           const Matrix& V, double tol) {
  const FockBasis& basis = coupling.basis;
  if (V.rows() != basis.d()) throw InvalidInput("walk dimension mismatch");
  const WalkEigen we = walk_eigen(V);
  const Matrix GPsi = second_quantize_unitary(basis, we.Psi);

  double min_best = std::numeric_limits<double>::infinity();
  for (int n = 1; n < basis.d(); ++n) {
    const auto clusters = coupling.sector_clusters(n);
    const Eigen::Index off = basis.sector_offset(n);
    const Eigen::Index sd = basis.sector_dim(n);
    for (Eigen::Index a = 0; a < sd; ++a)
      for (Eigen::Index b = a + 1; b < sd; ++b) {
        double best = 0.0;
        for (int c : clusters)
          best = std::max(best, std::abs(GPsi.col(off + a).dot(
                                    coupling.spec.projectors[c] * GPsi.col(off + b))));
        min_best = std::min(min_best, best);
      }
  }
  CheckResult res;
  res.margin = min_best;
  res.pass = min_best > tol;
  return res;
}

TriState check_corner_algebra(const CouplingModel& coupling, const Matrix& V) {
  const FockBasis& basis = coupling.basis;
  if (V.rows() != basis.d()) throw InvalidInput("walk dimension mismatch");
  if (!coupling.has_single_particle()) return TriState::inconclusive;
  check_walk_unitary(V);
  const Matrix GV = second_quantize_unitary(basis, V);

  bool any_inconclusive = false;
  for (int n = 2; n < basis.d(); ++n) {
    for (int mu : coupling.sector_clusters(n)) {
      const auto members = coupling.sector_members(mu, n);
      const std::size_t r = members.size();
      if (r == 0) continue;
      const Matrix W = gather_columns(coupling.wedge_frame, members);

      std::vector<Matrix> gens;
      gens.push_back(W.adjoint() * GV * W);
      for (int c = 0; c < coupling.num_clusters(); ++c) {
        if (c == mu) continue;
        gens.push_back(W.adjoint() * GV * coupling.spec.projectors[c] * GV * W);
      }
      {
        const std::size_t base = gens.size();
        for (std::size_t g = 0; g < base; ++g) gens.push_back(gens[g].adjoint());
      }

      SpanBasis span;
      std::vector<Matrix> frontier;
      span.add(Matrix::Identity(Eigen::Index(r), Eigen::Index(r)));
      frontier.push_back(Matrix::Identity(Eigen::Index(r), Eigen::Index(r)));
      const std::size_t full = r * r;
      const std::size_t word_cap = 2 * full;
      std::size_t words = 0;
      bool is_full = false;
      while (!frontier.empty() && !is_full && words < word_cap) {
        std::vector<Matrix> next;
        for (const auto& f : frontier)
          for (const auto& g : gens) {
            const Matrix prod = g * f;
            if (span.add(prod)) next.push_back(prod);
            if (span.dim() == full) {
              is_full = true;
              break;
            }
          }
        frontier = std::move(next);
        ++words;
      }
      if (span.dim() == full) continue;
      if (frontier.empty()) return TriState::no;
      any_inconclusive = true;
    }
  }
  return any_inconclusive ? TriState::inconclusive : TriState::yes;
}

AssumptionReport check_assumptions(const CouplingModel& coupling, const Matrix& V,
                                   double tol, bool corner) {
  AssumptionReport report;
  report.phase_nondegeneracy = check_phase_nondegeneracy(V, tol);
  report.diagonal_overlaps = check_diagonal_overlaps(coupling, V, tol);
  report.offdiagonal_connectivity = check_offdiagonal_connectivity(coupling, V, tol);
  if (corner) report.corner_algebra = check_corner_algebra(coupling, V);
  return report;
}

Matrix steady_state_block_average(const FockBasis& basis, const Matrix& rho0) {
  if (rho0.rows() != basis.dim() || rho0.cols() != basis.dim())
    throw InvalidInput("state has wrong dimension for this basis");
  Matrix out = Matrix::Zero(basis.dim(), basis.dim());
  for (int n = 0; n <= basis.d(); ++n) {
    const Eigen::Index off = basis.sector_offset(n);
    const Eigen::Index sd = basis.sector_dim(n);
    const Complex weight = rho0.block(off, off, sd, sd).trace() / double(sd);
    for (Eigen::Index q = 0; q < sd; ++q) out(off + q, off + q) = weight;
  }
  return out;
}

Matrix steady_state(const CouplingModel& coupling, const Matrix& rho0,
                    double coherence_tol) {
  validate_density(rho0);
  const Eigen::Index D = coupling.basis.dim();
  if (rho0.rows() != D) throw InvalidInput("state has wrong dimension for this basis");
  const Eigen::Index filled = D - 1;
  if (cluster_of_state(coupling, 0) == cluster_of_state(coupling, filled)) {
    // Vacuum and filled state sit in the same coupling cluster, so their
    // mutual coherence is never damped and only phase-rotates.
    if (std::abs(rho0(0, filled)) > coherence_tol ||
        std::abs(rho0(filled, 0)) > coherence_tol)
      throw HypothesisViolation(
          "initial coherence between the vacuum and the filled state persists "
          "for all times; the block-average steady state does not apply");
  }
  return steady_state_block_average(coupling.basis, rho0);
}

}  // namespace fqw
