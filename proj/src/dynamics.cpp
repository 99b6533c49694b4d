#include "fermiwalk/dynamics.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>

#include "fermiwalk/errors.hpp"

namespace fqw {

namespace {

// Superoperator matrices are materialized up to this Fock dimension (32 = 5
// sites gives 1024 x 1024 superoperators); construction identities are fully
// re-verified up to dimension 16.
constexpr Eigen::Index kSuperopMaxFock = 32;
constexpr Eigen::Index kVerifyMaxFock = 16;
constexpr double kBuildTol = 1e-10;
constexpr double kSectionLowerTol = 1e-10;
constexpr std::uint64_t kMinChunks = 64;

void kahan_add(Matrix& sum, Matrix& comp, const Matrix& term) {
  const Matrix y = term - comp;
  const Matrix t = sum + y;
  comp = (t - sum) - y;
  sum = t;
}

void kahan_add(double& sum, double& comp, double term) {
  const double y = term - comp;
  const double t = sum + y;
  comp = (t - sum) - y;
  sum = t;
}

enum class LeafKind { heisenberg, schroedinger, superop };

struct PathSetup {
  int t = 0;
  double lambda = 0.0;
  int m = 0;
  Eigen::Index fock_dim = 0;
  std::vector<Matrix> gb;     // GV^* B_c, the per-slot left factors
  std::vector<double> vals;   // cluster values
  RealMatrix ksec;            // kernel section, slots 1..t
  bool prune = false;
  double prune_tol = 0.0;
  int chunk_depth = 0;
  std::uint64_t chunks = 1;
};

struct PathAccum {
  Matrix sum, comp;
  double mass = 0.0, mass_comp = 0.0;
  std::uint64_t leaves = 0, pruned = 0;

  void init(Eigen::Index rows, Eigen::Index cols) {
    sum = Matrix::Zero(rows, cols);
    comp = Matrix::Zero(rows, cols);
  }
};

std::uint64_t ipow(std::uint64_t base, int e) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

class PathWorker {
 public:
  PathWorker(const PathSetup& s, LeafKind kind, const Matrix* X)
      : s_(s), kind_(kind), X_(X) {
    const Eigen::Index D = s.fock_dim;
    lmu_.assign(s.t + 1, Matrix::Identity(D, D));
    lnu_.assign(s.t + 1, Matrix::Identity(D, D));
    norm2_.assign(s.t + 1, 0.0);
    support_.reserve(s.t);
  }

  void run_chunk(std::uint64_t chunk, PathAccum& out) {
    out_ = &out;
    support_.clear();
    const std::uint64_t m2 = std::uint64_t(s_.m) * s_.m;
    const std::uint64_t leaves_per_chunk = ipow(m2, s_.t - s_.chunk_depth);
    for (int k = 1; k <= s_.chunk_depth; ++k) {
      const auto digit =
          (chunk / ipow(m2, s_.chunk_depth - k)) % m2;
      const int mi = static_cast<int>(digit) / s_.m;
      const int ni = static_cast<int>(digit) % s_.m;
      enter(k, mi, ni);
      if (pruned_at(k)) {
        const double bound = prune_bound(k);
        kahan_add(out.mass, out.mass_comp, bound * double(leaves_per_chunk));
        out.pruned += leaves_per_chunk;
        unwind(k);
        return;
      }
    }
    recurse(s_.chunk_depth + 1);
    unwind(s_.chunk_depth);
  }

 private:
  void enter(int k, int mi, int ni) {
    lmu_[k].noalias() = lmu_[k - 1] * s_.gb[mi];
    lnu_[k].noalias() = lnu_[k - 1] * s_.gb[ni];
    const double theta = s_.vals[mi] - s_.vals[ni];
    norm2_[k] = norm2_[k - 1] + theta * theta;
    if (theta != 0.0) support_.push_back({k, theta});
  }

  void leave(int k, int mi, int ni) {
    const double theta = s_.vals[mi] - s_.vals[ni];
    if (theta != 0.0) support_.pop_back();
  }

  void unwind(int upto) {
    // support entries above the chunk prefix are popped by recurse itself;
    // clear whatever the prefix pushed
    support_.clear();
  }

  bool pruned_at(int k) const {
    return s_.prune && prune_bound(k) < s_.prune_tol;
  }

  double prune_bound(int k) const {
    return std::exp(-0.25 * s_.lambda * s_.lambda * norm2_[k]);
  }

  double leaf_weight() const {
    double quad = 0.0;
    for (const auto& [i, ti] : support_)
      for (const auto& [j, tj] : support_) quad += ti * tj * s_.ksec(i - 1, j - 1);
    return std::exp(-0.25 * s_.lambda * s_.lambda * quad);
  }

  void recurse(int k) {
    if (k > s_.t) {
      emit_leaf();
      return;
    }
    const std::uint64_t m2 = std::uint64_t(s_.m) * s_.m;
    for (int mi = 0; mi < s_.m; ++mi) {
      for (int ni = 0; ni < s_.m; ++ni) {
        enter(k, mi, ni);
        if (pruned_at(k)) {
          const double bound = prune_bound(k);
          const std::uint64_t below = ipow(m2, s_.t - k);
          kahan_add(out_->mass, out_->mass_comp, bound * double(below));
          out_->pruned += below;
        } else {
          recurse(k + 1);
        }
        leave(k, mi, ni);
      }
    }
  }

  void emit_leaf() {
    const double w = leaf_weight();
    const int t = s_.t;
    switch (kind_) {
      case LeafKind::heisenberg:
        term_.noalias() = lmu_[t] * (*X_) * lnu_[t].adjoint();
        break;
      case LeafKind::schroedinger:
        term_.noalias() = lmu_[t].adjoint() * (*X_) * lnu_[t];
        break;
      case LeafKind::superop:
        term_ = kron(lnu_[t].conjugate(), lmu_[t]);
        break;
    }
    term_ *= w;
    kahan_add(out_->sum, out_->comp, term_);
    ++out_->leaves;
  }

  const PathSetup& s_;
  LeafKind kind_;
  const Matrix* X_;
  PathAccum* out_ = nullptr;
  std::vector<Matrix> lmu_, lnu_;
  std::vector<double> norm2_;
  std::vector<std::pair<int, double>> support_;
  Matrix term_;
};

struct PathSumResult {
  Matrix value;
  std::uint64_t leaves = 0, pruned = 0;
  double mass = 0.0;
  bool pruning_active = false;
};

PathSumResult run_path_sum(const ChannelMaps& maps, const ReservoirSymbol& symbol,
                           int t, double lambda, const PropagateOptions& opts,
                           LeafKind kind, const Matrix* X) {
  if (t < 1) throw InvalidInput("time must be at least 1");
  if (lambda < 0.0) throw InvalidInput("coupling strength must be nonnegative");
  const Eigen::Index D = maps.basis().dim();
  if (X && (X->rows() != D || X->cols() != D))
    throw InvalidInput("operator has wrong dimension for this basis");

  PathSetup setup;
  setup.t = t;
  setup.lambda = lambda;
  setup.m = maps.coupling.num_clusters();
  setup.fock_dim = D;
  setup.vals = maps.coupling.spec.values;

  const double pairs = std::pow(double(setup.m), 2.0 * t);
  if (pairs > double(opts.budget))
    throw BudgetError(
        "exact path sum needs " + std::to_string(pairs) + " path pairs (" +
        std::to_string(setup.m) + " spectral clusters, t = " + std::to_string(t) +
        ") but the budget is " + std::to_string(opts.budget) +
        "; raise the budget or use the truncated propagator");

  const Matrix GVadj = maps.GV.adjoint();
  setup.gb.reserve(setup.m);
  for (int c = 0; c < setup.m; ++c)
    setup.gb.push_back(GVadj * maps.coupling.spec.projectors[c]);
  setup.ksec = symbol.section(t);
  setup.prune = opts.prune_tol > 0.0 && lambda > 0.0 &&
                symbol.section_min_eigenvalue(t) >= 1.0 - kSectionLowerTol;
  setup.prune_tol = opts.prune_tol;

  // Chunk layout depends only on the problem, never on the worker count, so
  // the fixed-order merge gives bit-identical results for any thread count.
  const std::uint64_t m2 = std::uint64_t(setup.m) * setup.m;
  if (kind == LeafKind::superop) {
    setup.chunk_depth = 0;
    setup.chunks = 1;
  } else {
    while (setup.chunk_depth < t && setup.chunks < kMinChunks) {
      setup.chunks *= m2;
      ++setup.chunk_depth;
    }
  }

  const Eigen::Index acc_dim = kind == LeafKind::superop ? D * D : D;
  std::vector<PathAccum> per_chunk(setup.chunks);
  for (auto& acc : per_chunk) acc.init(acc_dim, acc_dim);

  const int threads =
      std::max(1, std::min<int>(opts.threads, static_cast<int>(setup.chunks)));
  if (threads == 1) {
    PathWorker worker(setup, kind, X);
    for (std::uint64_t c = 0; c < setup.chunks; ++c)
      worker.run_chunk(c, per_chunk[c]);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        PathWorker worker(setup, kind, X);
        while (true) {
          const std::uint64_t c = next.fetch_add(1);
          if (c >= setup.chunks) break;
          worker.run_chunk(c, per_chunk[c]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  PathSumResult out;
  out.pruning_active = setup.prune;
  Matrix sum = Matrix::Zero(acc_dim, acc_dim);
  Matrix comp = Matrix::Zero(acc_dim, acc_dim);
  double mass = 0.0, mass_comp = 0.0;
  for (const auto& acc : per_chunk) {
    kahan_add(sum, comp, acc.sum);
    kahan_add(sum, comp, Matrix(-acc.comp));
    kahan_add(mass, mass_comp, acc.mass);
    kahan_add(mass, mass_comp, -acc.mass_comp);
    out.leaves += acc.leaves;
    out.pruned += acc.pruned;
  }
  out.value = std::move(sum);
  out.mass = mass;
  return out;
}

void require_superops(const ChannelMaps& maps, const char* what) {
  if (!maps.has_superops())
    throw BudgetError(std::string(what) +
                      " needs materialized superoperators, which are capped at " +
                      std::to_string(kSuperopMaxFock) + " Fock dimensions");
}

// Slot choices with mu != nu, enumerated as a fixed-order odometer.
struct OffDiagonal {
  int mu, nu;
};

std::vector<OffDiagonal> off_diagonal_pairs(int m) {
  std::vector<OffDiagonal> out;
  out.reserve(std::size_t(m) * (m - 1));
  for (int mu = 0; mu < m; ++mu)
    for (int nu = 0; nu < m; ++nu)
      if (mu != nu) out.push_back({mu, nu});
  return out;
}

// Enumerate every correction term with 1..s off-diagonal slots: the slot
// subset j1 < ... < js', one cluster pair per slot, and the Gaussian weight
// of the sparse theta they induce. Fixed lexicographic order; the weights use
// the same quadratic-form evaluation as the exact path sum, so a full-order
// truncation reproduces it to rounding.
template <typename Emit>
void for_each_correction(int t, int s, const std::vector<double>& vals,
                         const std::vector<OffDiagonal>& offdiag,
                         const ReservoirSymbol& symbol, double lambda, Emit&& emit) {
  if (offdiag.empty()) return;
  std::vector<int> slots;
  std::vector<std::size_t> choice;
  std::vector<std::pair<int, double>> theta;
  for (int sprime = 1; sprime <= s; ++sprime) {
    slots.resize(sprime);
    for (int i = 0; i < sprime; ++i) slots[i] = i + 1;
    while (true) {
      choice.assign(sprime, 0);
      while (true) {
        theta.clear();
        for (int p = 0; p < sprime; ++p)
          theta.push_back({slots[p], vals[offdiag[choice[p]].mu] -
                                         vals[offdiag[choice[p]].nu]});
        emit(slots, choice, gaussian_weight(symbol, theta, lambda));
        int p = sprime - 1;
        while (p >= 0 && choice[p] + 1 == offdiag.size()) --p;
        if (p < 0) break;
        ++choice[p];
        for (int q = p + 1; q < sprime; ++q) choice[q] = 0;
      }
      int k = sprime - 1;
      while (k >= 0 && slots[k] == t - sprime + k + 1) --k;
      if (k < 0) break;
      ++slots[k];
      for (int i = k + 1; i < sprime; ++i) slots[i] = slots[i - 1] + 1;
    }
  }
}

void kahan_add(Vector& sum, Vector& comp, const Vector& term) {
  const Vector y = term - comp;
  const Vector t = sum + y;
  comp = (t - sum) - y;
  sum = t;
}

}  // namespace

void validate_density(const Matrix& rho) {
  if (rho.rows() != rho.cols()) throw InvalidInput("state must be square");
  const double scale = std::max(1.0, rho.norm());
  if ((rho - rho.adjoint()).norm() / scale > kBuildTol)
    throw InvalidInput("state is not Hermitian");
  if (std::abs(rho.trace() - Complex(1.0, 0.0)) > 1e-8)
    throw InvalidInput("state does not have unit trace");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()));
  if (es.eigenvalues()(0) < -1e-10)
    throw InvalidInput("state has a negative eigenvalue");
}

ChannelMaps build_channel_maps(const CouplingModel& coupling, const Matrix& V) {
  const FockBasis& basis = coupling.basis;
  if (V.rows() != basis.d() || V.cols() != basis.d())
    throw InvalidInput("walk unitary has wrong dimension");
  ChannelMaps maps{coupling, V, second_quantize_unitary(basis, V),
                   Matrix(), Matrix(), Matrix()};
  const Eigen::Index D = basis.dim();

  const auto& proj = coupling.spec.projectors;
  if (D <= 256) {
    const int m = coupling.num_clusters();
    Matrix psum = Matrix::Zero(D, D);
    for (int c = 0; c < m; ++c) {
      psum += proj[c];
      if ((proj[c] - proj[c].adjoint()).norm() > kBuildTol)
        throw Error("spectral projector is not Hermitian");
      for (int b = 0; b < m; ++b) {
        const Matrix prod = proj[c] * proj[b];
        const Matrix want = (b == c) ? proj[c] : Matrix::Zero(D, D);
        if ((prod - want).norm() > kBuildTol)
          throw Error("spectral projectors are not mutually orthogonal");
      }
    }
    if ((psum - Matrix::Identity(D, D)).norm() > kBuildTol)
      throw Error("spectral projectors do not resolve the identity");
    if ((maps.GV.adjoint() * maps.GV - Matrix::Identity(D, D)).norm() > kBuildTol)
      throw Error("second-quantized walk is not unitary");
  }

  if (D <= kSuperopMaxFock) {
    maps.rot = sandwich_superop(maps.GV.adjoint(), maps.GV);
    maps.pinch = Matrix::Zero(D * D, D * D);
    for (const auto& P : proj) maps.pinch += sandwich_superop(P, P);
    maps.vphi = maps.rot * maps.pinch;
    if (D <= kVerifyMaxFock) {
      const Matrix id2 = Matrix::Identity(D * D, D * D);
      if ((maps.rot.adjoint() * maps.rot - id2).norm() > kBuildTol * D)
        throw Error("walk rotation is not HS-unitary");
      if ((maps.pinch * maps.pinch - maps.pinch).norm() > kBuildTol * D)
        throw Error("pinching is not idempotent");
      if ((maps.pinch - maps.pinch.adjoint()).norm() > kBuildTol * D)
        throw Error("pinching is not HS-self-adjoint");
      const Vector one = vectorize(Matrix::Identity(D, D));
      if ((maps.vphi * one - one).norm() > kBuildTol * D)
        throw Error("one-step channel is not unital");
    }
  }
  return maps;
}

PropagatorResult exact_propagate(const ChannelMaps& maps, const ReservoirSymbol& symbol,
                                 const Matrix& X, int t, double lambda,
                                 const PropagateOptions& opts) {
  auto sum = run_path_sum(maps, symbol, t, lambda, opts, LeafKind::heisenberg, &X);
  PropagatorResult res;
  res.value = std::move(sum.value);
  res.mode = PropagatorMode::exact;
  res.t = t;
  res.lambda = lambda;
  res.paths_summed = sum.leaves;
  res.paths_pruned = sum.pruned;
  res.pruned_mass = sum.mass;
  res.pruning_active = sum.pruning_active;
  return res;
}

double RemainderCertificate::bound(int t, double lambda, int s) const {
  if (!std::isfinite(gamma)) return 0.0;
  return c_fit * double(t) * double(t) * std::exp(-0.5 * gamma * t) *
         std::exp(-0.25 * delta * lambda * lambda * (s + 1));
}

PropagatorResult truncated_propagate(const ChannelMaps& maps,
                                     const ReservoirSymbol& symbol, const Matrix& X,
                                     int t, double lambda, int s,
                                     const PropagateOptions& opts,
                                     const std::optional<RemainderCertificate>& certificate) {
  (void)opts;
  if (t < 1) throw InvalidInput("time must be at least 1");
  if (s < 0 || s > t) throw InvalidInput("truncation order must be in 0..t");
  if (lambda < 0.0) throw InvalidInput("coupling strength must be nonnegative");
  require_superops(maps, "truncated propagation");
  const Eigen::Index D = maps.basis().dim();
  if (X.rows() != D || X.cols() != D)
    throw InvalidInput("operator has wrong dimension for this basis");

  std::vector<Matrix> power(t + 1);
  power[0] = Matrix::Identity(D * D, D * D);
  for (int k = 1; k <= t; ++k) power[k] = maps.vphi * power[k - 1];

  const int m = maps.coupling.num_clusters();
  const auto& vals = maps.coupling.spec.values;
  const auto& proj = maps.coupling.spec.projectors;
  const auto offdiag = off_diagonal_pairs(m);
  const Matrix GVadj = maps.GV.adjoint();

  const Vector x0 = vectorize(X);
  Vector sum = power[t] * x0;
  Vector comp = Vector::Zero(D * D);

  for_each_correction(
      t, s, vals, offdiag, symbol, lambda,
      [&](const std::vector<int>& slots, const std::vector<std::size_t>& choice,
          double w) {
        const int sprime = static_cast<int>(slots.size());
        Vector u = power[t - slots[sprime - 1]] * x0;
        for (int p = sprime - 1; p >= 0; --p) {
          Matrix Y = devectorize(u, D);
          const auto& pick = offdiag[choice[p]];
          Y = proj[pick.mu] * Y * proj[pick.nu];
          Y = GVadj * Y * maps.GV;
          u = vectorize(Y);
          const int gap = p > 0 ? slots[p] - slots[p - 1] - 1 : slots[0] - 1;
          u = power[gap] * u;
        }
        kahan_add(sum, comp, Vector(w * u));
      });

  PropagatorResult res;
  res.value = devectorize(sum, D);
  res.mode = PropagatorMode::truncated;
  res.t = t;
  res.lambda = lambda;
  res.truncation_order = s;
  if (certificate) res.remainder_bound = certificate->bound(t, lambda, s);
  return res;
}

RemainderCertificate fit_remainder_certificate(const ChannelMaps& maps,
                                               const ReservoirSymbol& symbol,
                                               const Matrix& X, int t, int s,
                                               const std::vector<double>& lambda_grid,
                                               const PropagateOptions& opts) {
  require_superops(maps, "remainder fitting");
  if (lambda_grid.empty()) throw InvalidInput("remainder fit needs a lambda grid");
  RemainderCertificate cert;
  cert.delta = maps.coupling.gap;

  Eigen::ComplexEigenSolver<Matrix> es(maps.vphi, false);
  double inner_max = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double mod = std::abs(es.eigenvalues()(k));
    if (mod < 1.0 - 1e-9) inner_max = std::max(inner_max, mod);
  }
  cert.gamma = inner_max > 0.0
                   ? 0.99 * -std::log(inner_max)
                   : std::numeric_limits<double>::infinity();

  double acc = 0.0;
  int used = 0;
  for (double lambda : lambda_grid) {
    const Matrix exact = exact_propagate(maps, symbol, X, t, lambda, opts).value;
    const Matrix trunc =
        truncated_propagate(maps, symbol, X, t, lambda, s, opts).value;
    const double r = opnorm(exact - trunc);
    if (r < 1e-300 || !std::isfinite(cert.gamma)) continue;
    acc += std::log(r) + 0.5 * cert.gamma * t +
           0.25 * cert.delta * lambda * lambda * (s + 1) - 2.0 * std::log(double(t));
    ++used;
  }
  cert.c_fit = used > 0 ? std::exp(acc / used) : 0.0;
  return cert;
}

PropagatorResult ris_propagate(const ChannelMaps& maps, const ReservoirSymbol& symbol,
                               const Matrix& X, int t, double lambda) {
  if (t < 1) throw InvalidInput("time must be at least 1");
  if (lambda < 0.0) throw InvalidInput("coupling strength must be nonnegative");
  if (!symbol.is_diagonal())
    throw InvalidInput("one-step factorized propagation needs a diagonal symbol");
  const Eigen::Index D = maps.basis().dim();
  if (X.rows() != D || X.cols() != D)
    throw InvalidInput("operator has wrong dimension for this basis");
  const int m = maps.coupling.num_clusters();
  const auto& vals = maps.coupling.spec.values;
  const auto& proj = maps.coupling.spec.projectors;
  const Matrix GVadj = maps.GV.adjoint();

  Matrix cur = X;
  for (int j = t; j >= 1; --j) {
    const double kj = symbol.diagonal_value(j);
    Matrix step = Matrix::Zero(D, D);
    for (int mu = 0; mu < m; ++mu)
      for (int nu = 0; nu < m; ++nu) {
        const double theta = vals[mu] - vals[nu];
        const double w = std::exp(-0.25 * lambda * lambda * kj * theta * theta);
        step.noalias() += w * (proj[mu] * cur * proj[nu]);
      }
    cur.noalias() = GVadj * step * maps.GV;
  }

  PropagatorResult res;
  res.value = std::move(cur);
  res.mode = PropagatorMode::ris;
  res.t = t;
  res.lambda = lambda;
  res.paths_summed = std::uint64_t(1);
  return res;
}

Matrix evolve_state(const ChannelMaps& maps, const ReservoirSymbol& symbol,
                    const Matrix& rho, int t, double lambda, PropagatorMode mode,
                    int s, const PropagateOptions& opts) {
  validate_density(rho);
  const Eigen::Index D = maps.basis().dim();
  switch (mode) {
    case PropagatorMode::exact: {
      auto sum = run_path_sum(maps, symbol, t, lambda, opts, LeafKind::schroedinger, &rho);
      return sum.value;
    }
    case PropagatorMode::ris: {
      if (!symbol.is_diagonal())
        throw InvalidInput("one-step factorized propagation needs a diagonal symbol");
      if (t < 1) throw InvalidInput("time must be at least 1");
      const int m = maps.coupling.num_clusters();
      const auto& vals = maps.coupling.spec.values;
      const auto& proj = maps.coupling.spec.projectors;
      Matrix cur = rho;
      for (int j = 1; j <= t; ++j) {
        cur = maps.GV * cur * maps.GV.adjoint();
        const double kj = symbol.diagonal_value(j);
        Matrix step = Matrix::Zero(D, D);
        for (int mu = 0; mu < m; ++mu)
          for (int nu = 0; nu < m; ++nu) {
            const double theta = vals[mu] - vals[nu];
            const double w = std::exp(-0.25 * lambda * lambda * kj * theta * theta);
            step.noalias() += w * (proj[mu] * cur * proj[nu]);
          }
        cur = std::move(step);
      }
      return cur;
    }
    case PropagatorMode::truncated: {
      if (t < 1) throw InvalidInput("time must be at least 1");
      if (s < 0 || s > t) throw InvalidInput("truncation order must be in 0..t");
      require_superops(maps, "truncated propagation");
      std::vector<Matrix> padj(t + 1);
      {
        Matrix p = Matrix::Identity(D * D, D * D);
        padj[0] = p;
        for (int k = 1; k <= t; ++k) {
          p = maps.vphi * p;
          padj[k] = p.adjoint();
        }
      }
      const int m = maps.coupling.num_clusters();
      const auto& vals = maps.coupling.spec.values;
      const auto& proj = maps.coupling.spec.projectors;
      const auto offdiag = off_diagonal_pairs(m);
      const Vector r0 = vectorize(rho);
      Vector sum = padj[t] * r0;
      Vector comp = Vector::Zero(D * D);
      for_each_correction(
          t, s, vals, offdiag, symbol, lambda,
          [&](const std::vector<int>& slots, const std::vector<std::size_t>& choice,
              double w) {
            const int sprime = static_cast<int>(slots.size());
            Vector u = padj[slots[0] - 1] * r0;
            for (int p = 0; p < sprime; ++p) {
              Matrix Y = devectorize(u, D);
              Y = maps.GV * Y * maps.GV.adjoint();
              const auto& pick = offdiag[choice[p]];
              Y = proj[pick.mu] * Y * proj[pick.nu];
              u = vectorize(Y);
              const int gap =
                  p + 1 < sprime ? slots[p + 1] - slots[p] - 1 : t - slots[p];
              u = padj[gap] * u;
            }
            kahan_add(sum, comp, Vector(w * u));
          });
      return devectorize(sum, D);
    }
  }
  throw Error("unreachable propagator mode");
}

Matrix propagator_superoperator(const ChannelMaps& maps, const ReservoirSymbol& symbol,
                                int t, double lambda, PropagatorMode mode, int s,
                                const PropagateOptions& opts) {
  const Eigen::Index D = maps.basis().dim();
  switch (mode) {
    case PropagatorMode::exact: {
      if (D > kSuperopMaxFock)
        throw BudgetError("superoperator assembly is capped at 32 Fock dimensions");
      auto sum = run_path_sum(maps, symbol, t, lambda, opts, LeafKind::superop, nullptr);
      return sum.value;
    }
    case PropagatorMode::ris: {
      require_superops(maps, "superoperator assembly");
      if (!symbol.is_diagonal())
        throw InvalidInput("one-step factorized propagation needs a diagonal symbol");
      if (t < 1) throw InvalidInput("time must be at least 1");
      const int m = maps.coupling.num_clusters();
      const auto& vals = maps.coupling.spec.values;
      const auto& proj = maps.coupling.spec.projectors;
      Matrix S = Matrix::Identity(D * D, D * D);
      for (int j = 1; j <= t; ++j) {
        const double kj = symbol.diagonal_value(j);
        Matrix step = Matrix::Zero(D * D, D * D);
        for (int mu = 0; mu < m; ++mu)
          for (int nu = 0; nu < m; ++nu) {
            const double theta = vals[mu] - vals[nu];
            const double w = std::exp(-0.25 * lambda * lambda * kj * theta * theta);
            step.noalias() += w * sandwich_superop(proj[mu], proj[nu]);
          }
        S = S * (maps.rot * step);
      }
      return S;
    }
    case PropagatorMode::truncated: {
      require_superops(maps, "superoperator assembly");
      Matrix S(D * D, D * D);
      Matrix unit = Matrix::Zero(D, D);
      for (Eigen::Index col = 0; col < D * D; ++col) {
        unit(col % D, col / D) = 1.0;
        S.col(col) =
            vectorize(truncated_propagate(maps, symbol, unit, t, lambda, s, opts).value);
        unit(col % D, col / D) = 0.0;
      }
      return S;
    }
  }
  throw Error("unreachable propagator mode");
}

CptpReport cptp_verify(const Matrix& superop) {
  const Eigen::Index dim2 = superop.rows();
  const auto D = static_cast<Eigen::Index>(std::llround(std::sqrt(double(dim2))));
  if (D * D != dim2 || superop.cols() != dim2)
    throw InvalidInput("superoperator must be square with square dimension");
  CptpReport report;
  const Matrix one = Matrix::Identity(D, D);
  report.unital_error = opnorm(devectorize(superop * vectorize(one), D) - one);
  double worst = 0.0;
  for (Eigen::Index a = 0; a < D; ++a)
    for (Eigen::Index b = 0; b < D; ++b) {
      Complex tr = 0.0;
      for (Eigen::Index i = 0; i < D; ++i)
        tr += std::conj(superop(a + D * b, i + D * i));
      const double want = a == b ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(tr - Complex(want, 0.0)));
    }
  report.trace_error = worst;
  const Matrix C = choi_matrix(superop);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (C + C.adjoint()));
  report.choi_min_eig = es.eigenvalues()(0);
  return report;
}

}  // namespace fqw
