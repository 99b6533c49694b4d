#include "fermiwalk/fock.hpp"

#include <algorithm>
#include <bit>

#include "fermiwalk/errors.hpp"

namespace fqw {

namespace {

constexpr int kMaxSites = 12;
constexpr double kInputTol = 1e-10;

std::uint32_t below(int site) { return (1u << (site - 1)) - 1u; }

int parity_below(std::uint32_t mask, int site) {
  return std::popcount(mask & below(site)) % 2 == 0 ? 1 : -1;
}

void check_site(const FockBasis& basis, int site) {
  if (site < 1 || site > basis.d())
    throw InvalidInput("site index " + std::to_string(site) + " outside 1.." +
                       std::to_string(basis.d()));
}

void check_single_particle_dim(const FockBasis& basis, const Matrix& M,
                               const char* what) {
  if (M.rows() != basis.d() || M.cols() != basis.d())
    throw InvalidInput(std::string(what) + " must be " +
                       std::to_string(basis.d()) + "x" +
                       std::to_string(basis.d()));
}

}  // namespace

FockBasis::FockBasis(int d) : d_(d) {
  if (d < 1 || d > kMaxSites)
    throw InvalidInput("site count must be in 1.." + std::to_string(kMaxSites) +
                       ", got " + std::to_string(d));
  states_.reserve(std::size_t{1} << d);
  sector_offsets_.assign(d + 2, 0);
  for (int n = 0; n <= d; ++n) {
    sector_offsets_[n] = static_cast<int>(states_.size());
    std::vector<int> combo(n);
    for (int i = 0; i < n; ++i) combo[i] = i + 1;
    while (true) {
      if (n == 0) {
        states_.push_back({{}, 0});
        break;
      }
      MultiIndex mi;
      mi.sites = combo;
      for (int j : combo) mi.mask |= 1u << (j - 1);
      states_.push_back(std::move(mi));
      int k = n - 1;
      while (k >= 0 && combo[k] == d - n + k + 1) --k;
      if (k < 0) break;
      ++combo[k];
      for (int i = k + 1; i < n; ++i) combo[i] = combo[i - 1] + 1;
    }
  }
  sector_offsets_[d + 1] = static_cast<int>(states_.size());
  index_by_mask_.assign(std::size_t{1} << d, -1);
  for (int i = 0; i < dim(); ++i) index_by_mask_[states_[i].mask] = i;
}

int FockBasis::sector_dim(int n) const {
  if (n < 0 || n > d_) throw InvalidInput("sector outside 0..d");
  return sector_offsets_[n + 1] - sector_offsets_[n];
}

int FockBasis::sector_offset(int n) const {
  if (n < 0 || n > d_) throw InvalidInput("sector outside 0..d");
  return sector_offsets_[n];
}

int FockBasis::sector_of(int index) const {
  if (index < 0 || index >= dim()) throw InvalidInput("state index out of range");
  return std::popcount(states_[index].mask);
}

int FockBasis::index_of_mask(std::uint32_t mask) const {
  if (mask >= index_by_mask_.size()) throw InvalidInput("occupation mask out of range");
  return index_by_mask_[mask];
}

int FockBasis::index_of(const std::vector<int>& sites) const {
  std::uint32_t mask = 0;
  int prev = 0;
  for (int j : sites) {
    if (j <= prev || j > d_)
      throw InvalidInput("multi-index must be strictly increasing within 1..d");
    mask |= 1u << (j - 1);
    prev = j;
  }
  return index_by_mask_[mask];
}

Matrix creation_op(const FockBasis& basis, int site) {
  check_site(basis, site);
  const int D = basis.dim();
  const std::uint32_t bit = 1u << (site - 1);
  Matrix M = Matrix::Zero(D, D);
  for (int j = 0; j < D; ++j) {
    const std::uint32_t m = basis.state(j).mask;
    if (m & bit) continue;
    M(basis.index_of_mask(m | bit), j) = parity_below(m, site);
  }
  return M;
}

Matrix annihilation_op(const FockBasis& basis, int site) {
  check_site(basis, site);
  const int D = basis.dim();
  const std::uint32_t bit = 1u << (site - 1);
  Matrix M = Matrix::Zero(D, D);
  for (int j = 0; j < D; ++j) {
    const std::uint32_t m = basis.state(j).mask;
    if (!(m & bit)) continue;
    M(basis.index_of_mask(m & ~bit), j) = parity_below(m, site);
  }
  return M;
}

Matrix number_op(const FockBasis& basis, int site) {
  check_site(basis, site);
  const int D = basis.dim();
  const std::uint32_t bit = 1u << (site - 1);
  Matrix M = Matrix::Zero(D, D);
  for (int j = 0; j < D; ++j)
    if (basis.state(j).mask & bit) M(j, j) = 1.0;
  return M;
}

Matrix creation_op(const FockBasis& basis, const Vector& phi) {
  if (phi.size() != basis.d())
    throw InvalidInput("single-particle vector has wrong dimension");
  Matrix M = Matrix::Zero(basis.dim(), basis.dim());
  for (int j = 1; j <= basis.d(); ++j)
    if (phi(j - 1) != 0.0) M += phi(j - 1) * creation_op(basis, j);
  return M;
}

Matrix annihilation_op(const FockBasis& basis, const Vector& phi) {
  if (phi.size() != basis.d())
    throw InvalidInput("single-particle vector has wrong dimension");
  Matrix M = Matrix::Zero(basis.dim(), basis.dim());
  for (int j = 1; j <= basis.d(); ++j)
    if (phi(j - 1) != 0.0) M += std::conj(phi(j - 1)) * annihilation_op(basis, j);
  return M;
}

Complex wedge_gram(const std::vector<Vector>& bra, const std::vector<Vector>& ket) {
  if (bra.empty() || bra.size() != ket.size())
    throw InvalidInput("wedge_gram needs two factor lists of equal nonzero length");
  const auto n = static_cast<Eigen::Index>(bra.size());
  const auto dim = bra[0].size();
  for (const auto& v : bra)
    if (v.size() != dim) throw InvalidInput("wedge factors have mixed dimensions");
  for (const auto& v : ket)
    if (v.size() != dim) throw InvalidInput("wedge factors have mixed dimensions");
  Matrix G(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = 0; l < n; ++l) G(k, l) = bra[k].dot(ket[l]);
  return G.determinant();
}

Matrix second_quantize_unitary(const FockBasis& basis, const Matrix& U) {
  check_single_particle_dim(basis, U, "unitary");
  const int d = basis.d();
  const double defect =
      (U.adjoint() * U - Matrix::Identity(d, d)).norm() / std::sqrt(double(d));
  if (defect > kInputTol)
    throw InvalidInput("matrix is not unitary (relative defect " +
                       std::to_string(defect) + ")");
  const int D = basis.dim();
  Matrix M = Matrix::Zero(D, D);
  for (int n = 0; n <= d; ++n) {
    const int off = basis.sector_offset(n);
    const int sz = basis.sector_dim(n);
    for (int r = 0; r < sz; ++r) {
      const auto& I = basis.state(off + r).sites;
      for (int c = 0; c < sz; ++c) {
        const auto& J = basis.state(off + c).sites;
        if (n == 0) {
          M(off + r, off + c) = 1.0;
          continue;
        }
        Matrix sub(n, n);
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q) sub(p, q) = U(I[p] - 1, J[q] - 1);
        M(off + r, off + c) = sub.determinant();
      }
    }
  }
  return M;
}

Matrix second_quantize_generator(const FockBasis& basis, const Matrix& H) {
  check_single_particle_dim(basis, H, "generator");
  const double scale = std::max(1.0, H.norm());
  if ((H - H.adjoint()).norm() / scale > kInputTol)
    throw InvalidInput("generator is not Hermitian");
  const int d = basis.d();
  const int D = basis.dim();
  Matrix M = Matrix::Zero(D, D);
  for (int col = 0; col < D; ++col) {
    const std::uint32_t mj = basis.state(col).mask;
    Complex diag = 0.0;
    for (int b = 1; b <= d; ++b) {
      if (!(mj & (1u << (b - 1)))) continue;
      diag += H(b - 1, b - 1);
      const std::uint32_t removed = mj & ~(1u << (b - 1));
      const int sign_b = parity_below(mj, b);
      for (int a = 1; a <= d; ++a) {
        if (a == b || (mj & (1u << (a - 1)))) continue;
        const std::uint32_t mi = removed | (1u << (a - 1));
        const int sign = sign_b * parity_below(removed, a);
        M(basis.index_of_mask(mi), col) += double(sign) * H(a - 1, b - 1);
      }
    }
    M(col, col) += diag;
  }
  return M;
}

}  // namespace fqw
