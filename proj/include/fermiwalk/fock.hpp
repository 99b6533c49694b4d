#pragma once

#include <cstdint>
#include <vector>

#include "fermiwalk/types.hpp"

namespace fqw {

// One antisymmetric basis state: an occupied-site set as a strictly
// increasing tuple (sites are 1-based) plus its occupation bitmask.
struct MultiIndex {
  std::vector<int> sites;
  std::uint32_t mask = 0;
};

// Basis of the fermionic Fock space over C^d, dimension 2^d. Ordering is
// sector-major (particle number ascending) and lexicographic within each
// sector, so indices are stable across runs.
class FockBasis {
 public:
  explicit FockBasis(int d);

  int d() const { return d_; }
  int dim() const { return static_cast<int>(states_.size()); }
  int sector_dim(int n) const;
  int sector_offset(int n) const;
  int sector_of(int index) const;
  const MultiIndex& state(int index) const { return states_[index]; }
  const std::vector<MultiIndex>& states() const { return states_; }
  int index_of_mask(std::uint32_t mask) const;
  int index_of(const std::vector<int>& sites) const;

 private:
  int d_;
  std::vector<MultiIndex> states_;
  std::vector<int> index_by_mask_;
  std::vector<int> sector_offsets_;
};

// Creation / annihilation / occupation-number operators for site j (1-based)
// in the basis above, as dense matrices on the full Fock space.
Matrix creation_op(const FockBasis& basis, int site);
Matrix annihilation_op(const FockBasis& basis, int site);
Matrix number_op(const FockBasis& basis, int site);

// Creation / annihilation of an arbitrary single-particle vector phi
// (creation is linear in phi, annihilation antilinear).
Matrix creation_op(const FockBasis& basis, const Vector& phi);
Matrix annihilation_op(const FockBasis& basis, const Vector& phi);

// Inner product of two wedge products, det of the Gram matrix <bra_k, ket_l>.
// Both lists must have the same nonzero length.
Complex wedge_gram(const std::vector<Vector>& bra, const std::vector<Vector>& ket);

// Multiplicative second quantization of a unitary U on C^d: block-diagonal
// over sectors, block entries are the n x n minors of U.
Matrix second_quantize_unitary(const FockBasis& basis, const Matrix& U);

// Additive second quantization of a Hermitian H on C^d (one-body operator).
Matrix second_quantize_generator(const FockBasis& basis, const Matrix& H);

}  // namespace fqw
