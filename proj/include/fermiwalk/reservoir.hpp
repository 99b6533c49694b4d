#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "fermiwalk/types.hpp"

namespace fqw {

// Translation-invariant reservoir band on the integer lattice.
struct Dispersion {
  enum class Kind { flat, cosine };
  Kind kind = Kind::flat;
  double e0 = 0.0;   // band level (flat) or band center (cosine)
  double hop = 0.0;  // cosine amplitude: E(k) = e0 + 2 hop cos k
};

// Real symmetric covariance kernel k(i, j) over time slots i, j >= 1, the
// data entering the Gaussian path weights after the reservoir is traced out.
// A physically admissible kernel satisfies K >= 1 on every section; that is
// checked, not assumed. Thermal evaluations are cached; the cache is shared
// across copies and guarded for concurrent use.
class ReservoirSymbol {
 public:
  enum class Kind { identity, diagonal, thermal, table };

  static ReservoirSymbol identity();
  // Slot values k(j, j); slots beyond the list reuse the last entry.
  static ReservoirSymbol diagonal(std::vector<double> values);
  static ReservoirSymbol thermal(double beta, double mu, Dispersion dispersion);
  static ReservoirSymbol table(RealMatrix kernel);

  Kind kind() const { return kind_; }
  bool is_diagonal() const;
  double operator()(int i, int j) const;
  double diagonal_value(int j) const { return (*this)(j, j); }
  RealMatrix section(int t) const;
  double section_min_eigenvalue(int t) const;

 private:
  ReservoirSymbol() = default;

  struct ThermalCache {
    std::mutex mutex;
    std::map<int, double> by_distance;
  };

  double thermal_entry(int distance) const;

  Kind kind_ = Kind::identity;
  std::vector<double> diag_;
  RealMatrix table_;
  double beta_ = 0.0;
  double mu_ = 0.0;
  Dispersion dispersion_;
  std::shared_ptr<ThermalCache> cache_;
};

// Thermal equilibrium kernel coth(beta (E - mu) / 2) in position coordinates;
// requires the band to sit strictly above the chemical potential.
ReservoirSymbol thermal_kernel(double beta, double mu, const Dispersion& dispersion);

// Gaussian path weight exp(-lambda^2/4 <theta, K theta>) for a sparsely
// supported theta given as (slot, value) pairs.
double gaussian_weight(const ReservoirSymbol& symbol,
                       const std::vector<std::pair<int, double>>& theta,
                       double lambda);

}  // namespace fqw
