#include "fermiwalk/reservoir.hpp"

#include <cmath>

#include "fermiwalk/errors.hpp"

namespace fqw {

namespace {

constexpr double kQuadTol = 1e-10;
constexpr int kQuadStart = 2048;
constexpr int kQuadMax = 1 << 22;

double band_energy(const Dispersion& d, double k) {
  return d.kind == Dispersion::Kind::flat ? d.e0 : d.e0 + 2.0 * d.hop * std::cos(k);
}

double band_min(const Dispersion& d) {
  return d.kind == Dispersion::Kind::flat ? d.e0 : d.e0 - 2.0 * std::abs(d.hop);
}

// (2 pi)^-1 integral of coth(beta (E(k) - mu)/2) cos(n k) over [-pi, pi],
// trapezoid on the periodic integrand, refined by doubling.
double thermal_integral(double beta, double mu, const Dispersion& disp, int n) {
  auto value_at = [&](int points) {
    double sum = 0.0;
    for (int i = 0; i < points; ++i) {
      const double k = -M_PI + (2.0 * M_PI * i) / points;
      const double x = 0.5 * beta * (band_energy(disp, k) - mu);
      sum += std::cos(n * k) / std::tanh(x);
    }
    return sum / points;
  };
  double prev = value_at(kQuadStart);
  for (int pts = 2 * kQuadStart; pts <= kQuadMax; pts *= 2) {
    const double cur = value_at(pts);
    if (std::abs(cur - prev) <= kQuadTol) return cur;
    prev = cur;
  }
  throw Error("thermal kernel quadrature did not reach 1e-10");
}

void check_slot(int j) {
  if (j < 1) throw InvalidInput("time slots are 1-based");
}

}  // namespace

ReservoirSymbol ReservoirSymbol::identity() {
  ReservoirSymbol s;
  s.kind_ = Kind::identity;
  return s;
}

ReservoirSymbol ReservoirSymbol::diagonal(std::vector<double> values) {
  if (values.empty()) throw InvalidInput("diagonal symbol needs at least one value");
  ReservoirSymbol s;
  s.kind_ = Kind::diagonal;
  s.diag_ = std::move(values);
  return s;
}

ReservoirSymbol ReservoirSymbol::thermal(double beta, double mu,
                                         Dispersion dispersion) {
  if (!(beta > 0.0)) throw InvalidInput("thermal symbol needs beta > 0");
  if (!(band_min(dispersion) - mu > 0.0))
    throw InvalidInput("thermal symbol needs the band strictly above mu");
  ReservoirSymbol s;
  s.kind_ = Kind::thermal;
  s.beta_ = beta;
  s.mu_ = mu;
  s.dispersion_ = dispersion;
  s.cache_ = std::make_shared<ThermalCache>();
  return s;
}

ReservoirSymbol ReservoirSymbol::table(RealMatrix kernel) {
  if (kernel.rows() != kernel.cols() || kernel.rows() < 1)
    throw InvalidInput("kernel table must be square and nonempty");
  if ((kernel - kernel.transpose()).norm() > 1e-12 * std::max(1.0, kernel.norm()))
    throw InvalidInput("kernel table must be symmetric");
  ReservoirSymbol s;
  s.kind_ = Kind::table;
  s.table_ = std::move(kernel);
  return s;
}

bool ReservoirSymbol::is_diagonal() const {
  switch (kind_) {
    case Kind::identity:
    case Kind::diagonal:
      return true;
    case Kind::thermal:
      return dispersion_.kind == Dispersion::Kind::flat;
    case Kind::table:
      return false;
  }
  return false;
}

double ReservoirSymbol::thermal_entry(int distance) const {
  {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto it = cache_->by_distance.find(distance);
    if (it != cache_->by_distance.end()) return it->second;
  }
  const double v = thermal_integral(beta_, mu_, dispersion_, distance);
  std::lock_guard<std::mutex> lock(cache_->mutex);
  cache_->by_distance.emplace(distance, v);
  return v;
}

double ReservoirSymbol::operator()(int i, int j) const {
  check_slot(i);
  check_slot(j);
  switch (kind_) {
    case Kind::identity:
      return i == j ? 1.0 : 0.0;
    case Kind::diagonal: {
      if (i != j) return 0.0;
      const std::size_t idx = std::min<std::size_t>(j - 1, diag_.size() - 1);
      return diag_[idx];
    }
    case Kind::thermal:
      if (dispersion_.kind == Dispersion::Kind::flat)
        return i == j ? 1.0 / std::tanh(0.5 * beta_ * (dispersion_.e0 - mu_)) : 0.0;
      return thermal_entry(std::abs(i - j));
    case Kind::table:
      if (i > table_.rows() || j > table_.rows())
        throw InvalidInput("kernel table evaluated beyond its extent");
      return table_(i - 1, j - 1);
  }
  throw Error("unreachable symbol kind");
}

RealMatrix ReservoirSymbol::section(int t) const {
  check_slot(t);
  RealMatrix K(t, t);
  for (int i = 1; i <= t; ++i)
    for (int j = 1; j <= t; ++j) K(i - 1, j - 1) = (*this)(i, j);
  return K;
}

double ReservoirSymbol::section_min_eigenvalue(int t) const {
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(section(t));
  return es.eigenvalues()(0);
}

ReservoirSymbol thermal_kernel(double beta, double mu, const Dispersion& dispersion) {
  return ReservoirSymbol::thermal(beta, mu, dispersion);
}

double gaussian_weight(const ReservoirSymbol& symbol,
                       const std::vector<std::pair<int, double>>& theta,
                       double lambda) {
  if (lambda < 0.0) throw InvalidInput("coupling strength must be nonnegative");
  double quad = 0.0;
  for (const auto& [i, ti] : theta)
    for (const auto& [j, tj] : theta) quad += ti * tj * symbol(i, j);
  return std::exp(-0.25 * lambda * lambda * quad);
}

}  // namespace fqw
