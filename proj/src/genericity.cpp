#include "fermiwalk/genericity.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>

#include "fermiwalk/errors.hpp"

namespace fqw {
namespace {

constexpr int kScanMaxSites = 8;

// Uniform double in (0, 1], consuming one 64-bit word. Explicit so every
// platform reproduces the same stream for the same (seed, index).
double uniform_unit(std::mt19937_64& eng) {
  return double((eng() >> 11) + 1) * 0x1.0p-53;
}

// Box-Muller pair; kept by hand because std::normal_distribution's
// consumption pattern is implementation-defined.
std::pair<double, double> gaussian_pair(std::mt19937_64& eng) {
  const double u1 = uniform_unit(eng);
  const double u2 = uniform_unit(eng);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

void next_combination(std::vector<int>& c, int d, bool& done) {
  const int n = int(c.size());
  int i = n - 1;
  while (i >= 0 && c[i] == d - n + i) --i;
  if (i < 0) {
    done = true;
    return;
  }
  ++c[i];
  for (int j = i + 1; j < n; ++j) c[j] = c[j - 1] + 1;
}

Matrix gather(const Matrix& U, const std::vector<int>& rows,
              const std::vector<int>& cols) {
  Matrix sub(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      sub(Eigen::Index(r), Eigen::Index(c)) = U(rows[r], cols[c]);
  return sub;
}

} // namespace

Matrix haar_unitary(int d, std::uint64_t seed, std::uint64_t index) {
  if (d < 1) throw InvalidInput("haar_unitary needs at least one site");
  std::seed_seq sq{std::uint32_t(seed), std::uint32_t(seed >> 32),
                   std::uint32_t(index), std::uint32_t(index >> 32)};
  std::mt19937_64 eng(sq);

  Matrix A(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) {
      const auto [x, y] = gaussian_pair(eng);
      A(r, c) = Complex(x, y);
    }

  Eigen::HouseholderQR<Matrix> qr(A);
  Matrix U = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix R = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) {
    const Complex rjj = R(j, j);
    const double m = std::abs(rjj);
    U.col(j) *= (m > 0.0) ? rjj / m : Complex(1.0, 0.0);
  }
  return U;
}

MinorScan minor_scan(const Matrix& U, int n_max) {
  const int d = int(U.rows());
  if (U.cols() != d) throw InvalidInput("minor scan needs a square matrix");
  if (n_max < 1 || n_max > d)
    throw InvalidInput("minor size bound must lie in [1, d]");
  if (d > kScanMaxSites)
    throw BudgetError("exhaustive minor scans are capped at 8 sites");

  MinorScan out;
  out.min_abs = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= n_max; ++n) {
    MinorRecord rec;
    rec.n = n;
    rec.min_abs = std::numeric_limits<double>::infinity();

    std::vector<int> rows(n);
    for (int i = 0; i < n; ++i) rows[i] = i;
    bool rows_done = false;
    while (!rows_done) {
      std::vector<int> cols(n);
      for (int i = 0; i < n; ++i) cols[i] = i;
      bool cols_done = false;
      while (!cols_done) {
        const double a = std::abs(gather(U, rows, cols).determinant());
        if (a < rec.min_abs) {
          rec.min_abs = a;
          rec.rows = rows;
          rec.cols = cols;
          for (int& v : rec.rows) ++v;
          for (int& v : rec.cols) ++v;
        }
        next_combination(cols, d, cols_done);
      }
      next_combination(rows, d, rows_done);
    }

    out.min_abs = std::min(out.min_abs, rec.min_abs);
    out.by_size.push_back(std::move(rec));
  }
  return out;
}

HaarSample haar_sample(int d, std::uint64_t seed, std::uint64_t index) {
  HaarSample s;
  s.seed = seed;
  s.index = index;
  s.U = haar_unitary(d, seed, index);
  if (d <= kScanMaxSites) {
    const MinorScan scan = minor_scan(s.U, d);
    s.min_abs_minor = scan.min_abs;
    s.min_by_size.reserve(scan.by_size.size());
    for (const MinorRecord& rec : scan.by_size)
      s.min_by_size.push_back(rec.min_abs);
  } else {
    s.min_abs_minor = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

} // namespace fqw
