#include "fermiwalk/serialize.hpp"

#include <cstdio>

#include "fermiwalk/errors.hpp"

namespace fqw {

nlohmann::json matrix_to_json(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c)
      row.push_back({M(r, c).real(), M(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw InvalidInput(where + ": expected a non-empty array of rows");
  const std::size_t nrows = j.size();
  std::size_t ncols = 0;
  Matrix M;
  for (std::size_t r = 0; r < nrows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.empty())
      throw InvalidInput(where + "/" + std::to_string(r) +
                         ": expected a non-empty array of entries");
    if (r == 0) {
      ncols = row.size();
      M.resize(Eigen::Index(nrows), Eigen::Index(ncols));
    } else if (row.size() != ncols) {
      throw InvalidInput(where + "/" + std::to_string(r) +
                         ": ragged row (expected " + std::to_string(ncols) +
                         " entries)");
    }
    for (std::size_t c = 0; c < ncols; ++c) {
      const auto& cell = row[c];
      const std::string at =
          where + "/" + std::to_string(r) + "/" + std::to_string(c);
      if (cell.is_number()) {
        M(Eigen::Index(r), Eigen::Index(c)) = cell.get<double>();
      } else if (cell.is_array() && cell.size() == 2 && cell[0].is_number() &&
                 cell[1].is_number()) {
        M(Eigen::Index(r), Eigen::Index(c)) =
            Complex(cell[0].get<double>(), cell[1].get<double>());
      } else {
        throw InvalidInput(at + ": expected a number or an [re, im] pair");
      }
    }
  }
  return M;
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_int(std::int64_t x) { return std::to_string(x); }

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& columns)
    : out_(path, std::ios::binary), width_(columns.size()) {
  if (!out_) throw Error("cannot open output file: " + path);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ << ',';
    out_ << columns[i];
  }
  out_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_)
    throw Error("csv row width mismatch: got " + std::to_string(cells.size()) +
                ", header has " + std::to_string(width_));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file: " + path);
  out << text;
}

} // namespace fqw
