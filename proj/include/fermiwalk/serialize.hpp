#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fermiwalk/types.hpp"

namespace fqw {

inline constexpr const char* kCodeVersion = "0.1.0";

// Matrices travel as nested arrays of [re, im] pairs.
nlohmann::json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& where);

// Shortest round-trip decimal formatting; every CSV number goes through
// these so that rerunning a config reproduces output files byte-for-byte.
std::string fmt_double(double x);
std::string fmt_int(std::int64_t x);

// FNV-1a; hashes the resolved config dump into the provenance columns.
std::uint64_t fnv1a64(const std::string& text);
std::string hash_hex(std::uint64_t h);

// Line-oriented CSV emitter with a fixed header.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t width_;
};

void write_text_file(const std::string& path, const std::string& text);

} // namespace fqw
