#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>

#include "ladmc/core.hpp"

namespace ladmc::io {

// One matrix row per line, comma separated. Empty fields and NaN mark
// missing cells; at the numeric core they become 0 with mask = false.
struct CsvMatrix {
  Matrix values;
  ObservationMask mask;
};

CsvMatrix parse_matrix_csv(std::istream& in, const std::string& source = "<stream>");
CsvMatrix read_matrix_csv(const std::filesystem::path& path);

// 0/1 integers, same shape as the data matrix.
ObservationMask read_mask_csv(const std::filesystem::path& path);
ObservationMask parse_mask_csv(std::istream& in, const std::string& source = "<stream>");

// 17 significant digits, so values round-trip exactly. Unobserved cells are written
// empty when a mask is supplied.
void write_matrix_csv(std::ostream& out, const Matrix& M, const ObservationMask* mask = nullptr);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& M,
                      const ObservationMask* mask = nullptr);
void write_mask_csv(const std::filesystem::path& path, const ObservationMask& mask);

std::string format_double(double v);

}  // namespace ladmc::io
