#include "ladmc/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace ladmc::io {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool is_missing(const std::string& f) {
  return f.empty() || f == "nan" || f == "NaN" || f == "NAN" || f == "?";
}

struct Row {
  std::size_t lineno;
  std::vector<std::string> fields;
};

// Reads non-blank lines into a table of fields, checking rectangular shape.
std::vector<Row> read_table(std::istream& in, const std::string& source) {
  std::vector<Row> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (!rows.empty() && fields.size() != rows.front().fields.size()) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(rows.front().fields.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    rows.push_back({lineno, std::move(fields)});
  }
  return rows;
}

double parse_number(const std::string& f, const std::string& source, std::size_t lineno,
                    std::size_t col) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(f.c_str(), &end);
  if (end == f.c_str() || *end != '\0' || errno == ERANGE) {
    throw ParseError(source + ":" + std::to_string(lineno) + ": field " +
                     std::to_string(col + 1) + " is not a number: '" + f + "'");
  }
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

}  // namespace

CsvMatrix parse_matrix_csv(std::istream& in, const std::string& source) {
  const auto table = read_table(in, source);
  const auto rows = static_cast<Eigen::Index>(table.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(table.front().fields.size());
  CsvMatrix out{Matrix::Zero(rows, cols), ObservationMask(rows, cols, false)};
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto& row = table[static_cast<std::size_t>(i)];
      const auto& f = row.fields[static_cast<std::size_t>(j)];
      if (is_missing(f)) continue;
      const double v = parse_number(f, source, row.lineno, static_cast<std::size_t>(j));
      if (std::isnan(v)) continue;
      out.values(i, j) = v;
      out.mask.set(i, j);
    }
  }
  return out;
}

CsvMatrix read_matrix_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_matrix_csv(in, path.string());
}

ObservationMask parse_mask_csv(std::istream& in, const std::string& source) {
  const auto table = read_table(in, source);
  const auto rows = static_cast<Eigen::Index>(table.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(table.front().fields.size());
  ObservationMask mask(rows, cols, false);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto& row = table[static_cast<std::size_t>(i)];
      const auto& f = row.fields[static_cast<std::size_t>(j)];
      if (f == "1") {
        mask.set(i, j);
      } else if (f != "0") {
        throw ParseError(source + ":" + std::to_string(row.lineno) + ": mask field " +
                         std::to_string(j + 1) + " must be 0 or 1, got '" + f + "'");
      }
    }
  }
  return mask;
}

ObservationMask read_mask_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_mask_csv(in, path.string());
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix_csv(std::ostream& out, const Matrix& M, const ObservationMask* mask) {
  if (mask != nullptr) require_congruent(M, *mask, "write_matrix_csv");
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j > 0) out << ',';
      if (mask == nullptr || (*mask)(i, j)) out << format_double(M(i, j));
    }
    out << '\n';
  }
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& M,
                      const ObservationMask* mask) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  write_matrix_csv(out, M, mask);
}

void write_mask_csv(const std::filesystem::path& path, const ObservationMask& mask) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  for (Eigen::Index i = 0; i < mask.rows(); ++i) {
    for (Eigen::Index j = 0; j < mask.cols(); ++j) {
      if (j > 0) out << ',';
      out << (mask(i, j) ? '1' : '0');
    }
    out << '\n';
  }
}

}  // namespace ladmc::io
