#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ladmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolColumn = Eigen::Array<bool, Eigen::Dynamic, 1>;

// Error hierarchy. Everything thrown by the library derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ArithmeticOverflow : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/**
 * Boolean matrix congruent to a data matrix. true marks an observed cell.
 *
 * Column-major like Matrix, so column(j) is contiguous.
 */
class ObservationMask {
 public:
  using Storage = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

  ObservationMask() = default;
  ObservationMask(Eigen::Index rows, Eigen::Index cols, bool value = false)
      : bits_(Storage::Constant(rows, cols, value)) {}
  explicit ObservationMask(Storage bits) : bits_(std::move(bits)) {}

  static ObservationMask full(Eigen::Index rows, Eigen::Index cols) {
    return ObservationMask(rows, cols, true);
  }

  Eigen::Index rows() const { return bits_.rows(); }
  Eigen::Index cols() const { return bits_.cols(); }

  bool operator()(Eigen::Index i, Eigen::Index j) const { return bits_(i, j); }
  void set(Eigen::Index i, Eigen::Index j, bool v = true) { bits_(i, j) = v; }

  BoolColumn column(Eigen::Index j) const { return bits_.col(j); }
  void set_column(Eigen::Index j, const BoolColumn& c) { bits_.col(j) = c; }

  std::size_t column_count(Eigen::Index j) const {
    return static_cast<std::size_t>(bits_.col(j).count());
  }
  std::size_t count() const { return static_cast<std::size_t>(bits_.count()); }

  const Storage& bits() const { return bits_; }

  bool congruent(const Matrix& m) const {
    return m.rows() == rows() && m.cols() == cols();
  }

  friend bool operator==(const ObservationMask& a, const ObservationMask& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           (a.bits_ == b.bits_).all();
  }

 private:
  Storage bits_;
};

// Throws DimensionMismatch unless mask and matrix have the same shape.
inline void require_congruent(const Matrix& m, const ObservationMask& mask,
                              const char* where) {
  if (!mask.congruent(m)) {
    throw DimensionMismatch(std::string(where) + ": mask is " +
                            std::to_string(mask.rows()) + "x" +
                            std::to_string(mask.cols()) + ", matrix is " +
                            std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
  }
}

// Copy of m with unobserved cells set to zero.
inline Matrix zero_fill(const Matrix& m, const ObservationMask& mask) {
  require_congruent(m, mask, "zero_fill");
  return mask.bits().select(m.array(), 0.0).matrix();
}

}  // namespace ladmc
