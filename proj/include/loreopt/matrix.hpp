#pragma once

#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <vector>

#include "loreopt/errors.hpp"

namespace loreopt {

// Dense row-major matrix of doubles. Sized for desk-scale experiments:
// dimensions are ints, storage is a flat vector.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);  // zero-initialized
  Matrix(int rows, int cols, std::initializer_list<double> entries);

  static Matrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::int64_t size() const { return static_cast<std::int64_t>(rows_) * cols_; }

  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  Matrix transpose() const;

  // Frobenius inner product, norm, and friends.
  double norm_sq() const;
  double norm() const;
  double dot(const Matrix& other) const;
  double max_abs() const;
  bool is_finite() const;

  // Binary layout: u64 rows, u64 cols (little-endian), then rows*cols
  // doubles in row-major order.
  void write_binary(std::ostream& os) const;
  static Matrix read_binary(std::istream& is);

  // CSV text form for human inspection, one row per line.
  void write_csv(std::ostream& os) const;

  bool operator==(const Matrix& other) const {
    return same_shape(other) && data_ == other.data_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Elementwise and product kernels. Each has a parallel default (kernels.hpp)
// and these wrappers route through it.
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);  // matrix product
Matrix operator*(double s, const Matrix& a);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix matmul_at_b(const Matrix& a, const Matrix& b);  // Aᵀ·B
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);  // A·Bᵀ

// a += s*b, in place.
void axpy(Matrix& a, double s, const Matrix& b);
// a *= s, in place.
void scale_inplace(Matrix& a, double s);

void require_same_shape(const Matrix& a, const Matrix& b, const char* what);
void require_finite(const Matrix& a, const char* what);

}  // namespace loreopt
