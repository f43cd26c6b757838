#include "loreopt/matrix.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "loreopt/kernels.hpp"

namespace loreopt {

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw ShapeError("Matrix: negative dimension");
  data_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

Matrix::Matrix(int rows, int cols, std::initializer_list<double> entries) : Matrix(rows, cols) {
  if (static_cast<std::int64_t>(entries.size()) != size())
    throw ShapeError("Matrix: initializer size does not match dimensions");
  std::size_t i = 0;
  for (double v : entries) data_[i++] = v;
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transpose() const {
  Matrix out(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  return out;
}

double Matrix::norm_sq() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

double Matrix::norm() const { return std::sqrt(norm_sq()); }

double Matrix::dot(const Matrix& other) const {
  require_same_shape(*this, other, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) s += data_[i] * other.data_[i];
  return s;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Matrix::is_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Matrix::write_binary(std::ostream& os) const {
  const std::uint64_t r = static_cast<std::uint64_t>(rows_);
  const std::uint64_t c = static_cast<std::uint64_t>(cols_);
  char hdr[16];
  for (int i = 0; i < 8; ++i) hdr[i] = static_cast<char>((r >> (8 * i)) & 0xff);
  for (int i = 0; i < 8; ++i) hdr[8 + i] = static_cast<char>((c >> (8 * i)) & 0xff);
  os.write(hdr, 16);
  os.write(reinterpret_cast<const char*>(data_.data()),
           static_cast<std::streamsize>(data_.size() * sizeof(double)));
  if (!os) throw IoError("Matrix::write_binary: stream failure");
}

Matrix Matrix::read_binary(std::istream& is) {
  char hdr[16];
  is.read(hdr, 16);
  if (!is) throw IoError("Matrix::read_binary: truncated header");
  std::uint64_t r = 0, c = 0;
  for (int i = 0; i < 8; ++i) r |= static_cast<std::uint64_t>(static_cast<unsigned char>(hdr[i])) << (8 * i);
  for (int i = 0; i < 8; ++i) c |= static_cast<std::uint64_t>(static_cast<unsigned char>(hdr[8 + i])) << (8 * i);
  if (r > (1u << 20) || c > (1u << 20)) throw IoError("Matrix::read_binary: implausible dimensions");
  Matrix m(static_cast<int>(r), static_cast<int>(c));
  is.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(m.data_.size() * sizeof(double)));
  if (!is) throw IoError("Matrix::read_binary: truncated payload");
  require_finite(m, "Matrix::read_binary");
  return m;
}

void Matrix::write_csv(std::ostream& os) const {
  char buf[64];
  for (int i = 0; i < rows_; ++i) {
    for (int j = 0; j < cols_; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", (*this)(i, j));
      os << buf;
      if (j + 1 < cols_) os << ',';
    }
    os << '\n';
  }
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols());
  kernels::add(a, b, out);
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols());
  kernels::sub(a, b, out);
  return out;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  kernels::matmul(a, b, out);
  return out;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  kernels::scale(a, s, out);
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols());
  kernels::hadamard(a, b, out);
  return out;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  Matrix out(a.cols(), b.cols());
  kernels::matmul_at_b(a, b, out);
  return out;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  kernels::matmul_a_bt(a, b, out);
  return out;
}

void axpy(Matrix& a, double s, const Matrix& b) {
  require_same_shape(a, b, "axpy");
  double* pa = a.data();
  const double* pb = b.data();
  const std::int64_t n = a.size();
  for (std::int64_t i = 0; i < n; ++i) pa[i] += s * pb[i];
}

void scale_inplace(Matrix& a, double s) {
  double* pa = a.data();
  const std::int64_t n = a.size();
  for (std::int64_t i = 0; i < n; ++i) pa[i] *= s;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
}

void require_finite(const Matrix& a, const char* what) {
  if (!a.is_finite()) throw InvalidInput(std::string(what) + ": non-finite entries");
}

}  // namespace loreopt
