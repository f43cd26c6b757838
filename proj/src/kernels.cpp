#include "loreopt/kernels.hpp"

#include <cstdint>

namespace loreopt {

namespace {

// Work below this many flops is not worth a parallel region.
constexpr std::int64_t kParallelFlops = 1 << 16;

void check_product(const Matrix&, const Matrix&, const Matrix& out, int ak, int bk, int om,
                   int on, const char* what) {
  if (ak != bk || out.rows() != om || out.cols() != on)
    throw ShapeError(std::string(what) + ": incompatible shapes");
}

}  // namespace

namespace serial {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  check_product(a, b, out, a.cols(), b.rows(), a.rows(), b.cols(), "matmul");
  const int m = a.rows(), k = a.cols(), n = b.cols();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += a(i, p) * b(p, j);
      out(i, j) = s;
    }
  }
}

void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out) {
  check_product(a, b, out, a.rows(), b.rows(), a.cols(), b.cols(), "matmul_at_b");
  const int m = a.cols(), k = a.rows(), n = b.cols();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += a(p, i) * b(p, j);
      out(i, j) = s;
    }
  }
}

void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out) {
  check_product(a, b, out, a.cols(), b.cols(), a.rows(), b.rows(), "matmul_a_bt");
  const int m = a.rows(), k = a.cols(), n = b.rows();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += a(i, p) * b(j, p);
      out(i, j) = s;
    }
  }
}

void add(const Matrix& a, const Matrix& b, Matrix& out) {
  require_same_shape(a, b, "add");
  require_same_shape(a, out, "add");
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  const std::int64_t n = a.size();
  for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
}

void sub(const Matrix& a, const Matrix& b, Matrix& out) {
  require_same_shape(a, b, "sub");
  require_same_shape(a, out, "sub");
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  const std::int64_t n = a.size();
  for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
}

void hadamard(const Matrix& a, const Matrix& b, Matrix& out) {
  require_same_shape(a, b, "hadamard");
  require_same_shape(a, out, "hadamard");
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  const std::int64_t n = a.size();
  for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
}

void scale(const Matrix& a, double s, Matrix& out) {
  require_same_shape(a, out, "scale");
  const double* pa = a.data();
  double* po = out.data();
  const std::int64_t n = a.size();
  for (std::int64_t i = 0; i < n; ++i) po[i] = s * pa[i];
}

}  // namespace serial

namespace kernels {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::int64_t flops = 2ll * a.rows() * a.cols() * b.cols();
  if (flops < kParallelFlops) {
    serial::matmul(a, b, out);
    return;
  }
  check_product(a, b, out, a.cols(), b.rows(), a.rows(), b.cols(), "matmul");
  const int m = a.rows(), k = a.cols(), n = b.cols();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += a(i, p) * b(p, j);
      out(i, j) = s;
    }
  }
}

void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::int64_t flops = 2ll * a.cols() * a.rows() * b.cols();
  if (flops < kParallelFlops) {
    serial::matmul_at_b(a, b, out);
    return;
  }
  check_product(a, b, out, a.rows(), b.rows(), a.cols(), b.cols(), "matmul_at_b");
  const int m = a.cols(), k = a.rows(), n = b.cols();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += a(p, i) * b(p, j);
      out(i, j) = s;
    }
  }
}

void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::int64_t flops = 2ll * a.rows() * a.cols() * b.rows();
  if (flops < kParallelFlops) {
    serial::matmul_a_bt(a, b, out);
    return;
  }
  check_product(a, b, out, a.cols(), b.cols(), a.rows(), b.rows(), "matmul_a_bt");
  const int m = a.rows(), k = a.cols(), n = b.rows();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += a(i, p) * b(j, p);
      out(i, j) = s;
    }
  }
}

void add(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.size() < kParallelFlops) {
    serial::add(a, b, out);
    return;
  }
  require_same_shape(a, b, "add");
  require_same_shape(a, out, "add");
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  const std::int64_t n = a.size();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
}

void sub(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.size() < kParallelFlops) {
    serial::sub(a, b, out);
    return;
  }
  require_same_shape(a, b, "sub");
  require_same_shape(a, out, "sub");
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  const std::int64_t n = a.size();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
}

void hadamard(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.size() < kParallelFlops) {
    serial::hadamard(a, b, out);
    return;
  }
  require_same_shape(a, b, "hadamard");
  require_same_shape(a, out, "hadamard");
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  const std::int64_t n = a.size();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
}

void scale(const Matrix& a, double s, Matrix& out) {
  if (a.size() < kParallelFlops) {
    serial::scale(a, s, out);
    return;
  }
  require_same_shape(a, out, "scale");
  const double* pa = a.data();
  double* po = out.data();
  const std::int64_t n = a.size();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) po[i] = s * pa[i];
}

}  // namespace kernels

}  // namespace loreopt
