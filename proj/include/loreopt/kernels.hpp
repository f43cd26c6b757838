#pragma once

#include "loreopt/matrix.hpp"

namespace loreopt {

// Serial reference kernels. Kept deliberately naive; the parallel kernels in
// loreopt::kernels must match them bitwise (same per-element summation order),
// which the tests assert and the benchmark target compares for speed.
namespace serial {

void matmul(const Matrix& a, const Matrix& b, Matrix& out);       // A·B
void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out);  // Aᵀ·B
void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out);  // A·Bᵀ
void add(const Matrix& a, const Matrix& b, Matrix& out);
void sub(const Matrix& a, const Matrix& b, Matrix& out);
void hadamard(const Matrix& a, const Matrix& b, Matrix& out);
void scale(const Matrix& a, double s, Matrix& out);

}  // namespace serial

namespace kernels {

// OpenMP-parallel above a flop threshold, serial below it. Row-partitioned:
// every output element is produced by one thread with the serial inner-loop
// order, so results are bitwise equal to loreopt::serial at any thread count.
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out);
void add(const Matrix& a, const Matrix& b, Matrix& out);
void sub(const Matrix& a, const Matrix& b, Matrix& out);
void hadamard(const Matrix& a, const Matrix& b, Matrix& out);
void scale(const Matrix& a, double s, Matrix& out);

}  // namespace kernels

}  // namespace loreopt
