#include "loreopt/svd.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "loreopt/errors.hpp"
#include "loreopt/rng.hpp"

using namespace loreopt;

namespace {

Matrix diag_from(const std::vector<double>& s, int m, int n) {
  Matrix d(m, n);
  for (std::size_t i = 0; i < s.size(); ++i) d(static_cast<int>(i), static_cast<int>(i)) = s[i];
  return d;
}

double reconstruction_error(const Matrix& g, const SvdResult& r) {
  const Matrix rebuilt = r.U * diag_from(r.S, g.rows(), g.cols()) * r.V.transpose();
  return (rebuilt - g).max_abs();
}

double orthogonality_error(const Matrix& q) {
  const Matrix gram = matmul_at_b(q, q);
  return (gram - Matrix::identity(q.cols())).max_abs();
}

}  // namespace

TEST_CASE("decomposition reconstructs the input across shapes") {
  RandomSource rng(101);
  const std::vector<std::pair<int, int>> shapes = {{1, 1}, {1, 5}, {5, 1}, {4, 4},
                                                   {6, 3}, {3, 6}, {8, 8}, {7, 12}};
  for (const auto& [m, n] : shapes) {
    const Matrix g = gaussian_matrix(m, n, rng);
    const SvdResult r = svd_full(g);
    const double scale = std::max(1.0, g.norm());
    CHECK(reconstruction_error(g, r) <= 1e-10 * scale);
    CHECK(orthogonality_error(r.U) <= 1e-10);
    CHECK(orthogonality_error(r.V) <= 1e-10);
    CHECK(static_cast<int>(r.S.size()) == std::min(m, n));
    for (std::size_t i = 0; i + 1 < r.S.size(); ++i) CHECK(r.S[i] >= r.S[i + 1]);
    for (const double s : r.S) CHECK(s >= 0.0);
  }
}

TEST_CASE("sign convention: first nonzero entry of each left singular vector is positive") {
  RandomSource rng(103);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix g = gaussian_matrix(5, 4, rng);
    const SvdResult r = svd_full(g);
    for (int j = 0; j < r.U.cols(); ++j) {
      for (int i = 0; i < r.U.rows(); ++i) {
        if (r.U(i, j) != 0.0) {
          CHECK(r.U(i, j) > 0.0);
          break;
        }
      }
    }
  }
}

TEST_CASE("diagonal input is decomposed exactly with axis-aligned vectors") {
  const Matrix g = diag_from({3.0, 1.0, 2.0}, 3, 3);
  const SvdResult r = svd_full(g);
  CHECK(r.S[0] == 3.0);
  CHECK(r.S[1] == 2.0);
  CHECK(r.S[2] == 1.0);
  // columns must be exact signed standard basis vectors, no rounding at all
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      const double u = r.U(i, j);
      CHECK((u == 0.0 || u == 1.0 || u == -1.0));
    }
  }
  CHECK(reconstruction_error(g, r) == 0.0);
}

// Independent check of the best rank-1 residual on 2x2 matrices: sweep the
// unit direction u(theta) over a fine grid; the rank-1 residual for the best
// u is ||G||^2 - ||u' G||^2. The second singular value squared must match.
TEST_CASE("rank-1 residual agrees with an angle-grid search on 2x2 inputs") {
  RandomSource rng(107);
  const int grid = 200000;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix g = gaussian_matrix(2, 2, rng);
    const SvdResult r = svd_full(g);
    const double svd_residual = r.S[1] * r.S[1];
    double best = 1e300;
    for (int i = 0; i < grid; ++i) {
      const double theta = M_PI * i / grid;
      const double c = std::cos(theta), s = std::sin(theta);
      const double row0 = c * g(0, 0) + s * g(1, 0);
      const double row1 = c * g(0, 1) + s * g(1, 1);
      const double captured = row0 * row0 + row1 * row1;
      best = std::min(best, g.norm_sq() - captured);
    }
    CHECK(svd_residual <= best + 1e-9 * g.norm_sq());
    CHECK(best - svd_residual <= 1e-6 * std::max(1.0, g.norm_sq()));
  }
}

TEST_CASE("rank-deficient and zero matrices still yield orthogonal factors") {
  Matrix zero(4, 3);
  const SvdResult rz = svd_full(zero);
  for (const double s : rz.S) CHECK(s == 0.0);
  CHECK(orthogonality_error(rz.U) <= 1e-12);
  CHECK(orthogonality_error(rz.V) <= 1e-12);

  // rank 1: outer product
  Matrix outer(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) outer(i, j) = (i + 1.0) * (j + 1.0);
  const SvdResult ro = svd_full(outer);
  CHECK(ro.S[0] > 1.0);
  for (std::size_t i = 1; i < ro.S.size(); ++i) CHECK(ro.S[i] <= 1e-10 * ro.S[0]);
  CHECK(reconstruction_error(outer, ro) <= 1e-10 * outer.norm());
  CHECK(orthogonality_error(ro.U) <= 1e-10);
}

TEST_CASE("orthonormalize returns the polar factor and rejects deficiency") {
  RandomSource rng(109);
  const Matrix z = gaussian_matrix(6, 3, rng);
  const Matrix q = orthonormalize(z);
  CHECK(q.rows() == 6);
  CHECK(q.cols() == 3);
  CHECK(orthogonality_error(q) <= 1e-10);
  // span is preserved: projecting z onto span(q) reproduces z
  const Matrix back = q * matmul_at_b(q, z);
  CHECK((back - z).max_abs() <= 1e-10 * std::max(1.0, z.norm()));

  Matrix deficient(5, 2);
  for (int i = 0; i < 5; ++i) {
    deficient(i, 0) = i + 1.0;
    deficient(i, 1) = 2.0 * (i + 1.0);  // parallel columns
  }
  CHECK_THROWS_AS(orthonormalize(deficient), DegenerateInput);
  CHECK_THROWS_AS(orthonormalize(Matrix(3, 4)), ShapeError);
  CHECK_THROWS_AS(orthonormalize(Matrix(3, 0)), ShapeError);
}
