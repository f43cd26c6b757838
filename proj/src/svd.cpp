#include "loreopt/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace loreopt {

namespace {

// One-sided Jacobi on tall A (m >= n): right-rotations orthogonalize the
// columns of A in place while V accumulates them, so A_in * V = A_out and the
// final column norms are the singular values.
void jacobi_orthogonalize(Matrix& a, Matrix& v) {
  const int m = a.rows(), n = a.cols();
  const double tol = 1e-15;
  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int i = 0; i < m; ++i) {
          app += a(i, p) * a(i, p);
          aqq += a(i, q) * a(i, q);
          apq += a(i, p) * a(i, q);
        }
        if (std::abs(apq) <= tol * std::sqrt(app * aqq) || apq == 0.0) continue;
        rotated = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int i = 0; i < m; ++i) {
          const double ap = a(i, p), aq = a(i, q);
          a(i, p) = c * ap - s * aq;
          a(i, q) = s * ap + c * aq;
        }
        for (int i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }
}

// Fill the columns of u from `from` onward with an orthonormal completion,
// Gram-Schmidting standard basis vectors against everything accepted so far.
void complete_basis(Matrix& u, int from) {
  const int m = u.rows();
  int next = from;
  for (int cand = 0; cand < m && next < m; ++cand) {
    std::vector<double> w(m, 0.0);
    w[cand] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (int k = 0; k < next; ++k) {
        double d = 0.0;
        for (int i = 0; i < m; ++i) d += u(i, k) * w[i];
        for (int i = 0; i < m; ++i) w[i] -= d * u(i, k);
      }
    }
    double nrm = 0.0;
    for (double x : w) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (nrm < 0.1) continue;  // candidate nearly inside the current span
    for (int i = 0; i < m; ++i) u(i, next) = w[i] / nrm;
    ++next;
  }
}

SvdResult svd_tall(const Matrix& g) {
  const int m = g.rows(), n = g.cols();
  Matrix a = g;
  Matrix v = Matrix::identity(n);
  jacobi_orthogonalize(a, v);

  std::vector<double> norms(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += a(i, j) * a(i, j);
    norms[j] = std::sqrt(s);
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return norms[x] > norms[y]; });

  SvdResult r;
  r.S.resize(n);
  r.U = Matrix(m, m);
  r.V = Matrix(n, n);
  const double smax = norms.empty() ? 0.0 : norms[order[0]];
  const double cutoff = smax * 1e-13;
  int filled = 0;
  for (int j = 0; j < n; ++j) {
    const int src = order[j];
    r.S[j] = norms[src];
    for (int i = 0; i < n; ++i) r.V(i, j) = v(i, src);
    if (norms[src] > cutoff && norms[src] > 0.0) {
      for (int i = 0; i < m; ++i) r.U(i, j) = a(i, src) / norms[src];
      filled = j + 1;
    }
  }
  complete_basis(r.U, filled);
  return r;
}

void normalize_signs(SvdResult& r) {
  const int m = r.U.rows(), n = r.V.rows();
  for (int j = 0; j < m; ++j) {
    double lead = 0.0;
    for (int i = 0; i < m; ++i) {
      if (r.U(i, j) != 0.0) {
        lead = r.U(i, j);
        break;
      }
    }
    if (lead >= 0.0) continue;
    for (int i = 0; i < m; ++i) r.U(i, j) = -r.U(i, j);
    if (j < n)
      for (int i = 0; i < n; ++i) r.V(i, j) = -r.V(i, j);
  }
}

}  // namespace

SvdResult svd_full(const Matrix& g) {
  if (g.rows() == 0 || g.cols() == 0) throw ShapeError("svd_full: empty matrix");
  require_finite(g, "svd_full");
  SvdResult r;
  if (g.rows() >= g.cols()) {
    r = svd_tall(g);
  } else {
    SvdResult t = svd_tall(g.transpose());
    r.U = std::move(t.V);
    r.V = std::move(t.U);
    r.S = std::move(t.S);
  }
  normalize_signs(r);
  return r;
}

Matrix orthonormalize(const Matrix& z) {
  const int m = z.rows(), r = z.cols();
  if (r < 1 || r > m) throw ShapeError("orthonormalize: need tall input, 1 <= cols <= rows");
  SvdResult svd = svd_tall(z);
  if (svd.S[r - 1] <= 1e-12 * svd.S[0] || svd.S[0] == 0.0)
    throw DegenerateInput("orthonormalize: rank-deficient input");
  // U_r * Vᵀ, which is exactly Z (ZᵀZ)^(-1/2).
  Matrix ur(m, r);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < r; ++j) ur(i, j) = svd.U(i, j);
  return matmul_a_bt(ur, svd.V);
}

}  // namespace loreopt
