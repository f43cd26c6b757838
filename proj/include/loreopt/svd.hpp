#pragma once

#include <vector>

#include "loreopt/matrix.hpp"

namespace loreopt {

// Full SVD G = U * diag(S) * Vᵀ with U m-by-m and V n-by-n orthogonal and S
// of length min(m,n), non-negative and non-increasing. Sign convention: the
// first nonzero entry of each U column is non-negative, with the paired V
// column flipped to compensate, so decompositions are reproducible.
struct SvdResult {
  Matrix U;
  std::vector<double> S;
  Matrix V;
};

SvdResult svd_full(const Matrix& g);

// Orthonormal basis of span(Z) for tall Z (m-by-r, r <= m): the polar factor
// Z(ZᵀZ)^(-1/2), computed as U_r Vᵀ from the SVD of Z. Throws DegenerateInput
// when Z is numerically rank-deficient (sigma_min <= 1e-12 * sigma_max).
Matrix orthonormalize(const Matrix& z);

}  // namespace loreopt
