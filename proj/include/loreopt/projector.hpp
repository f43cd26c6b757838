#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>

#include "loreopt/matrix.hpp"
#include "loreopt/rng.hpp"

namespace loreopt {

// Which side of the weight matrix the low-rank factor multiplies. Left keeps
// an m-by-r factor P and works on R = PᵀG; Right keeps an n-by-r factor Q and
// works on R = GQ.
enum class Side { Left, Right };

enum class LowRankKind {
  SvdTopR,          // top-r singular vectors of the gradient
  UniformStiefel,   // uniform draw from the Stiefel manifold
  GaussianFactor,   // i.i.d. N(0, 1/r) entries, not orthonormal
  Identity          // exact pass-through (full-parameter baseline)
};

enum class SparseKind {
  TopK,  // k largest-magnitude gradient entries
  RandK  // uniformly random k-subset of entries
};

struct LowRankProjector {
  Matrix factor;  // m-by-r (Left) or n-by-r (Right)
  Side side = Side::Left;
  int rank = 0;
  LowRankKind kind = LowRankKind::SvdTopR;
};

struct SparseMask {
  Matrix mask;  // m-by-n, entries exactly 0 or 1, exactly k ones
  std::int64_t k = 0;
  SparseKind kind = SparseKind::TopK;
};

using Projector = std::variant<LowRankProjector, SparseMask>;

// Default side rule: Left iff m <= n, with an optional per-layer override.
Side side_for(int m, int n, std::optional<Side> override_side = std::nullopt);

// Top-r singular subspace of g. Left takes U's leading columns, Right takes
// V's. Requires 1 <= r <= min(m,n).
LowRankProjector fit_svd_projector(const Matrix& g, int r, Side side);

// Uniform draw from the Stiefel manifold: gaussian Z mapped through
// Z(ZᵀZ)^(-1/2). Requires 1 <= r <= dim.
Matrix sample_uniform_stiefel(int dim, int r, RandomSource& rng);
LowRankProjector make_stiefel_projector(int m, int n, int r, Side side, RandomSource& rng);

// Non-orthonormal gaussian factor with N(0, 1/r) entries.
LowRankProjector make_gaussian_projector(int m, int n, int r, Side side, RandomSource& rng);

LowRankProjector make_identity_projector(int m, int n);

// Mask selecting the k largest |g| entries; ties break toward the earliest
// row-major index so the selection is reproducible.
SparseMask topk_mask(const Matrix& g, std::int64_t k);

// Mask selecting a uniformly random k-subset of the m*n entries.
SparseMask sample_rand_mask(int m, int n, std::int64_t k, RandomSource& rng);

// R = PᵀG / GQ / S(.)G depending on the projector.
Matrix project(const Matrix& g, const Projector& p);
// Back to weight shape: PR / RQᵀ / S(.)R.
Matrix lift(const Matrix& r, const Projector& p);

// Subspace shape of project()'s output for an m-by-n layer.
void subspace_shape(const Projector& p, int m, int n, int& rows, int& cols);

const char* kind_label(const Projector& p);

// Tagged binary form: kind, side, rank/cardinality, then the factor or mask
// in the Matrix binary layout.
void write_projector(std::ostream& os, const Projector& p);
Projector read_projector(std::istream& is);

}  // namespace loreopt
