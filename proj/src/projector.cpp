#include "loreopt/projector.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "loreopt/svd.hpp"

namespace loreopt {

Side side_for(int m, int n, std::optional<Side> override_side) {
  if (override_side) return *override_side;
  return m <= n ? Side::Left : Side::Right;
}

LowRankProjector fit_svd_projector(const Matrix& g, int r, Side side) {
  const int m = g.rows(), n = g.cols();
  const int dim = side == Side::Left ? m : n;
  if (r < 1 || r > std::min(m, n))
    throw InvalidRank("fit_svd_projector: rank " + std::to_string(r) + " out of [1, " +
                      std::to_string(std::min(m, n)) + "]");
  SvdResult svd = svd_full(g);
  const Matrix& basis = side == Side::Left ? svd.U : svd.V;
  Matrix factor(dim, r);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < r; ++j) factor(i, j) = basis(i, j);
  return LowRankProjector{std::move(factor), side, r, LowRankKind::SvdTopR};
}

Matrix sample_uniform_stiefel(int dim, int r, RandomSource& rng) {
  if (r < 1 || r > dim)
    throw InvalidRank("sample_uniform_stiefel: rank " + std::to_string(r) + " out of [1, " +
                      std::to_string(dim) + "]");
  // A gaussian matrix is almost surely full rank; retry on the measure-zero
  // degenerate draw rather than failing.
  for (int attempt = 0; attempt < 8; ++attempt) {
    Matrix z = gaussian_matrix(dim, r, rng);
    try {
      return orthonormalize(z);
    } catch (const DegenerateInput&) {
      continue;
    }
  }
  throw DegenerateInput("sample_uniform_stiefel: repeated degenerate draws");
}

LowRankProjector make_stiefel_projector(int m, int n, int r, Side side, RandomSource& rng) {
  const int dim = side == Side::Left ? m : n;
  Matrix factor = sample_uniform_stiefel(dim, r, rng);
  return LowRankProjector{std::move(factor), side, r, LowRankKind::UniformStiefel};
}

LowRankProjector make_gaussian_projector(int m, int n, int r, Side side, RandomSource& rng) {
  const int dim = side == Side::Left ? m : n;
  if (r < 1 || r > dim) throw InvalidRank("make_gaussian_projector: rank out of range");
  Matrix factor = gaussian_matrix(dim, r, rng, 1.0 / std::sqrt(static_cast<double>(r)));
  return LowRankProjector{std::move(factor), side, r, LowRankKind::GaussianFactor};
}

LowRankProjector make_identity_projector(int m, int n) {
  const Side side = side_for(m, n);
  const int dim = side == Side::Left ? m : n;
  return LowRankProjector{Matrix::identity(dim), side, dim, LowRankKind::Identity};
}

SparseMask topk_mask(const Matrix& g, std::int64_t k) {
  const std::int64_t total = g.size();
  if (k < 1 || k > total)
    throw InvalidRank("topk_mask: k " + std::to_string(k) + " out of [1, " +
                      std::to_string(total) + "]");
  std::vector<std::int64_t> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), 0);
  const double* p = g.data();
  // nth_element then sort of the head would also work; k and total are desk
  // scale, and stable ordering keeps the earliest-index tie rule explicit.
  std::stable_sort(idx.begin(), idx.end(), [&](std::int64_t a, std::int64_t b) {
    const double fa = std::abs(p[a]), fb = std::abs(p[b]);
    if (fa != fb) return fa > fb;
    return a < b;
  });
  SparseMask s;
  s.mask = Matrix(g.rows(), g.cols());
  s.k = k;
  s.kind = SparseKind::TopK;
  for (std::int64_t i = 0; i < k; ++i) s.mask.data()[idx[static_cast<std::size_t>(i)]] = 1.0;
  return s;
}

SparseMask sample_rand_mask(int m, int n, std::int64_t k, RandomSource& rng) {
  const std::int64_t total = static_cast<std::int64_t>(m) * n;
  if (k < 1 || k > total)
    throw InvalidRank("sample_rand_mask: k " + std::to_string(k) + " out of [1, " +
                      std::to_string(total) + "]");
  // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
  std::vector<std::int64_t> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), 0);
  for (std::int64_t i = 0; i < k; ++i) {
    const std::int64_t j =
        i + static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(total - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  SparseMask s;
  s.mask = Matrix(m, n);
  s.k = k;
  s.kind = SparseKind::RandK;
  for (std::int64_t i = 0; i < k; ++i) s.mask.data()[idx[static_cast<std::size_t>(i)]] = 1.0;
  return s;
}

Matrix project(const Matrix& g, const Projector& p) {
  if (const auto* lr = std::get_if<LowRankProjector>(&p)) {
    if (lr->side == Side::Left) {
      if (lr->factor.rows() != g.rows()) throw ShapeError("project: factor/gradient mismatch");
      return matmul_at_b(lr->factor, g);
    }
    if (lr->factor.rows() != g.cols()) throw ShapeError("project: factor/gradient mismatch");
    return g * lr->factor;
  }
  const auto& s = std::get<SparseMask>(p);
  require_same_shape(s.mask, g, "project");
  return hadamard(s.mask, g);
}

Matrix lift(const Matrix& r, const Projector& p) {
  if (const auto* lr = std::get_if<LowRankProjector>(&p)) {
    if (lr->side == Side::Left) {
      if (r.rows() != lr->factor.cols()) throw ShapeError("lift: subspace/factor mismatch");
      return lr->factor * r;
    }
    if (r.cols() != lr->factor.cols()) throw ShapeError("lift: subspace/factor mismatch");
    return matmul_a_bt(r, lr->factor);
  }
  const auto& s = std::get<SparseMask>(p);
  require_same_shape(s.mask, r, "lift");
  return hadamard(s.mask, r);
}

void subspace_shape(const Projector& p, int m, int n, int& rows, int& cols) {
  if (const auto* lr = std::get_if<LowRankProjector>(&p)) {
    if (lr->side == Side::Left) {
      rows = lr->factor.cols();
      cols = n;
    } else {
      rows = m;
      cols = lr->factor.cols();
    }
    return;
  }
  rows = m;
  cols = n;
}

const char* kind_label(const Projector& p) {
  if (const auto* lr = std::get_if<LowRankProjector>(&p)) {
    switch (lr->kind) {
      case LowRankKind::SvdTopR: return "svd_top_r";
      case LowRankKind::UniformStiefel: return "uniform_stiefel";
      case LowRankKind::GaussianFactor: return "gaussian";
      case LowRankKind::Identity: return "identity";
    }
  }
  return std::get<SparseMask>(p).kind == SparseKind::TopK ? "top_k" : "rand_k";
}

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

std::uint32_t read_u32(std::istream& is) {
  char b[4];
  is.read(b, 4);
  if (!is) throw IoError("read_projector: truncated stream");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

constexpr std::uint32_t kSparseTagBase = 100;

}  // namespace

void write_projector(std::ostream& os, const Projector& p) {
  if (const auto* lr = std::get_if<LowRankProjector>(&p)) {
    write_u32(os, static_cast<std::uint32_t>(lr->kind));
    write_u32(os, lr->side == Side::Left ? 0 : 1);
    write_u32(os, static_cast<std::uint32_t>(lr->rank));
    lr->factor.write_binary(os);
    return;
  }
  const auto& s = std::get<SparseMask>(p);
  write_u32(os, kSparseTagBase + static_cast<std::uint32_t>(s.kind));
  write_u32(os, 0);
  write_u32(os, static_cast<std::uint32_t>(s.k));
  s.mask.write_binary(os);
}

Projector read_projector(std::istream& is) {
  const std::uint32_t tag = read_u32(is);
  const std::uint32_t side = read_u32(is);
  const std::uint32_t dim = read_u32(is);
  Matrix m = Matrix::read_binary(is);
  if (tag >= kSparseTagBase) {
    SparseMask s;
    s.kind = static_cast<SparseKind>(tag - kSparseTagBase);
    s.k = dim;
    s.mask = std::move(m);
    std::int64_t ones = 0;
    for (std::int64_t i = 0; i < s.mask.size(); ++i) {
      const double v = s.mask.data()[i];
      if (v != 0.0 && v != 1.0) throw IoError("read_projector: mask entries must be 0 or 1");
      ones += v == 1.0;
    }
    if (ones != s.k) throw IoError("read_projector: mask cardinality mismatch");
    return s;
  }
  LowRankProjector lr;
  lr.kind = static_cast<LowRankKind>(tag);
  lr.side = side == 0 ? Side::Left : Side::Right;
  lr.rank = static_cast<int>(dim);
  lr.factor = std::move(m);
  if (lr.factor.cols() != lr.rank) throw IoError("read_projector: rank/factor mismatch");
  return lr;
}

}  // namespace loreopt
