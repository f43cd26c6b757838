#include "loreopt/projector.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <sstream>

#include "doctest.h"
#include "loreopt/errors.hpp"
#include "loreopt/rng.hpp"
#include "loreopt/svd.hpp"

using namespace loreopt;

namespace {

double orthogonality_error(const Matrix& q) {
  return (matmul_at_b(q, q) - Matrix::identity(q.cols())).max_abs();
}

std::int64_t count_ones(const Matrix& mask) {
  std::int64_t ones = 0;
  for (int i = 0; i < mask.rows(); ++i)
    for (int j = 0; j < mask.cols(); ++j) {
      const double v = mask(i, j);
      if (v == 1.0) ++ones;
      else CHECK(v == 0.0);
    }
  return ones;
}

}  // namespace

TEST_CASE("side rule keeps the smaller dimension unless overridden") {
  CHECK(side_for(3, 5) == Side::Left);
  CHECK(side_for(5, 5) == Side::Left);
  CHECK(side_for(6, 2) == Side::Right);
  CHECK(side_for(6, 2, Side::Left) == Side::Left);
  CHECK(side_for(2, 6, Side::Right) == Side::Right);
}

TEST_CASE("top singular subspace captures strictly more energy than random ones") {
  RandomSource rng(11);
  const Matrix g = gaussian_matrix(6, 9, rng);
  const LowRankProjector p = fit_svd_projector(g, 2, Side::Left);
  CHECK(p.rank == 2);
  CHECK(p.factor.rows() == 6);
  CHECK(p.factor.cols() == 2);
  CHECK(orthogonality_error(p.factor) <= 1e-10);

  const double captured = project(g, Projector{p}).norm_sq();
  const SvdResult sv = svd_full(g);
  CHECK(captured == doctest::Approx(sv.S[0] * sv.S[0] + sv.S[1] * sv.S[1]).epsilon(1e-10));
  for (int trial = 0; trial < 25; ++trial) {
    const LowRankProjector q = make_stiefel_projector(6, 9, 2, Side::Left, rng);
    CHECK(project(g, Projector{q}).norm_sq() <= captured * (1.0 + 1e-12));
  }
}

TEST_CASE("projection residual never exceeds the rank-fraction bound") {
  RandomSource rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 3 + static_cast<int>(rng.next_below(6));
    const int n = 3 + static_cast<int>(rng.next_below(6));
    const int r = 1 + static_cast<int>(rng.next_below(std::min(m, n)));
    const Matrix g = gaussian_matrix(m, n, rng);
    const Side side = side_for(m, n);
    const int dim = side == Side::Left ? m : n;
    const LowRankProjector p = fit_svd_projector(g, r, side);
    const Matrix lifted = lift(project(g, Projector{p}), Projector{p});
    const double residual = (lifted - g).norm_sq();
    const double bound = (1.0 - static_cast<double>(r) / dim) * g.norm_sq();
    CHECK(residual <= bound * (1.0 + 1e-9) + 1e-12);
    // exact energy split: ||PP'G||^2 + ||G - PP'G||^2 == ||G||^2
    CHECK(lifted.norm_sq() + residual == doctest::Approx(g.norm_sq()).epsilon(1e-10));
  }
}

TEST_CASE("stiefel draws are orthonormal on both sides") {
  RandomSource rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix q = sample_uniform_stiefel(7, 3, rng);
    CHECK(orthogonality_error(q) <= 1e-10);
  }
  const LowRankProjector left = make_stiefel_projector(4, 9, 2, Side::Left, rng);
  CHECK(left.factor.rows() == 4);
  const LowRankProjector right = make_stiefel_projector(9, 4, 2, Side::Right, rng);
  CHECK(right.factor.rows() == 4);
  CHECK(right.factor.cols() == 2);
  CHECK_THROWS_AS(sample_uniform_stiefel(3, 4, rng), InvalidRank);
  CHECK_THROWS_AS(sample_uniform_stiefel(3, 0, rng), InvalidRank);
}

TEST_CASE("gaussian factor has 1/r entry variance and is not orthonormal") {
  RandomSource rng(19);
  const int r = 4;
  const LowRankProjector p = make_gaussian_projector(400, 500, r, Side::Left, rng);
  CHECK(p.kind == LowRankKind::GaussianFactor);
  double sum_sq = 0.0;
  for (int i = 0; i < p.factor.rows(); ++i)
    for (int j = 0; j < p.factor.cols(); ++j) sum_sq += p.factor(i, j) * p.factor(i, j);
  const double var = sum_sq / (400.0 * r);
  CHECK(var == doctest::Approx(1.0 / r).epsilon(0.1));
  CHECK(orthogonality_error(p.factor) > 1e-3);
}

TEST_CASE("identity projector is an exact pass-through") {
  const LowRankProjector p = make_identity_projector(4, 6);
  CHECK(p.rank == 4);
  CHECK(p.side == Side::Left);
  RandomSource rng(23);
  const Matrix g = gaussian_matrix(4, 6, rng);
  const Matrix r = project(g, Projector{p});
  CHECK((r - g).max_abs() == 0.0);
  CHECK((lift(r, Projector{p}) - g).max_abs() == 0.0);
}

TEST_CASE("top-k mask keeps the largest magnitudes, ties to earliest row-major index") {
  const Matrix g(2, 2, {3.0, -3.0, 1.0, 2.0});
  const SparseMask pick2 = topk_mask(g, 2);
  CHECK(pick2.mask(0, 0) == 1.0);
  CHECK(pick2.mask(0, 1) == 1.0);
  CHECK(pick2.mask(1, 0) == 0.0);
  CHECK(pick2.mask(1, 1) == 0.0);

  const SparseMask pick3 = topk_mask(g, 3);
  CHECK(pick3.mask(1, 1) == 1.0);
  CHECK(pick3.mask(1, 0) == 0.0);
  CHECK(count_ones(pick3.mask) == 3);

  CHECK(count_ones(topk_mask(g, 4).mask) == 4);
  CHECK_THROWS_AS(topk_mask(g, 0), InvalidRank);
  CHECK_THROWS_AS(topk_mask(g, 5), InvalidRank);
}

TEST_CASE("random mask has exactly k ones and covers all entries over draws") {
  RandomSource rng(29);
  Matrix seen(3, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const SparseMask s = sample_rand_mask(3, 4, 5, rng);
    CHECK(count_ones(s.mask) == 5);
    seen = seen + s.mask;
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) CHECK(seen(i, j) > 0.0);
  CHECK_THROWS_AS(sample_rand_mask(3, 4, 13, rng), InvalidRank);
  CHECK_THROWS_AS(sample_rand_mask(3, 4, 0, rng), InvalidRank);
}

TEST_CASE("project and lift match explicit matrix algebra on every branch") {
  RandomSource rng(31);
  const Matrix g = gaussian_matrix(5, 7, rng);

  const LowRankProjector pl = make_stiefel_projector(5, 7, 2, Side::Left, rng);
  const Matrix rl = project(g, Projector{pl});
  CHECK(rl.rows() == 2);
  CHECK(rl.cols() == 7);
  CHECK((rl - matmul_at_b(pl.factor, g)).max_abs() == 0.0);
  CHECK((lift(rl, Projector{pl}) - pl.factor * rl).max_abs() == 0.0);

  const LowRankProjector pr = make_stiefel_projector(5, 7, 2, Side::Right, rng);
  const Matrix rr = project(g, Projector{pr});
  CHECK(rr.rows() == 5);
  CHECK(rr.cols() == 2);
  CHECK((rr - g * pr.factor).max_abs() == 0.0);
  CHECK((lift(rr, Projector{pr}) - matmul_a_bt(rr, pr.factor)).max_abs() == 0.0);

  const SparseMask s = sample_rand_mask(5, 7, 9, rng);
  const Matrix rs = project(g, Projector{s});
  CHECK((rs - hadamard(s.mask, g)).max_abs() == 0.0);
  CHECK((lift(rs, Projector{s}) - hadamard(s.mask, rs)).max_abs() == 0.0);

  int rows = 0, cols = 0;
  subspace_shape(Projector{pl}, 5, 7, rows, cols);
  CHECK(rows == 2);
  CHECK(cols == 7);
  subspace_shape(Projector{pr}, 5, 7, rows, cols);
  CHECK(rows == 5);
  CHECK(cols == 2);
  subspace_shape(Projector{s}, 5, 7, rows, cols);
  CHECK(rows == 5);
  CHECK(cols == 7);
}

TEST_CASE("rank bounds are enforced when fitting") {
  RandomSource rng(37);
  const Matrix g = gaussian_matrix(4, 6, rng);
  CHECK_THROWS_AS(fit_svd_projector(g, 0, Side::Left), InvalidRank);
  CHECK_THROWS_AS(fit_svd_projector(g, 5, Side::Left), InvalidRank);
  CHECK_NOTHROW(fit_svd_projector(g, 4, Side::Right));
}

TEST_CASE("labels name each projector family") {
  RandomSource rng(41);
  const Matrix g = gaussian_matrix(3, 4, rng);
  CHECK(std::string(kind_label(Projector{fit_svd_projector(g, 1, Side::Left)})) == "svd_top_r");
  CHECK(std::string(kind_label(Projector{make_stiefel_projector(3, 4, 1, Side::Left, rng)})) ==
        "uniform_stiefel");
  CHECK(std::string(kind_label(Projector{make_gaussian_projector(3, 4, 1, Side::Left, rng)})) ==
        "gaussian");
  CHECK(std::string(kind_label(Projector{make_identity_projector(3, 4)})) == "identity");
  CHECK(std::string(kind_label(Projector{topk_mask(g, 2)})) == "top_k");
  CHECK(std::string(kind_label(Projector{sample_rand_mask(3, 4, 2, rng)})) == "rand_k");
}

TEST_CASE("serialization round-trips every projector variant") {
  RandomSource rng(43);
  const Matrix g = gaussian_matrix(4, 6, rng);
  std::vector<Projector> cases = {
      Projector{fit_svd_projector(g, 2, Side::Left)},
      Projector{fit_svd_projector(g, 3, Side::Right)},
      Projector{make_stiefel_projector(4, 6, 2, Side::Right, rng)},
      Projector{make_gaussian_projector(4, 6, 3, Side::Left, rng)},
      Projector{make_identity_projector(4, 6)},
      Projector{topk_mask(g, 7)},
      Projector{sample_rand_mask(4, 6, 5, rng)},
  };
  for (const Projector& p : cases) {
    std::stringstream buf;
    write_projector(buf, p);
    const Projector back = read_projector(buf);
    CHECK(back.index() == p.index());
    const Matrix before = lift(project(g, p), p);
    const Matrix after = lift(project(g, back), back);
    CHECK((before - after).max_abs() == 0.0);
    if (std::holds_alternative<SparseMask>(p))
      CHECK(std::get<SparseMask>(back).k == std::get<SparseMask>(p).k);
    else
      CHECK(std::get<LowRankProjector>(back).rank == std::get<LowRankProjector>(p).rank);
  }
}

TEST_CASE("deserialization rejects corrupted payloads") {
  RandomSource rng(47);
  const Matrix g = gaussian_matrix(3, 3, rng);
  std::stringstream buf;
  write_projector(buf, Projector{topk_mask(g, 2)});
  std::string bytes = buf.str();

  // truncated stream
  std::stringstream cut(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(read_projector(cut), IoError);

  // mask entry corrupted away from {0,1}
  std::stringstream tampered(bytes);
  Projector p = read_projector(tampered);
  (void)p;
  std::string broken = bytes;
  const double two = 2.0;
  std::memcpy(&broken[broken.size() - sizeof(double)], &two, sizeof(double));
  std::stringstream bad(broken);
  CHECK_THROWS_AS(read_projector(bad), IoError);
}
