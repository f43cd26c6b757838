#include "loreopt/rng.hpp"

#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "loreopt/errors.hpp"

using namespace loreopt;

TEST_CASE("same seed reproduces the same draws, different seeds differ") {
  RandomSource a(42), b(42), c(43);
  bool any_differ = false;
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t va = a.next_u64();
    CHECK(va == b.next_u64());
    any_differ = any_differ || va != c.next_u64();
  }
  CHECK(any_differ);
}

TEST_CASE("derived streams are independent of the parent's position") {
  RandomSource parent(7);
  RandomSource child_before = parent.derive(3);
  for (int i = 0; i < 50; ++i) parent.next_u64();
  RandomSource child_after = parent.derive(3);
  for (int i = 0; i < 20; ++i) CHECK(child_before.next_u64() == child_after.next_u64());

  RandomSource other = parent.derive(4);
  bool differ = false;
  RandomSource again = parent.derive(3);
  for (int i = 0; i < 20; ++i) differ = differ || again.next_u64() != other.next_u64();
  CHECK(differ);
}

TEST_CASE("next_double stays in [0,1) and has a near-half mean") {
  RandomSource rng(11);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  // mean of n uniforms has sd = 1/sqrt(12n); allow 4 sds
  CHECK(std::abs(sum / n - 0.5) < 4.0 / std::sqrt(12.0 * n));
}

TEST_CASE("next_normal has near-zero mean and near-unit variance") {
  RandomSource rng(13);
  const int n = 100000;
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.next_normal();
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  // var of sample variance of normals is ~2/n
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("next_below is in range, covers all values, and rejects zero") {
  RandomSource rng(19);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t v = rng.next_below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  CHECK_THROWS_AS(rng.next_below(0), InvalidInput);
}

TEST_CASE("gaussian_matrix is deterministic per stream and honors stddev") {
  RandomSource a(5), b(5);
  const Matrix ma = gaussian_matrix(4, 3, a);
  const Matrix mb = gaussian_matrix(4, 3, b);
  CHECK(ma == mb);

  RandomSource c(5);
  const Matrix mc = gaussian_matrix(200, 200, c, 2.0);
  double sum_sq = 0;
  for (std::int64_t i = 0; i < mc.size(); ++i) sum_sq += mc.data()[i] * mc.data()[i];
  const double var = sum_sq / static_cast<double>(mc.size());
  CHECK(var == doctest::Approx(4.0).epsilon(0.05));
}
