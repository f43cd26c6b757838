#include "loreopt/rng.hpp"

#include <cmath>
#include <numbers>

namespace loreopt {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// SplitMix64 finalizer.
std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream) {
  key_ = mix(mix(seed + kGolden) ^ mix(stream + 0x6a09e667f3bcc909ull));
}

RandomSource RandomSource::derive(std::uint64_t tag) const {
  RandomSource child(0);
  child.key_ = mix(key_ ^ mix(tag + kGolden));
  child.counter_ = 0;
  return child;
}

std::uint64_t RandomSource::next_u64() { return mix(key_ + (++counter_) * kGolden); }

double RandomSource::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomSource::next_normal() {
  // Box-Muller; draws two uniforms per normal, second output discarded so the
  // draw count per normal is fixed (streams stay alignment-free).
  double u1 = 0.0;
  do {
    u1 = next_double();
  } while (u1 <= 0.0);
  const double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RandomSource::next_below(std::uint64_t n) {
  if (n == 0) throw InvalidInput("next_below: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = 0;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

Matrix gaussian_matrix(int rows, int cols, RandomSource& rng, double stddev) {
  Matrix m(rows, cols);
  double* p = m.data();
  const std::int64_t n = m.size();
  for (std::int64_t i = 0; i < n; ++i) p[i] = stddev * rng.next_normal();
  return m;
}

}  // namespace loreopt
