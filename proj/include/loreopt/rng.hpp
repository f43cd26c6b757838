#pragma once

#include <cstdint>

#include "loreopt/matrix.hpp"

namespace loreopt {

// Counter-based generator: output i of a stream is a hash of (key, i), so a
// stream's draws do not depend on call-site interleaving, and child streams
// derived by tag are independent of the parent's position. (seed, tags...)
// fully determine every draw, which is what makes trajectories replayable and
// lets Monte-Carlo shards run in parallel deterministically.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed, std::uint64_t stream = 0);

  // Child stream; counter starts at 0. Independent of this source's position.
  RandomSource derive(std::uint64_t tag) const;

  std::uint64_t next_u64();
  double next_double();                    // uniform [0,1)
  double next_normal();                    // standard normal
  std::uint64_t next_below(std::uint64_t n);  // uniform {0..n-1}, unbiased

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

// Matrix with i.i.d. N(0, stddev^2) entries, drawn row-major.
Matrix gaussian_matrix(int rows, int cols, RandomSource& rng, double stddev = 1.0);

}  // namespace loreopt
