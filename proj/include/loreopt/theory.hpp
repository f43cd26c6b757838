#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "loreopt/oracle.hpp"
#include "loreopt/optimizer.hpp"
#include "loreopt/rng.hpp"

namespace loreopt {

// Constants describing a smooth stochastic problem: L-smoothness, initial
// suboptimality Delta = f(x0) - inf f, noise level sigma, the smallest
// subspace fraction delta_lower over all layers, and the step horizon T.
struct ProblemConstants {
  double L = 1.0;
  double Delta = 1.0;
  double sigma = 0.0;
  double delta_lower = 1.0;
  std::int64_t T = 1;
};

// Hyperparameters produced by one of the rate guarantees. `batch` is set only
// by the large-batch schedule. `min_horizon` is the smallest admissible T.
struct HparamBundle {
  double beta1 = 1.0;
  std::int64_t tau = 1;
  double eta = 0.0;
  std::optional<std::int64_t> batch;
  double min_horizon = 0.0;
};

// Fraction of the parameter space a layer's subspace covers: rank over
// min(m, n) for low-rank schedules, k over m*n for sparse ones.
double subspace_fraction(const LayerSpec& layer, bool sparse);
double delta_lower_from(const std::vector<LayerSpec>& layers, bool sparse);
double delta_upper_from(const std::vector<LayerSpec>& layers, bool sparse);

// O(1/T) rate for SVD subspaces with exact gradients (beta1 = 1).
HparamBundle hparams_deterministic(const ProblemConstants& c);
// O(1/sqrt(T)) rate for SVD subspaces with batch-B gradients at refresh steps.
HparamBundle hparams_largebatch(const ProblemConstants& c);
// O(1/sqrt(T)) rate for uniform random subspaces with single-sample gradients.
HparamBundle hparams_golore(const ProblemConstants& c);

enum class Impl { Original, ReloraLike };

struct CostBreakdown {
  long long memory = 0;
  long long computation = 0;
};

// Per-step memory (floats held) and computation (flops) for one m x n layer
// with rank r and batch b, assuming m <= n.
CostBreakdown cost_model(long long m, long long n, long long r, long long b, Impl impl);

// Numerically verifies the projection-error, orthogonality, descent, and
// expectation identities the rate proofs rest on. Deterministic inequalities
// run `trials` times; expectation checks use 10x that many draws.
Report verify_lemma_suite(RandomSource& rng, std::int64_t trials = 1000);
void require_lemmas(RandomSource& rng, std::int64_t trials = 1000);

}  // namespace loreopt
