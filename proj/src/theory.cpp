#include "loreopt/theory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "loreopt/projector.hpp"

namespace loreopt {

double subspace_fraction(const LayerSpec& layer, bool sparse) {
  if (layer.m < 1 || layer.n < 1 || layer.sub < 1)
    throw InvalidInput("subspace_fraction: dimensions and subspace size must be >= 1");
  const double total = sparse ? static_cast<double>(layer.m) * layer.n
                              : static_cast<double>(std::min(layer.m, layer.n));
  const double frac = static_cast<double>(layer.sub) / total;
  if (frac > 1.0) throw InvalidInput("subspace_fraction: subspace larger than the layer");
  return frac;
}

double delta_lower_from(const std::vector<LayerSpec>& layers, bool sparse) {
  if (layers.empty()) throw InvalidInput("delta_lower_from: no layers");
  double lo = 1.0;
  for (const LayerSpec& l : layers) lo = std::min(lo, subspace_fraction(l, sparse));
  return lo;
}

double delta_upper_from(const std::vector<LayerSpec>& layers, bool sparse) {
  if (layers.empty()) throw InvalidInput("delta_upper_from: no layers");
  double hi = 0.0;
  for (const LayerSpec& l : layers) hi = std::max(hi, subspace_fraction(l, sparse));
  return hi;
}

namespace {

void validate_constants(const ProblemConstants& c) {
  if (!(c.L > 0)) throw InvalidInput("ProblemConstants: L must be > 0");
  if (!(c.Delta > 0)) throw InvalidInput("ProblemConstants: Delta must be > 0");
  if (c.sigma < 0) throw InvalidInput("ProblemConstants: sigma must be >= 0");
  if (!(c.delta_lower > 0) || c.delta_lower > 1)
    throw InvalidInput("ProblemConstants: delta_lower must be in (0, 1]");
  if (c.T < 1) throw InvalidInput("ProblemConstants: T must be >= 1");
}

void check_horizon(const ProblemConstants& c, double min_horizon, const char* which) {
  if (static_cast<double>(c.T) < min_horizon) {
    std::ostringstream ss;
    ss << which << " rate requires T >= " << min_horizon << ", got T = " << c.T;
    throw HorizonTooShort(ss.str());
  }
}

std::int64_t tau_for(double delta, double beta1) {
  return static_cast<std::int64_t>(std::ceil(64.0 / (3.0 * delta * beta1)));
}

double stochastic_beta1(const ProblemConstants& c) {
  const double d = c.delta_lower;
  return 1.0 / (1.0 + std::sqrt(std::pow(d, 1.5) * c.sigma * c.sigma *
                                static_cast<double>(c.T) / (c.L * c.Delta)));
}

double stochastic_min_horizon(const ProblemConstants& c) {
  const double d = c.delta_lower;
  return 2.0 + 128.0 / (3.0 * d) +
         (128.0 * c.sigma) * (128.0 * c.sigma) / (9.0 * std::sqrt(d) * c.L * c.Delta);
}

double eta_small_noise(double L, double delta, double beta1, std::int64_t tau) {
  const double t = static_cast<double>(tau);
  return 1.0 / (4.0 * L + std::sqrt(80.0 * L * L / (3.0 * delta * beta1 * beta1)) +
                std::sqrt(80.0 * t * t * L * L / (3.0 * delta)) +
                std::sqrt(16.0 * t * L * L / (3.0 * beta1)));
}

double eta_large_batch(double L, double delta, double beta1, std::int64_t tau) {
  const double t = static_cast<double>(tau);
  return 1.0 / (4.0 * L + std::sqrt(80.0 * L * L / (3.0 * delta * beta1 * beta1)) +
                std::sqrt(40.0 * t * t * L * L / delta) +
                std::sqrt(32.0 * t * L * L / (3.0 * beta1)));
}

}  // namespace

HparamBundle hparams_deterministic(const ProblemConstants& c) {
  validate_constants(c);
  HparamBundle b;
  b.min_horizon = 64.0 / (3.0 * c.delta_lower);
  check_horizon(c, b.min_horizon, "deterministic");
  b.beta1 = 1.0;
  b.tau = tau_for(c.delta_lower, b.beta1);
  b.eta = eta_small_noise(c.L, c.delta_lower, b.beta1, b.tau);
  return b;
}

HparamBundle hparams_largebatch(const ProblemConstants& c) {
  validate_constants(c);
  HparamBundle b;
  b.min_horizon = stochastic_min_horizon(c);
  check_horizon(c, b.min_horizon, "large-batch");
  b.beta1 = stochastic_beta1(c);
  b.tau = tau_for(c.delta_lower, b.beta1);
  b.batch = static_cast<std::int64_t>(std::ceil(1.0 / (c.delta_lower * b.beta1)));
  b.eta = eta_large_batch(c.L, c.delta_lower, b.beta1, b.tau);
  return b;
}

HparamBundle hparams_golore(const ProblemConstants& c) {
  validate_constants(c);
  HparamBundle b;
  b.min_horizon = stochastic_min_horizon(c);
  check_horizon(c, b.min_horizon, "random-subspace");
  b.beta1 = stochastic_beta1(c);
  b.tau = tau_for(c.delta_lower, b.beta1);
  b.eta = eta_small_noise(c.L, c.delta_lower, b.beta1, b.tau);
  return b;
}

CostBreakdown cost_model(long long m, long long n, long long r, long long b, Impl impl) {
  if (m < 1 || n < 1) throw InvalidInput("cost_model: m and n must be >= 1");
  if (m > n) throw InvalidInput("cost_model: requires m <= n");
  if (r < 0) throw InvalidInput("cost_model: r must be >= 0");
  if (b < 1) throw InvalidInput("cost_model: b must be >= 1");
  CostBreakdown out;
  if (impl == Impl::Original) {
    out.memory = m * n + r * m + r * n + b * m;
    out.computation = 6 * b * m * n + 4 * r * m * n + 2 * m * n + 3 * r * n;
  } else {
    out.memory = m * n + r * m + 2 * r * n + b * m + b * r;
    out.computation = 4 * b * m * n + 4 * b * r * m + 6 * b * r * n + 5 * r * n;
  }
  return out;
}

namespace {

constexpr double kRelSlack = 1e-9;

struct WorstCase {
  double value = -1e300;
  std::string detail;
};

void update_worst(WorstCase& w, double value, const std::string& detail) {
  if (value > w.value) {
    w.value = value;
    w.detail = detail;
  }
}

std::string shape_detail(std::int64_t trial, int m, int n, int r) {
  std::ostringstream ss;
  ss << "worst trial " << trial << ", shape " << m << "x" << n << ", size " << r;
  return ss.str();
}

CheckResult inequality_result(std::string name, const WorstCase& w) {
  CheckResult res;
  res.name = std::move(name);
  res.statistic = w.value;
  res.bound = kRelSlack;
  res.pass = w.value <= kRelSlack;
  res.detail = w.detail;
  return res;
}

CheckResult mean_result(std::string name, double mean, double target, double se,
                        std::int64_t draws) {
  CheckResult res;
  res.name = std::move(name);
  res.statistic = std::abs(mean - target);
  res.bound = 3.0 * se + 1e-12 * std::max(1.0, std::abs(target));
  res.pass = res.statistic <= res.bound;
  std::ostringstream ss;
  ss << "mean " << mean << " vs " << target << " over " << draws << " draws, se " << se;
  res.detail = ss.str();
  return res;
}

// Residual of projecting G onto the span of the top-r singular directions,
// relative to the (1 - r/d) energy bound. Positive values are violations.
CheckResult check_svd_projection(RandomSource& rng, std::int64_t trials, Side side) {
  WorstCase worst;
  for (std::int64_t i = 0; i < trials; ++i) {
    RandomSource tr = rng.derive(0xB1).derive(static_cast<std::uint64_t>(i));
    const int m = 2 + static_cast<int>(tr.next_below(7));
    const int n = 2 + static_cast<int>(tr.next_below(7));
    const int r = 1 + static_cast<int>(tr.next_below(static_cast<std::uint64_t>(std::min(m, n))));
    const Matrix g = gaussian_matrix(m, n, tr);
    const Projector p = fit_svd_projector(g, r, side);
    const Matrix back = lift(project(g, p), p);
    const double err = (back - g).norm_sq();
    const double dim = side == Side::Left ? m : n;
    const double bound = (1.0 - r / dim) * g.norm_sq();
    update_worst(worst, (err - bound) / std::max(1.0, g.norm_sq()), shape_detail(i, m, n, r));
  }
  return inequality_result(
      side == Side::Left ? "svd_projection_error_left" : "svd_projection_error_right", worst);
}

// Any window element sequence bounds its first element's squared norm by
// twice the window average plus (len-1) times the summed step differences.
CheckResult check_window_anchor(RandomSource& rng, std::int64_t trials) {
  const int lens[] = {2, 5, 10};
  WorstCase worst;
  for (std::int64_t i = 0; i < trials; ++i) {
    RandomSource tr = rng.derive(0xB2).derive(static_cast<std::uint64_t>(i));
    const int len = lens[i % 3];
    const int m = 2 + static_cast<int>(tr.next_below(5));
    const int n = 2 + static_cast<int>(tr.next_below(5));
    std::vector<Matrix> seq;
    seq.reserve(len);
    for (int s = 0; s < len; ++s) seq.push_back(gaussian_matrix(m, n, tr));
    double sum_sq = 0, sum_diff = 0;
    for (int s = 0; s < len; ++s) sum_sq += seq[s].norm_sq();
    for (int s = 0; s + 1 < len; ++s) sum_diff += (seq[s + 1] - seq[s]).norm_sq();
    const double lhs = seq[0].norm_sq();
    const double rhs = 2.0 / len * sum_sq + (len - 1) * sum_diff;
    update_worst(worst, (lhs - rhs) / std::max(1.0, rhs), shape_detail(i, m, n, len));
  }
  return inequality_result("window_anchor_bound", worst);
}

// For orthonormal P, the in-span part of A and out-of-span part of B are
// orthogonal, so the norm of their sum splits exactly.
CheckResult check_orthogonal_split(RandomSource& rng, std::int64_t trials) {
  WorstCase worst;
  for (std::int64_t i = 0; i < trials; ++i) {
    RandomSource tr = rng.derive(0xB3).derive(static_cast<std::uint64_t>(i));
    const int m = 2 + static_cast<int>(tr.next_below(7));
    const int n = 2 + static_cast<int>(tr.next_below(7));
    const int r = 1 + static_cast<int>(tr.next_below(static_cast<std::uint64_t>(m)));
    const Matrix p = sample_uniform_stiefel(m, r, tr);
    const Matrix a = gaussian_matrix(m, n, tr);
    const Matrix b = gaussian_matrix(m, n, tr);
    const Matrix pa = p * matmul_at_b(p, a);
    const Matrix qb = b - p * matmul_at_b(p, b);
    const double lhs = (pa + qb).norm_sq();
    const double rhs = pa.norm_sq() + qb.norm_sq();
    update_worst(worst, std::abs(lhs - rhs) / std::max(1.0, rhs), shape_detail(i, m, n, r));
  }
  return inequality_result("orthogonal_split_identity", worst);
}

// One smooth-descent step: moving along any direction d with step eta <= 1/L
// decreases f by the stated mix of step length, direction error, and gradient
// norm. Checked on a quadratic whose largest curvature is known exactly.
CheckResult check_descent_bound(RandomSource& rng, std::int64_t trials) {
  const double L = 2.0;
  const RandomQuadratic oracle({{5, 4}}, L, 0.0, 10.0, 99);
  const std::int64_t count = std::max<std::int64_t>(100, trials / 10);
  WorstCase worst;
  for (std::int64_t i = 0; i < count; ++i) {
    RandomSource tr = rng.derive(0xB4).derive(static_cast<std::uint64_t>(i));
    std::vector<Matrix> x{gaussian_matrix(5, 4, tr)};
    std::vector<Matrix> d{gaussian_matrix(5, 4, tr)};
    const double eta = (1.0 - tr.next_double()) / L;
    std::vector<Matrix> xp{x[0] - eta * d[0]};
    const std::vector<Matrix> g = oracle.true_grad(x);
    const double step_sq = (xp[0] - x[0]).norm_sq();
    const double err_sq = (d[0] - g[0]).norm_sq();
    const double lhs = oracle.loss(xp);
    const double rhs = oracle.loss(x) - (0.5 / eta - 0.5 * L) * step_sq + 0.5 * eta * err_sq -
                       0.5 * eta * g[0].norm_sq();
    const double scale = std::max({1.0, std::abs(lhs), std::abs(oracle.loss(x)), step_sq / eta});
    update_worst(worst, (lhs - rhs) / scale, shape_detail(i, 5, 4, 0));
  }
  return inequality_result("smooth_descent_bound", worst);
}

// Column-indexed per-draw scalar storage lets the Monte Carlo loops run in
// parallel while the reduction stays a fixed serial order.
struct MeanAccumulator {
  double mean = 0, se = 0;
  void reduce(const std::vector<double>& vals) {
    double sum = 0;
    for (double v : vals) sum += v;
    mean = sum / static_cast<double>(vals.size());
    double ss = 0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    const double n = static_cast<double>(vals.size());
    se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
};

// Uniform orthonormal frames average to (r/m) times the identity.
CheckResult check_stiefel_mean(RandomSource& rng, std::int64_t draws) {
  const int m = 6, r = 2;
  std::vector<Matrix> samples(draws, Matrix(m, m));
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < draws; ++i) {
    RandomSource tr = rng.derive(0xB5).derive(static_cast<std::uint64_t>(i));
    const Matrix p = sample_uniform_stiefel(m, r, tr);
    samples[i] = matmul_a_bt(p, p);
  }
  Matrix mean(m, m);
  for (const Matrix& s : samples) mean = mean + s;
  scale_inplace(mean, 1.0 / static_cast<double>(draws));
  Matrix var(m, m);
  for (const Matrix& s : samples) {
    const Matrix d = s - mean;
    var = var + hadamard(d, d);
  }
  double agg_var = 0;
  for (std::int64_t i = 0; i < var.size(); ++i) agg_var += var.data()[i];
  agg_var /= static_cast<double>(draws - 1) * static_cast<double>(draws);

  const Matrix target = r / static_cast<double>(m) * Matrix::identity(m);
  CheckResult res;
  res.name = "stiefel_mean_identity";
  res.statistic = (mean - target).norm();
  res.bound = 3.0 * std::sqrt(agg_var) + 1e-12;
  res.pass = res.statistic <= res.bound;
  std::ostringstream ss;
  ss << "frobenius deviation over " << draws << " draws of " << m << "x" << r << " frames";
  res.detail = ss.str();
  return res;
}

// Expected energy lost by a uniform random rank-r projection is (1 - r/m).
CheckResult check_stiefel_error_mean(RandomSource& rng, std::int64_t draws) {
  const int m = 6, n = 7, r = 2;
  RandomSource grow = rng.derive(0xB6);
  const Matrix g = gaussian_matrix(m, n, grow);
  std::vector<double> vals(draws);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < draws; ++i) {
    RandomSource tr = rng.derive(0xB7).derive(static_cast<std::uint64_t>(i));
    const Matrix p = sample_uniform_stiefel(m, r, tr);
    vals[i] = (p * matmul_at_b(p, g) - g).norm_sq();
  }
  MeanAccumulator acc;
  acc.reduce(vals);
  const double target = (1.0 - r / static_cast<double>(m)) * g.norm_sq();
  return mean_result("stiefel_projection_error_mean", acc.mean, target, acc.se, draws);
}

// Keeping the k largest-magnitude entries loses at most the (1 - k/(mn))
// energy fraction.
CheckResult check_topk_error(RandomSource& rng, std::int64_t trials) {
  WorstCase worst;
  for (std::int64_t i = 0; i < trials; ++i) {
    RandomSource tr = rng.derive(0xB8).derive(static_cast<std::uint64_t>(i));
    const int m = 2 + static_cast<int>(tr.next_below(7));
    const int n = 2 + static_cast<int>(tr.next_below(7));
    const std::int64_t total = static_cast<std::int64_t>(m) * n;
    const std::int64_t k = 1 + static_cast<std::int64_t>(tr.next_below(total));
    const Matrix g = gaussian_matrix(m, n, tr);
    const SparseMask mask = topk_mask(g, k);
    const double err = (hadamard(mask.mask, g) - g).norm_sq();
    const double bound = (1.0 - static_cast<double>(k) / static_cast<double>(total)) * g.norm_sq();
    update_worst(worst, (err - bound) / std::max(1.0, g.norm_sq()),
                 shape_detail(i, m, n, static_cast<int>(k)));
  }
  return inequality_result("topk_projection_error", worst);
}

// Uniform random k-subsets keep each entry with probability k/(mn).
CheckResult check_randk_mean(RandomSource& rng, std::int64_t draws) {
  const int m = 5, n = 6;
  const std::int64_t k = 7;
  std::vector<Matrix> samples(draws, Matrix(m, n));
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < draws; ++i) {
    RandomSource tr = rng.derive(0xB9).derive(static_cast<std::uint64_t>(i));
    samples[i] = sample_rand_mask(m, n, k, tr).mask;
  }
  Matrix mean(m, n);
  for (const Matrix& s : samples) mean = mean + s;
  scale_inplace(mean, 1.0 / static_cast<double>(draws));
  Matrix var(m, n);
  for (const Matrix& s : samples) {
    const Matrix d = s - mean;
    var = var + hadamard(d, d);
  }
  double agg_var = 0;
  for (std::int64_t i = 0; i < var.size(); ++i) agg_var += var.data()[i];
  agg_var /= static_cast<double>(draws - 1) * static_cast<double>(draws);

  Matrix target(m, n);
  const double p = static_cast<double>(k) / (static_cast<double>(m) * n);
  for (std::int64_t i = 0; i < target.size(); ++i) target.data()[i] = p;
  CheckResult res;
  res.name = "randk_mean_identity";
  res.statistic = (mean - target).norm();
  res.bound = 3.0 * std::sqrt(agg_var) + 1e-12;
  res.pass = res.statistic <= res.bound;
  std::ostringstream ss;
  ss << "frobenius deviation over " << draws << " draws of " << k << "-of-" << m * n << " masks";
  res.detail = ss.str();
  return res;
}

// Expected energy lost by a uniform random k-mask is (1 - k/(mn)).
CheckResult check_randk_error_mean(RandomSource& rng, std::int64_t draws) {
  const int m = 5, n = 6;
  const std::int64_t k = 7;
  RandomSource grow = rng.derive(0xBA);
  const Matrix g = gaussian_matrix(m, n, grow);
  std::vector<double> vals(draws);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < draws; ++i) {
    RandomSource tr = rng.derive(0xBB).derive(static_cast<std::uint64_t>(i));
    const SparseMask mask = sample_rand_mask(m, n, k, tr);
    vals[i] = (hadamard(mask.mask, g) - g).norm_sq();
  }
  MeanAccumulator acc;
  acc.reduce(vals);
  const double target =
      (1.0 - static_cast<double>(k) / (static_cast<double>(m) * n)) * g.norm_sq();
  return mean_result("randk_projection_error_mean", acc.mean, target, acc.se, draws);
}

}  // namespace

Report verify_lemma_suite(RandomSource& rng, std::int64_t trials) {
  if (trials < 1) throw InvalidInput("verify_lemma_suite: trials must be >= 1");
  const std::int64_t draws = 10 * trials;
  Report report;
  report.checks.push_back(check_svd_projection(rng, trials, Side::Left));
  report.checks.push_back(check_svd_projection(rng, trials, Side::Right));
  report.checks.push_back(check_window_anchor(rng, trials));
  report.checks.push_back(check_orthogonal_split(rng, trials));
  report.checks.push_back(check_descent_bound(rng, trials));
  report.checks.push_back(check_stiefel_mean(rng, draws));
  report.checks.push_back(check_stiefel_error_mean(rng, draws));
  report.checks.push_back(check_topk_error(rng, trials));
  report.checks.push_back(check_randk_mean(rng, draws));
  report.checks.push_back(check_randk_error_mean(rng, draws));
  return report;
}

void require_lemmas(RandomSource& rng, std::int64_t trials) {
  const Report report = verify_lemma_suite(rng, trials);
  if (report.all_pass()) return;
  std::ostringstream ss;
  ss << "lemma checks failed:";
  for (const CheckResult& c : report.checks)
    if (!c.pass)
      ss << " [" << c.name << " statistic " << c.statistic << " > bound " << c.bound << "; "
         << c.detail << "]";
  throw LemmaViolation(ss.str());
}

}  // namespace loreopt
