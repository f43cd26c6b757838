#include "loreopt/oracle.hpp"

#include <cmath>
#include <ostream>

#include "loreopt/svd.hpp"

namespace loreopt {

namespace {

double rademacher(RandomSource& rng) { return (rng.next_u64() & 1u) ? 1.0 : -1.0; }

void check_point(const std::vector<Matrix>& x, const std::vector<LayerShape>& shapes,
                 const char* who) {
  if (x.size() != shapes.size()) throw ShapeError(std::string(who) + ": wrong layer count");
  for (std::size_t l = 0; l < x.size(); ++l)
    if (x[l].rows() != shapes[l].m || x[l].cols() != shapes[l].n)
      throw ShapeError(std::string(who) + ": layer shape mismatch");
}

void write_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

void write_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  __builtin_memcpy(&bits, &v, sizeof(bits));
  write_u64(os, bits);
}

}  // namespace

double grad_norm_sq(const std::vector<Matrix>& g) {
  double s = 0.0;
  for (const Matrix& m : g) s += m.norm_sq();
  return s;
}

bool Report::all_pass() const {
  for (const CheckResult& c : checks)
    if (!c.pass) return false;
  return true;
}

// ---------------------------------------------------------------------------
// QuadraticCE

QuadraticCE::QuadraticCE(int n, int r, double sigma, std::uint64_t d_seed)
    : n_(n), r_(r), sigma_param_(sigma) {
  if (n < 2 || r < 1 || r >= n) throw InvalidConstruction("QuadraticCE: need n >= 2, 1 <= r < n");
  if (sigma < 0) throw InvalidConstruction("QuadraticCE: sigma must be non-negative");
  RandomSource rng(d_seed, 0x0ce);
  d_ = gaussian_matrix(n - r, n - r, rng);
}

std::vector<LayerShape> QuadraticCE::shapes() const { return {{n_, n_}}; }

double QuadraticCE::loss(const std::vector<Matrix>& x) const {
  check_point(x, shapes(), "QuadraticCE::loss");
  const Matrix& w = x[0];
  double s = 0.0;
  for (int i = 0; i < n_ - r_; ++i)
    for (int j = 0; j < n_; ++j) s += 0.5 * w(i, j) * w(i, j);
  for (int i = 0; i < n_ - r_; ++i)
    for (int j = 0; j < n_ - r_; ++j) s += d_(i, j) * w(i, j);
  return s;
}

std::vector<Matrix> QuadraticCE::true_grad(const std::vector<Matrix>& x) const {
  check_point(x, shapes(), "QuadraticCE::true_grad");
  const Matrix& w = x[0];
  Matrix g(n_, n_);
  for (int i = 0; i < n_ - r_; ++i)
    for (int j = 0; j < n_; ++j) g(i, j) = w(i, j);
  for (int i = 0; i < n_ - r_; ++i)
    for (int j = 0; j < n_ - r_; ++j) g(i, j) += d_(i, j);
  return {std::move(g)};
}

std::vector<Matrix> QuadraticCE::stoch_grad(const std::vector<Matrix>& x, int batch,
                                            RandomSource& rng) const {
  if (batch < 1) throw InvalidInput("stoch_grad: batch must be >= 1");
  std::vector<Matrix> g = true_grad(x);
  double xi_mean = 0.0;
  for (int b = 0; b < batch; ++b) xi_mean += rademacher(rng);
  xi_mean /= batch;
  for (int i = n_ - r_; i < n_; ++i) g[0](i, i) += xi_mean * sigma_param_;
  return g;
}

double QuadraticCE::sigma() const {
  // E||noise||_F^2 = sigma_param^2 * r: the noise pattern has r unit entries.
  return sigma_param_ * std::sqrt(static_cast<double>(r_));
}

std::optional<double> QuadraticCE::optimum() const { return -0.5 * d_.norm_sq(); }

std::vector<Matrix> QuadraticCE::initial_point() const { return {Matrix(n_, n_)}; }

void QuadraticCE::write_inputs(std::ostream& os) const {
  write_u64(os, static_cast<std::uint64_t>(n_));
  write_u64(os, static_cast<std::uint64_t>(r_));
  write_f64(os, sigma_param_);
  d_.write_binary(os);
}

// ---------------------------------------------------------------------------
// SvdTrap

SvdTrap::SvdTrap(int n, double L, double lambda, double sigma, std::uint64_t seed)
    : n_(n), L_(L), lambda_(lambda), sigma_param_(sigma) {
  if (n < 2) throw InvalidConstruction("SvdTrap: need n >= 2");
  if (L <= 0 || lambda <= 0 || sigma <= 0)
    throw InvalidConstruction("SvdTrap: L, lambda, sigma must be positive");
  sigma_tilde_ = sigma / std::sqrt(0.5 * n * (n - 1));
  if (!(L * lambda < sigma_tilde_))
    throw InvalidConstruction("SvdTrap: need L*lambda < sigma/sqrt(n(n-1)/2), got L*lambda=" +
                              std::to_string(L * lambda) + " vs " + std::to_string(sigma_tilde_));
  RandomSource rng(seed, 0x57ab);
  x0_ = Matrix(n, n);
  x0_(0, 0) = lambda;
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < n; ++j) x0_(i, j) = rng.next_normal();
}

std::vector<LayerShape> SvdTrap::shapes() const { return {{n_, n_}}; }

double SvdTrap::loss(const std::vector<Matrix>& x) const {
  check_point(x, shapes(), "SvdTrap::loss");
  double s = 0.0;
  for (int j = 0; j < n_; ++j) s += x[0](0, j) * x[0](0, j);
  return 0.5 * L_ * s;
}

std::vector<Matrix> SvdTrap::true_grad(const std::vector<Matrix>& x) const {
  check_point(x, shapes(), "SvdTrap::true_grad");
  Matrix g(n_, n_);
  for (int j = 0; j < n_; ++j) g(0, j) = L_ * x[0](0, j);
  return {std::move(g)};
}

std::vector<Matrix> SvdTrap::stoch_grad(const std::vector<Matrix>& x, int batch,
                                        RandomSource& rng) const {
  if (batch < 1) throw InvalidInput("stoch_grad: batch must be >= 1");
  std::vector<Matrix> g = true_grad(x);
  double xi_mean = 0.0;
  for (int b = 0; b < batch; ++b) xi_mean += rademacher(rng);
  xi_mean /= batch;
  for (int j = 1; j < n_; ++j)
    g[0](j, j) += xi_mean * sigma_tilde_ * std::sqrt(static_cast<double>(j));
  return g;
}

std::vector<Matrix> SvdTrap::initial_point() const { return {x0_}; }

void SvdTrap::write_inputs(std::ostream& os) const {
  write_u64(os, static_cast<std::uint64_t>(n_));
  write_f64(os, L_);
  write_f64(os, lambda_);
  write_f64(os, sigma_param_);
  x0_.write_binary(os);
}

// ---------------------------------------------------------------------------
// SparseTrap

SparseTrap::SparseTrap(int n, double L, double lambda, double sigma, std::uint64_t seed)
    : n_(n), L_(L), lambda_(lambda), sigma_param_(sigma) {
  if (n < 2) throw InvalidConstruction("SparseTrap: need n >= 2");
  if (L <= 0 || lambda <= 0 || sigma <= 0)
    throw InvalidConstruction("SparseTrap: L, lambda, sigma must be positive");
  const double cells = static_cast<double>(n) * n;
  sigma_tilde_ = sigma / std::sqrt(0.5 * cells * (cells - 1.0));
  if (!(L * lambda < sigma_tilde_))
    throw InvalidConstruction("SparseTrap: need L*lambda < sigma/sqrt(n^2(n^2-1)/2), got L*lambda=" +
                              std::to_string(L * lambda) + " vs " + std::to_string(sigma_tilde_));
  noise_pattern_ = Matrix(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      noise_pattern_(i, j) = std::sqrt(static_cast<double>(j) * n + i);
  RandomSource rng(seed, 0x5a5e);
  x0_ = Matrix(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) x0_(i, j) = rng.next_normal();
  x0_(0, 0) = lambda;
}

std::vector<LayerShape> SparseTrap::shapes() const { return {{n_, n_}}; }

double SparseTrap::loss(const std::vector<Matrix>& x) const {
  check_point(x, shapes(), "SparseTrap::loss");
  const double v = x[0](0, 0);
  return 0.5 * L_ * v * v;
}

std::vector<Matrix> SparseTrap::true_grad(const std::vector<Matrix>& x) const {
  check_point(x, shapes(), "SparseTrap::true_grad");
  Matrix g(n_, n_);
  g(0, 0) = L_ * x[0](0, 0);
  return {std::move(g)};
}

std::vector<Matrix> SparseTrap::stoch_grad(const std::vector<Matrix>& x, int batch,
                                           RandomSource& rng) const {
  if (batch < 1) throw InvalidInput("stoch_grad: batch must be >= 1");
  std::vector<Matrix> g = true_grad(x);
  double xi_mean = 0.0;
  for (int b = 0; b < batch; ++b) xi_mean += rademacher(rng);
  xi_mean /= batch;
  axpy(g[0], xi_mean * sigma_tilde_, noise_pattern_);
  return g;
}

std::vector<Matrix> SparseTrap::initial_point() const { return {x0_}; }

void SparseTrap::write_inputs(std::ostream& os) const {
  write_u64(os, static_cast<std::uint64_t>(n_));
  write_f64(os, L_);
  write_f64(os, lambda_);
  write_f64(os, sigma_param_);
  x0_.write_binary(os);
}

// ---------------------------------------------------------------------------
// RandomQuadratic

RandomQuadratic::RandomQuadratic(std::vector<LayerShape> dims, double L, double sigma,
                                 double kappa, std::uint64_t seed)
    : dims_(std::move(dims)), L_(L), sigma_param_(sigma), kappa_(kappa) {
  if (dims_.empty()) throw InvalidConstruction("RandomQuadratic: need at least one layer");
  if (L <= 0 || sigma < 0 || kappa < 1)
    throw InvalidConstruction("RandomQuadratic: need L > 0, sigma >= 0, kappa >= 1");
  RandomSource rng(seed, 0xc0de);
  for (const LayerShape& s : dims_) {
    if (s.m < 1 || s.n < 1) throw InvalidConstruction("RandomQuadratic: bad layer shape");
    total_elems_ += static_cast<std::int64_t>(s.m) * s.n;
    const int m = s.m;
    // Orthogonal basis from the polar factor of a gaussian square matrix.
    Matrix o = orthonormalize(gaussian_matrix(m, m, rng));
    Matrix a(m, m);
    // A = O diag(ev) Oᵀ with eigenvalues from L/kappa to L, so the top one is
    // exactly L and A is positive definite.
    std::vector<double> ev(m);
    for (int i = 0; i < m; ++i)
      ev[i] = m == 1 ? L : L / kappa + (L - L / kappa) * i / (m - 1);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        double v = 0.0;
        for (int k = 0; k < m; ++k) v += o(i, k) * ev[k] * o(j, k);
        a(i, j) = v;
      }
    Matrix b = gaussian_matrix(m, s.n, rng);
    // X* = -A^{-1}B via the eigenbasis.
    Matrix ob = matmul_at_b(o, b);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < s.n; ++j) ob(i, j) /= ev[i];
    Matrix xs = -1.0 * (o * ob);
    a_.push_back(std::move(a));
    b_.push_back(std::move(b));
    x_star_.push_back(std::move(xs));
  }
  f_star_ = loss(x_star_);
}

double RandomQuadratic::loss(const std::vector<Matrix>& x) const {
  check_point(x, dims_, "RandomQuadratic::loss");
  double s = 0.0;
  for (std::size_t l = 0; l < dims_.size(); ++l) {
    const Matrix ax = a_[l] * x[l];
    s += 0.5 * x[l].dot(ax) + b_[l].dot(x[l]);
  }
  return s;
}

std::vector<Matrix> RandomQuadratic::true_grad(const std::vector<Matrix>& x) const {
  check_point(x, dims_, "RandomQuadratic::true_grad");
  std::vector<Matrix> g;
  g.reserve(dims_.size());
  for (std::size_t l = 0; l < dims_.size(); ++l) g.push_back(a_[l] * x[l] + b_[l]);
  return g;
}

std::vector<Matrix> RandomQuadratic::stoch_grad(const std::vector<Matrix>& x, int batch,
                                                RandomSource& rng) const {
  if (batch < 1) throw InvalidInput("stoch_grad: batch must be >= 1");
  std::vector<Matrix> g = true_grad(x);
  // Entry stddev sigma/sqrt(total elements) makes E||noise||_F^2 = sigma^2
  // over the whole model per sample; averaging batch samples divides it by B.
  const double entry_sd = sigma_param_ / std::sqrt(static_cast<double>(total_elems_));
  for (int b = 0; b < batch; ++b)
    for (std::size_t l = 0; l < g.size(); ++l) {
      Matrix z = gaussian_matrix(dims_[l].m, dims_[l].n, rng, entry_sd);
      axpy(g[l], 1.0 / batch, z);
    }
  return g;
}

std::vector<Matrix> RandomQuadratic::initial_point() const {
  std::vector<Matrix> x;
  x.reserve(dims_.size());
  for (const LayerShape& s : dims_) x.emplace_back(s.m, s.n);
  return x;
}

void RandomQuadratic::write_inputs(std::ostream& os) const {
  write_u64(os, dims_.size());
  write_f64(os, L_);
  write_f64(os, sigma_param_);
  write_f64(os, kappa_);
  for (std::size_t l = 0; l < dims_.size(); ++l) {
    a_[l].write_binary(os);
    b_[l].write_binary(os);
  }
}

// ---------------------------------------------------------------------------
// verify_oracle

namespace {

// Central finite differences of the loss, entry by entry.
std::vector<Matrix> fd_grad(const GradientOracle& oracle, const std::vector<Matrix>& x,
                            double h) {
  std::vector<Matrix> g;
  std::vector<Matrix> probe = x;
  for (std::size_t l = 0; l < x.size(); ++l) {
    Matrix gl(x[l].rows(), x[l].cols());
    for (int i = 0; i < x[l].rows(); ++i)
      for (int j = 0; j < x[l].cols(); ++j) {
        const double orig = probe[l](i, j);
        probe[l](i, j) = orig + h;
        const double fp = oracle.loss(probe);
        probe[l](i, j) = orig - h;
        const double fm = oracle.loss(probe);
        probe[l](i, j) = orig;
        gl(i, j) = (fp - fm) / (2.0 * h);
      }
    g.push_back(std::move(gl));
  }
  return g;
}

double diff_norm(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  double s = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) s += (a[l] - b[l]).norm_sq();
  return std::sqrt(s);
}

}  // namespace

Report verify_oracle(const GradientOracle& oracle, int trials, RandomSource& rng) {
  if (trials < 10) throw InvalidInput("verify_oracle: need at least 10 trials");
  Report report;
  const std::vector<LayerShape> shapes = oracle.shapes();

  // Finite-difference agreement at 10 random points.
  double worst_fd = 0.0;
  for (int p = 0; p < 10; ++p) {
    std::vector<Matrix> x;
    for (const LayerShape& s : shapes) x.push_back(gaussian_matrix(s.m, s.n, rng));
    const std::vector<Matrix> g = oracle.true_grad(x);
    const std::vector<Matrix> fd = fd_grad(oracle, x, 1e-5);
    const double rel = diff_norm(g, fd) / std::max(1.0, std::sqrt(grad_norm_sq(g)));
    worst_fd = std::max(worst_fd, rel);
  }
  report.checks.push_back({"finite_difference_rel_error", worst_fd, 1e-5, worst_fd <= 1e-5,
                           oracle.name()});

  // Stochastic draws at a fixed random point.
  std::vector<Matrix> x;
  for (const LayerShape& s : shapes) x.push_back(gaussian_matrix(s.m, s.n, rng));
  const std::vector<Matrix> g = oracle.true_grad(x);

  // Projection of the deviation onto a fixed random unit direction: mean 0
  // under unbiasedness; |t| <= 3 at `trials` samples.
  std::vector<Matrix> u;
  double un = 0.0;
  for (const LayerShape& s : shapes) {
    u.push_back(gaussian_matrix(s.m, s.n, rng));
    un += u.back().norm_sq();
  }
  un = std::sqrt(un);

  std::vector<double> proj(static_cast<std::size_t>(trials));
  std::vector<double> power(static_cast<std::size_t>(trials));
  std::vector<double> power4(static_cast<std::size_t>(trials));
  std::vector<Matrix> mean_dev;
  for (const LayerShape& s : shapes) mean_dev.emplace_back(s.m, s.n);

  for (int tIdx = 0; tIdx < trials; ++tIdx) {
    const std::vector<Matrix> gs = oracle.stoch_grad(x, 1, rng);
    double dot = 0.0, nsq = 0.0;
    for (std::size_t l = 0; l < gs.size(); ++l) {
      const Matrix dev = gs[l] - g[l];
      dot += dev.dot(u[l]);
      nsq += dev.norm_sq();
      axpy(mean_dev[l], 1.0 / trials, dev);
    }
    proj[static_cast<std::size_t>(tIdx)] = dot / un;
    power[static_cast<std::size_t>(tIdx)] = nsq;

    const std::vector<Matrix> gs4 = oracle.stoch_grad(x, 4, rng);
    double nsq4 = 0.0;
    for (std::size_t l = 0; l < gs4.size(); ++l) nsq4 += (gs4[l] - g[l]).norm_sq();
    power4[static_cast<std::size_t>(tIdx)] = nsq4;
  }

  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double d : v) s += d;
    return s / static_cast<double>(v.size());
  };
  auto se_of = [&](const std::vector<double>& v, double mu) {
    double s = 0.0;
    for (double d : v) s += (d - mu) * (d - mu);
    return std::sqrt(s / (static_cast<double>(v.size()) - 1.0) / static_cast<double>(v.size()));
  };

  const double proj_mean = mean_of(proj);
  const double proj_se = se_of(proj, proj_mean);
  const double tstat = proj_se > 0 ? std::abs(proj_mean) / proj_se : std::abs(proj_mean) / 1e-300;
  report.checks.push_back({"unbiased_projection_tstat", tstat, 3.0, tstat <= 3.0, oracle.name()});

  double mean_dev_norm = 0.0;
  for (const Matrix& m : mean_dev) mean_dev_norm += m.norm_sq();
  mean_dev_norm = std::sqrt(mean_dev_norm);
  // ||mean deviation|| concentrates below sqrt(E||dev||^2 / trials); 3x slack.
  const double mean_bound =
      3.0 * std::sqrt(std::max(mean_of(power), 1e-300) / static_cast<double>(trials));
  report.checks.push_back({"unbiased_mean_norm", mean_dev_norm, mean_bound,
                           mean_dev_norm <= mean_bound, oracle.name()});

  const double s2 = oracle.sigma() * oracle.sigma();
  const double p1 = mean_of(power);
  const double p1_bound = s2 + 3.0 * se_of(power, p1) + 1e-9 * s2;
  report.checks.push_back({"noise_power_batch1", p1, p1_bound, p1 <= p1_bound, oracle.name()});

  const double p4 = mean_of(power4);
  const double p4_bound = s2 / 4.0 + 3.0 * se_of(power4, p4) + 1e-9 * s2;
  report.checks.push_back({"noise_power_batch4", p4, p4_bound, p4 <= p4_bound, oracle.name()});

  return report;
}

void require_oracle(const GradientOracle& oracle, int trials, RandomSource& rng) {
  const Report r = verify_oracle(oracle, trials, rng);
  for (const CheckResult& c : r.checks)
    if (!c.pass)
      throw OracleContractViolation(oracle.name() + ": " + c.name + " statistic " +
                                    std::to_string(c.statistic) + " exceeds bound " +
                                    std::to_string(c.bound));
}

}  // namespace loreopt
