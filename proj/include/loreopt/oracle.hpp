#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "loreopt/matrix.hpp"
#include "loreopt/rng.hpp"

namespace loreopt {

struct LayerShape {
  int m = 0;
  int n = 0;
};

// First-order oracle over a list of weight matrices. stoch_grad returns the
// mean of `batch` i.i.d. stochastic gradients with E[g_hat] = true_grad and
// E||g_hat - g||_F^2 <= sigma()^2 / batch, summed over layers; one shared
// noise draw per sample covers all layers.
class GradientOracle {
 public:
  virtual ~GradientOracle() = default;

  virtual std::vector<LayerShape> shapes() const = 0;
  virtual double loss(const std::vector<Matrix>& x) const = 0;
  virtual std::vector<Matrix> true_grad(const std::vector<Matrix>& x) const = 0;
  virtual std::vector<Matrix> stoch_grad(const std::vector<Matrix>& x, int batch,
                                         RandomSource& rng) const = 0;
  virtual double sigma() const = 0;       // noise level actually constructed
  virtual double smoothness() const = 0;  // gradient Lipschitz constant
  virtual std::optional<double> optimum() const = 0;
  virtual std::vector<Matrix> initial_point() const = 0;
  virtual std::string name() const = 0;
  // Defining data (problem matrices, parameters) for content hashing.
  virtual void write_inputs(std::ostream& os) const = 0;
};

double grad_norm_sq(const std::vector<Matrix>& g);

// f(X) = 0.5||X_top||_F^2 + <D-block, X> on one n-by-n layer: the top n-r
// rows carry the objective, stochastic noise sits only on the bottom-right
// r-by-r identity block scaled by xi*sigma with Rademacher xi. Minimum
// -0.5||D||_F^2 is reached at X_topleft = -D. SVD-based projection locks onto
// the noise block once the true gradient falls below the noise scale.
class QuadraticCE : public GradientOracle {
 public:
  QuadraticCE(int n, int r, double sigma, std::uint64_t d_seed = 42);

  std::vector<LayerShape> shapes() const override;
  double loss(const std::vector<Matrix>& x) const override;
  std::vector<Matrix> true_grad(const std::vector<Matrix>& x) const override;
  std::vector<Matrix> stoch_grad(const std::vector<Matrix>& x, int batch,
                                 RandomSource& rng) const override;
  double sigma() const override;
  double smoothness() const override { return 1.0; }
  std::optional<double> optimum() const override;
  std::vector<Matrix> initial_point() const override;
  std::string name() const override { return "quadratic_ce"; }
  void write_inputs(std::ostream& os) const override;

  const Matrix& d_block() const { return d_; }

 private:
  int n_, r_;
  double sigma_param_;
  Matrix d_;  // (n-r)-by-(n-r)
};

// f(X) = (L/2)||first row of X||^2 on one n-by-n layer, with noise
// xi*sigma_tilde*diag(0, 1, sqrt(2), ..., sqrt(n-1)). When L*lambda <
// sigma_tilde, every noisy gradient's top singular directions avoid row one,
// so SVD-fit subspaces never touch the only coordinates that matter and
// ||grad f||^2 stays at (L*lambda)^2.
class SvdTrap : public GradientOracle {
 public:
  SvdTrap(int n, double L, double lambda, double sigma, std::uint64_t seed = 42);

  std::vector<LayerShape> shapes() const override;
  double loss(const std::vector<Matrix>& x) const override;
  std::vector<Matrix> true_grad(const std::vector<Matrix>& x) const override;
  std::vector<Matrix> stoch_grad(const std::vector<Matrix>& x, int batch,
                                 RandomSource& rng) const override;
  double sigma() const override { return sigma_param_; }
  double smoothness() const override { return L_; }
  std::optional<double> optimum() const override { return 0.0; }
  std::vector<Matrix> initial_point() const override;
  std::string name() const override { return "svd_trap"; }
  void write_inputs(std::ostream& os) const override;

  double sigma_tilde() const { return sigma_tilde_; }

 private:
  int n_;
  double L_, lambda_, sigma_param_, sigma_tilde_;
  Matrix x0_;
};

// f(X) = (L/2) X_{1,1}^2 on one n-by-n layer, with noise xi*sigma_tilde*Q
// where Q_ij = sqrt(column-major rank of (i,j)). Entry (1,1) carries zero
// noise and every other entry carries at least sigma_tilde, so when
// L*lambda < sigma_tilde a Top-k mask never selects (1,1).
class SparseTrap : public GradientOracle {
 public:
  SparseTrap(int n, double L, double lambda, double sigma, std::uint64_t seed = 42);

  std::vector<LayerShape> shapes() const override;
  double loss(const std::vector<Matrix>& x) const override;
  std::vector<Matrix> true_grad(const std::vector<Matrix>& x) const override;
  std::vector<Matrix> stoch_grad(const std::vector<Matrix>& x, int batch,
                                 RandomSource& rng) const override;
  double sigma() const override { return sigma_param_; }
  double smoothness() const override { return L_; }
  std::optional<double> optimum() const override { return 0.0; }
  std::vector<Matrix> initial_point() const override;
  std::string name() const override { return "sparse_trap"; }
  void write_inputs(std::ostream& os) const override;

  double sigma_tilde() const { return sigma_tilde_; }

 private:
  int n_;
  double L_, lambda_, sigma_param_, sigma_tilde_;
  Matrix noise_pattern_;  // Q
  Matrix x0_;
};

// Per-layer strongly convex quadratic 0.5<X, A_l X> + <B_l, X> with
// A_l = O diag(lambda) Oᵀ, eigenvalues spread over [L/kappa, L], gaussian
// gradient noise with E||noise||_F^2 = sigma^2 across layers, and closed-form
// optimum X_l* = -A_l^{-1} B_l. Known L for rate checks and descent bounds.
class RandomQuadratic : public GradientOracle {
 public:
  RandomQuadratic(std::vector<LayerShape> dims, double L, double sigma, double kappa,
                  std::uint64_t seed);

  std::vector<LayerShape> shapes() const override { return dims_; }
  double loss(const std::vector<Matrix>& x) const override;
  std::vector<Matrix> true_grad(const std::vector<Matrix>& x) const override;
  std::vector<Matrix> stoch_grad(const std::vector<Matrix>& x, int batch,
                                 RandomSource& rng) const override;
  double sigma() const override { return sigma_param_; }
  double smoothness() const override { return L_; }
  std::optional<double> optimum() const override { return f_star_; }
  std::vector<Matrix> initial_point() const override;
  std::string name() const override { return "random_quadratic"; }
  void write_inputs(std::ostream& os) const override;

 private:
  std::vector<LayerShape> dims_;
  double L_, sigma_param_, kappa_;
  std::vector<Matrix> a_;       // curvature operators, one per layer
  std::vector<Matrix> b_;       // linear terms
  std::vector<Matrix> x_star_;  // -A^{-1}B
  double f_star_ = 0.0;
  std::int64_t total_elems_ = 0;
};

struct CheckResult {
  std::string name;
  double statistic = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::string detail;
};

struct Report {
  std::vector<CheckResult> checks;
  bool all_pass() const;
};

// Monte-Carlo contract checks: finite-difference gradient agreement,
// unbiasedness of stoch_grad within 3 standard errors, empirical noise power
// at batch 1 and 4 within the declared sigma()^2 / batch budget. Throws
// nothing; require_oracle() upgrades failures to OracleContractViolation.
Report verify_oracle(const GradientOracle& oracle, int trials, RandomSource& rng);
void require_oracle(const GradientOracle& oracle, int trials, RandomSource& rng);

}  // namespace loreopt
