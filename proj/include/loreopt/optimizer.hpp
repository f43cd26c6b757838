#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "loreopt/oracle.hpp"
#include "loreopt/projector.hpp"

namespace loreopt {

enum class UpdateRule { Msgd, AdamW };

// How gradients are sampled: exact, one stochastic sample per step, or a
// B-sample mean at refresh steps only (single sample otherwise).
enum class GradMode { Stochastic, Deterministic, LargeBatchAtRefresh };

enum class ScheduleKind {
  GaLore,        // SVD of the current gradient at each refresh
  GoLore,        // uniform Stiefel draw at each refresh
  GaussianProj,  // gaussian factor at each refresh
  GaSare,        // Top-k mask of the current gradient at each refresh
  GoSare,        // uniform random mask at each refresh
  Hybrid,        // SVD first, switching to Stiefel for the last x% of steps
  FullParam      // identity projector: plain full-parameter training
};

bool schedule_is_sparse(ScheduleKind k);

struct Schedule {
  ScheduleKind kind = ScheduleKind::GaLore;
  double hybrid_percent = 50.0;  // Hybrid only: share of the horizon run on Stiefel draws
};

struct OptConfig {
  UpdateRule rule = UpdateRule::Msgd;
  Schedule schedule;
  GradMode grad_mode = GradMode::Stochastic;
  int batch = 1;        // refresh batch size for LargeBatchAtRefresh
  double eta = 0.01;    // step size, > 0
  int tau = 1;          // refresh period, >= 1
  double beta1 = 0.1;   // weight on the incoming gradient, in (0, 1]
  double beta2 = 0.001; // weight on the incoming squared gradient, in (0, 1]
  double eps = 1e-8;
  double alpha = 1.0;   // scale on the lifted direction
  double weight_decay = 0.0;  // decoupled decay, AdamW only
  bool momentum_projection = true;
  std::int64_t T = 0;   // step horizon; also fixes the Hybrid switch point

  void validate() const;  // throws InvalidInput
};

struct LayerSpec {
  int m = 0;
  int n = 0;
  std::int64_t sub = 0;  // rank r (low-rank schedules) or cardinality k (sparse)
  std::optional<Side> side_override;
};

struct SubspaceState {
  Projector projector;
  Matrix M;  // first-moment state, subspace shape, stored uncorrected
  Matrix V;  // second-moment state, subspace shape, stored uncorrected
  bool initialized = false;
};

struct ModelState {
  std::vector<LayerSpec> layers;
  std::vector<Matrix> weights;
  std::vector<SubspaceState> states;
  std::int64_t t = 0;  // completed steps

  static ModelState init(const GradientOracle& oracle, std::vector<std::int64_t> sub,
                         const std::vector<std::optional<Side>>& side_overrides = {});
};

// Factorized iterate X = W + B*A. The frozen factor holds the projector
// basis, the trainable factor accumulates the in-window updates.
struct FactoredLayer {
  Matrix W;
  Matrix B;  // m-by-r
  Matrix A;  // r-by-n
};

struct FactoredState {
  std::vector<LayerSpec> layers;
  std::vector<FactoredLayer> factors;
  std::vector<SubspaceState> states;
  std::int64_t t = 0;

  static FactoredState init(const GradientOracle& oracle, std::vector<std::int64_t> sub,
                            const std::vector<std::optional<Side>>& side_overrides = {});
  Matrix materialize(std::size_t layer) const;  // W + B*A
  std::vector<Matrix> materialize_all() const;
};

struct StepInfo {
  bool refreshed = false;
  std::string projector_kind;
};

struct TrajectoryPoint {
  std::int64_t t = 0;
  double loss = 0.0;
  double grad_norm_sq = 0.0;
  bool refreshed = false;
  std::string projector_kind;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  bool diverged = false;
  std::int64_t steps_completed = 0;
  double wall_seconds = 0.0;
};

// Builds the projector the schedule asks for at refresh step t.
Projector refresh_subspace(const Matrix& g, const LayerSpec& layer, const OptConfig& cfg,
                           std::int64_t t, RandomSource& rng);

// EMA of the subspace gradient. At a refresh with momentum projection on, the
// carried term is transported through P_newᵀP_old (Left), the transposed
// analogue (Right), or re-masked (sparse); otherwise it is a plain EMA.
Matrix momentum_update(const SubspaceState& state, const Matrix& r, const Projector* prev,
                       const OptConfig& cfg, bool refreshed);

Matrix msgd_direction(const Matrix& m);

struct AdamResult {
  Matrix V;  // updated second moment (uncorrected)
  Matrix N;  // descent direction
};

// Updates V (re-masked for sparse projectors) and forms
// M_hat/(sqrt(V_hat)+eps) with transient bias corrections for step t.
AdamResult adamw_direction(const SubspaceState& state, const Matrix& r, const OptConfig& cfg,
                           std::int64_t t);

// One step over every layer. Aborts with NumericalDivergence if any weight
// leaves [-1e12, 1e12] or turns non-finite.
StepInfo train_step(ModelState& model, const GradientOracle& oracle, const OptConfig& cfg,
                    RandomSource& master);

// Same update expressed on the factored form; matched seeds give the same
// iterates as train_step.
StepInfo factored_train_step(FactoredState& model, const GradientOracle& oracle,
                             const OptConfig& cfg, RandomSource& master);

// Runs cfg.T steps, recording true loss and true squared gradient norm of the
// pre-step iterate every metric_every steps. On divergence the trajectory is
// returned flagged, holding the rows recorded so far.
Trajectory run(ModelState& model, const GradientOracle& oracle, const OptConfig& cfg,
               std::uint64_t seed, std::int64_t metric_every = 1);
Trajectory run_factored(FactoredState& model, const GradientOracle& oracle, const OptConfig& cfg,
                        std::uint64_t seed, std::int64_t metric_every = 1);

// Trajectory CSV: header t,loss,grad_norm_sq,refreshed,projector_kind.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& is);

// Checkpoint: weights plus per-layer subspace state, reloadable bit-exactly.
void write_checkpoint(std::ostream& os, const ModelState& model);
ModelState read_checkpoint(std::istream& is);

const char* schedule_kind_name(ScheduleKind k);

}  // namespace loreopt
