// End-to-end acceptance checks. Each criterion prints exactly one PASS/FAIL
// line with the measured evidence; the exit code is the number of failures.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "loreopt/errors.hpp"
#include "loreopt/optimizer.hpp"
#include "loreopt/oracle.hpp"
#include "loreopt/rng.hpp"
#include "loreopt/theory.hpp"

using namespace loreopt;

namespace {

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), f, a, b);
  return buf;
}

double mean_grad_sq(const Trajectory& traj) {
  double s = 0.0;
  for (const TrajectoryPoint& p : traj.points) s += p.grad_norm_sq;
  return s / static_cast<double>(traj.points.size());
}

double mean_grad_sq_last_tenth(const Trajectory& traj) {
  const std::int64_t rows = static_cast<std::int64_t>(traj.points.size());
  const std::int64_t tail = (rows + 9) / 10;
  double s = 0.0;
  for (std::int64_t i = rows - tail; i < rows; ++i)
    s += traj.points[static_cast<std::size_t>(i)].grad_norm_sq;
  return s / static_cast<double>(tail);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// --------------------------------------------------------------------------
// Criteria 1 and 2: the SVD / Top-k selection traps hold exactly under every
// optimizer variant, so the true gradient norm is pinned at L^2 lambda^2.

struct TrapSweepResult {
  int combos = 0;
  double worst_rel = 0.0;
};

TrapSweepResult sweep_trap(const GradientOracle& oracle, ScheduleKind kind, double target) {
  TrapSweepResult out;
  for (const UpdateRule rule : {UpdateRule::Msgd, UpdateRule::AdamW})
    for (const bool mp : {true, false})
      for (const int tau : {1, 10})
        for (const std::int64_t sub : {1, 4})
          for (const double eta : {1e-3, 1e-1}) {
            OptConfig cfg;
            cfg.rule = rule;
            cfg.schedule.kind = kind;
            cfg.grad_mode = GradMode::Stochastic;
            cfg.eta = eta;
            cfg.tau = tau;
            cfg.beta1 = rule == UpdateRule::Msgd ? 0.5 : 0.1;
            cfg.beta2 = 0.01;
            cfg.momentum_projection = mp;
            cfg.T = 2001;
            ModelState model = ModelState::init(oracle, {sub});
            const Trajectory traj = run(model, oracle, cfg, 1);
            if (traj.diverged || traj.points.size() != 2001)
              throw NumericalDivergence("trap sweep run did not complete");
            for (const TrajectoryPoint& p : traj.points)
              out.worst_rel =
                  std::max(out.worst_rel, std::abs(p.grad_norm_sq - target) / target);
            ++out.combos;
          }
  return out;
}

bool criterion_svd_trap(std::string& note) {
  SvdTrap oracle(8, 1.0, 0.1, 1.0);
  const double target = 1.0 * 1.0 * 0.1 * 0.1;
  const TrapSweepResult r = sweep_trap(oracle, ScheduleKind::GaLore, target);
  note = "grad-norm^2 pinned at 0.01 across " + std::to_string(r.combos) +
         " configs x 2001 steps" + fmt(", worst rel dev %.3g", r.worst_rel);
  return r.combos == 32 && r.worst_rel <= 1e-9;
}

bool criterion_sparse_trap(std::string& note) {
  SparseTrap oracle(8, 1.0, 0.1, 9.0);
  const double target = 1.0 * 1.0 * 0.1 * 0.1;
  const TrapSweepResult r = sweep_trap(oracle, ScheduleKind::GaSare, target);
  note = "grad-norm^2 pinned at 0.01 across " + std::to_string(r.combos) +
         " configs x 2001 steps" + fmt(", worst rel dev %.3g", r.worst_rel);
  return r.combos == 32 && r.worst_rel <= 1e-9;
}

// --------------------------------------------------------------------------
// Criterion 3: on the noisy quadratic, the SVD schedule stalls while the
// hybrid, refresh-batched, and full-parameter runs keep converging.

struct Fig1Algo {
  const char* label;
  ScheduleKind kind;
  GradMode mode;
  bool converges;
};

// Convergence thresholds pinned by pilot runs at this exact configuration:
// worst converging final gap observed was 0.0284 (hybrid/adamw), the svd
// schedule stalls at a gap of about 1.3, so 0.1 sits 3.5x above the former
// and 13x below the latter.
constexpr double kConvergedThresholdMsgd = 0.1;
constexpr double kConvergedThresholdAdamW = 0.1;

bool criterion_noisy_quadratic(std::string& note) {
  const QuadraticCE oracle(16, 4, 1.0);
  const double f_star = *oracle.optimum();
  const std::int64_t T = 20000;

  const Fig1Algo algos[] = {
      {"galore", ScheduleKind::GaLore, GradMode::Stochastic, false},
      {"hybrid", ScheduleKind::Hybrid, GradMode::Stochastic, true},
      {"large-batch", ScheduleKind::GaLore, GradMode::LargeBatchAtRefresh, true},
      {"full", ScheduleKind::FullParam, GradMode::Stochastic, true},
  };

  double worst_converged_gap = 0.0;
  double worst_ratio = 1e300;
  for (const UpdateRule rule : {UpdateRule::Msgd, UpdateRule::AdamW}) {
    const double threshold =
        rule == UpdateRule::Msgd ? kConvergedThresholdMsgd : kConvergedThresholdAdamW;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      double galore_tail = 0.0, hybrid_tail = 0.0;
      for (const Fig1Algo& algo : algos) {
        OptConfig cfg;
        cfg.rule = rule;
        cfg.schedule.kind = algo.kind;
        cfg.schedule.hybrid_percent = 50.0;
        cfg.grad_mode = algo.mode;
        cfg.batch = 256;
        cfg.tau = 200;
        cfg.T = T;
        if (rule == UpdateRule::Msgd) {
          cfg.eta = 0.01;
          cfg.beta1 = 0.1;
        } else {
          cfg.eta = 0.005;
          cfg.beta1 = 0.1;
          cfg.beta2 = 0.001;
        }
        ModelState model = ModelState::init(oracle, {4});
        const Trajectory traj = run(model, oracle, cfg, seed);
        if (traj.diverged) {
          note = std::string(algo.label) + " diverged";
          return false;
        }
        const double final_gap = oracle.loss(model.weights) - f_star;
        const double tail = mean_grad_sq_last_tenth(traj);
        if (algo.converges) {
          worst_converged_gap = std::max(worst_converged_gap, final_gap);
          if (final_gap > threshold) {
            note = std::string(algo.label) +
                   (rule == UpdateRule::Msgd ? "/msgd" : "/adamw") +
                   fmt(" final gap %.4g > threshold %.3g", final_gap, threshold);
            return false;
          }
        }
        if (algo.kind == ScheduleKind::GaLore && algo.mode == GradMode::Stochastic)
          galore_tail = tail;
        if (algo.kind == ScheduleKind::Hybrid) hybrid_tail = tail;
      }
      const double ratio = galore_tail / hybrid_tail;
      worst_ratio = std::min(worst_ratio, ratio);
      if (ratio < 10.0) {
        note = fmt("stall/recovery tail grad ratio %.3g < 10", ratio) +
               (rule == UpdateRule::Msgd ? " (msgd" : " (adamw") +
               " seed " + std::to_string(seed) + ")";
        return false;
      }
    }
  }
  note = fmt("converging runs gap <= %.3g", worst_converged_gap) +
         fmt(" (thresholds %.3g msgd", kConvergedThresholdMsgd) +
         fmt(" / %.3g adamw), stall ratio >= %.3g", kConvergedThresholdAdamW, worst_ratio) +
         " across 5 seeds x 2 rules";
  return true;
}

// --------------------------------------------------------------------------
// Criterion 4: the inequality and expectation identities behind the rates.

bool criterion_lemma_suite(std::string& note) {
  RandomSource rng(2024);
  const Report rep = verify_lemma_suite(rng, 1000);
  int failed = 0;
  for (const CheckResult& c : rep.checks)
    if (!c.pass) ++failed;
  note = std::to_string(rep.checks.size()) + " identity/inequality checks at 1000 trials, " +
         std::to_string(failed) + " violations";
  if (failed > 0) {
    for (const CheckResult& c : rep.checks)
      if (!c.pass) note += "; " + c.name + " " + c.detail;
  }
  return failed == 0;
}

// --------------------------------------------------------------------------
// Criterion 5: the factored engine tracks the direct engine step for step.

bool criterion_engine_equivalence(std::string& note) {
  RandomQuadratic oracle({{8, 6}, {6, 8}}, 2.0, 0.1, 10.0, 71);
  double worst = 0.0;
  int combos = 0;
  for (const ScheduleKind kind : {ScheduleKind::GaLore, ScheduleKind::GoLore})
    for (const UpdateRule rule : {UpdateRule::Msgd, UpdateRule::AdamW})
      for (const bool mp : {true, false}) {
        OptConfig cfg;
        cfg.rule = rule;
        cfg.schedule.kind = kind;
        cfg.grad_mode = GradMode::Stochastic;
        cfg.tau = 20;
        cfg.momentum_projection = mp;
        if (rule == UpdateRule::Msgd) {
          cfg.eta = 0.01;
          cfg.beta1 = 0.3;
        } else {
          cfg.eta = 0.004;
          cfg.beta1 = 0.1;
          cfg.beta2 = 0.01;
          cfg.weight_decay = 0.01;
        }
        ModelState ref = ModelState::init(oracle, {3, 3});
        FactoredState fac = FactoredState::init(oracle, {3, 3});
        RandomSource master_a(400 + static_cast<std::uint64_t>(combos));
        RandomSource master_b(400 + static_cast<std::uint64_t>(combos));
        for (int t = 0; t < 500; ++t) {
          train_step(ref, oracle, cfg, master_a);
          factored_train_step(fac, oracle, cfg, master_b);
        }
        const std::vector<Matrix> x = fac.materialize_all();
        for (std::size_t l = 0; l < x.size(); ++l)
          worst = std::max(worst, (x[l] - ref.weights[l]).max_abs());
        ++combos;
      }
  note = fmt("max-entry gap %.3g after 500 steps", worst) + " across " +
         std::to_string(combos) + " configs";
  return combos == 8 && worst <= 1e-8;
}

// --------------------------------------------------------------------------
// Criterion 6: longer horizons shrink the running mean of the gradient norm
// at the theorem-prescribed hyperparameters.

double horizon_mean(const GradientOracle& oracle, const HparamBundle& h, GradMode mode,
                    std::int64_t T, std::uint64_t seed) {
  OptConfig cfg;
  cfg.rule = UpdateRule::Msgd;
  cfg.schedule.kind = mode == GradMode::Deterministic ? ScheduleKind::GaLore : ScheduleKind::GoLore;
  cfg.grad_mode = mode;
  cfg.eta = h.eta;
  cfg.tau = static_cast<int>(h.tau);
  cfg.beta1 = h.beta1;
  cfg.T = T;
  ModelState model = ModelState::init(oracle, {4});
  const Trajectory traj = run(model, oracle, cfg, seed);
  if (traj.diverged) throw NumericalDivergence("rate-sanity run diverged");
  return mean_grad_sq(traj);
}

bool criterion_rate_sanity(std::string& note) {
  std::vector<double> det_ratios, rnd_ratios;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    // exact gradients: O(1/T) means a 4x horizon at most halves the mean
    {
      RandomQuadratic oracle({{8, 8}}, 1.0, 0.0, 10.0, 100 + s);
      ProblemConstants c;
      c.L = oracle.smoothness();
      c.Delta = oracle.loss(oracle.initial_point()) - *oracle.optimum();
      c.sigma = 0.0;
      c.delta_lower = 0.5;  // rank 4 of min-dim 8
      const std::int64_t T1 = 16000;
      c.T = T1;
      const HparamBundle h1 = hparams_deterministic(c);
      c.T = 4 * T1;
      const HparamBundle h4 = hparams_deterministic(c);
      const double m1 = horizon_mean(oracle, h1, GradMode::Deterministic, T1, s);
      const double m4 = horizon_mean(oracle, h4, GradMode::Deterministic, 4 * T1, s);
      det_ratios.push_back(m4 / m1);
    }
    // single-sample noise: O(1/sqrt(T)) means a 4x horizon at most 0.8x
    {
      RandomQuadratic oracle({{8, 8}}, 1.0, 0.5, 10.0, 200 + s);
      ProblemConstants c;
      c.L = oracle.smoothness();
      c.Delta = oracle.loss(oracle.initial_point()) - *oracle.optimum();
      c.sigma = oracle.sigma();
      c.delta_lower = 0.5;
      const std::int64_t T1 = 40000;
      c.T = T1;
      const HparamBundle h1 = hparams_golore(c);
      c.T = 4 * T1;
      const HparamBundle h4 = hparams_golore(c);
      const double m1 = horizon_mean(oracle, h1, GradMode::Stochastic, T1, s);
      const double m4 = horizon_mean(oracle, h4, GradMode::Stochastic, 4 * T1, s);
      rnd_ratios.push_back(m4 / m1);
    }
  }
  const double det_med = median(det_ratios);
  const double rnd_med = median(rnd_ratios);
  note = fmt("median mean-grad^2 ratio at 4x horizon: %.3g exact (<= 0.5), %.3g noisy (<= 0.8)",
             det_med, rnd_med);
  return det_med <= 0.5 && rnd_med <= 0.8;
}

// --------------------------------------------------------------------------
// Criterion 7: per-step cost accounting against independently typed formulas.

bool criterion_cost_model(std::string& note) {
  const CostBreakdown g_orig = cost_model(4, 8, 2, 1, Impl::Original);
  const CostBreakdown g_lite = cost_model(4, 8, 2, 1, Impl::ReloraLike);
  if (g_orig.memory != 60 || g_orig.computation != 560 || g_lite.memory != 78 ||
      g_lite.computation != 336) {
    note = "worked 4x8 example mismatch";
    return false;
  }
  RandomSource rng(97);
  for (int trial = 0; trial < 20; ++trial) {
    const long long m = 1 + static_cast<long long>(rng.next_below(64));
    const long long n = m + static_cast<long long>(rng.next_below(64));
    const long long r = static_cast<long long>(rng.next_below(static_cast<std::uint64_t>(m + 1)));
    const long long b = 1 + static_cast<long long>(rng.next_below(16));
    const CostBreakdown o = cost_model(m, n, r, b, Impl::Original);
    const CostBreakdown l = cost_model(m, n, r, b, Impl::ReloraLike);
    const bool ok = o.memory == m * n + r * m + r * n + b * m &&
                    o.computation == 6 * b * m * n + 4 * r * m * n + 2 * m * n + 3 * r * n &&
                    l.memory == m * n + r * m + 2 * r * n + b * m + b * r &&
                    l.computation == 4 * b * m * n + 4 * b * r * m + 6 * b * r * n + 5 * r * n;
    if (!ok) {
      note = "tuple (" + std::to_string(m) + "," + std::to_string(n) + "," + std::to_string(r) +
             "," + std::to_string(b) + ") disagrees with the typed polynomials";
      return false;
    }
  }
  note = "worked example plus 20 random tuples match the typed polynomials";
  return true;
}

// --------------------------------------------------------------------------
// Criterion 8: every built-in oracle honors its stochastic-gradient contract.

bool criterion_oracle_contracts(std::string& note) {
  const QuadraticCE a(16, 4, 1.0);
  const SvdTrap b(8, 1.0, 0.1, 1.0);
  const SparseTrap c(4, 1.0, 0.1, 2.0);
  const RandomQuadratic d({{6, 5}, {4, 8}}, 2.0, 0.5, 10.0, 7);
  const GradientOracle* oracles[] = {&a, &b, &c, &d};
  RandomSource rng(2024);
  int checks = 0, failed = 0;
  std::string detail;
  for (std::size_t i = 0; i < 4; ++i) {
    RandomSource sub = rng.derive(i + 1);
    const Report rep = verify_oracle(*oracles[i], 1000, sub);
    for (const CheckResult& chk : rep.checks) {
      ++checks;
      if (!chk.pass) {
        ++failed;
        detail += "; " + oracles[i]->name() + "/" + chk.name + " " + chk.detail;
      }
    }
  }
  note = std::to_string(checks) + " contract checks over 4 oracles at 1000 trials, " +
         std::to_string(failed) + " violations" + detail;
  return failed == 0;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    std::function<bool(std::string&)> fn;
  };
  const std::vector<Entry> entries = {
      {1, "svd-selection trap pins the gradient norm exactly", criterion_svd_trap},
      {2, "top-k-selection trap pins the gradient norm exactly", criterion_sparse_trap},
      {3, "noisy quadratic: svd schedule stalls, alternatives converge",
       criterion_noisy_quadratic},
      {4, "inequality and expectation identity suite", criterion_lemma_suite},
      {5, "factored engine matches the direct engine", criterion_engine_equivalence},
      {6, "longer horizons shrink the mean gradient norm", criterion_rate_sanity},
      {7, "cost model matches the typed polynomials", criterion_cost_model},
      {8, "oracle stochastic-gradient contracts", criterion_oracle_contracts},
  };

  int failures = 0;
  for (const Entry& e : entries) {
    bool ok = false;
    std::string note;
    try {
      ok = e.fn(note);
    } catch (const std::exception& ex) {
      ok = false;
      note = std::string("exception: ") + ex.what();
    }
    if (!ok) ++failures;
    std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", e.id, e.name, note.c_str());
    std::fflush(stdout);
  }
  return failures;
}
