#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "loreopt/harness.hpp"
#include "loreopt/theory.hpp"

using namespace loreopt;

namespace {

int cmd_run(const std::string& config_path) {
  const ExperimentConfig cfg = load_experiment_config(config_path);
  const std::vector<RunRecord> records = run_experiment(cfg);
  bool diverged = false;
  for (const RunRecord& rec : records) {
    std::printf("%-24s seed %-8llu final_loss %-14.6g final_grad_norm_sq %-14.6g rows %lld%s\n",
                rec.algorithm.c_str(), static_cast<unsigned long long>(rec.seed),
                rec.summary.final_loss, rec.summary.final_grad_norm_sq,
                static_cast<long long>(rec.summary.rows), rec.diverged ? " DIVERGED" : "");
    diverged = diverged || rec.diverged;
  }
  std::printf("records written under %s (config %s)\n", cfg.output_dir.c_str(),
              records.front().config_hash.substr(0, 12).c_str());
  if (diverged) {
    std::fprintf(stderr, "error: at least one run diverged\n");
    return 2;
  }
  return 0;
}

bool print_report(const std::string& title, const Report& rep) {
  std::printf("== %s\n", title.c_str());
  bool ok = true;
  for (const CheckResult& c : rep.checks) {
    std::printf("  %-4s %-32s statistic %-12.4g bound %-12.4g %s\n", c.pass ? "ok" : "FAIL",
                c.name.c_str(), c.statistic, c.bound, c.detail.c_str());
    if (!c.pass) {
      std::fprintf(stderr, "violation: %s: %s (statistic %.17g, bound %.17g) %s\n", title.c_str(),
                   c.name.c_str(), c.statistic, c.bound, c.detail.c_str());
      ok = false;
    }
  }
  return ok;
}

int cmd_verify(int trials, std::uint64_t seed) {
  RandomSource rng(seed);
  bool ok = true;
  {
    const QuadraticCE oracle(16, 4, 1.0);
    RandomSource r = rng.derive(1);
    ok &= print_report("oracle quadratic_ce", verify_oracle(oracle, trials, r));
  }
  {
    const SvdTrap oracle(8, 1.0, 0.1, 1.0);
    RandomSource r = rng.derive(2);
    ok &= print_report("oracle svd_trap", verify_oracle(oracle, trials, r));
  }
  {
    const SparseTrap oracle(4, 1.0, 0.1, 2.0);
    RandomSource r = rng.derive(3);
    ok &= print_report("oracle sparse_trap", verify_oracle(oracle, trials, r));
  }
  {
    const RandomQuadratic oracle({{6, 5}, {4, 8}}, 2.0, 0.5, 10.0, 7);
    RandomSource r = rng.derive(4);
    ok &= print_report("oracle random_quadratic", verify_oracle(oracle, trials, r));
  }
  {
    RandomSource r = rng.derive(5);
    ok &= print_report("projection identities", verify_lemma_suite(r, trials));
  }
  std::printf("%s\n", ok ? "all checks passed" : "CHECKS FAILED");
  return ok ? 0 : 1;
}

int cmd_hparams(const std::string& theorem, const ProblemConstants& c) {
  HparamBundle b;
  if (theorem == "deterministic")
    b = hparams_deterministic(c);
  else if (theorem == "largebatch")
    b = hparams_largebatch(c);
  else if (theorem == "golore")
    b = hparams_golore(c);
  else {
    std::fprintf(stderr, "error: unknown rate '%s' (deterministic | largebatch | golore)\n",
                 theorem.c_str());
    return 1;
  }
  std::printf("%-12s %.17g\n", "beta1", b.beta1);
  std::printf("%-12s %lld\n", "tau", static_cast<long long>(b.tau));
  std::printf("%-12s %.17g\n", "eta", b.eta);
  if (b.batch) std::printf("%-12s %lld\n", "batch", static_cast<long long>(*b.batch));
  std::printf("%-12s %.17g\n", "min_horizon", b.min_horizon);
  nlohmann::json j;
  j["beta1"] = b.beta1;
  j["tau"] = b.tau;
  j["eta"] = b.eta;
  if (b.batch) j["batch"] = *b.batch;
  j["min_horizon"] = b.min_horizon;
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_cost(long long m, long long n, long long r, long long b, const std::string& impl_name) {
  Impl impl;
  if (impl_name == "original")
    impl = Impl::Original;
  else if (impl_name == "relora")
    impl = Impl::ReloraLike;
  else {
    std::fprintf(stderr, "error: unknown impl '%s' (original | relora)\n", impl_name.c_str());
    return 1;
  }
  const CostBreakdown cost = cost_model(m, n, r, b, impl);
  std::printf("%-12s %lld\n", "memory", cost.memory);
  std::printf("%-12s %lld\n", "computation", cost.computation);
  nlohmann::json j;
  j["memory"] = cost.memory;
  j["computation"] = cost.computation;
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_plotdata(const std::string& dir, const std::string& metric, bool median, int log_points) {
  std::cout << plotdata(dir, metric, median, log_points);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank and sparse subspace optimization laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* run_cmd = app.add_subcommand("run", "Execute an experiment config, one run per seed");
  run_cmd->add_option("config", config_path, "JSON experiment config")->required();

  int trials = 1000;
  std::uint64_t verify_seed = 2024;
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "Check oracle contracts and projection identities");
  verify_cmd->add_option("--trials", trials, "Trial count (expectation checks use 10x)");
  verify_cmd->add_option("--seed", verify_seed, "Master seed for the checks");

  std::string theorem;
  ProblemConstants constants;
  CLI::App* hparams_cmd =
      app.add_subcommand("hparams", "Hyperparameters prescribed by a convergence guarantee");
  hparams_cmd->add_option("theorem", theorem, "deterministic | largebatch | golore")->required();
  hparams_cmd->add_option("--L", constants.L, "Smoothness constant");
  hparams_cmd->add_option("--Delta", constants.Delta, "Initial suboptimality f(x0) - inf f");
  hparams_cmd->add_option("--sigma", constants.sigma, "Gradient noise level");
  hparams_cmd->add_option("--delta", constants.delta_lower, "Smallest subspace fraction");
  hparams_cmd->add_option("--T", constants.T, "Step horizon");

  long long cm = 4, cn = 8, cr = 2, cb = 1;
  std::string impl_name = "original";
  CLI::App* cost_cmd = app.add_subcommand("cost", "Per-step memory and flops for one layer");
  cost_cmd->add_option("--m", cm, "Rows (m <= n)");
  cost_cmd->add_option("--n", cn, "Columns");
  cost_cmd->add_option("--r", cr, "Subspace rank");
  cost_cmd->add_option("--b", cb, "Batch size");
  cost_cmd->add_option("--impl", impl_name, "original | relora");

  std::string plot_dir, metric = "loss";
  bool median = false;
  int log_points = 0;
  CLI::App* plot_cmd =
      app.add_subcommand("plotdata", "Long-format metric table from a results directory");
  plot_cmd->add_option("dir", plot_dir, "Directory holding .record.json files")->required();
  plot_cmd->add_option("--metric", metric, "loss | grad_norm_sq");
  plot_cmd->add_flag("--median", median, "One row per t: median across seeds");
  plot_cmd->add_option("--log-points", log_points, "Subsample each series to a log grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(config_path);
    if (verify_cmd->parsed()) return cmd_verify(trials, verify_seed);
    if (hparams_cmd->parsed()) return cmd_hparams(theorem, constants);
    if (cost_cmd->parsed()) return cmd_cost(cm, cn, cr, cb, impl_name);
    if (plot_cmd->parsed()) return cmd_plotdata(plot_dir, metric, median, log_points);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
