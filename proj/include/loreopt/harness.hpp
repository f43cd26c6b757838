#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "loreopt/optimizer.hpp"
#include "loreopt/oracle.hpp"

namespace loreopt {

// Which built-in objective to construct, plus its parameters. Unused fields
// are ignored by kinds that do not take them.
struct OracleSpec {
  std::string kind = "quadratic_ce";  // quadratic_ce | svd_trap | sparse_trap | random_quadratic
  int n = 16;
  int r = 4;
  double sigma = 1.0;
  double L = 1.0;
  double lambda = 0.1;
  double kappa = 10.0;
  std::uint64_t seed = 42;
  std::vector<LayerShape> dims;  // random_quadratic only
};

std::unique_ptr<GradientOracle> make_oracle(const OracleSpec& spec);

struct ExperimentConfig {
  std::string name;
  OracleSpec oracle;
  OptConfig opt;
  std::vector<std::int64_t> sub{1};
  std::vector<std::optional<Side>> side_override;
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "runs";
  std::int64_t metric_every = 1;
  bool factored = false;

  void validate() const;
};

// Parses the JSON experiment schema. Errors carry <file>:<line>:<col> for
// syntax problems and the offending key path for semantic ones.
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& filename);
ExperimentConfig load_experiment_config(const std::string& path);

struct RunSummary {
  double final_loss = 0;
  double final_grad_norm_sq = 0;
  double min_grad_norm_sq = 0;
  double mean_grad_norm_sq_last_tenth = 0;
  std::int64_t rows = 0;
};

struct RunRecord {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string algorithm;
  std::string config_hash;   // hash of the canonical config serialization
  std::string content_hash;  // hash of config plus the oracle's defining data
  std::string csv_path;
  RunSummary summary;
  bool diverged = false;
  double wall_seconds = 0;
};

// Recomputes the summary by reading the trajectory back from disk, so records
// are verifiable against their CSVs.
RunSummary summarize_csv(const std::string& csv_path);

// Short grouping label for curves: update rule, schedule, hybrid switch
// point, and refresh batch when gradients are batched at refresh steps.
std::string algorithm_label(const OptConfig& opt);

// Runs every seed of the experiment, writing <name>_seed<seed>.csv and
// <name>_seed<seed>.record.json under output_dir. LOREOPT_SEED (a comma
// separated list) overrides the config's seed list.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg);

void write_run_record(const std::string& path, const RunRecord& rec);
RunRecord read_run_record(const std::string& path);

// Log-spaced subsampling grid: `points` unique row indices in [0, count),
// geometric in (index + 1), always containing the first and last row.
std::vector<std::int64_t> log_grid(std::int64_t count, int points);

// Long-format table of one metric across all run records in a directory.
// Columns: algorithm,seed,t,value (median mode drops the seed column and
// emits one row per distinct t per algorithm). metric is "loss" or
// "grad_norm_sq". log_points > 0 subsamples each series on a log grid.
std::string plotdata(const std::string& dir, const std::string& metric, bool median = false,
                     int log_points = 0);

}  // namespace loreopt
