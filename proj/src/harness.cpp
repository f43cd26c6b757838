#include "loreopt/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "loreopt/sha1.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace loreopt {

namespace {

std::string location_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  const std::size_t end = std::min(byte, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

[[noreturn]] void fail_key(const std::string& filename, const std::string& path,
                           const std::string& message) {
  throw ConfigError(filename + ": " + path + ": " + message);
}

void check_known_keys(const json& obj, const std::string& filename, const std::string& path,
                      std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) known = true;
    if (!known) fail_key(filename, path + "." + item.key(), "unknown key");
  }
}

double get_number(const json& obj, const char* key, double fallback, const std::string& filename,
                  const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) fail_key(filename, path + "." + key, "expected a number");
  return obj[key].get<double>();
}

std::int64_t get_integer(const json& obj, const char* key, std::int64_t fallback,
                         const std::string& filename, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer() && !obj[key].is_number_unsigned())
    fail_key(filename, path + "." + key, "expected an integer");
  return obj[key].get<std::int64_t>();
}

bool get_bool(const json& obj, const char* key, bool fallback, const std::string& filename,
              const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) fail_key(filename, path + "." + key, "expected a boolean");
  return obj[key].get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& fallback,
                       const std::string& filename, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) fail_key(filename, path + "." + key, "expected a string");
  return obj[key].get<std::string>();
}

UpdateRule parse_rule(const std::string& s, const std::string& filename, const std::string& path) {
  if (s == "msgd") return UpdateRule::Msgd;
  if (s == "adamw") return UpdateRule::AdamW;
  fail_key(filename, path, "unknown rule '" + s + "' (msgd | adamw)");
}

ScheduleKind parse_schedule(const std::string& s, const std::string& filename,
                            const std::string& path) {
  if (s == "galore") return ScheduleKind::GaLore;
  if (s == "golore") return ScheduleKind::GoLore;
  if (s == "gaussian") return ScheduleKind::GaussianProj;
  if (s == "gasare") return ScheduleKind::GaSare;
  if (s == "gosare") return ScheduleKind::GoSare;
  if (s == "hybrid") return ScheduleKind::Hybrid;
  if (s == "full") return ScheduleKind::FullParam;
  fail_key(filename, path,
           "unknown schedule '" + s + "' (galore | golore | gaussian | gasare | gosare | hybrid | full)");
}

GradMode parse_grad_mode(const std::string& s, const std::string& filename,
                         const std::string& path) {
  if (s == "stochastic") return GradMode::Stochastic;
  if (s == "deterministic") return GradMode::Deterministic;
  if (s == "large_batch") return GradMode::LargeBatchAtRefresh;
  fail_key(filename, path, "unknown grad_mode '" + s + "' (stochastic | deterministic | large_batch)");
}

Side parse_side(const std::string& s, const std::string& filename, const std::string& path) {
  if (s == "left") return Side::Left;
  if (s == "right") return Side::Right;
  fail_key(filename, path, "unknown side '" + s + "' (left | right)");
}

const char* rule_name(UpdateRule r) { return r == UpdateRule::Msgd ? "msgd" : "adamw"; }

const char* grad_mode_name(GradMode m) {
  switch (m) {
    case GradMode::Stochastic: return "stochastic";
    case GradMode::Deterministic: return "deterministic";
    case GradMode::LargeBatchAtRefresh: return "large_batch";
  }
  return "?";
}

json config_to_json(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds) {
  json oracle;
  oracle["kind"] = cfg.oracle.kind;
  oracle["n"] = cfg.oracle.n;
  oracle["r"] = cfg.oracle.r;
  oracle["sigma"] = cfg.oracle.sigma;
  oracle["L"] = cfg.oracle.L;
  oracle["lambda"] = cfg.oracle.lambda;
  oracle["kappa"] = cfg.oracle.kappa;
  oracle["seed"] = cfg.oracle.seed;
  json dims = json::array();
  for (const LayerShape& d : cfg.oracle.dims) dims.push_back({d.m, d.n});
  oracle["dims"] = dims;

  json opt;
  opt["rule"] = rule_name(cfg.opt.rule);
  opt["schedule"] = schedule_kind_name(cfg.opt.schedule.kind);
  opt["hybrid_percent"] = cfg.opt.schedule.hybrid_percent;
  opt["grad_mode"] = grad_mode_name(cfg.opt.grad_mode);
  opt["batch"] = cfg.opt.batch;
  opt["eta"] = cfg.opt.eta;
  opt["tau"] = cfg.opt.tau;
  opt["beta1"] = cfg.opt.beta1;
  opt["beta2"] = cfg.opt.beta2;
  opt["eps"] = cfg.opt.eps;
  opt["alpha"] = cfg.opt.alpha;
  opt["weight_decay"] = cfg.opt.weight_decay;
  opt["momentum_projection"] = cfg.opt.momentum_projection;
  opt["T"] = cfg.opt.T;

  json side = json::array();
  for (const auto& s : cfg.side_override) {
    if (s)
      side.push_back(*s == Side::Left ? "left" : "right");
    else
      side.push_back(nullptr);
  }

  json root;
  root["name"] = cfg.name;
  root["oracle"] = oracle;
  root["optimizer"] = opt;
  root["subspace"] = cfg.sub;
  root["side"] = side;
  root["seeds"] = seeds;
  root["output_dir"] = cfg.output_dir;
  root["metric_every"] = cfg.metric_every;
  root["engine"] = cfg.factored ? "factored" : "subspace";
  return root;
}

std::vector<std::uint64_t> effective_seeds(const ExperimentConfig& cfg) {
  const char* env = std::getenv("LOREOPT_SEED");
  if (env == nullptr || *env == '\0') return cfg.seeds;
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(env);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(item.c_str(), &end, 10);
    if (end == item.c_str() || *end != '\0')
      throw ConfigError("LOREOPT_SEED: '" + item + "' is not an unsigned integer");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw ConfigError("LOREOPT_SEED: no seeds given");
  return seeds;
}

}  // namespace

std::unique_ptr<GradientOracle> make_oracle(const OracleSpec& spec) {
  if (spec.kind == "quadratic_ce")
    return std::make_unique<QuadraticCE>(spec.n, spec.r, spec.sigma, spec.seed);
  if (spec.kind == "svd_trap")
    return std::make_unique<SvdTrap>(spec.n, spec.L, spec.lambda, spec.sigma, spec.seed);
  if (spec.kind == "sparse_trap")
    return std::make_unique<SparseTrap>(spec.n, spec.L, spec.lambda, spec.sigma, spec.seed);
  if (spec.kind == "random_quadratic") {
    if (spec.dims.empty())
      throw ConfigError("oracle.dims: random_quadratic needs at least one [m, n] pair");
    return std::make_unique<RandomQuadratic>(spec.dims, spec.L, spec.sigma, spec.kappa, spec.seed);
  }
  throw ConfigError("oracle.kind: unknown oracle '" + spec.kind +
                    "' (quadratic_ce | svd_trap | sparse_trap | random_quadratic)");
}

void ExperimentConfig::validate() const {
  if (name.empty()) throw ConfigError("name: must not be empty");
  for (char c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
      throw ConfigError("name: '" + name + "' may only use letters, digits, '_', '-', '.'");
  if (seeds.empty()) throw ConfigError("seeds: need at least one seed");
  if (sub.empty()) throw ConfigError("subspace: need at least one entry");
  for (std::int64_t s : sub)
    if (s < 1) throw ConfigError("subspace: entries must be >= 1");
  if (metric_every < 1) throw ConfigError("metric_every: must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
  opt.validate();
  make_oracle(oracle);  // constructor validation
  if (factored && schedule_is_sparse(opt.schedule.kind))
    throw ConfigError("engine: factored engine does not support sparse schedules");
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& filename) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    std::string what = e.what();
    const std::size_t cut = what.find("] ");
    if (cut != std::string::npos) what = what.substr(cut + 2);
    throw ConfigError(filename + ":" + location_of(text, byte) + ": " + what);
  }
  if (!j.is_object()) throw ConfigError(filename + ": top level must be an object");
  check_known_keys(j, filename, "$",
                   {"name", "oracle", "optimizer", "subspace", "side", "seeds", "output_dir",
                    "metric_every", "engine"});

  ExperimentConfig cfg;
  cfg.name = get_string(j, "name", "experiment", filename, "$");

  if (j.contains("oracle")) {
    const json& o = j["oracle"];
    if (!o.is_object()) fail_key(filename, "oracle", "expected an object");
    check_known_keys(o, filename, "oracle",
                     {"kind", "n", "r", "sigma", "L", "lambda", "kappa", "seed", "dims"});
    cfg.oracle.kind = get_string(o, "kind", cfg.oracle.kind, filename, "oracle");
    cfg.oracle.n = static_cast<int>(get_integer(o, "n", cfg.oracle.n, filename, "oracle"));
    cfg.oracle.r = static_cast<int>(get_integer(o, "r", cfg.oracle.r, filename, "oracle"));
    cfg.oracle.sigma = get_number(o, "sigma", cfg.oracle.sigma, filename, "oracle");
    cfg.oracle.L = get_number(o, "L", cfg.oracle.L, filename, "oracle");
    cfg.oracle.lambda = get_number(o, "lambda", cfg.oracle.lambda, filename, "oracle");
    cfg.oracle.kappa = get_number(o, "kappa", cfg.oracle.kappa, filename, "oracle");
    cfg.oracle.seed =
        static_cast<std::uint64_t>(get_integer(o, "seed", static_cast<std::int64_t>(cfg.oracle.seed), filename, "oracle"));
    if (o.contains("dims")) {
      if (!o["dims"].is_array()) fail_key(filename, "oracle.dims", "expected an array of [m, n]");
      for (const json& d : o["dims"]) {
        if (!d.is_array() || d.size() != 2 || !d[0].is_number_integer() || !d[1].is_number_integer())
          fail_key(filename, "oracle.dims", "each entry must be an [m, n] integer pair");
        cfg.oracle.dims.push_back({d[0].get<int>(), d[1].get<int>()});
      }
    }
  }

  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    if (!o.is_object()) fail_key(filename, "optimizer", "expected an object");
    check_known_keys(o, filename, "optimizer",
                     {"rule", "schedule", "hybrid_percent", "grad_mode", "batch", "eta", "tau",
                      "beta1", "beta2", "eps", "alpha", "weight_decay", "momentum_projection",
                      "T"});
    cfg.opt.rule = parse_rule(get_string(o, "rule", "msgd", filename, "optimizer"), filename,
                              "optimizer.rule");
    cfg.opt.schedule.kind = parse_schedule(get_string(o, "schedule", "galore", filename, "optimizer"),
                                           filename, "optimizer.schedule");
    cfg.opt.schedule.hybrid_percent =
        get_number(o, "hybrid_percent", cfg.opt.schedule.hybrid_percent, filename, "optimizer");
    cfg.opt.grad_mode = parse_grad_mode(
        get_string(o, "grad_mode", "stochastic", filename, "optimizer"), filename,
        "optimizer.grad_mode");
    cfg.opt.batch = static_cast<int>(get_integer(o, "batch", cfg.opt.batch, filename, "optimizer"));
    cfg.opt.eta = get_number(o, "eta", cfg.opt.eta, filename, "optimizer");
    cfg.opt.tau = static_cast<int>(get_integer(o, "tau", cfg.opt.tau, filename, "optimizer"));
    cfg.opt.beta1 = get_number(o, "beta1", cfg.opt.beta1, filename, "optimizer");
    cfg.opt.beta2 = get_number(o, "beta2", cfg.opt.beta2, filename, "optimizer");
    cfg.opt.eps = get_number(o, "eps", cfg.opt.eps, filename, "optimizer");
    cfg.opt.alpha = get_number(o, "alpha", cfg.opt.alpha, filename, "optimizer");
    cfg.opt.weight_decay =
        get_number(o, "weight_decay", cfg.opt.weight_decay, filename, "optimizer");
    cfg.opt.momentum_projection =
        get_bool(o, "momentum_projection", cfg.opt.momentum_projection, filename, "optimizer");
    cfg.opt.T = get_integer(o, "T", cfg.opt.T, filename, "optimizer");
  }

  if (j.contains("subspace")) {
    cfg.sub.clear();
    if (j["subspace"].is_number_integer()) {
      cfg.sub.push_back(j["subspace"].get<std::int64_t>());
    } else if (j["subspace"].is_array()) {
      for (const json& s : j["subspace"]) {
        if (!s.is_number_integer()) fail_key(filename, "subspace", "entries must be integers");
        cfg.sub.push_back(s.get<std::int64_t>());
      }
    } else {
      fail_key(filename, "subspace", "expected an integer or an array of integers");
    }
  }

  if (j.contains("side")) {
    const json& s = j["side"];
    if (s.is_string()) {
      cfg.side_override.push_back(parse_side(s.get<std::string>(), filename, "side"));
    } else if (s.is_array()) {
      for (const json& e : s) {
        if (e.is_null())
          cfg.side_override.push_back(std::nullopt);
        else if (e.is_string())
          cfg.side_override.push_back(parse_side(e.get<std::string>(), filename, "side"));
        else
          fail_key(filename, "side", "entries must be \"left\", \"right\", or null");
      }
    } else if (!s.is_null()) {
      fail_key(filename, "side", "expected a string, array, or null");
    }
  }

  if (j.contains("seeds")) {
    cfg.seeds.clear();
    if (j["seeds"].is_number_integer() || j["seeds"].is_number_unsigned()) {
      cfg.seeds.push_back(j["seeds"].get<std::uint64_t>());
    } else if (j["seeds"].is_array()) {
      for (const json& s : j["seeds"]) {
        if (!s.is_number_integer() && !s.is_number_unsigned())
          fail_key(filename, "seeds", "entries must be integers");
        cfg.seeds.push_back(s.get<std::uint64_t>());
      }
    } else {
      fail_key(filename, "seeds", "expected an integer or an array of integers");
    }
  }

  cfg.output_dir = get_string(j, "output_dir", cfg.output_dir, filename, "$");
  cfg.metric_every = get_integer(j, "metric_every", cfg.metric_every, filename, "$");
  const std::string engine = get_string(j, "engine", "subspace", filename, "$");
  if (engine == "subspace")
    cfg.factored = false;
  else if (engine == "factored")
    cfg.factored = true;
  else
    fail_key(filename, "engine", "unknown engine '" + engine + "' (subspace | factored)");

  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(filename + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(filename + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), path);
}

RunSummary summarize_csv(const std::string& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw IoError("cannot open trajectory '" + csv_path + "'");
  const Trajectory traj = read_trajectory_csv(in);
  if (traj.points.empty()) throw IoError("trajectory '" + csv_path + "' has no rows");
  RunSummary s;
  s.rows = static_cast<std::int64_t>(traj.points.size());
  s.final_loss = traj.points.back().loss;
  s.final_grad_norm_sq = traj.points.back().grad_norm_sq;
  s.min_grad_norm_sq = traj.points.front().grad_norm_sq;
  for (const TrajectoryPoint& p : traj.points)
    s.min_grad_norm_sq = std::min(s.min_grad_norm_sq, p.grad_norm_sq);
  const std::int64_t tail = (s.rows + 9) / 10;  // ceil(rows / 10)
  double sum = 0;
  for (std::int64_t i = s.rows - tail; i < s.rows; ++i)
    sum += traj.points[static_cast<std::size_t>(i)].grad_norm_sq;
  s.mean_grad_norm_sq_last_tenth = sum / static_cast<double>(tail);
  return s;
}

std::string algorithm_label(const OptConfig& opt) {
  std::string s = rule_name(opt.rule);
  s += "-";
  s += schedule_kind_name(opt.schedule.kind);
  if (opt.schedule.kind == ScheduleKind::Hybrid) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "@%g", opt.schedule.hybrid_percent);
    s += buf;
  }
  if (opt.grad_mode == GradMode::LargeBatchAtRefresh) s += "+b" + std::to_string(opt.batch);
  return s;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<std::uint64_t> seeds = effective_seeds(cfg);
  fs::create_directories(cfg.output_dir);
  const std::unique_ptr<GradientOracle> oracle = make_oracle(cfg.oracle);

  const std::string config_dump = config_to_json(cfg, seeds).dump();
  const std::string config_hash = git_blob_hash(config_dump);
  std::ostringstream inputs;
  oracle->write_inputs(inputs);
  const std::string content_hash = git_blob_hash(config_dump + inputs.str());
  const std::string label = algorithm_label(cfg.opt);

  std::vector<RunRecord> records;
  for (const std::uint64_t seed : seeds) {
    Trajectory traj;
    if (cfg.factored) {
      FactoredState state = FactoredState::init(*oracle, cfg.sub, cfg.side_override);
      traj = run_factored(state, *oracle, cfg.opt, seed, cfg.metric_every);
    } else {
      ModelState state = ModelState::init(*oracle, cfg.sub, cfg.side_override);
      traj = run(state, *oracle, cfg.opt, seed, cfg.metric_every);
    }
    const std::string stem = cfg.name + "_seed" + std::to_string(seed);
    const std::string csv_path = (fs::path(cfg.output_dir) / (stem + ".csv")).string();
    {
      std::ofstream out(csv_path, std::ios::binary);
      if (!out) throw IoError("cannot write trajectory '" + csv_path + "'");
      write_trajectory_csv(out, traj);
    }
    RunRecord rec;
    rec.experiment = cfg.name;
    rec.seed = seed;
    rec.algorithm = label;
    rec.config_hash = config_hash;
    rec.content_hash = content_hash;
    rec.csv_path = csv_path;
    rec.summary = summarize_csv(csv_path);
    rec.diverged = traj.diverged;
    rec.wall_seconds = traj.wall_seconds;
    write_run_record((fs::path(cfg.output_dir) / (stem + ".record.json")).string(), rec);
    records.push_back(std::move(rec));
  }
  return records;
}

void write_run_record(const std::string& path, const RunRecord& rec) {
  json j;
  j["experiment"] = rec.experiment;
  j["seed"] = rec.seed;
  j["algorithm"] = rec.algorithm;
  j["config_hash"] = rec.config_hash;
  j["content_hash"] = rec.content_hash;
  j["csv_path"] = rec.csv_path;
  j["diverged"] = rec.diverged;
  j["wall_seconds"] = rec.wall_seconds;
  json s;
  s["final_loss"] = rec.summary.final_loss;
  s["final_grad_norm_sq"] = rec.summary.final_grad_norm_sq;
  s["min_grad_norm_sq"] = rec.summary.min_grad_norm_sq;
  s["mean_grad_norm_sq_last_tenth"] = rec.summary.mean_grad_norm_sq_last_tenth;
  s["rows"] = rec.summary.rows;
  j["summary"] = s;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write record '" + path + "'");
  out << j.dump(2) << '\n';
}

RunRecord read_run_record(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open record '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("record '" + path + "': " + e.what());
  }
  RunRecord rec;
  try {
    rec.experiment = j.at("experiment").get<std::string>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.algorithm = j.at("algorithm").get<std::string>();
    rec.config_hash = j.at("config_hash").get<std::string>();
    rec.content_hash = j.at("content_hash").get<std::string>();
    rec.csv_path = j.at("csv_path").get<std::string>();
    rec.diverged = j.at("diverged").get<bool>();
    rec.wall_seconds = j.at("wall_seconds").get<double>();
    const json& s = j.at("summary");
    rec.summary.final_loss = s.at("final_loss").get<double>();
    rec.summary.final_grad_norm_sq = s.at("final_grad_norm_sq").get<double>();
    rec.summary.min_grad_norm_sq = s.at("min_grad_norm_sq").get<double>();
    rec.summary.mean_grad_norm_sq_last_tenth = s.at("mean_grad_norm_sq_last_tenth").get<double>();
    rec.summary.rows = s.at("rows").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw IoError("record '" + path + "': " + e.what());
  }
  return rec;
}

std::vector<std::int64_t> log_grid(std::int64_t count, int points) {
  if (points < 1) throw InvalidInput("log_grid: points must be >= 1");
  std::vector<std::int64_t> grid;
  if (count <= 0) return grid;
  if (points >= count || count == 1) {
    for (std::int64_t i = 0; i < count; ++i) grid.push_back(i);
    return grid;
  }
  for (int j = 0; j < points; ++j) {
    const double frac = points == 1 ? 0.0 : static_cast<double>(j) / (points - 1);
    const double x = std::exp(frac * std::log(static_cast<double>(count)));
    std::int64_t idx = static_cast<std::int64_t>(std::llround(x)) - 1;
    idx = std::clamp<std::int64_t>(idx, 0, count - 1);
    grid.push_back(idx);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::string plotdata(const std::string& dir, const std::string& metric, bool median,
                     int log_points) {
  const bool use_loss = metric == "loss";
  if (!use_loss && metric != "grad_norm_sq")
    throw InvalidMetric("unknown metric '" + metric + "' (loss | grad_norm_sq)");
  if (!fs::is_directory(dir)) throw IoError("'" + dir + "' is not a directory");

  std::vector<std::string> record_paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 12 && name.substr(name.size() - 12) == ".record.json")
      record_paths.push_back(entry.path().string());
  }
  std::sort(record_paths.begin(), record_paths.end());
  if (record_paths.empty()) throw IoError("no .record.json files under '" + dir + "'");

  struct Series {
    std::uint64_t seed;
    std::vector<std::pair<std::int64_t, double>> rows;
  };
  std::map<std::string, std::vector<Series>> by_algorithm;
  for (const std::string& rp : record_paths) {
    const RunRecord rec = read_run_record(rp);
    std::string csv = rec.csv_path;
    if (!fs::exists(csv)) csv = (fs::path(dir) / fs::path(rec.csv_path).filename()).string();
    std::ifstream in(csv, std::ios::binary);
    if (!in) throw IoError("cannot open trajectory '" + csv + "'");
    const Trajectory traj = read_trajectory_csv(in);
    Series s;
    s.seed = rec.seed;
    s.rows.reserve(traj.points.size());
    for (const TrajectoryPoint& p : traj.points)
      s.rows.emplace_back(p.t, use_loss ? p.loss : p.grad_norm_sq);
    by_algorithm[rec.algorithm].push_back(std::move(s));
  }

  std::ostringstream out;
  char buf[64];
  if (!median) {
    out << "algorithm,seed,t,value\n";
    for (auto& [algo, series] : by_algorithm) {
      std::sort(series.begin(), series.end(),
                [](const Series& a, const Series& b) { return a.seed < b.seed; });
      for (const Series& s : series) {
        std::vector<std::int64_t> keep;
        if (log_points > 0)
          keep = log_grid(static_cast<std::int64_t>(s.rows.size()), log_points);
        else
          for (std::int64_t i = 0; i < static_cast<std::int64_t>(s.rows.size()); ++i)
            keep.push_back(i);
        for (const std::int64_t i : keep) {
          const auto& [t, v] = s.rows[static_cast<std::size_t>(i)];
          std::snprintf(buf, sizeof(buf), "%lld,%.17g", static_cast<long long>(t), v);
          out << algo << ',' << s.seed << ',' << buf << '\n';
        }
      }
    }
    return out.str();
  }

  out << "algorithm,t,value\n";
  for (auto& [algo, series] : by_algorithm) {
    std::map<std::int64_t, std::vector<double>> by_t;
    for (const Series& s : series)
      for (const auto& [t, v] : s.rows) by_t[t].push_back(v);
    std::vector<std::pair<std::int64_t, double>> rows;
    rows.reserve(by_t.size());
    for (auto& [t, vals] : by_t) {
      std::sort(vals.begin(), vals.end());
      const std::size_t n = vals.size();
      const double med =
          n % 2 == 1 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
      rows.emplace_back(t, med);
    }
    std::vector<std::int64_t> keep;
    if (log_points > 0)
      keep = log_grid(static_cast<std::int64_t>(rows.size()), log_points);
    else
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(rows.size()); ++i) keep.push_back(i);
    for (const std::int64_t i : keep) {
      const auto& [t, v] = rows[static_cast<std::size_t>(i)];
      std::snprintf(buf, sizeof(buf), "%lld,%.17g", static_cast<long long>(t), v);
      out << algo << ',' << buf << '\n';
    }
  }
  return out.str();
}

}  // namespace loreopt
