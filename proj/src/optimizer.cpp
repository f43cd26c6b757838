#include "loreopt/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

namespace loreopt {

namespace {

constexpr double kDivergenceBound = 1e12;
constexpr std::uint64_t kGradStreamTag = 0x67;
constexpr std::uint64_t kProjStreamTag = 0x70;

void check_weights(const Matrix& w, std::size_t layer, std::int64_t t) {
  if (!w.is_finite() || w.max_abs() > kDivergenceBound)
    throw NumericalDivergence("weights out of range at layer " + std::to_string(layer) +
                              ", step " + std::to_string(t));
}

std::vector<Matrix> sample_gradients(const std::vector<Matrix>& x, const GradientOracle& oracle,
                                     const OptConfig& cfg, bool refreshed, std::int64_t t,
                                     RandomSource& master) {
  RandomSource grad_rng = master.derive(kGradStreamTag).derive(static_cast<std::uint64_t>(t));
  switch (cfg.grad_mode) {
    case GradMode::Deterministic:
      return oracle.true_grad(x);
    case GradMode::Stochastic:
      return oracle.stoch_grad(x, 1, grad_rng);
    case GradMode::LargeBatchAtRefresh:
      return oracle.stoch_grad(x, refreshed ? cfg.batch : 1, grad_rng);
  }
  throw InvalidInput("unknown gradient mode");
}

RandomSource projector_rng(RandomSource& master, std::int64_t t, std::size_t layer) {
  return master.derive(kProjStreamTag)
      .derive(static_cast<std::uint64_t>(t))
      .derive(static_cast<std::uint64_t>(layer));
}

void init_subspace_state(SubspaceState& st, const LayerSpec& layer) {
  int rr = 0, cc = 0;
  subspace_shape(st.projector, layer.m, layer.n, rr, cc);
  st.M = Matrix(rr, cc);
  st.V = Matrix(rr, cc);
  st.initialized = true;
}

}  // namespace

bool schedule_is_sparse(ScheduleKind k) {
  return k == ScheduleKind::GaSare || k == ScheduleKind::GoSare;
}

const char* schedule_kind_name(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::GaLore: return "galore";
    case ScheduleKind::GoLore: return "golore";
    case ScheduleKind::GaussianProj: return "gaussian";
    case ScheduleKind::GaSare: return "gasare";
    case ScheduleKind::GoSare: return "gosare";
    case ScheduleKind::Hybrid: return "hybrid";
    case ScheduleKind::FullParam: return "full";
  }
  return "?";
}

void OptConfig::validate() const {
  if (!(eta > 0)) throw InvalidInput("OptConfig: eta must be > 0");
  if (tau < 1) throw InvalidInput("OptConfig: tau must be >= 1");
  if (!(beta1 > 0) || beta1 > 1) throw InvalidInput("OptConfig: beta1 must be in (0, 1]");
  if (!(beta2 > 0) || beta2 > 1) throw InvalidInput("OptConfig: beta2 must be in (0, 1]");
  if (!(eps > 0)) throw InvalidInput("OptConfig: eps must be > 0");
  if (!(alpha > 0)) throw InvalidInput("OptConfig: alpha must be > 0");
  if (weight_decay < 0) throw InvalidInput("OptConfig: weight_decay must be >= 0");
  if (batch < 1) throw InvalidInput("OptConfig: batch must be >= 1");
  if (T < 0) throw InvalidInput("OptConfig: T must be >= 0");
  if (schedule.kind == ScheduleKind::Hybrid &&
      (schedule.hybrid_percent < 0 || schedule.hybrid_percent > 100))
    throw InvalidInput("OptConfig: hybrid_percent must be in [0, 100]");
}

ModelState ModelState::init(const GradientOracle& oracle, std::vector<std::int64_t> sub,
                            const std::vector<std::optional<Side>>& side_overrides) {
  const std::vector<LayerShape> shapes = oracle.shapes();
  if (sub.size() == 1 && shapes.size() > 1) sub.assign(shapes.size(), sub[0]);
  if (sub.size() != shapes.size())
    throw InvalidInput("ModelState::init: need one subspace size per layer");
  ModelState m;
  m.weights = oracle.initial_point();
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    LayerSpec spec;
    spec.m = shapes[l].m;
    spec.n = shapes[l].n;
    spec.sub = sub[l];
    if (l < side_overrides.size()) spec.side_override = side_overrides[l];
    m.layers.push_back(spec);
    m.states.emplace_back();
  }
  return m;
}

FactoredState FactoredState::init(const GradientOracle& oracle, std::vector<std::int64_t> sub,
                                  const std::vector<std::optional<Side>>& side_overrides) {
  ModelState base = ModelState::init(oracle, std::move(sub), side_overrides);
  FactoredState f;
  f.layers = base.layers;
  f.states.resize(f.layers.size());
  for (std::size_t l = 0; l < f.layers.size(); ++l) {
    const LayerSpec& spec = f.layers[l];
    const int r = static_cast<int>(std::min<std::int64_t>(spec.sub, std::min(spec.m, spec.n)));
    if (r < 1) throw InvalidInput("FactoredState::init: rank must be >= 1");
    FactoredLayer fl;
    fl.W = std::move(base.weights[l]);
    fl.B = Matrix(spec.m, r);
    fl.A = Matrix(r, spec.n);
    f.factors.push_back(std::move(fl));
  }
  return f;
}

Matrix FactoredState::materialize(std::size_t layer) const {
  const FactoredLayer& fl = factors[layer];
  return fl.W + fl.B * fl.A;
}

std::vector<Matrix> FactoredState::materialize_all() const {
  std::vector<Matrix> x;
  x.reserve(factors.size());
  for (std::size_t l = 0; l < factors.size(); ++l) x.push_back(materialize(l));
  return x;
}

Projector refresh_subspace(const Matrix& g, const LayerSpec& layer, const OptConfig& cfg,
                           std::int64_t t, RandomSource& rng) {
  if (cfg.tau < 1 || t % cfg.tau != 0)
    throw InvalidInput("refresh_subspace: step " + std::to_string(t) +
                       " is not a refresh boundary");
  const Side side = side_for(layer.m, layer.n, layer.side_override);
  ScheduleKind kind = cfg.schedule.kind;
  if (kind == ScheduleKind::Hybrid) {
    // SVD projectors until the final hybrid_percent share of the horizon,
    // random subspaces from the first refresh at or past the switch point.
    const auto switch_t = static_cast<std::int64_t>(
        std::ceil((100.0 - cfg.schedule.hybrid_percent) / 100.0 * static_cast<double>(cfg.T)));
    kind = t < switch_t ? ScheduleKind::GaLore : ScheduleKind::GoLore;
  }
  const int r = static_cast<int>(layer.sub);
  switch (kind) {
    case ScheduleKind::GaLore:
      return fit_svd_projector(g, r, side);
    case ScheduleKind::GoLore:
      return make_stiefel_projector(layer.m, layer.n, r, side, rng);
    case ScheduleKind::GaussianProj:
      return make_gaussian_projector(layer.m, layer.n, r, side, rng);
    case ScheduleKind::GaSare:
      return topk_mask(g, layer.sub);
    case ScheduleKind::GoSare:
      return sample_rand_mask(layer.m, layer.n, layer.sub, rng);
    case ScheduleKind::FullParam:
      return make_identity_projector(layer.m, layer.n);
    case ScheduleKind::Hybrid:
      break;
  }
  throw InvalidInput("refresh_subspace: unknown schedule kind");
}

Matrix momentum_update(const SubspaceState& state, const Matrix& r, const Projector* prev,
                       const OptConfig& cfg, bool refreshed) {
  const double b1 = cfg.beta1;
  Matrix carried;
  if (refreshed && cfg.momentum_projection && prev != nullptr) {
    if (const auto* cur = std::get_if<LowRankProjector>(&state.projector)) {
      const auto& old = std::get<LowRankProjector>(*prev);
      if (cur->side == Side::Left) {
        carried = matmul_at_b(cur->factor, old.factor) * state.M;
      } else {
        carried = state.M * matmul_at_b(old.factor, cur->factor);
      }
    } else {
      carried = hadamard(std::get<SparseMask>(state.projector).mask, state.M);
    }
  } else {
    carried = state.M;
  }
  scale_inplace(carried, 1.0 - b1);
  axpy(carried, b1, r);
  return carried;
}

Matrix msgd_direction(const Matrix& m) { return m; }

AdamResult adamw_direction(const SubspaceState& state, const Matrix& r, const OptConfig& cfg,
                           std::int64_t t) {
  AdamResult out;
  if (const auto* sparse = std::get_if<SparseMask>(&state.projector)) {
    out.V = hadamard(sparse->mask, state.V);
  } else {
    out.V = state.V;
  }
  scale_inplace(out.V, 1.0 - cfg.beta2);
  {
    Matrix r2 = hadamard(r, r);
    axpy(out.V, cfg.beta2, r2);
  }
  // Transient bias corrections for an EMA that weights the incoming value by
  // beta: the accumulated weight after t+1 updates is 1 - (1-beta)^(t+1).
  const double bc1 = 1.0 - std::pow(1.0 - cfg.beta1, static_cast<double>(t + 1));
  const double bc2 = 1.0 - std::pow(1.0 - cfg.beta2, static_cast<double>(t + 1));
  out.N = Matrix(r.rows(), r.cols());
  const double* pm = state.M.data();
  const double* pv = out.V.data();
  double* pn = out.N.data();
  const std::int64_t count = out.N.size();
  for (std::int64_t i = 0; i < count; ++i)
    pn[i] = (pm[i] / bc1) / (std::sqrt(pv[i] / bc2) + cfg.eps);
  return out;
}

namespace {

// Shared per-layer update: refresh bookkeeping, momentum, direction. The two
// engines differ only in how they apply the lifted direction to the weights.
struct LayerStep {
  Matrix N;
  std::optional<Projector> prev;
};

LayerStep subspace_step(SubspaceState& st, const Matrix& g, const LayerSpec& layer,
                        const OptConfig& cfg, std::int64_t t, bool refreshed,
                        RandomSource& master, std::size_t layer_idx) {
  LayerStep out;
  if (refreshed) {
    if (st.initialized) out.prev = st.projector;
    RandomSource prng = projector_rng(master, t, layer_idx);
    st.projector = refresh_subspace(g, layer, cfg, t, prng);
    if (!st.initialized) init_subspace_state(st, layer);
  }
  const Matrix r = project(g, st.projector);
  st.M = momentum_update(st, r, out.prev ? &*out.prev : nullptr, cfg, refreshed);
  if (cfg.rule == UpdateRule::AdamW) {
    AdamResult ar = adamw_direction(st, r, cfg, t);
    st.V = std::move(ar.V);
    out.N = std::move(ar.N);
  } else {
    out.N = msgd_direction(st.M);
  }
  return out;
}

}  // namespace

StepInfo train_step(ModelState& model, const GradientOracle& oracle, const OptConfig& cfg,
                    RandomSource& master) {
  cfg.validate();
  const std::int64_t t = model.t;
  const bool refreshed = t % cfg.tau == 0;
  const std::vector<Matrix> grads =
      sample_gradients(model.weights, oracle, cfg, refreshed, t, master);

  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    SubspaceState& st = model.states[l];
    LayerStep step = subspace_step(st, grads[l], model.layers[l], cfg, t, refreshed, master, l);
    const Matrix u = lift(step.N, st.projector);
    Matrix& w = model.weights[l];
    if (cfg.rule == UpdateRule::AdamW && cfg.weight_decay > 0)
      scale_inplace(w, 1.0 - cfg.eta * cfg.weight_decay);
    axpy(w, -cfg.eta * cfg.alpha, u);
    check_weights(w, l, t);
  }
  model.t = t + 1;
  return StepInfo{refreshed, kind_label(model.states[0].projector)};
}

StepInfo factored_train_step(FactoredState& model, const GradientOracle& oracle,
                             const OptConfig& cfg, RandomSource& master) {
  cfg.validate();
  if (schedule_is_sparse(cfg.schedule.kind))
    throw InvalidInput("factored_train_step: sparse schedules have no factored form");
  const std::int64_t t = model.t;
  const bool refreshed = t % cfg.tau == 0;
  const std::vector<Matrix> x = model.materialize_all();
  const std::vector<Matrix> grads = sample_gradients(x, oracle, cfg, refreshed, t, master);

  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    SubspaceState& st = model.states[l];
    FactoredLayer& fl = model.factors[l];
    if (refreshed) fl.W = fl.W + fl.B * fl.A;  // fold the finished window into W

    LayerStep step = subspace_step(st, grads[l], model.layers[l], cfg, t, refreshed, master, l);
    const auto& proj = std::get<LowRankProjector>(st.projector);
    const bool decay = cfg.rule == UpdateRule::AdamW && cfg.weight_decay > 0;
    const double keep = 1.0 - cfg.eta * cfg.weight_decay;

    if (refreshed) {
      // Re-seat the window: frozen factor takes the new basis, trainable
      // factor starts from this step's update.
      if (decay) scale_inplace(fl.W, keep);
      if (proj.side == Side::Left) {
        fl.B = proj.factor;
        fl.A = -cfg.eta * cfg.alpha * step.N;
      } else {
        fl.A = proj.factor.transpose();
        fl.B = -cfg.eta * cfg.alpha * step.N;
      }
    } else {
      if (decay) {
        // (1-eta*wd)(W + B A) - eta*alpha*lift(N) keeps the factored form by
        // scaling W and the trainable factor together.
        scale_inplace(fl.W, keep);
        scale_inplace(proj.side == Side::Left ? fl.A : fl.B, keep);
      }
      if (proj.side == Side::Left) {
        axpy(fl.A, -cfg.eta * cfg.alpha, step.N);
      } else {
        axpy(fl.B, -cfg.eta * cfg.alpha, step.N);
      }
    }
    check_weights(model.materialize(l), l, t);
  }
  model.t = t + 1;
  return StepInfo{refreshed, kind_label(model.states[0].projector)};
}

namespace {

template <typename State, typename StepFn, typename PointFn>
Trajectory run_loop(State& model, const GradientOracle& oracle, const OptConfig& cfg,
                    std::uint64_t seed, std::int64_t metric_every, StepFn do_step,
                    PointFn current_point) {
  cfg.validate();
  if (metric_every < 1) throw InvalidInput("run: metric_every must be >= 1");
  const auto t_begin = std::chrono::steady_clock::now();
  RandomSource master(seed);
  Trajectory traj;
  const std::int64_t t0 = model.t;
  for (std::int64_t i = 0; i < cfg.T; ++i) {
    const std::int64_t t = model.t;
    const bool record = t % metric_every == 0;
    TrajectoryPoint pt;
    if (record) {
      const std::vector<Matrix> x = current_point(model);
      pt.t = t;
      pt.loss = oracle.loss(x);
      pt.grad_norm_sq = grad_norm_sq(oracle.true_grad(x));
    }
    try {
      const StepInfo info = do_step(model, master);
      if (record) {
        pt.refreshed = info.refreshed;
        pt.projector_kind = info.projector_kind;
        traj.points.push_back(std::move(pt));
      }
    } catch (const NumericalDivergence&) {
      if (record) {
        pt.refreshed = t % cfg.tau == 0;
        pt.projector_kind = "diverged";
        traj.points.push_back(std::move(pt));
      }
      traj.diverged = true;
      break;
    }
  }
  traj.steps_completed = model.t - t0;
  traj.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return traj;
}

}  // namespace

Trajectory run(ModelState& model, const GradientOracle& oracle, const OptConfig& cfg,
               std::uint64_t seed, std::int64_t metric_every) {
  return run_loop(
      model, oracle, cfg, seed, metric_every,
      [&](ModelState& m, RandomSource& master) { return train_step(m, oracle, cfg, master); },
      [](const ModelState& m) { return m.weights; });
}

Trajectory run_factored(FactoredState& model, const GradientOracle& oracle, const OptConfig& cfg,
                        std::uint64_t seed, std::int64_t metric_every) {
  return run_loop(
      model, oracle, cfg, seed, metric_every,
      [&](FactoredState& m, RandomSource& master) {
        return factored_train_step(m, oracle, cfg, master);
      },
      [](const FactoredState& m) { return m.materialize_all(); });
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,loss,grad_norm_sq,refreshed,projector_kind\n";
  char buf[128];
  for (const TrajectoryPoint& p : traj.points) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%d,", static_cast<long long>(p.t), p.loss,
                  p.grad_norm_sq, p.refreshed ? 1 : 0);
    os << buf << p.projector_kind << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("trajectory CSV: empty stream");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,loss,grad_norm_sq,refreshed,projector_kind")
    throw IoError("trajectory CSV: bad header '" + line + "'");
  Trajectory traj;
  std::int64_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    TrajectoryPoint p;
    try {
      if (!std::getline(ss, field, ',')) throw std::invalid_argument("t");
      p.t = std::stoll(field);
      if (!std::getline(ss, field, ',')) throw std::invalid_argument("loss");
      p.loss = std::stod(field);
      if (!std::getline(ss, field, ',')) throw std::invalid_argument("grad_norm_sq");
      p.grad_norm_sq = std::stod(field);
      if (!std::getline(ss, field, ',')) throw std::invalid_argument("refreshed");
      p.refreshed = field == "1";
      if (!std::getline(ss, field)) throw std::invalid_argument("projector_kind");
      p.projector_kind = field;
    } catch (const std::exception&) {
      throw IoError("trajectory CSV: malformed row at line " + std::to_string(lineno));
    }
    traj.points.push_back(std::move(p));
  }
  return traj;
}

namespace {

void write_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

std::uint64_t read_u64(std::istream& is) {
  char b[8];
  is.read(b, 8);
  if (!is) throw IoError("checkpoint: truncated stream");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

constexpr std::uint64_t kCheckpointMagic = 0x4c4f5245435031ull;  // "LORECP1"

}  // namespace

void write_checkpoint(std::ostream& os, const ModelState& model) {
  write_u64(os, kCheckpointMagic);
  write_u64(os, static_cast<std::uint64_t>(model.t));
  write_u64(os, model.layers.size());
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const LayerSpec& spec = model.layers[l];
    write_u64(os, static_cast<std::uint64_t>(spec.m));
    write_u64(os, static_cast<std::uint64_t>(spec.n));
    write_u64(os, static_cast<std::uint64_t>(spec.sub));
    write_u64(os, spec.side_override ? (*spec.side_override == Side::Left ? 1 : 2) : 0);
    model.weights[l].write_binary(os);
    const SubspaceState& st = model.states[l];
    write_u64(os, st.initialized ? 1 : 0);
    if (st.initialized) {
      write_projector(os, st.projector);
      st.M.write_binary(os);
      st.V.write_binary(os);
    }
  }
  if (!os) throw IoError("checkpoint: write failure");
}

ModelState read_checkpoint(std::istream& is) {
  if (read_u64(is) != kCheckpointMagic) throw IoError("checkpoint: bad magic");
  ModelState model;
  model.t = static_cast<std::int64_t>(read_u64(is));
  const std::uint64_t layers = read_u64(is);
  for (std::uint64_t l = 0; l < layers; ++l) {
    LayerSpec spec;
    spec.m = static_cast<int>(read_u64(is));
    spec.n = static_cast<int>(read_u64(is));
    spec.sub = static_cast<std::int64_t>(read_u64(is));
    const std::uint64_t side = read_u64(is);
    if (side == 1) spec.side_override = Side::Left;
    if (side == 2) spec.side_override = Side::Right;
    model.layers.push_back(spec);
    model.weights.push_back(Matrix::read_binary(is));
    SubspaceState st;
    st.initialized = read_u64(is) == 1;
    if (st.initialized) {
      st.projector = read_projector(is);
      st.M = Matrix::read_binary(is);
      st.V = Matrix::read_binary(is);
    }
    model.states.push_back(std::move(st));
  }
  return model;
}

}  // namespace loreopt
