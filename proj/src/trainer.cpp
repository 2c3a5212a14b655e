#include "cdr/trainer.hpp"

#include "cdr/csv.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

namespace cdr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite_all(const std::vector<Tensor>& ts) {
  for (const auto& t : ts) {
    if (!t.allFinite()) return false;
  }
  return true;
}

std::vector<Tensor> zeros_like(const std::vector<Tensor>& ts) {
  std::vector<Tensor> out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back(Tensor::Zero(t.rows(), t.cols()));
  return out;
}

void axpy(std::vector<Tensor>& acc, double w, const std::vector<Tensor>& g) {
  for (size_t i = 0; i < acc.size(); ++i) acc[i] += w * g[i];
}

PointSet gather(const PointSet& all, const std::vector<int>& order, int begin, int end) {
  PointSet out;
  out.z.resize(end - begin, all.z.cols());
  out.u.resize(end - begin);
  for (int r = begin; r < end; ++r) {
    out.z.row(r - begin) = all.z.row(order[r]);
    out.u[r - begin] = all.u[order[r]];
  }
  return out;
}

BatchFunction network_function(const NetworkConfig& config, const TapeParams& tp) {
  return [&config, &tp](const ad::Var& z) { return forward(config, tp, z); };
}

struct ValueAndGrad {
  double value = 0.0;
  std::vector<Tensor> grads;
};

ValueAndGrad mse_gradient(const NetworkConfig& config, const NetworkParams& params, const PointSet& set,
                          bool want_grad) {
  ad::Tape tape;
  const TapeParams tp = place_params(tape, params);
  const ad::Var z = tape.leaf(set.z);
  const ad::Var target = tape.leaf(set.u);
  const ad::Var loss = ad::mean(ad::square(forward(config, tp, z) - target));
  ValueAndGrad out;
  out.value = loss.scalar();
  if (want_grad) out.grads = ad::grad(loss, tp.tensors);
  return out;
}

ValueAndGrad pde_gradient(const NetworkConfig& config, const NetworkParams& params, const ProblemSpec& problem,
                          const Tensor& points, double clip, int chunk, bool want_grad) {
  ValueAndGrad out;
  const Eigen::Index n = points.rows();
  if (want_grad) out.grads = zeros_like(params.tensors);
  chunk = std::max(chunk, 1);
  for (Eigen::Index begin = 0; begin < n; begin += chunk) {
    const Eigen::Index count = std::min<Eigen::Index>(chunk, n - begin);
    ad::Tape tape;
    const TapeParams tp = place_params(tape, params);
    const ad::Var z = tape.leaf(points.middleRows(begin, count));
    const ad::Var r = pde_residual(network_function(config, tp), problem, z);
    const ad::Var lc = (1.0 / static_cast<double>(n)) * ad::sum(ad::square(ad::clamp(r, -clip, clip)));
    out.value += lc.scalar();
    if (want_grad) {
      const auto g = ad::grad(lc, tp.tensors);
      axpy(out.grads, 1.0, g);
    }
  }
  return out;
}

}  // namespace

void TrainPlan::validate() const {
  if (epochs < 0) throw std::invalid_argument("plan: epochs must be non-negative");
  if (batch_size < 1) throw std::invalid_argument("plan: batch size must be positive");
  if (!(lr > 0.0) || !(grad_clip > 0.0)) throw std::invalid_argument("plan: lr and grad_clip must be positive");
  if (n_pde < 1 || n_int_min < 1 || k_s < 1) throw std::invalid_argument("plan: counts must be positive");
  if (!(d_min >= 0.0 && d_min < 0.5)) throw std::invalid_argument("plan: d_min must lie in [0, 0.5)");
  if (residual_every < 0) throw std::invalid_argument("plan: residual_every must be non-negative");
  int expect = 0;
  for (const auto& p : phases) {
    if (p.start != expect || p.end <= p.start) throw std::invalid_argument("plan: phases must tile [0, epochs)");
    if (p.w_data < 0.0 || p.w_pde < 0.0 || p.w_bc < 0.0) throw std::invalid_argument("plan: negative weight");
    expect = p.end;
  }
  if (epochs > 0 && expect != epochs) throw std::invalid_argument("plan: phases must tile [0, epochs)");
}

PhaseWeights phase_weights(const TrainPlan& plan, int epoch) {
  if (epoch < 0 || epoch >= plan.epochs) throw std::out_of_range("phase_weights: epoch out of range");
  for (const auto& p : plan.phases) {
    if (epoch >= p.start && epoch < p.end) return {p.w_data, p.w_pde, p.w_bc};
  }
  throw std::out_of_range("phase_weights: no phase covers epoch " + std::to_string(epoch));
}

double scaled_lr(int batch_size) {
  if (batch_size < 1) throw std::invalid_argument("scaled_lr: batch size must be positive");
  return 8e-5 * std::sqrt(static_cast<double>(batch_size) / 256.0);
}

double boundary_distance(const Box& box, const Point& x) {
  double d = kInf;
  for (int i = 0; i < box.dim; ++i) {
    d = std::min(d, std::min(x[i] - box.lo[i], box.hi[i] - x[i]) / box.width(i));
  }
  return d;
}

CollocationSet sample_interior(const Box& domain, double t_start, double t_end, int n, double d_min,
                               int n_int_min, NormalStream& rng) {
  if (n < 1) throw std::invalid_argument("sample_interior: n must be positive");
  if (t_end < t_start) throw std::invalid_argument("sample_interior: empty time window");
  const int dim = domain.dim;
  CollocationSet out;
  std::vector<double> kept;
  for (int round = 0; round <= 10; ++round) {
    kept.clear();
    for (int k = 0; k < n; ++k) {
      const double t = t_start + (t_end - t_start) * rng.uniform();
      Point x = Point::Zero();
      for (int i = 0; i < dim; ++i) x[i] = domain.lo[i] + domain.width(i) * rng.uniform();
      if (boundary_distance(domain, x) > d_min) {
        kept.push_back(t);
        for (int i = 0; i < dim; ++i) kept.push_back(x[i]);
      }
    }
    const int survivors = static_cast<int>(kept.size()) / (dim + 1);
    if (survivors >= n_int_min) {
      out.z = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          kept.data(), survivors, dim + 1);
      out.drawn = n;
      return out;
    }
    out.resamples = round + 1;
  }
  throw SamplingError("sample_interior: fewer than " + std::to_string(n_int_min) +
                      " interior points after 10 resamples");
}

PointSet snapshot_points(const SnapshotSeries& series, int k_s) {
  series.validate();
  const SnapshotSeries tail = series.last(k_s);
  const Mesh& mesh = *tail.mesh;
  const int nn = mesh.num_nodes();
  const int dim = mesh.dim;
  PointSet out;
  out.z.resize(static_cast<Eigen::Index>(tail.size()) * nn, dim + 1);
  out.u.resize(out.z.rows());
  Eigen::Index r = 0;
  for (int k = 0; k < tail.size(); ++k) {
    for (int i = 0; i < nn; ++i, ++r) {
      out.z(r, 0) = tail.times[k];
      for (int d = 0; d < dim; ++d) out.z(r, d + 1) = mesh.nodes(i, d);
      out.u[r] = tail.values[k][i];
    }
  }
  return out;
}

PointSet sample_boundary(const ProblemSpec& problem, const std::vector<double>& times, int n_points,
                         NormalStream& rng) {
  const Box& box = problem.domain;
  std::vector<std::pair<double, Point>> pts;
  for (double t : times) {
    if (box.dim == 1) {
      Point a = Point::Zero(), b = Point::Zero();
      a[0] = box.lo[0];
      b[0] = box.hi[0];
      pts.emplace_back(t, a);
      pts.emplace_back(t, b);
      continue;
    }
    for (int side = 0; side < 4; ++side) {
      for (int k = 0; k < n_points; ++k) {
        const double s = rng.uniform();
        Point x;
        switch (side) {
          case 0: x = {box.lo[0] + s * box.width(0), box.lo[1]}; break;
          case 1: x = {box.hi[0], box.lo[1] + s * box.width(1)}; break;
          case 2: x = {box.lo[0] + s * box.width(0), box.hi[1]}; break;
          default: x = {box.lo[0], box.lo[1] + s * box.width(1)}; break;
        }
        pts.emplace_back(t, x);
      }
    }
  }
  PointSet out;
  out.z.resize(static_cast<Eigen::Index>(pts.size()), box.dim + 1);
  out.u.resize(out.z.rows());
  for (size_t r = 0; r < pts.size(); ++r) {
    out.z(r, 0) = pts[r].first;
    for (int d = 0; d < box.dim; ++d) out.z(r, d + 1) = pts[r].second[d];
    out.u[r] = problem.u_dirichlet(pts[r].first, pts[r].second);
  }
  return out;
}

ad::Var pde_residual(const BatchFunction& u, const ProblemSpec& problem, const ad::Var& z) {
  ad::Tape& tape = *z.tape();
  const int dim = problem.dim;
  const Eigen::Index n = z.rows();
  if (z.cols() != dim + 1) throw std::invalid_argument("pde_residual: input width must be dim + 1");

  const Tensor& zv = z.value();
  Tensor bcoef(n, dim), ccoef(n, 1), fval(n, 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double t = zv(r, 0);
    Point x = Point::Zero();
    for (int d = 0; d < dim; ++d) x[d] = zv(r, d + 1);
    const Point b = problem.b(t, x, 1.0);
    for (int d = 0; d < dim; ++d) bcoef(r, d) = b[d];
    ccoef(r, 0) = problem.c(x);
    fval(r, 0) = problem.f(t, x);
  }

  const ad::Var uz = u(z);
  const ad::Var g = ad::grad_graph(ad::sum(uz), {z})[0];
  ad::Var r = ad::col(g, 0);
  ad::Var lap;
  ad::Var adv;
  for (int d = 0; d < dim; ++d) {
    const ad::Var gd = ad::col(g, d + 1);
    const ad::Var hd = ad::grad_graph(ad::sum(gd), {z})[0];
    const ad::Var second = ad::col(hd, d + 1);
    lap = lap.valid() ? lap + second : second;
    const ad::Var term = tape.leaf(bcoef.col(d)) * gd;
    adv = adv.valid() ? adv + term : term;
  }
  if (problem.solution_dependent_b) adv = uz * adv;
  r = r - problem.eps * lap + adv + tape.leaf(ccoef) * uz - tape.leaf(fval);
  return r;
}

ad::Var clipped_mean_square(const ad::Var& r, double clip) { return ad::mean(ad::square(ad::clamp(r, -clip, clip))); }

double data_loss(const NetworkConfig& config, const NetworkParams& params, const PointSet& data) {
  if (data.size() == 0) return 0.0;
  const Eigen::VectorXd u = evaluate(config, params, data.z);
  return (u - data.u).squaredNorm() / static_cast<double>(data.size());
}

double bc_loss(const NetworkConfig& config, const NetworkParams& params, const PointSet& boundary) {
  if (config.lift || boundary.size() == 0) return 0.0;
  return data_loss(config, params, boundary);
}

double pde_loss(const NetworkConfig& config, const NetworkParams& params, const ProblemSpec& problem,
                const Tensor& collocation, double clip) {
  if (collocation.rows() == 0) throw std::invalid_argument("pde_loss: empty collocation set");
  return pde_gradient(config, params, problem, collocation, clip, 256, false).value;
}

TrainState initial_state(const TrainPlan& plan, NetworkParams params) {
  TrainState s;
  s.m = zeros_like(params.tensors);
  s.v = zeros_like(params.tensors);
  s.lr = plan.lr;
  s.best_params = params;
  s.params = std::move(params);
  return s;
}

LossGradient hybrid_loss_gradient(const NetworkConfig& config, const NetworkParams& params,
                                  const ProblemSpec& problem, const TrainPlan& plan, const StepBatch& batch,
                                  Fault fault) {
  LossGradient out;
  StepResult& res = out.result;
  const PhaseWeights& w = batch.weights;

  ValueAndGrad data = mse_gradient(config, params, batch.data, true);
  res.data = data.value;
  res.data_points = batch.data.size();
  double total = w.w_data * data.value;

  ValueAndGrad pde;
  if (batch.collocation.rows() > 0) {
    pde = pde_gradient(config, params, problem, batch.collocation, plan.residual_clip, plan.residual_chunk,
                       w.w_pde != 0.0);
    res.pde = pde.value;
    res.pde_evaluated = true;
    res.pde_points = static_cast<int>(batch.collocation.rows());
    total += w.w_pde * pde.value;
  }

  ValueAndGrad bc;
  if (!config.lift && batch.boundary.size() > 0) {
    bc = mse_gradient(config, params, batch.boundary, w.w_bc != 0.0);
    res.bc = bc.value;
    res.bc_points = batch.boundary.size();
    total += w.w_bc * bc.value;
  }

  if (fault == Fault::inf_loss) {
    res.data = kInf;
    total = kInf;
  }
  if (fault == Fault::inf_total) total = kInf;

  if (!std::isfinite(total)) {
    res.fallback = true;
    total = res.data;
    if (!std::isfinite(total)) {
      res.total = total;
      res.discarded = true;
      return out;
    }
  }

  out.grads = zeros_like(params.tensors);
  if (total > plan.loss_clip || total < 0.0) {
    total = std::clamp(total, 0.0, plan.loss_clip);
  } else if (res.fallback) {
    axpy(out.grads, 1.0, data.grads);
  } else {
    axpy(out.grads, w.w_data, data.grads);
    if (res.pde_evaluated && w.w_pde != 0.0) axpy(out.grads, w.w_pde, pde.grads);
    if (!bc.grads.empty()) axpy(out.grads, w.w_bc, bc.grads);
  }
  res.total = total;

  if (fault == Fault::nan_gradient) out.grads[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  if (!finite_all(out.grads)) res.discarded = true;
  return out;
}

double clip_gradients(std::vector<Tensor>& grads, double g_max) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > g_max) {
    const double s = g_max / norm;
    for (auto& g : grads) g *= s;
  }
  return norm;
}

void adamw_update(TrainState& state, const TrainPlan& plan, const std::vector<Tensor>& grads) {
  ++state.step;
  const double lr = state.lr;
  const double c1 = 1.0 - std::pow(plan.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(plan.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < grads.size(); ++i) {
    Tensor& p = state.params.tensors[i];
    p *= 1.0 - lr * plan.weight_decay;
    state.m[i] = plan.beta1 * state.m[i] + (1.0 - plan.beta1) * grads[i];
    state.v[i] = plan.beta2 * state.v[i] + (1.0 - plan.beta2) * grads[i].cwiseAbs2();
    p.array() -= lr * (state.m[i].array() / c1) / ((state.v[i].array() / c2).sqrt() + plan.adam_eps);
  }
}

StepResult hybrid_step(TrainState& state, const NetworkConfig& config, const ProblemSpec& problem,
                       const TrainPlan& plan, const StepBatch& batch, Fault fault) {
  LossGradient lg = hybrid_loss_gradient(config, state.params, problem, plan, batch, fault);
  StepResult& res = lg.result;
  if (res.discarded) {
    ++state.nan_count;
    if (state.nan_count > plan.max_nan) {
      throw TrainingTerminated("training terminated: " + std::to_string(state.nan_count) +
                                   " non-finite steps",
                               state.best_params, state.history);
    }
    return res;
  }
  res.grad_norm = clip_gradients(lg.grads, plan.grad_clip);
  double sq = 0.0;
  for (const auto& g : lg.grads) sq += g.squaredNorm();
  res.clipped_norm = std::sqrt(sq);
  adamw_update(state, plan, lg.grads);
  return res;
}

double plateau_scheduler(TrainState& state, const TrainPlan& plan, double epoch_loss) {
  if (std::isfinite(epoch_loss) && epoch_loss < state.plateau_best * (1.0 - plan.plateau_threshold)) {
    state.plateau_best = epoch_loss;
    state.plateau_count = 0;
    return state.lr;
  }
  if (++state.plateau_count >= plan.plateau_patience) {
    state.lr = std::max(state.lr * plan.plateau_factor, plan.lr_min);
    state.plateau_count = 0;
  }
  return state.lr;
}

TrainResult train(const ProblemSpec& problem, const SnapshotSeries& snapshots, const TrainPlan& plan,
                  const NetworkConfig& config, const FaultSchedule& faults, const EpochCallback& on_epoch) {
  plan.validate();
  config.validate();
  TrainState state = initial_state(plan, init_params(config));
  TrainResult result;
  if (plan.epochs == 0) {
    result.params = state.params;
    result.final_params = state.params;
    return result;
  }

  const PointSet data = snapshot_points(snapshots, plan.k_s);
  const SnapshotSeries tail = snapshots.last(plan.k_s);
  const double t_start = tail.times.front();
  const double t_end = tail.times.back();
  const int n_bc_times = plan.bc_times > 0 ? std::min(plan.bc_times, tail.size()) : tail.size();
  const std::vector<double> bc_times(tail.times.end() - n_bc_times, tail.times.end());
  const bool need_bc = !config.lift;

  NormalStream rng(plan.seed * 0x9E3779B97F4A7C15ULL + 0x2545F4914F6CDD1DULL);
  const int n = data.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const int n_batches = (n + plan.batch_size - 1) / plan.batch_size;
  long global_batch = 0;

  if (!plan.checkpoint_dir.empty()) std::filesystem::create_directories(plan.checkpoint_dir);

  for (int epoch = 0; epoch < plan.epochs; ++epoch) {
    const PhaseWeights w = phase_weights(plan, epoch);
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform() * (i + 1));
      std::swap(order[i], order[j]);
    }
    PointSet boundary;
    if (need_bc) boundary = sample_boundary(problem, bc_times, plan.bc_points, rng);

    LossRecord rec;
    rec.epoch = epoch;
    rec.lr = state.lr;
    rec.w_data = w.w_data;
    rec.w_pde = w.w_pde;
    rec.w_bc = w.w_bc;
    int kept = 0, pde_steps = 0;
    for (int b = 0; b < n_batches; ++b, ++global_batch) {
      StepBatch batch;
      batch.weights = w;
      batch.data = gather(data, order, b * plan.batch_size, std::min(n, (b + 1) * plan.batch_size));
      const bool pde_now = plan.residual_every > 0 ? (global_batch % plan.residual_every == 0) : (b == 0);
      if (pde_now) {
        batch.collocation =
            sample_interior(problem.domain, t_start, t_end, plan.n_pde, plan.d_min, plan.n_int_min, rng).z;
      }
      if (need_bc) batch.boundary = boundary;
      const Fault fault = faults ? faults(global_batch) : Fault::none;
      const StepResult res = hybrid_step(state, config, problem, plan, batch, fault);
      result.data_point_total += res.data_points;
      result.pde_point_total += res.pde_points;
      result.bc_point_total += res.bc_points;
      if (res.discarded) continue;
      ++kept;
      rec.total += res.total;
      rec.data += res.data;
      rec.bc += res.bc;
      if (res.pde_evaluated) {
        ++pde_steps;
        rec.pde += res.pde;
      }
    }
    if (kept > 0) {
      rec.total /= kept;
      rec.data /= kept;
      rec.bc /= kept;
    } else {
      rec.total = rec.data = rec.bc = std::numeric_limits<double>::quiet_NaN();
    }
    if (pde_steps > 0) rec.pde /= pde_steps;
    state.history.push_back(rec);

    if (std::isfinite(rec.total) && rec.total < state.best_loss) {
      state.best_loss = rec.total;
      state.best_epoch = epoch;
      state.best_params = state.params;
    }
    plateau_scheduler(state, plan, rec.total);
    if (on_epoch) on_epoch(rec);

    if (!plan.checkpoint_dir.empty() && (epoch + 1) % plan.checkpoint_every == 0) {
      save_checkpoint(plan.checkpoint_dir + "/checkpoint_latest.txt", config, state.params);
      save_checkpoint(plan.checkpoint_dir + "/checkpoint_best.txt", config, state.best_params);
    }
  }

  result.final_params = state.params;
  result.params = state.best_epoch >= 0 ? state.best_params : state.params;
  result.best_epoch = state.best_epoch;
  result.best_loss = state.best_loss;
  result.history = std::move(state.history);
  return result;
}

void write_loss_history(const std::string& path, const std::vector<LossRecord>& history) {
  CsvTable t;
  t.header = {"epoch", "total", "data", "pde", "bc", "lr", "w_data", "w_pde", "w_bc"};
  for (const auto& r : history) {
    t.rows.push_back({static_cast<double>(r.epoch), r.total, r.data, r.pde, r.bc, r.lr, r.w_data, r.w_pde, r.w_bc});
  }
  write_csv(path, t);
}

std::vector<LossRecord> read_loss_history(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int c[9] = {t.column("epoch"), t.column("total"), t.column("data"), t.column("pde"), t.column("bc"),
                    t.column("lr"),    t.column("w_data"), t.column("w_pde"), t.column("w_bc")};
  std::vector<LossRecord> out;
  for (const auto& r : t.rows) {
    out.push_back({static_cast<int>(r[c[0]]), r[c[1]], r[c[2]], r[c[3]], r[c[4]], r[c[5]], r[c[6]], r[c[7]],
                   r[c[8]]});
  }
  return out;
}

}  // namespace cdr
