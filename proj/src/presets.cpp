#include "cdr/presets.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cdr {

namespace {

constexpr int kDeskEpochs = 1500;

struct Table {
  int epochs;
  std::vector<Phase> phases;
};

// Full-scale phase tables on a 5000-epoch budget.
Table full_phases(const std::string& id) {
  if (id == "ex1") return {5000, {{0, 1500, 1.0, 0.5, 0.1}, {1500, 3000, 0.8, 0.95, 0.1}, {3000, 5000, 0.35, 5.0, 0.1}}};
  if (id == "ex2") return {5000, {{0, 1000, 1.0, 0.05, 0.01}, {1000, 1500, 0.5, 0.1, 0.05}, {1500, 5000, 0.1, 0.5, 0.1}}};
  if (id == "ex3") return {5000, {{0, 1000, 1.0, 0.05, 0.0}, {1000, 1500, 0.5, 0.1, 0.0}, {1500, 5000, 0.1, 0.5, 0.0}}};
  if (id == "ex4") {
    return {5000,
            {{0, 1000, 1.0, 0.01, 0.0}, {1000, 2000, 1.0, 0.1, 0.0}, {2000, 3500, 1.0, 1.0, 0.0},
             {3500, 5000, 1.0, 5.0, 0.0}}};
  }
  if (id == "ex5") {
    return {5000,
            {{0, 1000, 0.1, 0.5, 0.1}, {1000, 2000, 0.35, 0.8, 0.3}, {2000, 3500, 0.5, 5.0, 0.8},
             {3500, 5000, 0.8, 10.0, 1.0}}};
  }
  throw std::invalid_argument("unknown example id '" + id + "'");
}

std::vector<Phase> rescale_phases(const std::vector<Phase>& phases, int from, int to) {
  std::vector<Phase> out;
  for (const auto& p : phases) {
    Phase q = p;
    q.start = static_cast<int>(std::lround(static_cast<double>(p.start) * to / from));
    q.end = static_cast<int>(std::lround(static_cast<double>(p.end) * to / from));
    if (q.end > q.start) out.push_back(q);
  }
  if (!out.empty()) out.back().end = to;
  return out;
}

// u_lift for the Burgers front: the travelling-wave profile itself.
BatchFunction burgers_lift(double reynolds) {
  return [reynolds](const ad::Var& z) {
    const ad::Var s = ad::col(z, 1) + ad::col(z, 2) - ad::col(z, 0);
    return ad::sigmoid(-(0.5 * reynolds) * s);
  };
}

}  // namespace

Scale parse_scale(const std::string& name) {
  if (name == "paper") return Scale::paper;
  if (name == "desk") return Scale::desk;
  throw std::invalid_argument("unknown scale '" + name + "' (expected desk or paper)");
}

std::string to_string(Scale scale) { return scale == Scale::paper ? "paper" : "desk"; }

std::shared_ptr<const Mesh> ExamplePreset::build_mesh() const {
  if (problem.dim == 1) {
    return std::make_shared<const Mesh>(build_interval_mesh(fem.n, problem.domain.lo[0], problem.domain.hi[0]));
  }
  return std::make_shared<const Mesh>(build_rectangle_mesh(fem.n, problem.domain));
}

TimeGrid ExamplePreset::time_grid() const {
  TimeGrid g;
  g.t0 = problem.t0;
  g.n_steps = fem.n_steps;
  g.dt = fem.dt;
  g.tf = problem.t0 + fem.dt * fem.n_steps;
  return g;
}

StabilizationConfig ExamplePreset::stabilization(Mode mode) const {
  StabilizationConfig s;
  s.mode = mode;
  s.Y = problem.Y;
  return s;
}

ExamplePreset example_preset(const std::string& id, Scale scale, std::uint64_t seed) {
  ExamplePreset p;
  p.id = id;
  p.scale = scale;
  if (id == "ex4") p.reynolds = scale == Scale::desk ? 1e3 : 1e4;
  p.problem = problem_by_id(id, p.reynolds);

  TrainPlan& plan = p.plan;
  NetworkConfig& net = p.network;
  net.n_sd = p.problem.dim;
  net.domain = p.problem.domain;
  net.seed = seed;
  plan.seed = seed;

  const Mode all3[] = {Mode::galerkin, Mode::supg, Mode::supg_yzb};
  if (id == "ex1") {
    p.fem = {200, 0.0025, 400, {all3, all3 + 3}};
    net.n_h = 128, net.n_r = 8, net.n_F = 24, net.sigma = 4.0;
    plan.k_s = 10, plan.batch_size = 256, plan.lr = 1e-4, plan.grad_clip = 0.3;
    plan.n_pde = 512, plan.residual_every = 3;
    net.lift = Lift{};
  } else if (id == "ex2") {
    p.fem = {64, 0.0025, 200, {Mode::supg_yzb}};
    net.n_h = 128, net.n_r = 8, net.n_F = 24, net.sigma = 4.0;
    plan.k_s = 5, plan.batch_size = 16000, plan.lr = scaled_lr(16000), plan.grad_clip = 1.0;
    plan.n_pde = 256, plan.residual_every = 1;
    net.lift = Lift{};
  } else if (id == "ex3") {
    p.fem = {64, 0.001, 1000, {Mode::supg, Mode::supg_yzb}};
    net.n_h = 96, net.n_r = 6, net.n_F = 16, net.sigma = 4.0;
    plan.k_s = 5, plan.batch_size = 16000, plan.lr = scaled_lr(16000), plan.grad_clip = 1.0;
    plan.n_pde = 384, plan.residual_every = 1;
    net.lift = Lift{};
  } else if (id == "ex4") {
    p.fem = {48, 0.01, 100, {Mode::supg, Mode::supg_yzb}};
    net.n_h = 96, net.n_r = 6, net.n_F = 16, net.sigma = 4.0;
    plan.k_s = 5, plan.batch_size = 5000, plan.lr = scaled_lr(5000), plan.grad_clip = 1.0;
    plan.n_pde = 256, plan.residual_every = 1;
    net.lift = Lift{burgers_lift(*p.reynolds), {}};
  } else if (id == "ex5") {
    p.fem = {64, 0.001, 250, {Mode::supg, Mode::supg_yzb}};
    net.n_h = 128, net.n_r = 8, net.n_F = 24, net.sigma = 4.0;
    plan.k_s = 10, plan.batch_size = 2048, plan.lr = 3e-4, plan.grad_clip = 1.0;
    plan.n_pde = 4096, plan.residual_every = 0;
  } else {
    throw std::invalid_argument("unknown example id '" + id + "' (expected ex1..ex5)");
  }

  const Table table = full_phases(id);
  plan.epochs = table.epochs;
  plan.phases = table.phases;
  if (scale == Scale::desk) {
    p.fem.n = std::max(2, p.fem.n / 2);
    plan.phases = rescale_phases(plan.phases, plan.epochs, kDeskEpochs);
    plan.epochs = kDeskEpochs;
  }
  plan.validate();
  net.validate();
  return p;
}

namespace {

void apply_section(ExamplePreset& p, const Config& c, const std::string& s) {
  auto num = [&](const char* key, double& v) {
    if (c.has(s, key)) v = c.get_double(s, key, v);
  };
  auto integer = [&](const char* key, int& v) {
    if (c.has(s, key)) v = c.get_int(s, key, v);
  };
  if (c.has(s, "reynolds")) {
    if (p.id != "ex4") throw std::invalid_argument("config: reynolds only applies to ex4");
    p.reynolds = c.get_double(s, "reynolds", 1e4);
    p.problem = problem_by_id(p.id, p.reynolds);
    p.network.lift = Lift{burgers_lift(*p.reynolds), {}};
  }
  num("Y", p.problem.Y);
  integer("n", p.fem.n);
  num("dt", p.fem.dt);
  integer("n_steps", p.fem.n_steps);
  if (c.has(s, "modes")) {
    p.fem.modes.clear();
    std::istringstream in(c.get(s, "modes"));
    std::string m;
    while (in >> m) p.fem.modes.push_back(parse_mode(m));
  }

  integer("n_h", p.network.n_h);
  integer("n_r", p.network.n_r);
  integer("n_F", p.network.n_F);
  num("sigma", p.network.sigma);

  TrainPlan& plan = p.plan;
  const int old_epochs = plan.epochs;
  integer("epochs", plan.epochs);
  integer("batch_size", plan.batch_size);
  num("lr", plan.lr);
  num("grad_clip", plan.grad_clip);
  integer("n_pde", plan.n_pde);
  num("d_min", plan.d_min);
  integer("n_int_min", plan.n_int_min);
  integer("k_s", plan.k_s);
  integer("residual_every", plan.residual_every);
  integer("bc_points", plan.bc_points);
  integer("bc_times", plan.bc_times);
  integer("patience", plan.plateau_patience);
  num("weight_decay", plan.weight_decay);
  integer("residual_chunk", plan.residual_chunk);
  integer("checkpoint_every", plan.checkpoint_every);
  if (c.has(s, "checkpoint_dir")) plan.checkpoint_dir = c.get(s, "checkpoint_dir");

  const auto rows = c.get_all(s, "phase");
  if (!rows.empty()) {
    plan.phases.clear();
    for (const auto& r : rows) {
      std::istringstream in(r);
      Phase ph;
      if (!(in >> ph.start >> ph.end >> ph.w_data >> ph.w_pde >> ph.w_bc)) {
        throw std::invalid_argument("config: phase needs 'start end w_data w_pde w_bc', got '" + r + "'");
      }
      plan.phases.push_back(ph);
    }
  } else if (plan.epochs != old_epochs && plan.epochs > 0) {
    plan.phases = rescale_phases(plan.phases, old_epochs, plan.epochs);
  }
}

}  // namespace

void apply_overrides(ExamplePreset& preset, const Config& config) {
  apply_section(preset, config, "");
  apply_section(preset, config, preset.id);
  preset.plan.validate();
  preset.network.validate();
  if (preset.fem.n < 1 || !(preset.fem.dt > 0.0) || preset.fem.n_steps < 1) {
    throw std::invalid_argument("config: FEM settings must be positive");
  }
}

Config to_config(const ExamplePreset& p) {
  Config c;
  const std::string s = p.id;
  auto put = [&](const char* k, double v) { c.set(s, k, format_double(v)); };
  if (p.reynolds) put("reynolds", *p.reynolds);
  put("Y", p.problem.Y);
  put("n", p.fem.n);
  put("dt", p.fem.dt);
  put("n_steps", p.fem.n_steps);
  std::string modes;
  for (Mode m : p.fem.modes) modes += (modes.empty() ? "" : " ") + to_string(m);
  c.set(s, "modes", modes);
  put("n_h", p.network.n_h);
  put("n_r", p.network.n_r);
  put("n_F", p.network.n_F);
  put("sigma", p.network.sigma);
  const TrainPlan& plan = p.plan;
  put("epochs", plan.epochs);
  put("batch_size", plan.batch_size);
  put("lr", plan.lr);
  put("grad_clip", plan.grad_clip);
  put("n_pde", plan.n_pde);
  put("d_min", plan.d_min);
  put("n_int_min", plan.n_int_min);
  put("k_s", plan.k_s);
  put("residual_every", plan.residual_every);
  put("bc_points", plan.bc_points);
  put("bc_times", plan.bc_times);
  put("patience", plan.plateau_patience);
  put("weight_decay", plan.weight_decay);
  for (const auto& ph : plan.phases) {
    std::ostringstream row;
    row << ph.start << ' ' << ph.end << ' ' << format_double(ph.w_data) << ' ' << format_double(ph.w_pde) << ' '
        << format_double(ph.w_bc);
    c.add(s, "phase", row.str());
  }
  return c;
}

}  // namespace cdr
