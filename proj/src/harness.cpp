#include "cdr/harness.hpp"

#include "cdr/quadrature.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cdr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double weighted_norm(const Eigen::VectorXd& w, const Eigen::VectorXd& diff) {
  return std::sqrt(w.dot(diff.cwiseAbs2()));
}

Eigen::VectorXd sample(const MeshQuadrature& q, const ScalarField& f, double t) {
  Eigen::VectorXd v(q.size());
  for (int i = 0; i < q.size(); ++i) v[i] = f(t, q.x.row(i).transpose());
  return v;
}

}  // namespace

ErrorRule terminal_rule(int dim) { return dim == 1 ? ErrorRule{8, 64} : ErrorRule{4, 4}; }
ErrorRule history_rule(int dim) { return dim == 1 ? ErrorRule{4, 16} : ErrorRule{3, 1}; }

Eigen::VectorXd MeshQuadrature::interpolate(const Eigen::VectorXd& field) const {
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) {
    v[i] = shape(i, 0) * field[dofs(i, 0)] + shape(i, 1) * field[dofs(i, 1)] + shape(i, 2) * field[dofs(i, 2)];
  }
  return v;
}

MeshQuadrature mesh_quadrature(const Mesh& mesh, const ErrorRule& rule) {
  const QuadratureRule r = high_order_rule(mesh.dim, rule.points, rule.subdivisions);
  const int n = mesh.num_elements() * r.size();
  MeshQuadrature q;
  q.x.resize(n, 2);
  q.w.resize(n);
  q.shape.resize(n, 3);
  q.dofs.resize(n, 3);
  int k = 0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry g = element_geometry(mesh, e);
    Eigen::Vector3i dofs;
    for (int a = 0; a < 3; ++a) dofs[a] = mesh.elements(e, std::min(a, mesh.dim));
    for (int i = 0; i < r.size(); ++i, ++k) {
      q.x.row(k) = g.map(r.points[i]).transpose();
      q.w[k] = r.weights[i] * g.measure;
      q.shape.row(k) = r.points[i].transpose();
      q.dofs.row(k) = dofs.transpose();
    }
  }
  return q;
}

double l2_error(const Mesh& mesh, const Eigen::VectorXd& field, const ScalarField& exact, double t,
                const ErrorRule& rule) {
  const MeshQuadrature q = mesh_quadrature(mesh, rule);
  return weighted_norm(q.w, q.interpolate(field) - sample(q, exact, t));
}

double l2_error(const Mesh& mesh, const Eigen::VectorXd& field, const ScalarField& exact, double t) {
  return l2_error(mesh, field, exact, t, terminal_rule(mesh.dim));
}

double nodal_rms_error(const Mesh& mesh, const Eigen::VectorXd& field, const ScalarField& exact, double t) {
  double s = 0.0;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const double d = field[i] - exact(t, mesh.node(i));
    s += d * d;
  }
  return std::sqrt(s / mesh.num_nodes());
}

double l2_norm(const Mesh& mesh, const Eigen::VectorXd& field) {
  // Degree-2 integrand: the 3-point Gauss rule per direction is exact.
  const MeshQuadrature q = mesh_quadrature(mesh, {3, 1});
  return weighted_norm(q.w, q.interpolate(field));
}

double l2_difference(const Mesh& mesh, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return l2_norm(mesh, a - b);
}

Tensor space_time(double t, const Eigen::Matrix<double, Eigen::Dynamic, 2>& x, int dim) {
  Tensor z(x.rows(), dim + 1);
  z.col(0).setConstant(t);
  z.rightCols(dim) = x.leftCols(dim);
  return z;
}

Eigen::VectorXd evaluate_chunked(const NetworkConfig& config, const NetworkParams& params, const Tensor& z,
                                 int chunk) {
  Eigen::VectorXd out(z.rows());
  for (Eigen::Index s = 0; s < z.rows(); s += chunk) {
    const Eigen::Index n = std::min<Eigen::Index>(chunk, z.rows() - s);
    out.segment(s, n) = evaluate(config, params, z.middleRows(s, n));
  }
  return out;
}

double network_l2_error(const NetworkConfig& config, const NetworkParams& params, const Mesh& mesh,
                        const ScalarField& exact, double t, const ErrorRule& rule) {
  const MeshQuadrature q = mesh_quadrature(mesh, rule);
  const Eigen::VectorXd u = evaluate_chunked(config, params, space_time(t, q.x, mesh.dim));
  return weighted_norm(q.w, u - sample(q, exact, t));
}

double network_l2_difference(const NetworkConfig& config, const NetworkParams& params, const Mesh& mesh,
                             const Eigen::VectorXd& field, double t, const ErrorRule& rule) {
  const MeshQuadrature q = mesh_quadrature(mesh, rule);
  const Eigen::VectorXd u = evaluate_chunked(config, params, space_time(t, q.x, mesh.dim));
  return weighted_norm(q.w, u - q.interpolate(field));
}

Line parse_line(const std::string& spec, const Box& domain) {
  Line line;
  line.name = spec;
  const Point lo = domain.lo;
  const Point hi = domain.hi;
  if (domain.dim == 1) {
    line.from = Point(lo[0], 0.0);
    line.to = Point(hi[0], 0.0);
    return line;
  }
  auto bad = [&]() { return std::invalid_argument("bad line spec '" + spec + "'"); };
  auto value_after = [&](size_t pos) {
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(spec.substr(pos), &used);
    } catch (const std::logic_error&) {
      throw bad();
    }
    if (pos + used != spec.size()) throw bad();
    return v;
  };
  if (spec == "diagonal") {
    line.from = lo;
    line.to = hi;
  } else if (spec.rfind("x1=", 0) == 0) {
    const double v = value_after(3);
    line.from = Point(v, lo[1]);
    line.to = Point(v, hi[1]);
  } else if (spec.rfind("x2=", 0) == 0) {
    const double v = value_after(3);
    line.from = Point(lo[0], v);
    line.to = Point(hi[0], v);
  } else if (spec.rfind("anti:", 0) == 0) {
    // x1 + x2 = c clipped to the box.
    const double c = value_after(5);
    const double a = std::max(lo[0], c - hi[1]);
    const double b = std::min(hi[0], c - lo[1]);
    if (a > b) throw std::invalid_argument("line '" + spec + "' misses the domain");
    line.from = Point(a, c - a);
    line.to = Point(b, c - b);
  } else {
    double v[4];
    char sep[3];
    std::istringstream in(spec);
    in >> v[0] >> sep[0] >> v[1] >> sep[1] >> v[2] >> sep[2] >> v[3];
    if (!in || sep[0] != ',' || sep[1] != ':' || sep[2] != ',') throw bad();
    line.from = Point(v[0], v[1]);
    line.to = Point(v[2], v[3]);
  }
  return line;
}

CsvTable cross_section(const Mesh& mesh, const std::vector<std::pair<std::string, Eigen::VectorXd>>& fields,
                       const Line& line, int n_samples, double t, const NetworkConfig* config,
                       const NetworkParams* params, const ScalarField* exact) {
  if (n_samples < 2) throw std::invalid_argument("cross_section: need at least two samples");
  if (!mesh.domain.contains(line.from) || !mesh.domain.contains(line.to)) {
    throw std::invalid_argument("cross_section: line '" + line.name + "' leaves the domain");
  }
  const bool with_net = config != nullptr && params != nullptr;
  CsvTable table;
  table.header = {"s", "x1"};
  if (mesh.dim == 2) table.header.push_back("x2");
  for (const auto& f : fields) table.header.push_back(f.first);
  if (with_net) table.header.push_back("pinn");
  if (exact) table.header.push_back("exact");

  Eigen::Matrix<double, Eigen::Dynamic, 2> pts(n_samples, 2);
  for (int i = 0; i < n_samples; ++i) {
    const double s = static_cast<double>(i) / (n_samples - 1);
    pts.row(i) = ((1.0 - s) * line.from + s * line.to).transpose();
  }
  Eigen::VectorXd net;
  if (with_net) net = evaluate_chunked(*config, *params, space_time(t, pts, mesh.dim));
  const double length = (line.to - line.from).norm();
  for (int i = 0; i < n_samples; ++i) {
    const Point x = pts.row(i).transpose();
    std::vector<double> row = {length * i / (n_samples - 1), x[0]};
    if (mesh.dim == 2) row.push_back(x[1]);
    for (const auto& f : fields) row.push_back(interpolate(mesh, f.second, x));
    if (with_net) row.push_back(net[i]);
    if (exact) row.push_back((*exact)(t, x));
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::pair<double, double> network_bounds(const NetworkConfig& config, const NetworkParams& params, const Box& domain,
                                         double t, int per_direction) {
  const int n = per_direction;
  const int total = domain.dim == 1 ? n : n * n;
  Eigen::Matrix<double, Eigen::Dynamic, 2> x(total, 2);
  x.setZero();
  for (int k = 0; k < total; ++k) {
    const int i = k % n;
    const int j = k / n;
    x(k, 0) = domain.lo[0] + domain.width(0) * i / (n - 1);
    if (domain.dim == 2) x(k, 1) = domain.lo[1] + domain.width(1) * j / (n - 1);
  }
  const Eigen::VectorXd u = evaluate_chunked(config, params, space_time(t, x, domain.dim));
  return {u.minCoeff(), u.maxCoeff()};
}

const MethodReport* RunReport::find(const std::string& method) const {
  for (const auto& m : methods) {
    if (m.method == method) return &m;
  }
  return nullptr;
}

double RunReport::difference(const std::string& key) const {
  for (const auto& d : differences) {
    if (d.first == key) return d.second;
  }
  throw std::out_of_range("report has no difference '" + key + "'");
}

void RunReport::validate() const {
  for (const auto& m : methods) {
    for (double v : {m.l2, m.l2_nodal, m.l2_norm}) {
      if (v < 0.0) throw std::logic_error(m.method + ": negative norm");
    }
    for (double v : m.history_l2) {
      if (v < 0.0) throw std::logic_error(m.method + ": negative error in history");
    }
    if (m.history_t.size() != m.history_l2.size()) throw std::logic_error(m.method + ": history size mismatch");
    if (m.min > m.max) throw std::logic_error(m.method + ": min exceeds max");
  }
  for (const auto& d : differences) {
    if (d.second < 0.0) throw std::logic_error("negative difference " + d.first);
  }
  double sum = 0.0;
  for (const auto& t : timings) {
    if (t.seconds < 0.0 || t.seconds > total_seconds) throw std::logic_error("timing " + t.name + " out of range");
    sum += t.seconds;
  }
  if (sum > total_seconds * (1.0 + 1e-9)) throw std::logic_error("timings exceed the total wall time");
}

void write_report(const RunReport& r, const std::string& dir) {
  std::filesystem::create_directories(dir);
  Config c;
  c.set("run", "id", r.id);
  c.set("run", "scale", r.scale);
  c.set("run", "seed", std::to_string(r.seed));
  c.set("run", "t_final", format_double(r.t_final));
  c.set("run", "epochs", std::to_string(r.epochs));
  c.set("run", "best_epoch", std::to_string(r.best_epoch));
  c.set("run", "best_loss", format_double(r.best_loss));
  c.set("run", "total_seconds", format_double(r.total_seconds));
  for (const auto& f : r.files) c.add("run", "file", f);
  for (const auto& m : r.methods) {
    const std::string s = "method." + m.method;
    c.set(s, "l2", format_double(m.l2));
    c.set(s, "l2_nodal", format_double(m.l2_nodal));
    c.set(s, "l2_norm", format_double(m.l2_norm));
    c.set(s, "min", format_double(m.min));
    c.set(s, "max", format_double(m.max));
    CsvTable h;
    h.header = {"t", "l2"};
    for (size_t i = 0; i < m.history_t.size(); ++i) h.rows.push_back({m.history_t[i], m.history_l2[i]});
    write_csv(dir + "/l2_" + m.method + ".csv", h);
  }
  for (const auto& d : r.differences) c.set("differences", d.first, format_double(d.second));
  for (const auto& t : r.timings) c.set("timings", t.name, format_double(t.seconds));
  c.save(dir + "/report.txt");
}

RunReport read_report(const std::string& dir) {
  const Config c = Config::load(dir + "/report.txt");
  RunReport r;
  r.id = c.get("run", "id");
  r.scale = c.get("run", "scale");
  r.seed = std::stoull(c.get("run", "seed"));
  r.t_final = c.get_double("run", "t_final", 0.0);
  r.epochs = c.get_int("run", "epochs", 0);
  r.best_epoch = c.get_int("run", "best_epoch", -1);
  r.best_loss = c.get_double("run", "best_loss", kNaN);
  r.total_seconds = c.get_double("run", "total_seconds", 0.0);
  r.files = c.get_all("run", "file");
  for (const auto& section : c.sections()) {
    const auto entries = c.entries(section);
    if (section.rfind("method.", 0) == 0) {
      MethodReport m;
      m.method = section.substr(7);
      m.l2 = c.get_double(section, "l2", kNaN);
      m.l2_nodal = c.get_double(section, "l2_nodal", kNaN);
      m.l2_norm = c.get_double(section, "l2_norm", kNaN);
      m.min = c.get_double(section, "min", kNaN);
      m.max = c.get_double(section, "max", kNaN);
      const CsvTable h = read_csv(dir + "/l2_" + m.method + ".csv");
      m.history_t = h.column_values("t");
      m.history_l2 = h.column_values("l2");
      r.methods.push_back(std::move(m));
    } else if (section == "differences") {
      for (const auto& [k, v] : entries) r.differences.emplace_back(k, std::stod(v));
    } else if (section == "timings") {
      for (const auto& [k, v] : entries) r.timings.push_back({k, std::stod(v)});
    }
  }
  return r;
}

std::string format_report(const RunReport& r) {
  std::ostringstream out;
  out << "example " << r.id << " (" << r.scale << " scale, seed " << r.seed << ", t_f = " << r.t_final << ")\n";
  out << "  method        L2(int)        L2(nodal)      ||u||          min            max\n";
  auto cell = [&](double v) {
    std::ostringstream s;
    s.precision(6);
    s << std::scientific << v;
    std::string str = s.str();
    str.resize(std::max<size_t>(str.size(), 15), ' ');
    return str;
  };
  for (const auto& m : r.methods) {
    std::string name = m.method;
    name.resize(std::max<size_t>(name.size(), 14), ' ');
    out << "  " << name << cell(m.l2) << cell(m.l2_nodal) << cell(m.l2_norm) << cell(m.min) << cell(m.max) << '\n';
  }
  for (const auto& d : r.differences) out << "  ||" << d.first << "|| = " << d.second << '\n';
  if (r.epochs > 0) out << "  training: " << r.epochs << " epochs, best epoch " << r.best_epoch << ", loss " << r.best_loss << '\n';
  for (const auto& t : r.timings) out << "  time " << t.name << ": " << t.seconds << " s\n";
  out << "  total: " << r.total_seconds << " s\n";
  return out.str();
}

ExamplePreset resolve_preset(const std::string& id, const RunOptions& options) {
  ExamplePreset p = example_preset(id, options.scale, options.seed);
  if (options.overrides) apply_overrides(p, *options.overrides);
  if (options.epoch_factor < 0.0) throw std::invalid_argument("epoch factor must be non-negative");
  if (options.epoch_factor != 1.0) {
    const int epochs = static_cast<int>(std::lround(p.plan.epochs * options.epoch_factor));
    if (epochs == 0) {
      p.plan.epochs = 0;
      p.plan.phases.clear();
    } else {
      Config c;
      c.set(id, "epochs", std::to_string(epochs));
      apply_overrides(p, c);
    }
  }
  return p;
}

std::vector<std::string> default_lines(const std::string& id) {
  if (id == "ex1") return {"interval"};
  if (id == "ex5") return {"x2=0.125", "anti:0.75"};
  return {"diagonal"};
}

namespace {

std::vector<int> history_indices(int n_snapshots) {
  const int last = n_snapshots - 1;
  const int stride = std::max(1, last / 50);
  std::vector<int> idx;
  for (int k = 0; k < last; k += stride) idx.push_back(k);
  idx.push_back(last);
  return idx;
}

std::string file_tag(const std::string& spec) {
  std::string s;
  for (char ch : spec) s += std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' ? ch : '_';
  return s;
}

MethodReport fem_metrics(const std::string& name, const ExamplePreset& preset, const SnapshotSeries& s) {
  MethodReport m;
  m.method = name;
  const Mesh& mesh = *s.mesh;
  const Eigen::VectorXd& u = s.values.back();
  const double t = s.times.back();
  m.min = u.minCoeff();
  m.max = u.maxCoeff();
  m.l2_norm = l2_norm(mesh, u);
  if (preset.problem.exact) {
    const ScalarField& ex = *preset.problem.exact;
    m.l2 = l2_error(mesh, u, ex, t);
    m.l2_nodal = nodal_rms_error(mesh, u, ex, t);
    const MeshQuadrature q = mesh_quadrature(mesh, history_rule(mesh.dim));
    for (int k : history_indices(s.size())) {
      m.history_t.push_back(s.times[k]);
      m.history_l2.push_back(weighted_norm(q.w, q.interpolate(s.values[k]) - sample(q, ex, s.times[k])));
    }
  }
  return m;
}

void say(const RunOptions& o, const std::string& msg) {
  if (o.log) *o.log << msg << std::endl;
}

}  // namespace

PinnOutcome train_on_snapshots(const ExamplePreset& preset, const SnapshotSeries& snapshots,
                               const RunOptions& options) {
  PinnOutcome out;
  const auto t0 = Clock::now();
  TrainPlan plan = preset.plan;
  if (!options.out_dir.empty() && plan.checkpoint_dir.empty()) plan.checkpoint_dir = options.out_dir + "/checkpoints";
  EpochCallback progress;
  if (options.log && options.log_every > 0) {
    progress = [&, start = Clock::now()](const LossRecord& r) {
      if (r.epoch % options.log_every == 0 || r.epoch + 1 == plan.epochs) {
        std::ostringstream s;
        s << "  epoch " << r.epoch << "  total " << r.total << "  data " << r.data << "  pde " << r.pde << "  bc "
          << r.bc << "  lr " << r.lr << "  (" << seconds_since(start) << " s)";
        say(options, s.str());
      }
    };
  }
  out.training = train(preset.problem, snapshots, plan, preset.network, {}, progress);
  out.train_seconds = seconds_since(t0);

  const auto t1 = Clock::now();
  MethodReport& m = out.metrics;
  m.method = "pinn";
  const Mesh& mesh = *snapshots.mesh;
  const NetworkParams& params = out.training.params;
  const double tf = snapshots.times.back();
  const int per_dir = mesh.dim == 1 ? 2001 : 129;
  std::tie(m.min, m.max) = network_bounds(preset.network, params, mesh.domain, tf, per_dir);
  {
    const MeshQuadrature q = mesh_quadrature(mesh, terminal_rule(mesh.dim));
    const Eigen::VectorXd u = evaluate_chunked(preset.network, params, space_time(tf, q.x, mesh.dim));
    m.l2_norm = weighted_norm(q.w, u);
    if (preset.problem.exact) m.l2 = weighted_norm(q.w, u - sample(q, *preset.problem.exact, tf));
  }
  if (preset.problem.exact) {
    const ScalarField& ex = *preset.problem.exact;
    const Eigen::VectorXd nodal = evaluate_chunked(preset.network, params, space_time(tf, mesh.nodes, mesh.dim));
    m.l2_nodal = nodal_rms_error(mesh, nodal, ex, tf);
    const SnapshotSeries tail = snapshots.last(plan.k_s);
    const MeshQuadrature q = mesh_quadrature(mesh, history_rule(mesh.dim));
    for (double t : tail.times) {
      const Eigen::VectorXd u = evaluate_chunked(preset.network, params, space_time(t, q.x, mesh.dim));
      m.history_t.push_back(t);
      m.history_l2.push_back(weighted_norm(q.w, u - sample(q, ex, t)));
    }
  }
  out.eval_seconds = seconds_since(t1);
  return out;
}

RunReport run_example(const std::string& id, const RunOptions& options) {
  return run_preset(resolve_preset(id, options), options);
}

RunReport run_preset(const ExamplePreset& preset, const RunOptions& options) {
  const auto start = Clock::now();
  RunReport report;
  report.id = preset.id;
  report.scale = to_string(preset.scale);
  report.seed = preset.plan.seed;
  report.epochs = preset.plan.epochs;
  const bool write = !options.out_dir.empty();
  if (write) std::filesystem::create_directories(options.out_dir);

  const auto mesh = preset.build_mesh();
  const TimeGrid grid = preset.time_grid();
  report.t_final = grid.tf;
  std::vector<std::pair<std::string, SnapshotSeries>> fem;
  for (Mode mode : preset.fem.modes) {
    const auto t0 = Clock::now();
    say(options, preset.id + ": FEM " + to_string(mode));
    SnapshotSeries s = solve_fem(preset.problem, mesh, preset.stabilization(mode), grid);
    report.timings.push_back({"fem_" + to_string(mode), seconds_since(t0)});
    if (write) {
      write_snapshots(s, options.out_dir + "/fem_" + to_string(mode));
      report.files.push_back("fem_" + to_string(mode) + "/snapshots.csv");
    }
    fem.emplace_back(to_string(mode), std::move(s));
  }

  const auto t_metrics = Clock::now();
  for (const auto& [name, s] : fem) report.methods.push_back(fem_metrics(name, preset, s));
  double metric_seconds = seconds_since(t_metrics);

  const SnapshotSeries* reference = nullptr;
  for (const auto& [name, s] : fem) {
    if (name == to_string(Mode::supg_yzb)) reference = &s;
  }

  std::optional<PinnOutcome> pinn;
  if (preset.plan.epochs > 0) {
    if (!reference) throw std::invalid_argument(preset.id + ": PINN training needs the supg-yzb run");
    say(options, preset.id + ": training on the last " + std::to_string(preset.plan.k_s) + " snapshots");
    pinn = train_on_snapshots(preset, *reference, options);
    report.timings.push_back({"train", pinn->train_seconds});
    metric_seconds += pinn->eval_seconds;
    report.methods.push_back(pinn->metrics);
    report.best_epoch = pinn->training.best_epoch;
    report.best_loss = pinn->training.best_loss;
    if (write) {
      write_loss_history(options.out_dir + "/loss_history.csv", pinn->training.history);
      save_checkpoint(options.out_dir + "/pinn_best.txt", preset.network, pinn->training.params);
      report.files.push_back("loss_history.csv");
      report.files.push_back("pinn_best.txt");
    }
  }

  const auto t_post = Clock::now();
  // Method-vs-method distances at t_f (the only comparison available without an exact solution).
  const Mesh& m = *mesh;
  for (size_t i = 0; i < fem.size(); ++i) {
    for (size_t j = i + 1; j < fem.size(); ++j) {
      report.differences.emplace_back(fem[i].first + ":" + fem[j].first,
                                      l2_difference(m, fem[i].second.values.back(), fem[j].second.values.back()));
    }
  }
  if (pinn && reference) {
    report.differences.emplace_back(
        "pinn:supg-yzb", network_l2_difference(preset.network, pinn->training.params, m, reference->values.back(),
                                               grid.tf, terminal_rule(m.dim)));
  }

  if (write) {
    std::vector<std::pair<std::string, Eigen::VectorXd>> fields;
    for (const auto& [name, s] : fem) fields.emplace_back(name, s.values.back());
    const ScalarField* exact = preset.problem.exact ? &*preset.problem.exact : nullptr;
    for (const auto& spec : default_lines(preset.id)) {
      const Line line = parse_line(spec, preset.problem.domain);
      const int n_samples = m.dim == 1 ? 2001 : 513;
      const CsvTable t = cross_section(m, fields, line, n_samples, grid.tf, pinn ? &preset.network : nullptr,
                                       pinn ? &pinn->training.params : nullptr, exact);
      const std::string file = "cross_section_" + file_tag(spec) + ".csv";
      write_csv(options.out_dir + "/" + file, t);
      report.files.push_back(file);
    }
    CsvTable terminal;
    terminal.header = {"x1"};
    if (m.dim == 2) terminal.header.push_back("x2");
    for (const auto& f : fields) terminal.header.push_back(f.first);
    Eigen::VectorXd net;
    if (pinn) {
      terminal.header.push_back("pinn");
      net = evaluate_chunked(preset.network, pinn->training.params, space_time(grid.tf, m.nodes, m.dim));
    }
    for (int i = 0; i < m.num_nodes(); ++i) {
      std::vector<double> row = {m.nodes(i, 0)};
      if (m.dim == 2) row.push_back(m.nodes(i, 1));
      for (const auto& f : fields) row.push_back(f.second[i]);
      if (pinn) row.push_back(net[i]);
      terminal.rows.push_back(std::move(row));
    }
    write_csv(options.out_dir + "/terminal_fields.csv", terminal);
    report.files.push_back("terminal_fields.csv");
  }
  metric_seconds += seconds_since(t_post);
  report.timings.push_back({"metrics", metric_seconds});
  report.total_seconds = seconds_since(start);
  report.validate();
  if (write) write_report(report, options.out_dir);
  return report;
}

}  // namespace cdr
