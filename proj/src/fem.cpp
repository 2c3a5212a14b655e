#include "cdr/fem.hpp"

#include "cdr/csv.hpp"
#include "cdr/quadrature.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

namespace cdr {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::galerkin: return "galerkin";
    case Mode::supg: return "supg";
    case Mode::supg_yzb: return "supg-yzb";
  }
  return "?";
}

Mode parse_mode(const std::string& name) {
  if (name == "galerkin" || name == "gfem") return Mode::galerkin;
  if (name == "supg") return Mode::supg;
  if (name == "supg-yzb" || name == "supg_yzb") return Mode::supg_yzb;
  throw std::invalid_argument("unknown mode '" + name + "' (expected galerkin, supg or supg-yzb)");
}

void StabilizationConfig::validate() const {
  if (Y == 0.0) throw std::invalid_argument("StabilizationConfig: Y must be nonzero");
  if (beta != 2.0) throw std::invalid_argument("StabilizationConfig: only beta = 2 is supported");
}

TimeGrid TimeGrid::from_steps(double t0, double tf, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
  TimeGrid g;
  g.t0 = t0;
  g.tf = tf;
  g.n_steps = n_steps;
  g.dt = (tf - t0) / n_steps;
  g.validate();
  return g;
}

void TimeGrid::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be positive");
  if (n_steps < 1) throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
  if (std::abs(t0 + n_steps * dt - tf) > 1e-12 * std::max(1.0, std::abs(tf))) {
    throw std::invalid_argument("TimeGrid: t0 + n_steps * dt != tf");
  }
}

SnapshotSeries SnapshotSeries::last(int k) const {
  SnapshotSeries out;
  out.mesh = mesh;
  const int start = std::max(0, size() - std::max(k, 0));
  out.times.assign(times.begin() + start, times.end());
  out.values.assign(values.begin() + start, values.end());
  return out;
}

void SnapshotSeries::validate() const {
  if (!mesh) throw std::invalid_argument("SnapshotSeries: missing mesh");
  if (times.size() != values.size()) throw std::invalid_argument("SnapshotSeries: times/values size mismatch");
  for (size_t k = 0; k < times.size(); ++k) {
    if (k > 0 && !(times[k] > times[k - 1])) {
      throw std::invalid_argument("SnapshotSeries: times not strictly increasing");
    }
    if (values[k].size() != mesh->num_nodes()) {
      throw std::invalid_argument("SnapshotSeries: snapshot length differs from node count");
    }
  }
}

namespace {

struct LocalField {
  double value = 0.0;
  Point grad = Point::Zero();
};

LocalField eval_field(const Mesh& mesh, const ElementGeometry& g, int e, const Eigen::VectorXd& u,
                      const Eigen::Vector3d& bary) {
  LocalField out;
  for (int a = 0; a < g.n_local; ++a) {
    const double ua = u[mesh.elements(e, a)];
    out.value += bary[a] * ua;
    out.grad += ua * g.grads.row(a).transpose();
  }
  return out;
}

double residual_at(const Mesh& mesh, const ElementGeometry& g, const ProblemSpec& problem, int e,
                   const Eigen::VectorXd& u_next, const Eigen::VectorXd& u_prev, double dt, double t_next,
                   const Eigen::Vector3d& bary) {
  const Point x = g.map(bary);
  const LocalField un = eval_field(mesh, g, e, u_next, bary);
  const LocalField up = eval_field(mesh, g, e, u_prev, bary);
  const Point b = problem.b(t_next, x, un.value);
  return (un.value - up.value) / dt + b.dot(un.grad) + problem.c(x) * un.value - problem.f(t_next, x);
}

double centroid_speed(const Mesh& mesh, const ElementGeometry& g, const ProblemSpec& problem, int e,
                      const Eigen::VectorXd& u, double t) {
  Eigen::Vector3d mid = Eigen::Vector3d::Zero();
  mid.head(g.n_local).setConstant(1.0 / g.n_local);
  const double uc = problem.solution_dependent_b ? eval_field(mesh, g, e, u, mid).value : 0.0;
  return problem.b(t, g.centroid(), uc).norm();
}

void check_field(const Mesh& mesh, const Eigen::VectorXd& u, const char* what) {
  if (u.size() != mesh.num_nodes()) {
    throw std::invalid_argument(std::string(what) + ": field length " + std::to_string(u.size()) +
                                " differs from node count " + std::to_string(mesh.num_nodes()));
  }
}

// Identity rows for boundary nodes; boundary columns of interior rows are
// moved to the right-hand side.
void apply_dirichlet(SparseMatrix& a, Eigen::VectorXd& rhs, const Eigen::VectorXd& g,
                     const std::vector<char>& on_boundary) {
  for (int r = 0; r < a.rows(); ++r) {
    if (on_boundary[r]) {
      for (SparseMatrix::InnerIterator it(a, r); it; ++it) it.valueRef() = (it.col() == r) ? 1.0 : 0.0;
      rhs[r] = g[r];
      continue;
    }
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
      if (on_boundary[it.col()]) {
        rhs[r] -= it.value() * g[it.col()];
        it.valueRef() = 0.0;
      }
    }
  }
  a.prune([](int, int, double v) { return v != 0.0; });
  a.makeCompressed();
}

SparseMatrix from_triplets(int n, const std::vector<Eigen::Triplet<double>>& triplets) {
  SparseMatrix a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  return a;
}

}  // namespace

double discrete_strong_residual(const Mesh& mesh, const ProblemSpec& problem, const Eigen::VectorXd& u_next,
                                const Eigen::VectorXd& u_prev, double dt, double t_next, int e,
                                const Eigen::Vector3d& bary) {
  check_field(mesh, u_next, "discrete_strong_residual");
  check_field(mesh, u_prev, "discrete_strong_residual");
  if (e < 0 || e >= mesh.num_elements()) throw std::out_of_range("discrete_strong_residual: bad element");
  return residual_at(mesh, element_geometry(mesh, e), problem, e, u_next, u_prev, dt, t_next, bary);
}

Eigen::MatrixXd shock_viscosity(const Mesh& mesh, const ProblemSpec& problem, double Y,
                                const Eigen::VectorXd& u_next, const Eigen::VectorXd& u_prev, double dt,
                                double t_next) {
  check_field(mesh, u_next, "shock_viscosity");
  check_field(mesh, u_prev, "shock_viscosity");
  const QuadratureRule& rule = assembly_rule(mesh.dim);
  Eigen::MatrixXd nu(mesh.num_elements(), rule.size());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry g = element_geometry(mesh, e);
    for (int q = 0; q < rule.size(); ++q) {
      const double z = residual_at(mesh, g, problem, e, u_next, u_prev, dt, t_next, rule.points[q]);
      nu(e, q) = nu_shoc(Y, z, mesh.h[e]);
    }
  }
  return nu;
}

LinearSystem assemble_step(const Mesh& mesh, const ProblemSpec& problem, Mode mode,
                           const Eigen::VectorXd& u_prev, double t_next, double dt, const Eigen::MatrixXd& nu) {
  check_field(mesh, u_prev, "assemble_step");
  if (problem.solution_dependent_b) {
    throw std::invalid_argument("assemble_step: solution-dependent convection needs assemble_newton");
  }
  if (!(dt > 0.0)) throw std::invalid_argument("assemble_step: dt must be positive");
  const QuadratureRule& rule = assembly_rule(mesh.dim);
  const bool supg = mode != Mode::galerkin;
  const bool shock = mode == Mode::supg_yzb;
  if (shock && (nu.rows() != mesh.num_elements() || nu.cols() != rule.size())) {
    throw std::invalid_argument("assemble_step: shock viscosity has wrong shape");
  }
  const int n = mesh.num_nodes();
  const int nl = mesh.nodes_per_element();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(mesh.num_elements()) * nl * nl);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);

  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry g = element_geometry(mesh, e);
    const double tau = supg ? tau_supg(dt, centroid_speed(mesh, g, problem, e, u_prev, t_next), mesh.h[e], problem.eps)
                            : 0.0;
    Eigen::Matrix3d ke = Eigen::Matrix3d::Zero();
    Eigen::Vector3d fe = Eigen::Vector3d::Zero();
    for (int q = 0; q < rule.size(); ++q) {
      const Eigen::Vector3d& nq = rule.points[q];
      const double w = rule.weights[q] * g.measure;
      const Point x = g.map(nq);
      const Point b = problem.b(t_next, x, 0.0);
      const double c = problem.c(x);
      const double f = problem.f(t_next, x);
      const double up = eval_field(mesh, g, e, u_prev, nq).value;
      const Eigen::Vector3d bgrad = g.grads * b;
      const Eigen::Matrix3d gg = g.grads * g.grads.transpose();
      ke += w * ((1.0 / dt + c) * nq * nq.transpose() + problem.eps * gg + nq * bgrad.transpose());
      fe += w * (up / dt + f) * nq;
      if (supg) {
        ke += w * tau * bgrad * ((1.0 / dt + c) * nq + bgrad).transpose();
        fe += w * tau * (up / dt + f) * bgrad;
      }
      if (shock) ke += w * nu(e, q) * gg;
    }
    for (int a = 0; a < nl; ++a) {
      const int ia = mesh.elements(e, a);
      rhs[ia] += fe[a];
      for (int b = 0; b < nl; ++b) triplets.emplace_back(ia, mesh.elements(e, b), ke(a, b));
    }
  }
  LinearSystem sys{from_triplets(n, triplets), rhs};
  apply_dirichlet(sys.matrix, sys.rhs, dirichlet_values(mesh, problem, t_next), mesh.on_boundary);
  return sys;
}

Eigen::VectorXd supg_contribution(const Mesh& mesh, const ProblemSpec& problem, const Eigen::VectorXd& u_next,
                                  const Eigen::VectorXd& u_prev, double t_next, double dt) {
  check_field(mesh, u_next, "supg_contribution");
  check_field(mesh, u_prev, "supg_contribution");
  const QuadratureRule& rule = assembly_rule(mesh.dim);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry g = element_geometry(mesh, e);
    const double tau = tau_supg(dt, centroid_speed(mesh, g, problem, e, u_next, t_next), mesh.h[e], problem.eps);
    for (int q = 0; q < rule.size(); ++q) {
      const Eigen::Vector3d& nq = rule.points[q];
      const double w = rule.weights[q] * g.measure;
      const Point x = g.map(nq);
      const double un = eval_field(mesh, g, e, u_next, nq).value;
      const Eigen::Vector3d bgrad = g.grads * problem.b(t_next, x, un);
      const double r = residual_at(mesh, g, problem, e, u_next, u_prev, dt, t_next, nq);
      for (int a = 0; a < g.n_local; ++a) out[mesh.elements(e, a)] += w * tau * bgrad[a] * r;
    }
  }
  return out;
}

Eigen::VectorXd shock_contribution(const Mesh& mesh, const Eigen::MatrixXd& nu, const Eigen::VectorXd& u) {
  check_field(mesh, u, "shock_contribution");
  const QuadratureRule& rule = assembly_rule(mesh.dim);
  if (nu.rows() != mesh.num_elements() || nu.cols() != rule.size()) {
    throw std::invalid_argument("shock_contribution: shock viscosity has wrong shape");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry g = element_geometry(mesh, e);
    const Point grad_u = eval_field(mesh, g, e, u, Eigen::Vector3d::Zero()).grad;
    for (int q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * g.measure * nu(e, q);
      for (int a = 0; a < g.n_local; ++a) out[mesh.elements(e, a)] += w * g.grads.row(a).dot(grad_u);
    }
  }
  return out;
}

Eigen::VectorXd interpolate_nodal(const Mesh& mesh, const SpatialField& f) {
  Eigen::VectorXd u(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) u[i] = f(mesh.node(i));
  return u;
}

Eigen::VectorXd dirichlet_values(const Mesh& mesh, const ProblemSpec& problem, double t) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (int i : mesh.boundary_nodes) g[i] = problem.u_dirichlet(t, mesh.node(i));
  return g;
}

NewtonError::NewtonError(int step, std::vector<double> history)
    : std::runtime_error("step " + std::to_string(step) + ": Newton did not converge in " +
                         std::to_string(history.empty() ? 0 : history.size() - 1) + " iterations (residual " +
                         (history.empty() ? std::string("?") : format_double(history.back())) + ")"),
      step_(step),
      history_(std::move(history)) {}

SnapshotSeries advance(const ProblemSpec& problem, std::shared_ptr<const Mesh> mesh,
                       const StabilizationConfig& config, const TimeGrid& grid) {
  validate(problem);
  config.validate();
  grid.validate();
  if (!mesh) throw std::invalid_argument("advance: missing mesh");
  if (mesh->dim != problem.dim) throw std::invalid_argument("advance: mesh and problem dimensions differ");
  SnapshotSeries series;
  series.mesh = mesh;
  Eigen::VectorXd u = interpolate_nodal(*mesh, problem.u0);
  Eigen::VectorXd u_old = u;
  series.times.push_back(grid.t0);
  series.values.push_back(u);
  for (int k = 1; k <= grid.n_steps; ++k) {
    const double t = grid.time(k);
    Eigen::MatrixXd nu;
    if (config.mode == Mode::supg_yzb) {
      nu = shock_viscosity(*mesh, problem, config.Y, u, u_old, grid.dt, grid.time(k - 1));
    }
    const LinearSystem sys = assemble_step(*mesh, problem, config.mode, u, t, grid.dt, nu);
    Eigen::VectorXd next;
    try {
      next = solve_linear(sys.matrix, sys.rhs);
    } catch (const SolverError& err) {
      throw StepError(k, err.what());
    }
    for (int i : mesh->boundary_nodes) next[i] = sys.rhs[i];
    u_old = std::move(u);
    u = std::move(next);
    series.times.push_back(t);
    series.values.push_back(u);
  }
  return series;
}

NewtonSystem assemble_newton(const Mesh& mesh, const ProblemSpec& problem, Mode mode, const Eigen::VectorXd& u,
                             const Eigen::VectorXd& u_prev, double t_next, double dt, double Y) {
  check_field(mesh, u, "assemble_newton");
  check_field(mesh, u_prev, "assemble_newton");
  if (!problem.solution_dependent_b) {
    throw std::invalid_argument("assemble_newton: convection must be solution-dependent");
  }
  if (Y == 0.0) throw std::invalid_argument("assemble_newton: Y must be nonzero");
  const QuadratureRule& rule = assembly_rule(mesh.dim);
  const bool supg = mode != Mode::galerkin;
  const bool shock = mode == Mode::supg_yzb;
  const int n = mesh.num_nodes();
  const int nl = mesh.nodes_per_element();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(mesh.num_elements()) * nl * nl);
  Eigen::VectorXd res = Eigen::VectorXd::Zero(n);

  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry g = element_geometry(mesh, e);
    const double h = mesh.h[e];
    double tau = 0.0;
    Eigen::Vector3d dtau = Eigen::Vector3d::Zero();
    if (supg) {
      Eigen::Vector3d mid = Eigen::Vector3d::Zero();
      mid.head(nl).setConstant(1.0 / nl);
      const double uc = eval_field(mesh, g, e, u, mid).value;
      const double beta_c = problem.b(t_next, g.centroid(), 1.0).squaredNorm();
      tau = tau_supg(dt, std::abs(uc) * std::sqrt(beta_c), h, problem.eps);
      // d tau / d u_c = -4 tau^3 u_c |beta_c|^2 / h^2, and d u_c / d u_b = 1 / nl.
      dtau = -4.0 * tau * tau * tau * uc * beta_c / (h * h) * mid;
    }
    Eigen::Matrix3d je = Eigen::Matrix3d::Zero();
    Eigen::Vector3d fe = Eigen::Vector3d::Zero();
    for (int q = 0; q < rule.size(); ++q) {
      const Eigen::Vector3d& nq = rule.points[q];
      const double w = rule.weights[q] * g.measure;
      const Point x = g.map(nq);
      const Point beta = problem.b(t_next, x, 1.0);
      const double c = problem.c(x);
      const double f = problem.f(t_next, x);
      const LocalField uq = eval_field(mesh, g, e, u, nq);
      const double up = eval_field(mesh, g, e, u_prev, nq).value;
      const double beta_grad_u = beta.dot(uq.grad);
      const Eigen::Vector3d beta_grad = g.grads * beta;
      const Eigen::Vector3d grad_dot = g.grads * uq.grad;
      const Eigen::Matrix3d gg = g.grads * g.grads.transpose();
      const double r = (uq.value - up) / dt + uq.value * beta_grad_u + c * uq.value - f;
      const Eigen::Vector3d dr = (1.0 / dt + beta_grad_u + c) * nq + uq.value * beta_grad;

      fe += w * (r * nq + problem.eps * grad_dot);
      je += w * ((1.0 / dt + c + beta_grad_u) * nq * nq.transpose() + uq.value * nq * beta_grad.transpose() +
                 problem.eps * gg);
      if (supg) {
        fe += w * tau * uq.value * r * beta_grad;
        je += w * tau * (r * beta_grad * nq.transpose() + uq.value * beta_grad * dr.transpose());
        je += w * uq.value * r * beta_grad * dtau.transpose();
      }
      if (shock) {
        const double nu = nu_shoc(Y, r, h);
        const double dnu_dr = (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) * h * h / (4.0 * std::abs(Y));
        fe += w * nu * grad_dot;
        je += w * (nu * gg + dnu_dr * grad_dot * dr.transpose());
      }
    }
    for (int a = 0; a < nl; ++a) {
      const int ia = mesh.elements(e, a);
      res[ia] += fe[a];
      for (int b = 0; b < nl; ++b) triplets.emplace_back(ia, mesh.elements(e, b), je(a, b));
    }
  }
  NewtonSystem sys{from_triplets(n, triplets), res};
  apply_dirichlet(sys.jacobian, sys.residual, Eigen::VectorXd::Zero(n), mesh.on_boundary);
  return sys;
}

SnapshotSeries newton_advance(const ProblemSpec& problem, std::shared_ptr<const Mesh> mesh,
                              const StabilizationConfig& config, const TimeGrid& grid, NewtonLog* log) {
  validate(problem);
  config.validate();
  grid.validate();
  if (!mesh) throw std::invalid_argument("newton_advance: missing mesh");
  if (mesh->dim != problem.dim) throw std::invalid_argument("newton_advance: mesh and problem dimensions differ");
  SnapshotSeries series;
  series.mesh = mesh;
  Eigen::VectorXd u = interpolate_nodal(*mesh, problem.u0);
  series.times.push_back(grid.t0);
  series.values.push_back(u);
  for (int k = 1; k <= grid.n_steps; ++k) {
    const double t = grid.time(k);
    const Eigen::VectorXd g = dirichlet_values(*mesh, problem, t);
    Eigen::VectorXd it = u;
    for (int i : mesh->boundary_nodes) it[i] = g[i];
    std::vector<double> history;
    int iter = 0;
    for (;; ++iter) {
      const NewtonSystem sys = assemble_newton(*mesh, problem, config.mode, it, u, t, grid.dt, config.Y);
      const double norm = sys.residual.norm();
      history.push_back(norm);
      if (!std::isfinite(norm)) throw NewtonError(k, history);
      if (norm < kNewtonTolerance) break;
      if (iter == kNewtonMaxIterations) throw NewtonError(k, history);
      try {
        it -= solve_linear(sys.jacobian, sys.residual);
      } catch (const SolverError& err) {
        throw StepError(k, err.what());
      }
      for (int i : mesh->boundary_nodes) it[i] = g[i];
    }
    if (log) {
      log->iterations.push_back(iter);
      log->residuals.push_back(history);
    }
    u = std::move(it);
    series.times.push_back(t);
    series.values.push_back(u);
  }
  return series;
}

SnapshotSeries solve_fem(const ProblemSpec& problem, std::shared_ptr<const Mesh> mesh,
                         const StabilizationConfig& config, const TimeGrid& grid) {
  if (problem.solution_dependent_b) return newton_advance(problem, std::move(mesh), config, grid);
  return advance(problem, std::move(mesh), config, grid);
}

void write_snapshots(const SnapshotSeries& series, const std::string& dir) {
  series.validate();
  std::filesystem::create_directories(dir);
  const Mesh& mesh = *series.mesh;
  std::ofstream out(dir + "/snapshots.csv");
  if (!out) throw std::runtime_error("cannot write " + dir + "/snapshots.csv");
  out << (mesh.dim == 1 ? "t,x1,u\n" : "t,x1,x2,u\n");
  for (int k = 0; k < series.size(); ++k) {
    const std::string t = format_double(series.times[k]);
    for (int i = 0; i < mesh.num_nodes(); ++i) {
      out << t << ',' << format_double(mesh.nodes(i, 0));
      if (mesh.dim == 2) out << ',' << format_double(mesh.nodes(i, 1));
      out << ',' << format_double(series.values[k][i]) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + dir + "/snapshots.csv");
  CsvTable index;
  index.header = {"index", "t"};
  for (int k = 0; k < series.size(); ++k) index.rows.push_back({static_cast<double>(k), series.times[k]});
  write_csv(dir + "/snapshot_index.csv", index);
}

SnapshotSeries read_snapshots(const std::string& dir) {
  const CsvTable index = read_csv(dir + "/snapshot_index.csv");
  const CsvTable data = read_csv(dir + "/snapshots.csv");
  const bool two_d = std::find(data.header.begin(), data.header.end(), "x2") != data.header.end();
  const int ct = data.column("t"), cx = data.column("x1"), cu = data.column("u");
  const int cy = two_d ? data.column("x2") : -1;
  const int k_count = static_cast<int>(index.rows.size());
  if (k_count == 0 || data.rows.size() % k_count != 0) {
    throw std::runtime_error(dir + ": snapshot rows do not split evenly over the index");
  }
  const int n_nodes = static_cast<int>(data.rows.size()) / k_count;
  Eigen::Matrix<double, Eigen::Dynamic, 2> xy = Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(n_nodes, 2);
  for (int i = 0; i < n_nodes; ++i) {
    xy(i, 0) = data.rows[i][cx];
    if (two_d) xy(i, 1) = data.rows[i][cy];
  }
  std::shared_ptr<Mesh> mesh;
  if (!two_d) {
    mesh = std::make_shared<Mesh>(build_interval_mesh(n_nodes - 1, xy.col(0).minCoeff(), xy.col(0).maxCoeff()));
  } else {
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_nodes))));
    if (side * side != n_nodes || side < 2) throw std::runtime_error(dir + ": nodes do not form a square grid");
    Box box;
    box.dim = 2;
    box.lo = Point(xy.col(0).minCoeff(), xy.col(1).minCoeff());
    box.hi = Point(xy.col(0).maxCoeff(), xy.col(1).maxCoeff());
    mesh = std::make_shared<Mesh>(build_rectangle_mesh(side - 1, box));
  }
  if ((mesh->nodes - xy).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::runtime_error(dir + ": node coordinates do not match a structured mesh");
  }
  SnapshotSeries series;
  series.mesh = mesh;
  for (int k = 0; k < k_count; ++k) {
    const double t = index.rows[k][index.column("t")];
    Eigen::VectorXd v(n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
      const auto& row = data.rows[static_cast<size_t>(k) * n_nodes + i];
      if (row[ct] != t) throw std::runtime_error(dir + ": snapshot time mismatch at index " + std::to_string(k));
      v[i] = row[cu];
    }
    series.times.push_back(t);
    series.values.push_back(std::move(v));
  }
  series.validate();
  return series;
}

}  // namespace cdr
