#pragma once

#include "cdr/mesh.hpp"
#include "cdr/problems.hpp"
#include "cdr/sparse.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdr {

enum class Mode { galerkin, supg, supg_yzb };

std::string to_string(Mode mode);
/// Accepts "galerkin", "supg", "supg-yzb" (or "supg_yzb").
Mode parse_mode(const std::string& name);

struct StabilizationConfig {
  Mode mode = Mode::supg_yzb;
  double Y = 1.0;
  double beta = 2.0;

  void validate() const;
};

struct TimeGrid {
  double t0 = 0.0;
  double tf = 1.0;
  double dt = 1.0;
  int n_steps = 1;

  static TimeGrid from_steps(double t0, double tf, int n_steps);
  double time(int k) const { return k == n_steps ? tf : t0 + k * dt; }
  void validate() const;
};

/// Nodal FEM solutions at increasing times on a fixed mesh.
struct SnapshotSeries {
  std::shared_ptr<const Mesh> mesh;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;

  int size() const { return static_cast<int>(times.size()); }
  /// The last `k` snapshots (all of them when k exceeds the count).
  SnapshotSeries last(int k) const;
  void validate() const;
};

template <typename Scalar>
Scalar tau_supg(Scalar dt, Scalar b_norm, Scalar h, Scalar eps) {
  using std::sqrt;
  const Scalar a = Scalar(2) / dt;
  const Scalar b = Scalar(2) * b_norm / h;
  const Scalar c = Scalar(4) * eps / (h * h);
  return Scalar(1) / sqrt(a * a + b * b + c * c);
}

template <typename Scalar>
Scalar nu_shoc(Scalar Y, Scalar Z, Scalar h) {
  using std::abs;
  if (Y == Scalar(0)) throw std::invalid_argument("nu_shoc: Y must be nonzero");
  return abs(Z / Y) * h * h / Scalar(4);
}

/// Backward-Euler strong residual
///   (u_next - u_prev)/dt - eps Lap(u_next) + b . grad(u_next) + c u_next - f
/// at barycentric point `bary` of element `e`, with data at `t_next`.
/// The Laplacian of a P1 field vanishes element-wise.
double discrete_strong_residual(const Mesh& mesh, const ProblemSpec& problem, const Eigen::VectorXd& u_next,
                                const Eigen::VectorXd& u_prev, double dt, double t_next, int e,
                                const Eigen::Vector3d& bary);

/// Shock-capturing viscosity per element (rows) and assembly quadrature
/// point (columns), from the residual of u_next against u_prev.
Eigen::MatrixXd shock_viscosity(const Mesh& mesh, const ProblemSpec& problem, double Y,
                                const Eigen::VectorXd& u_next, const Eigen::VectorXd& u_prev, double dt,
                                double t_next);

struct LinearSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
};

/// Backward-Euler system for one step of a problem with u-independent b.
/// `nu` holds the lagged shock viscosity (ignored unless mode is supg_yzb).
/// Dirichlet rows become identity rows and the boundary columns are moved to
/// the right-hand side, so the matrix stays symmetric when the operator is.
LinearSystem assemble_step(const Mesh& mesh, const ProblemSpec& problem, Mode mode,
                           const Eigen::VectorXd& u_prev, double t_next, double dt,
                           const Eigen::MatrixXd& nu = Eigen::MatrixXd());

/// SUPG part of the discrete residual vector evaluated at u_next.
Eigen::VectorXd supg_contribution(const Mesh& mesh, const ProblemSpec& problem, const Eigen::VectorXd& u_next,
                                  const Eigen::VectorXd& u_prev, double t_next, double dt);

/// Shock-capturing part of the discrete residual vector: int nu grad(N_a) . grad(u).
Eigen::VectorXd shock_contribution(const Mesh& mesh, const Eigen::MatrixXd& nu, const Eigen::VectorXd& u);

Eigen::VectorXd interpolate_nodal(const Mesh& mesh, const SpatialField& f);
Eigen::VectorXd dirichlet_values(const Mesh& mesh, const ProblemSpec& problem, double t);

/// A linear solve failed during time stepping.
class StepError : public std::runtime_error {
 public:
  StepError(int step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Newton iterations did not reach the residual tolerance.
class NewtonError : public std::runtime_error {
 public:
  NewtonError(int step, std::vector<double> history);
  int step() const { return step_; }
  const std::vector<double>& residual_history() const { return history_; }

 private:
  int step_;
  std::vector<double> history_;
};

inline constexpr double kNewtonTolerance = 1e-10;
inline constexpr int kNewtonMaxIterations = 25;

struct NewtonLog {
  std::vector<int> iterations;  // per step
  std::vector<std::vector<double>> residuals;
};

/// Time stepping for u-independent convection; one linear solve per step.
SnapshotSeries advance(const ProblemSpec& problem, std::shared_ptr<const Mesh> mesh,
                       const StabilizationConfig& config, const TimeGrid& grid);

/// Nonlinear residual and Jacobian of one backward-Euler step for
/// b = u b(t, x, 1), with tau and nu frozen at the iterate `u`.
/// Boundary rows are identity rows with zero residual.
struct NewtonSystem {
  SparseMatrix jacobian;
  Eigen::VectorXd residual;
};
NewtonSystem assemble_newton(const Mesh& mesh, const ProblemSpec& problem, Mode mode, const Eigen::VectorXd& u,
                             const Eigen::VectorXd& u_prev, double t_next, double dt, double Y);

/// Time stepping with Newton-Raphson for solution-dependent convection.
SnapshotSeries newton_advance(const ProblemSpec& problem, std::shared_ptr<const Mesh> mesh,
                              const StabilizationConfig& config, const TimeGrid& grid,
                              NewtonLog* log = nullptr);

/// Dispatches to advance or newton_advance.
SnapshotSeries solve_fem(const ProblemSpec& problem, std::shared_ptr<const Mesh> mesh,
                         const StabilizationConfig& config, const TimeGrid& grid);

/// Writes `snapshots.csv` (t,x1[,x2],u) and `snapshot_index.csv` (index,t)
/// into `dir`, creating it if needed.
void write_snapshots(const SnapshotSeries& series, const std::string& dir);
/// Reads a directory written by write_snapshots. The mesh is rebuilt from the
/// node coordinates, which must form a structured grid.
SnapshotSeries read_snapshots(const std::string& dir);

}  // namespace cdr
