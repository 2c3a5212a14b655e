#pragma once

#include "cdr/csv.hpp"
#include "cdr/fem.hpp"
#include "cdr/pinn.hpp"
#include "cdr/presets.hpp"
#include "cdr/trainer.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cdr {

/// Gauss points per direction, repeated over a uniform refinement of every element.
struct ErrorRule {
  int points = 4;
  int subdivisions = 4;
};

/// Fine rule for terminal errors: 8 x 64 on segments, 4 x 4 on triangles.
ErrorRule terminal_rule(int dim);
/// Cheaper rule used for error histories.
ErrorRule history_rule(int dim);

/// Physical quadrature points of a whole mesh.
struct MeshQuadrature {
  Eigen::Matrix<double, Eigen::Dynamic, 2> x;
  Eigen::VectorXd w;
  /// Row q holds the P1 shape function values of the owning element at point q.
  Eigen::Matrix<double, Eigen::Dynamic, 3> shape;
  Eigen::Matrix<int, Eigen::Dynamic, 3> dofs;

  int size() const { return static_cast<int>(w.size()); }
  /// P1 field values at every point.
  Eigen::VectorXd interpolate(const Eigen::VectorXd& field) const;
};
MeshQuadrature mesh_quadrature(const Mesh& mesh, const ErrorRule& rule);

/// sqrt of the integral of (u_h - exact(t))^2 over the mesh.
double l2_error(const Mesh& mesh, const Eigen::VectorXd& field, const ScalarField& exact, double t,
                const ErrorRule& rule);
double l2_error(const Mesh& mesh, const Eigen::VectorXd& field, const ScalarField& exact, double t);
/// Root mean square of the nodal errors.
double nodal_rms_error(const Mesh& mesh, const Eigen::VectorXd& field, const ScalarField& exact, double t);
double l2_norm(const Mesh& mesh, const Eigen::VectorXd& field);
double l2_difference(const Mesh& mesh, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Network output for rows [t, x1(, x2)], evaluated in row blocks to bound memory.
Eigen::VectorXd evaluate_chunked(const NetworkConfig& config, const NetworkParams& params, const Tensor& z,
                                 int chunk = 8192);
/// Inputs [t, x] for every row of `x`.
Tensor space_time(double t, const Eigen::Matrix<double, Eigen::Dynamic, 2>& x, int dim);

/// Integrated error of the network at time t, sampled at the quadrature points.
double network_l2_error(const NetworkConfig& config, const NetworkParams& params, const Mesh& mesh,
                        const ScalarField& exact, double t, const ErrorRule& rule);
/// Integrated distance between the network at time t and a P1 field.
double network_l2_difference(const NetworkConfig& config, const NetworkParams& params, const Mesh& mesh,
                             const Eigen::VectorXd& field, double t, const ErrorRule& rule);

/// Straight segment inside the domain.
struct Line {
  Point from = Point::Zero();
  Point to = Point::Zero();
  std::string name;
};

/// "x2=0.125", "x1=0.5", "diagonal", "anti:0.75" (the line x1 + x2 = 0.75), or
/// explicit endpoints "a1,a2:b1,b2". In 1D every spec means the whole interval.
Line parse_line(const std::string& spec, const Box& domain);

/// Samples P1 fields (by interpolation) and optionally a network (by forward
/// evaluation) at n_samples equispaced points. Columns: s, x1[, x2], one per
/// field, then "pinn" and "exact" when present. Throws std::invalid_argument
/// if the line leaves the domain.
CsvTable cross_section(const Mesh& mesh, const std::vector<std::pair<std::string, Eigen::VectorXd>>& fields,
                       const Line& line, int n_samples, double t, const NetworkConfig* config = nullptr,
                       const NetworkParams* params = nullptr, const ScalarField* exact = nullptr);

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct MethodReport {
  std::string method;  // galerkin, supg, supg-yzb or pinn
  double l2 = kNaN;      // terminal integrated error; NaN without an exact solution
  double l2_nodal = kNaN;
  double l2_norm = kNaN;  // terminal integrated norm of the field
  double min = kNaN;
  double max = kNaN;
  std::vector<double> history_t;
  std::vector<double> history_l2;
};

struct Timing {
  std::string name;
  double seconds = 0.0;
};

struct RunReport {
  std::string id;
  std::string scale;
  std::uint64_t seed = 0;
  double t_final = 0.0;
  int epochs = 0;
  int best_epoch = -1;
  double best_loss = kNaN;
  std::vector<MethodReport> methods;
  /// Integrated L2 distances between method pairs, keyed "a:b".
  std::vector<std::pair<std::string, double>> differences;
  std::vector<Timing> timings;
  double total_seconds = 0.0;
  std::vector<std::string> files;

  const MethodReport* find(const std::string& method) const;
  double difference(const std::string& key) const;
  /// Throws std::logic_error when an invariant is broken.
  void validate() const;
};

/// `report.txt` plus one `l2_<method>.csv` history per method.
void write_report(const RunReport& report, const std::string& dir);
RunReport read_report(const std::string& dir);
std::string format_report(const RunReport& report);

struct RunOptions {
  Scale scale = Scale::paper;
  std::uint64_t seed = 0;
  std::string out_dir;  // empty: nothing written
  /// Multiplies the epoch budget; 0 gives a FEM-only report.
  double epoch_factor = 1.0;
  std::optional<Config> overrides;
  std::ostream* log = nullptr;
  int log_every = 50;  // epochs between progress lines
};

/// Preset for the id with scale, seed, overrides and epoch factor applied.
ExamplePreset resolve_preset(const std::string& id, const RunOptions& options);

/// FEM in every configured mode, PINN training on the last K_s snapshots of
/// SUPG-YZbeta, metrics and CSV output.
RunReport run_example(const std::string& id, const RunOptions& options);
RunReport run_preset(const ExamplePreset& preset, const RunOptions& options);

/// Trained network and its evaluation against stored snapshots.
struct PinnOutcome {
  TrainResult training;
  MethodReport metrics;
  double train_seconds = 0.0;
  double eval_seconds = 0.0;
};
PinnOutcome train_on_snapshots(const ExamplePreset& preset, const SnapshotSeries& snapshots,
                               const RunOptions& options);

/// Default cross-section lines for an example.
std::vector<std::string> default_lines(const std::string& id);

/// Nodal field bounds and fine-grid network bounds (2001 points in 1D, 129 x 129 in 2D).
std::pair<double, double> network_bounds(const NetworkConfig& config, const NetworkParams& params, const Box& domain,
                                         double t, int per_direction);

}  // namespace cdr
