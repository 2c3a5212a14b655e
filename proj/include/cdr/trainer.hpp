#pragma once

#include "cdr/fem.hpp"
#include "cdr/pinn.hpp"
#include "cdr/problems.hpp"

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdr {

struct Phase {
  int start = 0;  // first epoch, inclusive
  int end = 0;    // last epoch, exclusive
  double w_data = 1.0;
  double w_pde = 0.0;
  double w_bc = 0.0;
};

struct PhaseWeights {
  double w_data = 0.0;
  double w_pde = 0.0;
  double w_bc = 0.0;
};

struct TrainPlan {
  std::vector<Phase> phases;
  int epochs = 5000;
  int batch_size = 256;
  double lr = 8e-5;
  double grad_clip = 1.0;
  int n_pde = 512;
  double d_min = 0.02;
  int n_int_min = 16;
  int k_s = 10;
  /// PDE residual on every k-th mini-batch; 0 means once per epoch.
  int residual_every = 1;
  /// Boundary samples per edge (2D) and per time level.
  int bc_points = 64;
  /// Time levels for boundary samples; 0 means k_s.
  int bc_times = 0;
  std::uint64_t seed = 0;

  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 1e-7;
  double plateau_factor = 0.9;
  int plateau_patience = 150;
  double lr_min = 1e-6;
  double plateau_threshold = 1e-4;
  int max_nan = 10;
  double residual_clip = 10.0;
  double loss_clip = 100.0;

  /// Collocation points per tape when differentiating the residual.
  int residual_chunk = 256;
  int checkpoint_every = 100;
  /// Directory for periodic checkpoints; empty disables them.
  std::string checkpoint_dir;

  void validate() const;
};

/// Weights of the phase containing `epoch`; throws std::out_of_range.
PhaseWeights phase_weights(const TrainPlan& plan, int epoch);

/// 8e-5 * sqrt(B / 256).
double scaled_lr(int batch_size);

/// Minimum over coordinates of the distance to the nearer face, divided by the box width.
double boundary_distance(const Box& box, const Point& x);

struct SamplingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Points (t, x) stored as rows [t, x1(, x2)].
struct CollocationSet {
  Tensor z;
  int drawn = 0;      // candidates drawn in the accepted round
  int resamples = 0;  // rejected rounds before acceptance
};

/// Uniform candidates in [t_start, t_end] x domain kept when boundary_distance > d_min.
/// Redraws while fewer than n_int_min survive; ten failed redraws throw SamplingError.
CollocationSet sample_interior(const Box& domain, double t_start, double t_end, int n, double d_min,
                               int n_int_min, NormalStream& rng);

/// Supervised points with target values.
struct PointSet {
  Tensor z;
  Eigen::VectorXd u;
  int size() const { return static_cast<int>(z.rows()); }
};

/// The last k_s snapshots flattened snapshot-major into (t, x) rows.
PointSet snapshot_points(const SnapshotSeries& series, int k_s);

/// n_points uniform positions per edge at each time (endpoints only in 1D), valued by u_D.
PointSet sample_boundary(const ProblemSpec& problem, const std::vector<double>& times, int n_points,
                         NormalStream& rng);

/// Strong residual du/dt - eps Lap u + b . grad u + c u - f of a differentiable u, as a column.
ad::Var pde_residual(const BatchFunction& u, const ProblemSpec& problem, const ad::Var& z);

/// Mean over rows of clamp(r, -clip, clip)^2.
ad::Var clipped_mean_square(const ad::Var& r, double clip);

/// Mean squared mismatch of the network against targets.
double data_loss(const NetworkConfig& config, const NetworkParams& params, const PointSet& data);
double bc_loss(const NetworkConfig& config, const NetworkParams& params, const PointSet& boundary);
double pde_loss(const NetworkConfig& config, const NetworkParams& params, const ProblemSpec& problem,
                const Tensor& collocation, double clip = 10.0);

struct LossRecord {
  int epoch = 0;
  double total = 0.0;
  double data = 0.0;
  double pde = 0.0;
  double bc = 0.0;
  double lr = 0.0;
  double w_data = 0.0;
  double w_pde = 0.0;
  double w_bc = 0.0;
};

struct TrainState {
  NetworkParams params;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long step = 0;
  double lr = 0.0;
  int plateau_count = 0;
  double plateau_best = std::numeric_limits<double>::infinity();
  int nan_count = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  NetworkParams best_params;
  std::vector<LossRecord> history;
};

TrainState initial_state(const TrainPlan& plan, NetworkParams params);

/// Test hooks for the safeguards.
enum class Fault { none, inf_total, inf_loss, nan_gradient };

struct StepBatch {
  PointSet data;
  Tensor collocation;  // empty: no PDE term this step
  PointSet boundary;   // empty: no boundary term this step
  PhaseWeights weights;
};

struct StepResult {
  double data = 0.0;
  double pde = 0.0;
  double bc = 0.0;
  double total = 0.0;       // after fallback and clamping
  double grad_norm = 0.0;   // before clipping
  double clipped_norm = 0.0;
  bool fallback = false;    // total replaced by the data loss
  bool discarded = false;   // update skipped, NaN counter incremented
  bool pde_evaluated = false;
  int pde_points = 0;
  int bc_points = 0;
  int data_points = 0;
};

/// Loss gradients for one step, with the safeguarded total. Exposed for gradient checks.
struct LossGradient {
  StepResult result;
  std::vector<Tensor> grads;
};
LossGradient hybrid_loss_gradient(const NetworkConfig& config, const NetworkParams& params,
                                  const ProblemSpec& problem, const TrainPlan& plan, const StepBatch& batch,
                                  Fault fault = Fault::none);

struct TrainingTerminated : std::runtime_error {
  TrainingTerminated(const std::string& what, NetworkParams best, std::vector<LossRecord> history)
      : std::runtime_error(what), best_params(std::move(best)), history(std::move(history)) {}
  NetworkParams best_params;
  std::vector<LossRecord> history;
};

/// One safeguarded AdamW step. Throws TrainingTerminated once the NaN counter exceeds plan.max_nan.
StepResult hybrid_step(TrainState& state, const NetworkConfig& config, const ProblemSpec& problem,
                       const TrainPlan& plan, const StepBatch& batch, Fault fault = Fault::none);

/// Decoupled-weight-decay Adam update of state.params with the given gradients.
void adamw_update(TrainState& state, const TrainPlan& plan, const std::vector<Tensor>& grads);

/// Scales gradients in place so the global norm is at most g_max; returns the norm before scaling.
double clip_gradients(std::vector<Tensor>& grads, double g_max);

/// Feeds one epoch-averaged loss; returns the (possibly reduced) learning rate.
double plateau_scheduler(TrainState& state, const TrainPlan& plan, double epoch_loss);

struct TrainResult {
  NetworkParams params;  // best snapshot
  NetworkParams final_params;
  std::vector<LossRecord> history;
  int best_epoch = -1;
  double best_loss = std::numeric_limits<double>::infinity();
  long pde_point_total = 0;
  long data_point_total = 0;
  long bc_point_total = 0;
};

/// Optional per-step fault schedule for tests, indexed by global step.
using FaultSchedule = std::function<Fault(long step)>;
/// Called after every epoch with its averaged losses.
using EpochCallback = std::function<void(const LossRecord&)>;

TrainResult train(const ProblemSpec& problem, const SnapshotSeries& snapshots, const TrainPlan& plan,
                  const NetworkConfig& config, const FaultSchedule& faults = {},
                  const EpochCallback& on_epoch = {});

void write_loss_history(const std::string& path, const std::vector<LossRecord>& history);
std::vector<LossRecord> read_loss_history(const std::string& path);

}  // namespace cdr
