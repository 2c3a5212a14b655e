#pragma once

#include "cdr/autodiff.hpp"
#include "cdr/mesh.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace cdr {

using ad::Tensor;

/// Differentiable map from a batch of inputs z = [t, x1(, x2)] to one column.
using BatchFunction = std::function<ad::Var(const ad::Var& z)>;

/// Output wrapper u = boundary_value(z) + d(x) * raw(z).
struct Lift {
  /// Empty means zero boundary data.
  BatchFunction boundary_value;
  /// Empty means the normalized box distance prod_i (x_i - lo_i)(hi_i - x_i) / w_i^2.
  BatchFunction distance;
};

struct NetworkConfig {
  int n_sd = 2;
  int n_h = 128;
  int n_r = 8;
  int n_F = 24;
  double sigma = 4.0;
  std::uint64_t seed = 0;
  Box domain;
  std::optional<Lift> lift;

  int input_dim() const { return n_sd + 1; }
  int feature_dim() const { return n_sd + 1 + 2 * n_F; }
  void validate() const;
};

/// Frozen Fourier frequencies plus trainable tensors in a fixed order:
/// W0, b0, then per block W1, b1, W2, b2, gamma, beta, then Wn, bn, Wo, bo.
/// Weights are stored out x in and biases as 1 x out rows.
struct NetworkParams {
  Tensor frequencies;
  std::vector<Tensor> tensors;
  std::vector<std::string> names;

  int count() const;
  bool all_finite() const;
};

inline constexpr double kLayerNormEps = 1e-5;

/// Seeded standard-normal stream (Box-Muller over mt19937_64).
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}
  double uniform();  // [0, 1) with 53 random bits
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Frequencies ~ N(0, sigma^2); weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in));
/// biases 0; LayerNorm scale 1 and shift 0.
NetworkParams init_params(const NetworkConfig& config);

/// [z, sin(z B), cos(z B)] for a batch z (rows are points).
Tensor fourier_embed(const Tensor& frequencies, const Tensor& z);

/// Row-wise (x - mean) / sqrt(var + eps) * gamma + beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = kLayerNormEps);
ad::Var layer_norm(const ad::Var& x, const ad::Var& gamma, const ad::Var& beta, double eps = kLayerNormEps);

/// Network output without the lift wrapper.
Tensor forward_raw(const NetworkConfig& config, const NetworkParams& params, const Tensor& z);

/// Full network output u_NN(z) as a column; throws std::runtime_error if any
/// intermediate is not finite.
Eigen::VectorXd evaluate(const NetworkConfig& config, const NetworkParams& params, const Tensor& z);

/// Trainable parameters placed on a tape.
struct TapeParams {
  ad::Var frequencies;
  std::vector<ad::Var> tensors;
};
TapeParams place_params(ad::Tape& tape, const NetworkParams& params);

/// Differentiable forward pass including the lift wrapper.
ad::Var forward(const NetworkConfig& config, const TapeParams& params, const ad::Var& z);

/// Distance function in use for the config (box default when not overridden).
ad::Var lift_distance(const NetworkConfig& config, const ad::Var& z);

/// Writes a text checkpoint ("cdr-pinn-checkpoint v1") with shapes and values.
void save_checkpoint(const std::string& path, const NetworkConfig& config, const NetworkParams& params);
/// Restores parameters and the architecture fields of `config` (lift is left untouched).
NetworkParams load_checkpoint(const std::string& path, NetworkConfig& config);

}  // namespace cdr
