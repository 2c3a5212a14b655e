#include "cdr/pinn.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace cdr {

namespace {

Tensor silu_plain(const Tensor& x) {
  return (x.array() / (1.0 + (-x.array()).exp())).matrix();
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  Tensor y = x * w.transpose();
  y.rowwise() += b.row(0);
  return y;
}

ad::Var affine(const ad::Var& x, const ad::Var& w, const ad::Var& b) {
  return ad::add_row(ad::matmul(x, w, false, true), b);
}

void check_finite(const Tensor& t, const char* where) {
  if (!t.allFinite()) throw std::runtime_error(std::string("non-finite value in network ") + where);
}

int expected_tensor_count(const NetworkConfig& c) { return 2 + 6 * c.n_r + 4; }

}  // namespace

void NetworkConfig::validate() const {
  if (n_sd < 1 || n_sd > 2) throw std::invalid_argument("network: n_sd must be 1 or 2");
  if (n_h < 2 || n_r < 1 || n_F < 1) throw std::invalid_argument("network: counts must be positive (n_h >= 2)");
  if (!(sigma > 0.0)) throw std::invalid_argument("network: sigma must be positive");
  if (domain.dim != n_sd) throw std::invalid_argument("network: domain dimension mismatch");
}

int NetworkParams::count() const {
  int n = 0;
  for (const auto& t : tensors) n += static_cast<int>(t.size());
  return n;
}

bool NetworkParams::all_finite() const {
  for (const auto& t : tensors) {
    if (!t.allFinite()) return false;
  }
  return true;
}

double NormalStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double NormalStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

NetworkParams init_params(const NetworkConfig& config) {
  config.validate();
  NormalStream rng(config.seed);
  NetworkParams p;
  const int din = config.input_dim();
  p.frequencies.resize(din, config.n_F);
  for (int j = 0; j < config.n_F; ++j) {
    for (int i = 0; i < din; ++i) p.frequencies(i, j) = config.sigma * rng.normal();
  }

  auto add_affine = [&](const std::string& tag, int out, int in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Tensor w(out, in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) w(r, c) = bound * (2.0 * rng.uniform() - 1.0);
    }
    p.tensors.push_back(std::move(w));
    p.names.push_back(tag + ".weight");
    p.tensors.push_back(Tensor::Zero(1, out));
    p.names.push_back(tag + ".bias");
  };

  const int nh = config.n_h;
  add_affine("input", nh, config.feature_dim());
  for (int k = 0; k < config.n_r; ++k) {
    const std::string tag = "block" + std::to_string(k);
    add_affine(tag + ".linear1", nh, nh);
    add_affine(tag + ".linear2", nh, nh);
    p.tensors.push_back(Tensor::Ones(1, nh));
    p.names.push_back(tag + ".ln.gamma");
    p.tensors.push_back(Tensor::Zero(1, nh));
    p.names.push_back(tag + ".ln.beta");
  }
  add_affine("narrow", nh / 2, nh);
  add_affine("output", 1, nh / 2);
  return p;
}

Tensor fourier_embed(const Tensor& frequencies, const Tensor& z) {
  if (z.cols() != frequencies.rows()) throw std::invalid_argument("fourier_embed: input width mismatch");
  const Tensor proj = z * frequencies;
  Tensor out(z.rows(), z.cols() + 2 * proj.cols());
  out << z, proj.array().sin().matrix(), proj.array().cos().matrix();
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const double f = static_cast<double>(x.cols());
  Tensor xc = x.colwise() - x.rowwise().mean();
  const Eigen::VectorXd inv = ((xc.array().square().rowwise().sum() / f) + eps).rsqrt();
  Tensor y = xc.array().colwise() * inv.array();
  y.array().rowwise() *= gamma.row(0).array();
  y.rowwise() += beta.row(0);
  return y;
}

ad::Var layer_norm(const ad::Var& x, const ad::Var& gamma, const ad::Var& beta, double eps) {
  const double inv_f = 1.0 / static_cast<double>(x.cols());
  const ad::Var mu = inv_f * ad::row_sum(x);
  const ad::Var xc = ad::add_col(x, -mu);
  const ad::Var var = inv_f * ad::row_sum(ad::square(xc));
  const ad::Var inv = ad::pow(var + eps, -0.5);
  return ad::add_row(ad::mul_row(ad::mul_col(xc, inv), gamma), beta);
}

Tensor forward_raw(const NetworkConfig& config, const NetworkParams& params, const Tensor& z) {
  if (static_cast<int>(params.tensors.size()) != expected_tensor_count(config)) {
    throw std::invalid_argument("forward: parameter count does not match config");
  }
  const auto& t = params.tensors;
  Tensor h = silu_plain(affine(fourier_embed(params.frequencies, z), t[0], t[1]));
  check_finite(h, "input layer");
  int k = 2;
  for (int r = 0; r < config.n_r; ++r, k += 6) {
    const Tensor p = silu_plain(affine(h, t[k], t[k + 1]));
    const Tensor q = affine(p, t[k + 2], t[k + 3]);
    h = silu_plain(layer_norm(q + h, t[k + 4], t[k + 5]));
    check_finite(h, "residual block");
  }
  const Tensor n = silu_plain(affine(h, t[k], t[k + 1]));
  Tensor out = affine(n, t[k + 2], t[k + 3]);
  check_finite(out, "output");
  return out;
}

ad::Var lift_distance(const NetworkConfig& config, const ad::Var& z) {
  if (config.lift && config.lift->distance) return config.lift->distance(z);
  ad::Var d;
  for (int i = 0; i < config.n_sd; ++i) {
    const double lo = config.domain.lo[i];
    const double hi = config.domain.hi[i];
    const double w2 = config.domain.width(i) * config.domain.width(i);
    const ad::Var x = ad::col(z, i + 1);
    const ad::Var term = (1.0 / w2) * ((x - lo) * (hi - x));
    d = d.valid() ? d * term : term;
  }
  return d;
}

Eigen::VectorXd evaluate(const NetworkConfig& config, const NetworkParams& params, const Tensor& z) {
  Tensor raw = forward_raw(config, params, z);
  if (!config.lift) return raw.col(0);
  ad::Tape tape;
  const ad::Var zv = tape.leaf(z);
  const Tensor d = lift_distance(config, zv).value();
  Eigen::VectorXd u = (d.array() * raw.array()).matrix().col(0);
  if (config.lift->boundary_value) u += config.lift->boundary_value(zv).value().col(0);
  if (!u.allFinite()) throw std::runtime_error("non-finite value in network lift");
  return u;
}

TapeParams place_params(ad::Tape& tape, const NetworkParams& params) {
  TapeParams out;
  out.frequencies = tape.leaf(params.frequencies);
  out.tensors.reserve(params.tensors.size());
  for (const auto& t : params.tensors) out.tensors.push_back(tape.leaf(t));
  return out;
}

ad::Var forward(const NetworkConfig& config, const TapeParams& params, const ad::Var& z) {
  if (static_cast<int>(params.tensors.size()) != expected_tensor_count(config)) {
    throw std::invalid_argument("forward: parameter count does not match config");
  }
  const auto& t = params.tensors;
  const ad::Var proj = ad::matmul(z, params.frequencies);
  const ad::Var phi = ad::concat_cols(z, ad::concat_cols(ad::sin(proj), ad::cos(proj)));
  ad::Var h = ad::silu(affine(phi, t[0], t[1]));
  int k = 2;
  for (int r = 0; r < config.n_r; ++r, k += 6) {
    const ad::Var p = ad::silu(affine(h, t[k], t[k + 1]));
    const ad::Var q = affine(p, t[k + 2], t[k + 3]);
    h = ad::silu(layer_norm(q + h, t[k + 4], t[k + 5]));
  }
  const ad::Var n = ad::silu(affine(h, t[k], t[k + 1]));
  const ad::Var raw = affine(n, t[k + 2], t[k + 3]);
  if (!config.lift) return raw;
  ad::Var u = lift_distance(config, z) * raw;
  if (config.lift->boundary_value) u = config.lift->boundary_value(z) + u;
  return u;
}

void save_checkpoint(const std::string& path, const NetworkConfig& config, const NetworkParams& params) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  out << "cdr-pinn-checkpoint v1\n";
  out << "n_sd " << config.n_sd << "\nn_h " << config.n_h << "\nn_r " << config.n_r << "\nn_F " << config.n_F
      << "\nsigma " << config.sigma << "\nseed " << config.seed << '\n';
  auto dump = [&](const std::string& name, const Tensor& t) {
    out << "tensor " << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) out << (c ? " " : "") << t(r, c);
      out << '\n';
    }
  };
  dump("frequencies", params.frequencies);
  for (size_t i = 0; i < params.tensors.size(); ++i) dump(params.names[i], params.tensors[i]);
  if (!out) throw std::runtime_error("write failed: " + path);
}

NetworkParams load_checkpoint(const std::string& path, NetworkConfig& config) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "cdr-pinn-checkpoint v1") throw std::runtime_error(path + ": not a v1 checkpoint");
  NetworkConfig c = config;
  NetworkParams p;
  std::string key;
  while (in >> key) {
    if (key == "n_sd") in >> c.n_sd;
    else if (key == "n_h") in >> c.n_h;
    else if (key == "n_r") in >> c.n_r;
    else if (key == "n_F") in >> c.n_F;
    else if (key == "sigma") in >> c.sigma;
    else if (key == "seed") in >> c.seed;
    else if (key == "tensor") {
      std::string name;
      Eigen::Index rows = 0, cols = 0;
      in >> name >> rows >> cols;
      if (!in || rows < 1 || cols < 1) throw std::runtime_error(path + ": bad tensor header");
      Tensor t(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index q = 0; q < cols; ++q) in >> t(r, q);
      }
      if (!in) throw std::runtime_error(path + ": truncated tensor " + name);
      if (name == "frequencies") {
        p.frequencies = std::move(t);
      } else {
        p.tensors.push_back(std::move(t));
        p.names.push_back(name);
      }
    } else {
      throw std::runtime_error(path + ": unexpected token '" + key + "'");
    }
  }
  if (static_cast<int>(p.tensors.size()) != expected_tensor_count(c)) {
    throw std::runtime_error(path + ": tensor count does not match architecture");
  }
  if (p.frequencies.rows() != c.input_dim() || p.frequencies.cols() != c.n_F) {
    throw std::runtime_error(path + ": frequency matrix shape mismatch");
  }
  config.n_sd = c.n_sd;
  config.n_h = c.n_h;
  config.n_r = c.n_r;
  config.n_F = c.n_F;
  config.sigma = c.sigma;
  config.seed = c.seed;
  return p;
}

}  // namespace cdr
