#include "cdr/pinn.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace cdr;

namespace {

NetworkConfig small_config(int n_sd = 2) {
  NetworkConfig c;
  c.n_sd = n_sd;
  c.domain.dim = n_sd;
  c.n_h = 12;
  c.n_r = 2;
  c.n_F = 5;
  c.sigma = 2.0;
  c.seed = 42;
  return c;
}

double silu(double x) { return x / (1.0 + std::exp(-x)); }

// Scalar re-implementation of the network, one input point at a time.
double reference_forward(const NetworkConfig& c, const NetworkParams& p, const Eigen::VectorXd& z) {
  const int din = c.input_dim();
  std::vector<double> phi(z.data(), z.data() + din);
  std::vector<double> proj(c.n_F, 0.0);
  for (int j = 0; j < c.n_F; ++j) {
    for (int i = 0; i < din; ++i) proj[j] += z[i] * p.frequencies(i, j);
  }
  for (int j = 0; j < c.n_F; ++j) phi.push_back(std::sin(proj[j]));
  for (int j = 0; j < c.n_F; ++j) phi.push_back(std::cos(proj[j]));

  auto affine = [&](const std::vector<double>& x, int k) {
    const Tensor& w = p.tensors[k];
    const Tensor& b = p.tensors[k + 1];
    std::vector<double> y(w.rows());
    for (int r = 0; r < w.rows(); ++r) {
      double s = b(0, r);
      for (int q = 0; q < w.cols(); ++q) s += w(r, q) * x[q];
      y[r] = s;
    }
    return y;
  };
  auto act = [](std::vector<double> v) {
    for (double& x : v) x = silu(x);
    return v;
  };

  std::vector<double> h = act(affine(phi, 0));
  int k = 2;
  for (int r = 0; r < c.n_r; ++r, k += 6) {
    const std::vector<double> a = act(affine(h, k));
    std::vector<double> s = affine(a, k + 2);
    for (size_t i = 0; i < s.size(); ++i) s[i] += h[i];
    double mu = 0.0, var = 0.0;
    for (double v : s) mu += v;
    mu /= s.size();
    for (double v : s) var += (v - mu) * (v - mu);
    var /= s.size();
    for (size_t i = 0; i < s.size(); ++i) {
      s[i] = (s[i] - mu) / std::sqrt(var + kLayerNormEps) * p.tensors[k + 4](0, i) + p.tensors[k + 5](0, i);
    }
    h = act(s);
  }
  const std::vector<double> n = act(affine(h, k));
  return affine(n, k + 2)[0];
}

Tensor random_inputs(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Tensor z(rows, cols);
  for (Eigen::Index k = 0; k < z.size(); ++k) z.data()[k] = U(rng);
  return z;
}

}  // namespace

TEST_CASE("fourier embedding shape and identities") {
  NetworkConfig c = small_config();
  c.n_F = 24;
  const NetworkParams p = init_params(c);
  CHECK(c.feature_dim() == 51);
  CHECK(p.frequencies.rows() == 3);
  CHECK(p.frequencies.cols() == 24);
  const Tensor zero = fourier_embed(p.frequencies, Tensor::Zero(1, 3));
  REQUIRE(zero.cols() == 51);
  CHECK(zero.leftCols(27).cwiseAbs().maxCoeff() == 0.0);
  CHECK((zero.rightCols(24).array() - 1.0).abs().maxCoeff() == 0.0);

  const Tensor z = random_inputs(20, 3, 1);
  const Tensor phi = fourier_embed(p.frequencies, z);
  CHECK((phi.leftCols(3) - z).cwiseAbs().maxCoeff() == 0.0);
  const Tensor s = phi.middleCols(3, 24), co = phi.rightCols(24);
  CHECK(((s.array().square() + co.array().square()) - 1.0).abs().maxCoeff() < 1e-15);
  CHECK_THROWS(fourier_embed(p.frequencies, Tensor::Zero(1, 2)));
}

TEST_CASE("frequency statistics follow the bandwidth") {
  NetworkConfig c = small_config();
  c.n_F = 4000;
  c.sigma = 3.0;
  const NetworkParams p = init_params(c);
  const double mean = p.frequencies.mean();
  const double sd = std::sqrt((p.frequencies.array() - mean).square().mean());
  CHECK(std::abs(mean) < 0.1);
  CHECK(sd == doctest::Approx(3.0).epsilon(0.03));
}

TEST_CASE("layer norm examples") {
  const Tensor one = Tensor::Ones(1, 4), zero = Tensor::Zero(1, 4);
  CHECK(layer_norm(Tensor::Constant(1, 4, 2.5), one, zero).cwiseAbs().maxCoeff() == 0.0);
  Tensor x(1, 2);
  x << 1.0, -1.0;
  const Tensor y = layer_norm(x, Tensor::Ones(1, 2), Tensor::Zero(1, 2), 0.0);
  CHECK(y(0, 0) == doctest::Approx(1.0));
  CHECK(y(0, 1) == doctest::Approx(-1.0));

  const Tensor r = random_inputs(10, 16, 3) * 5.0;
  const Tensor beta = random_inputs(1, 16, 4);
  const Tensor out = layer_norm(r, Tensor::Ones(1, 16), beta);
  for (int i = 0; i < 10; ++i) {
    const Eigen::RowVectorXd pre = out.row(i) - beta;
    CHECK(std::abs(out.row(i).mean() - beta.mean()) < 1e-12);
    CHECK(pre.array().square().mean() == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("layer norm on the tape agrees with the plain version") {
  const Tensor x = random_inputs(5, 8, 5), g = random_inputs(1, 8, 6), b = random_inputs(1, 8, 7);
  ad::Tape tape;
  const Tensor v = layer_norm(tape.leaf(x), tape.leaf(g), tape.leaf(b)).value();
  CHECK((v - layer_norm(x, g, b)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("forward matches a scalar re-implementation") {
  for (int n_sd : {1, 2}) {
    const NetworkConfig c = small_config(n_sd);
    const NetworkParams p = init_params(c);
    const Tensor z = random_inputs(15, n_sd + 1, 8);
    const Tensor raw = forward_raw(c, p, z);
    REQUIRE(raw.cols() == 1);
    for (int r = 0; r < z.rows(); ++r) {
      CHECK(raw(r, 0) == doctest::Approx(reference_forward(c, p, z.row(r).transpose())).epsilon(1e-12));
    }
    ad::Tape tape;
    const Tensor taped = forward(c, place_params(tape, p), tape.leaf(z)).value();
    CHECK((taped - raw).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((evaluate(c, p, z) - raw.col(0)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("parameter layout") {
  const NetworkConfig c = small_config();
  const NetworkParams p = init_params(c);
  CHECK(p.tensors.size() == 2 + 6 * 2 + 4);
  CHECK(p.names.front() == "input.weight");
  CHECK(p.tensors[0].rows() == 12);
  CHECK(p.tensors[0].cols() == c.feature_dim());
  CHECK(p.tensors[p.tensors.size() - 4].rows() == 6);  // narrowing to n_h / 2
  CHECK(p.tensors[p.tensors.size() - 2].rows() == 1);
  int count = 0;
  for (const auto& t : p.tensors) count += static_cast<int>(t.size());
  CHECK(p.count() == count);
  for (size_t k = 0; k < p.tensors.size(); ++k) {
    if (p.names[k].find("weight") == std::string::npos) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.tensors[k].cols()));
    CHECK(p.tensors[k].cwiseAbs().maxCoeff() <= bound);
  }
  CHECK(p.all_finite());
}

TEST_CASE("initialization is deterministic per seed") {
  const NetworkConfig c = small_config();
  const NetworkParams a = init_params(c), b = init_params(c);
  CHECK(a.frequencies == b.frequencies);
  for (size_t k = 0; k < a.tensors.size(); ++k) CHECK(a.tensors[k] == b.tensors[k]);
  NetworkConfig d = c;
  d.seed = 43;
  CHECK(init_params(d).frequencies != a.frequencies);
  const Tensor z = random_inputs(6, 3, 9);
  CHECK(evaluate(c, a, z) == evaluate(c, b, z));
}

TEST_CASE("silu values") {
  const NetworkConfig c = small_config();
  ad::Tape tape;
  Tensor x(1, 2);
  x << 0.0, 1.0;
  const Tensor y = ad::silu(tape.leaf(x)).value();
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 1) == doctest::Approx(0.73106).epsilon(1e-5));
}

TEST_CASE("lift vanishes to the boundary data") {
  NetworkConfig c = small_config();
  c.lift = Lift{[](const ad::Var& z) { return ad::sin(ad::col(z, 1) * 3.0) + ad::col(z, 0); }, {}};
  const NetworkParams p = init_params(c);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Tensor z(1000, 3);
  for (int k = 0; k < 1000; ++k) {
    const double a = U(rng);
    const int side = k % 4;
    z.row(k) << U(rng), side == 0 || side == 2 ? a : (side == 1 ? 1.0 : 0.0),
        side == 1 || side == 3 ? a : (side == 2 ? 1.0 : 0.0);
  }
  const Eigen::VectorXd u = evaluate(c, p, z);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) worst = std::max(worst, std::abs(u[k] - (std::sin(3.0 * z(k, 1)) + z(k, 0))));
  CHECK(worst < 1e-15);

  // Interior values are the boundary function plus x1(1-x1)x2(1-x2) times the raw output.
  const Tensor zi = random_inputs(10, 3, 11);
  const Eigen::VectorXd ui = evaluate(c, p, zi);
  const Tensor raw = forward_raw(c, p, zi);
  for (int k = 0; k < 10; ++k) {
    const double d = zi(k, 1) * (1 - zi(k, 1)) * zi(k, 2) * (1 - zi(k, 2));
    CHECK(ui[k] == doctest::Approx(std::sin(3.0 * zi(k, 1)) + zi(k, 0) + d * raw(k, 0)).epsilon(1e-13));
  }
}

TEST_CASE("zero lift with a custom distance") {
  NetworkConfig c = small_config(1);
  c.lift = Lift{{}, [](const ad::Var& z) { return ad::col(z, 1) * 0.0 + 2.0; }};
  const NetworkParams p = init_params(c);
  const Tensor z = random_inputs(5, 2, 12);
  CHECK((evaluate(c, p, z) - 2.0 * forward_raw(c, p, z).col(0)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("non-finite intermediates are reported") {
  const NetworkConfig c = small_config();
  NetworkParams p = init_params(c);
  p.tensors[1](0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(p.all_finite());
  CHECK_THROWS_AS(evaluate(c, p, random_inputs(3, 3, 13)), std::runtime_error);
}

TEST_CASE("outputs stay finite for finite inputs") {
  const NetworkConfig c = small_config();
  const NetworkParams p = init_params(c);
  const Tensor z = (random_inputs(200, 3, 14).array() - 0.5) * 200.0;
  CHECK(evaluate(c, p, z).allFinite());
}

TEST_CASE("config validation") {
  NetworkConfig c = small_config();
  CHECK_NOTHROW(c.validate());
  c.sigma = 0.0;
  CHECK_THROWS(c.validate());
  c = small_config();
  c.n_r = 0;
  CHECK_THROWS(c.validate());
  c = small_config();
  c.domain.dim = 1;
  CHECK_THROWS(c.validate());
}

TEST_CASE("checkpoint round trip") {
  NetworkConfig c = small_config();
  const NetworkParams p = init_params(c);
  const auto path = (std::filesystem::temp_directory_path() / "cdr_ckpt_test.txt").string();
  save_checkpoint(path, c, p);
  NetworkConfig d = small_config();
  d.n_h = 64;
  d.n_F = 1;
  const NetworkParams q = load_checkpoint(path, d);
  CHECK(d.n_h == c.n_h);
  CHECK(d.n_F == c.n_F);
  CHECK(q.frequencies == p.frequencies);
  REQUIRE(q.tensors.size() == p.tensors.size());
  for (size_t k = 0; k < p.tensors.size(); ++k) {
    CHECK(q.tensors[k] == p.tensors[k]);
    CHECK(q.names[k] == p.names[k]);
  }
  CHECK_THROWS(load_checkpoint(path + ".missing", d));
}

TEST_CASE("normal stream moments") {
  NormalStream s(99);
  double m = 0.0, v = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = s.normal();
    m += x;
    v += x * x;
  }
  m /= n;
  v = v / n - m * m;
  CHECK(std::abs(m) < 0.01);
  CHECK(v == doctest::Approx(1.0).epsilon(0.01));
  NormalStream u(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
}
