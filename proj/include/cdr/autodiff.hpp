#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace cdr::ad {

/// Tensors are dense matrices; rows index the batch, columns the features.
using Tensor = Eigen::MatrixXd;

class Tape;

/// Handle to a node on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr && id_ >= 0; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

enum class Op : std::uint8_t {
  leaf,
  add,
  sub,
  mul,
  div,
  neg,
  scale,
  add_const,
  matmul,
  add_row,
  mul_row,
  add_col,
  mul_col,
  row_sum,
  col_sum,
  sum_all,
  broadcast_cols,
  broadcast_rows,
  broadcast_scalar,
  sin,
  cos,
  exp,
  tanh,
  sigmoid,
  silu,
  square,
  pow_const,
  clamp,
  col_range,
  pad_cols,
  concat_cols,
};

/// Linear record of tensor operations. Parents always precede children.
class Tape {
 public:
  Tape();
  Var leaf(Tensor value);
  Var constant(double value, Eigen::Index rows = 1, Eigen::Index cols = 1);

  int size() const { return static_cast<int>(nodes_.size()); }
  void clear() {
    nodes_.clear();
    logistic_.clear();
  }
  void reserve(int n) { nodes_.reserve(n); }
  const Tensor& value(int id) const { return nodes_[id].value; }
  Op op(int id) const { return nodes_[id].op; }

  /// Bytes held by node values.
  std::size_t memory_bytes() const;

  struct Node {
    Op op = Op::leaf;
    int a = -1;
    int b = -1;
    int i0 = 0;
    int i1 = 0;
    double s0 = 0.0;
    double s1 = 0.0;
    bool ta = false;
    bool tb = false;
    Tensor value;
  };

 private:
  friend struct Recorder;

  Var push(Node node);
  /// sigmoid(value(id)), computed once and shared by every derivative order.
  const Tensor& logistic(int id) const;
  std::vector<Node> nodes_;
  mutable std::unordered_map<int, Tensor> logistic_;
};

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);  // element-wise
Var operator/(const Var& a, const Var& b);  // element-wise
Var operator-(const Var& a);
Var operator*(double s, const Var& a);
Var operator*(const Var& a, double s);
Var operator+(const Var& a, double s);
Var operator+(double s, const Var& a);
Var operator-(const Var& a, double s);
Var operator-(double s, const Var& a);

/// op(a) * op(b), where op transposes when the flag is set.
Var matmul(const Var& a, const Var& b, bool transpose_a = false, bool transpose_b = false);

/// x + r and x .* r for a 1 x cols row vector r, applied to every row.
Var add_row(const Var& x, const Var& r);
Var mul_row(const Var& x, const Var& r);
/// x + c and x .* c for a rows x 1 column vector c, applied to every column.
Var add_col(const Var& x, const Var& c);
Var mul_col(const Var& x, const Var& c);

Var row_sum(const Var& x);  // rows x 1
Var col_sum(const Var& x);  // 1 x cols
Var sum(const Var& x);      // 1 x 1
Var mean(const Var& x);
Var broadcast_cols(const Var& c, int cols);
Var broadcast_rows(const Var& r, int rows);
Var broadcast_scalar(const Var& s, int rows, int cols);

Var sin(const Var& x);
Var cos(const Var& x);
Var exp(const Var& x);
Var tanh(const Var& x);
/// k-th derivative of the logistic sigmoid, element-wise.
Var sigmoid(const Var& x, int order = 0);
/// k-th derivative of x * sigmoid(x), element-wise.
Var silu(const Var& x, int order = 0);
Var pow(const Var& x, double exponent);
Var square(const Var& x);
/// Element-wise clamp; the gradient is passed through where lo <= x <= hi.
Var clamp(const Var& x, double lo, double hi);

Var col(const Var& x, int j);
Var col_range(const Var& x, int start, int count);
/// Zero matrix with `total` columns holding x in columns [start, start + x.cols()).
Var pad_cols(const Var& x, int start, int total);
Var concat_cols(const Var& a, const Var& b);

/// Reverse sweep from a 1x1 output. Returns plain tensors shaped like the
/// inputs; inputs the output does not depend on get zero gradients.
std::vector<Tensor> grad(const Var& output, const std::vector<Var>& inputs);

/// Reverse sweep recorded on the tape, so the returned gradients can be
/// differentiated again.
std::vector<Var> grad_graph(const Var& output, const std::vector<Var>& inputs);

/// Element-wise k-th derivatives used by the sigmoid and SiLU nodes.
Tensor sigmoid_derivative(const Tensor& x, int order);
Tensor silu_derivative(const Tensor& x, int order);

}  // namespace cdr::ad
