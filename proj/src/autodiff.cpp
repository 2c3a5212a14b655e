#include "cdr/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace cdr::ad {

const Tensor& Var::value() const {
  if (!valid()) throw std::logic_error("ad::Var: invalid handle");
  return tape_->value(id_);
}

double Var::scalar() const {
  const Tensor& v = value();
  if (v.size() != 1) throw std::invalid_argument("ad::Var::scalar: node is not 1x1");
  return v(0, 0);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::constant(double value, Eigen::Index rows, Eigen::Index cols) {
  return leaf(Tensor::Constant(rows, cols, value));
}

std::size_t Tape::memory_bytes() const {
  std::size_t bytes = 0;
  for (const auto& n : nodes_) bytes += static_cast<std::size_t>(n.value.size()) * sizeof(double);
  return bytes;
}

namespace {

// Coefficients (in powers of s = sigmoid(x)) of the k-th derivative of the
// sigmoid: P_0 = s, P_{k+1} = P_k'(s) (s - s^2).
const std::vector<std::vector<double>>& sigmoid_polynomials() {
  static const std::vector<std::vector<double>> table = [] {
    constexpr int kMax = 12;
    std::vector<std::vector<double>> p(kMax + 1);
    p[0] = {0.0, 1.0};
    for (int k = 0; k < kMax; ++k) {
      const auto& prev = p[k];
      std::vector<double> deriv(prev.size() > 1 ? prev.size() - 1 : 1, 0.0);
      for (size_t i = 1; i < prev.size(); ++i) deriv[i - 1] = static_cast<double>(i) * prev[i];
      std::vector<double> next(deriv.size() + 2, 0.0);
      for (size_t i = 0; i < deriv.size(); ++i) {
        next[i + 1] += deriv[i];
        next[i + 2] -= deriv[i];
      }
      p[k + 1] = std::move(next);
    }
    return p;
  }();
  return table;
}

Tensor logistic(const Tensor& x) { return (1.0 + (-x.array()).exp()).inverse().matrix(); }

void check_order(int order) {
  if (order < 0 || order >= static_cast<int>(sigmoid_polynomials().size())) {
    throw std::invalid_argument("sigmoid_derivative: unsupported order " + std::to_string(order));
  }
}

double horner(const std::vector<double>& c, double s) {
  double acc = c.back();
  for (int i = static_cast<int>(c.size()) - 2; i >= 0; --i) acc = acc * s + c[i];
  return acc;
}

Tensor sigmoid_from(const Tensor& s, int order) {
  if (order == 0) return s;
  Tensor out(s.rows(), s.cols());
  const double* sp = s.data();
  double* op = out.data();
  const Eigen::Index n = s.size();
  if (order == 1) {
    for (Eigen::Index k = 0; k < n; ++k) op[k] = sp[k] * (1.0 - sp[k]);
    return out;
  }
  const auto& c = sigmoid_polynomials()[order];
  for (Eigen::Index k = 0; k < n; ++k) op[k] = horner(c, sp[k]);
  return out;
}

Tensor silu_from(const Tensor& x, const Tensor& s, int order) {
  Tensor out(x.rows(), x.cols());
  const double* xp = x.data();
  const double* sp = s.data();
  double* op = out.data();
  const Eigen::Index n = x.size();
  if (order == 0) {
    for (Eigen::Index k = 0; k < n; ++k) op[k] = xp[k] * sp[k];
  } else if (order == 1) {
    for (Eigen::Index k = 0; k < n; ++k) op[k] = sp[k] * (1.0 + xp[k] * (1.0 - sp[k]));
  } else if (order == 2) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double q = sp[k] * (1.0 - sp[k]);
      op[k] = q * (2.0 + xp[k] * (1.0 - 2.0 * sp[k]));
    }
  } else {
    const auto& hi = sigmoid_polynomials()[order];
    const auto& lo = sigmoid_polynomials()[order - 1];
    for (Eigen::Index k = 0; k < n; ++k) op[k] = xp[k] * horner(hi, sp[k]) + order * horner(lo, sp[k]);
  }
  return out;
}

}  // namespace

Tensor sigmoid_derivative(const Tensor& x, int order) {
  check_order(order);
  return sigmoid_from(logistic(x), order);
}

Tensor silu_derivative(const Tensor& x, int order) {
  check_order(order);
  return silu_from(x, logistic(x), order);
}

Tape::Tape() {
#ifdef __GLIBC__
  // Tapes churn through many equally sized tensors; keep them on the heap
  // instead of mapping and unmapping pages for every node.
  static const bool tuned = [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
    return true;
  }();
  (void)tuned;
#endif
}

const Tensor& Tape::logistic(int id) const {
  auto it = logistic_.find(id);
  if (it == logistic_.end()) it = logistic_.emplace(id, cdr::ad::logistic(nodes_[id].value)).first;
  return it->second;
}

struct Recorder {
  static Var push(Tape* t, Tape::Node n) { return t->push(std::move(n)); }
  static const Tensor& logistic(const Tape* t, int id) { return t->logistic(id); }
  static const Tape::Node& node(const Tape* t, int id) { return t->nodes_[id]; }
};

namespace {

Tape* same_tape(const Var& a, const Var& b) {
  if (!a.valid() || !b.valid()) throw std::logic_error("ad: invalid operand");
  if (a.tape() != b.tape()) throw std::logic_error("ad: operands live on different tapes");
  return a.tape();
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string("ad::") + op + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

Var unary(Op op, const Var& x, Tensor value, double s0 = 0.0, double s1 = 0.0, int i0 = 0, int i1 = 0) {
  if (!x.valid()) throw std::logic_error("ad: invalid operand");
  Tape::Node n;
  n.op = op;
  n.a = x.id();
  n.s0 = s0;
  n.s1 = s1;
  n.i0 = i0;
  n.i1 = i1;
  n.value = std::move(value);
  return Recorder::push(x.tape(), std::move(n));
}

Var binary(Op op, const Var& a, const Var& b, Tensor value) {
  Tape* t = same_tape(a, b);
  Tape::Node n;
  n.op = op;
  n.a = a.id();
  n.b = b.id();
  n.value = std::move(value);
  return Recorder::push(t, std::move(n));
}

}  // namespace

Var operator+(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return binary(Op::add, a, b, a.value() + b.value());
}

Var operator-(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return binary(Op::sub, a, b, a.value() - b.value());
}

Var operator*(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  return binary(Op::mul, a, b, a.value().cwiseProduct(b.value()));
}

Var operator/(const Var& a, const Var& b) {
  require_same_shape(a, b, "div");
  return binary(Op::div, a, b, a.value().cwiseQuotient(b.value()));
}

Var operator-(const Var& a) { return unary(Op::neg, a, -a.value()); }
Var operator*(double s, const Var& a) { return unary(Op::scale, a, s * a.value(), s); }
Var operator*(const Var& a, double s) { return s * a; }
Var operator+(const Var& a, double s) { return unary(Op::add_const, a, (a.value().array() + s).matrix(), s); }
Var operator+(double s, const Var& a) { return a + s; }
Var operator-(const Var& a, double s) { return a + (-s); }
Var operator-(double s, const Var& a) { return (-a) + s; }

Var matmul(const Var& a, const Var& b, bool ta, bool tb) {
  Tape* t = same_tape(a, b);
  const Eigen::Index inner_a = ta ? a.rows() : a.cols();
  const Eigen::Index inner_b = tb ? b.cols() : b.rows();
  if (inner_a != inner_b) throw std::invalid_argument("ad::matmul: inner dimensions differ");
  Tape::Node n;
  n.op = Op::matmul;
  n.a = a.id();
  n.b = b.id();
  n.ta = ta;
  n.tb = tb;
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  n.value.resize(ta ? av.cols() : av.rows(), tb ? bv.rows() : bv.cols());
  if (!ta && !tb) n.value.noalias() = av * bv;
  else if (!ta && tb) n.value.noalias() = av * bv.transpose();
  else if (ta && !tb) n.value.noalias() = av.transpose() * bv;
  else n.value.noalias() = av.transpose() * bv.transpose();
  return Recorder::push(t, std::move(n));
}

Var add_row(const Var& x, const Var& r) {
  if (r.rows() != 1 || r.cols() != x.cols()) throw std::invalid_argument("ad::add_row: shape mismatch");
  return binary(Op::add_row, x, r, x.value().rowwise() + r.value().row(0));
}

Var mul_row(const Var& x, const Var& r) {
  if (r.rows() != 1 || r.cols() != x.cols()) throw std::invalid_argument("ad::mul_row: shape mismatch");
  return binary(Op::mul_row, x, r, (x.value().array().rowwise() * r.value().row(0).array()).matrix());
}

Var add_col(const Var& x, const Var& c) {
  if (c.cols() != 1 || c.rows() != x.rows()) throw std::invalid_argument("ad::add_col: shape mismatch");
  return binary(Op::add_col, x, c, x.value().colwise() + c.value().col(0));
}

Var mul_col(const Var& x, const Var& c) {
  if (c.cols() != 1 || c.rows() != x.rows()) throw std::invalid_argument("ad::mul_col: shape mismatch");
  return binary(Op::mul_col, x, c, (x.value().array().colwise() * c.value().col(0).array()).matrix());
}

Var row_sum(const Var& x) { return unary(Op::row_sum, x, x.value().rowwise().sum()); }
Var col_sum(const Var& x) { return unary(Op::col_sum, x, x.value().colwise().sum()); }
Var sum(const Var& x) { return unary(Op::sum_all, x, Tensor::Constant(1, 1, x.value().sum())); }
Var mean(const Var& x) { return (1.0 / static_cast<double>(x.value().size())) * sum(x); }

Var broadcast_cols(const Var& c, int cols) {
  if (c.cols() != 1) throw std::invalid_argument("ad::broadcast_cols: expects a column vector");
  Tensor v(c.rows(), cols);
  for (int j = 0; j < cols; ++j) v.col(j) = c.value().col(0);
  return unary(Op::broadcast_cols, c, std::move(v), 0.0, 0.0, cols);
}

Var broadcast_rows(const Var& r, int rows) {
  if (r.rows() != 1) throw std::invalid_argument("ad::broadcast_rows: expects a row vector");
  return unary(Op::broadcast_rows, r, r.value().replicate(rows, 1), 0.0, 0.0, rows);
}

Var broadcast_scalar(const Var& s, int rows, int cols) {
  if (s.value().size() != 1) throw std::invalid_argument("ad::broadcast_scalar: expects a 1x1 node");
  return unary(Op::broadcast_scalar, s, Tensor::Constant(rows, cols, s.scalar()), 0.0, 0.0, rows, cols);
}

Var sin(const Var& x) { return unary(Op::sin, x, x.value().array().sin().matrix()); }
Var cos(const Var& x) { return unary(Op::cos, x, x.value().array().cos().matrix()); }
Var exp(const Var& x) { return unary(Op::exp, x, x.value().array().exp().matrix()); }
Var tanh(const Var& x) { return unary(Op::tanh, x, x.value().array().tanh().matrix()); }
Var sigmoid(const Var& x, int order) {
  if (!x.valid()) throw std::logic_error("ad: invalid operand");
  check_order(order);
  return unary(Op::sigmoid, x, sigmoid_from(Recorder::logistic(x.tape(), x.id()), order), 0.0, 0.0, order);
}
Var silu(const Var& x, int order) {
  if (!x.valid()) throw std::logic_error("ad: invalid operand");
  check_order(order);
  return unary(Op::silu, x, silu_from(x.value(), Recorder::logistic(x.tape(), x.id()), order), 0.0, 0.0, order);
}
Var pow(const Var& x, double p) { return unary(Op::pow_const, x, x.value().array().pow(p).matrix(), p); }
Var square(const Var& x) { return unary(Op::square, x, x.value().cwiseAbs2()); }

Var clamp(const Var& x, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("ad::clamp: lo > hi");
  return unary(Op::clamp, x, x.value().cwiseMax(lo).cwiseMin(hi), lo, hi);
}

Var col(const Var& x, int j) { return col_range(x, j, 1); }

Var col_range(const Var& x, int start, int count) {
  if (start < 0 || count < 0 || start + count > x.cols()) throw std::out_of_range("ad::col_range: bad range");
  return unary(Op::col_range, x, x.value().middleCols(start, count), 0.0, 0.0, start, count);
}

Var pad_cols(const Var& x, int start, int total) {
  if (start < 0 || start + x.cols() > total) throw std::out_of_range("ad::pad_cols: bad range");
  Tensor v = Tensor::Zero(x.rows(), total);
  v.middleCols(start, x.cols()) = x.value();
  return unary(Op::pad_cols, x, std::move(v), 0.0, 0.0, start, total);
}

Var concat_cols(const Var& a, const Var& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("ad::concat_cols: row counts differ");
  Tensor v(a.rows(), a.cols() + b.cols());
  v << a.value(), b.value();
  return binary(Op::concat_cols, a, b, std::move(v));
}

namespace {

struct SweepSetup {
  std::vector<char> needed;
  std::vector<int> input_ids;
};

SweepSetup prepare(const Var& output, const std::vector<Var>& inputs) {
  if (!output.valid()) throw std::logic_error("ad::grad: invalid output");
  if (output.value().size() != 1) {
    throw std::invalid_argument("ad::grad: output must be a scalar (1x1), got " + std::to_string(output.rows()) +
                                "x" + std::to_string(output.cols()));
  }
  const Tape* tape = output.tape();
  SweepSetup s;
  s.needed.assign(output.id() + 1, 0);
  for (const Var& in : inputs) {
    if (!in.valid() || in.tape() != tape) throw std::logic_error("ad::grad: input on a different tape");
    s.input_ids.push_back(in.id());
    if (in.id() <= output.id()) s.needed[in.id()] = 1;
  }
  for (int i = 0; i <= output.id(); ++i) {
    if (s.needed[i]) continue;
    const auto& n = Recorder::node(tape, i);
    if ((n.a >= 0 && s.needed[n.a]) || (n.b >= 0 && s.needed[n.b])) s.needed[i] = 1;
  }
  return s;
}

void accumulate(Tensor& slot, const Tensor& contribution) {
  if (slot.size() == 0) slot = contribution;
  else slot += contribution;
}

// Hands `contribution` over when the slot is still empty.
void pass(Tensor& slot, Tensor& contribution) {
  if (slot.size() == 0) slot = std::move(contribution);
  else slot += contribution;
}

template <typename Expr>
void accumulate_expr(Tensor& slot, const Expr& contribution) {
  if (slot.size() == 0) slot = contribution;
  else slot += contribution;
}

}  // namespace

std::vector<Tensor> grad(const Var& output, const std::vector<Var>& inputs) {
  const SweepSetup setup = prepare(output, inputs);
  const Tape* tape = output.tape();
  std::vector<Tensor> g(output.id() + 1);
  g[output.id()] = Tensor::Ones(1, 1);
  for (int i = output.id(); i >= 0; --i) {
    if (!setup.needed[i] || g[i].size() == 0) continue;
    const auto& n = Recorder::node(tape, i);
    if (n.op == Op::leaf) continue;
    const bool is_input = std::find(setup.input_ids.begin(), setup.input_ids.end(), i) != setup.input_ids.end();
    Tensor gi = is_input ? g[i] : std::move(g[i]);
    const bool na = n.a >= 0 && setup.needed[n.a];
    const bool nb = n.b >= 0 && setup.needed[n.b];
    const Tensor* av = n.a >= 0 ? &tape->value(n.a) : nullptr;
    const Tensor* bv = n.b >= 0 ? &tape->value(n.b) : nullptr;
    switch (n.op) {
      case Op::leaf: break;
      case Op::add:
        if (na && nb) accumulate(g[n.a], gi);
        else if (na) pass(g[n.a], gi);
        if (nb) pass(g[n.b], gi);
        break;
      case Op::sub:
        if (na && nb) accumulate(g[n.a], gi);
        else if (na) pass(g[n.a], gi);
        if (nb) accumulate_expr(g[n.b], -gi);
        break;
      case Op::mul:
        if (na) accumulate_expr(g[n.a], gi.cwiseProduct(*bv));
        if (nb) accumulate_expr(g[n.b], gi.cwiseProduct(*av));
        break;
      case Op::div:
        if (na) accumulate_expr(g[n.a], gi.cwiseQuotient(*bv));
        if (nb) accumulate_expr(g[n.b], -(gi.array() * n.value.array() / bv->array()).matrix());
        break;
      case Op::neg:
        if (na) accumulate_expr(g[n.a], -gi);
        break;
      case Op::scale:
        if (na) accumulate_expr(g[n.a], n.s0 * gi);
        break;
      case Op::add_const:
        if (na) pass(g[n.a], gi);
        break;
      case Op::matmul: {
        if (na) {
          if (!n.ta && n.tb) accumulate_expr(g[n.a], gi * *bv);
          else if (!n.ta) accumulate_expr(g[n.a], gi * bv->transpose());
          else if (n.tb) accumulate_expr(g[n.a], bv->transpose() * gi.transpose());
          else accumulate_expr(g[n.a], *bv * gi.transpose());
        }
        if (nb) {
          if (!n.tb && n.ta) accumulate_expr(g[n.b], *av * gi);
          else if (!n.tb) accumulate_expr(g[n.b], av->transpose() * gi);
          else if (n.ta) accumulate_expr(g[n.b], gi.transpose() * av->transpose());
          else accumulate_expr(g[n.b], gi.transpose() * *av);
        }
        break;
      }
      case Op::add_row:
        if (nb) accumulate_expr(g[n.b], gi.colwise().sum());
        if (na) pass(g[n.a], gi);
        break;
      case Op::mul_row:
        if (na) accumulate_expr(g[n.a], (gi.array().rowwise() * bv->row(0).array()).matrix());
        if (nb) accumulate_expr(g[n.b], gi.cwiseProduct(*av).colwise().sum());
        break;
      case Op::add_col:
        if (nb) accumulate_expr(g[n.b], gi.rowwise().sum());
        if (na) pass(g[n.a], gi);
        break;
      case Op::mul_col:
        if (na) accumulate_expr(g[n.a], (gi.array().colwise() * bv->col(0).array()).matrix());
        if (nb) accumulate_expr(g[n.b], gi.cwiseProduct(*av).rowwise().sum());
        break;
      case Op::row_sum:
        if (na) {
          Tensor& slot = g[n.a];
          if (slot.size() == 0) {
            slot.resize(av->rows(), av->cols());
            for (Eigen::Index j = 0; j < slot.cols(); ++j) slot.col(j) = gi.col(0);
          } else {
            for (Eigen::Index j = 0; j < slot.cols(); ++j) slot.col(j) += gi.col(0);
          }
        }
        break;
      case Op::col_sum:
        if (na) accumulate_expr(g[n.a], gi.replicate(av->rows(), 1));
        break;
      case Op::sum_all:
        if (na) accumulate_expr(g[n.a], Tensor::Constant(av->rows(), av->cols(), gi(0, 0)));
        break;
      case Op::broadcast_cols:
        if (na) accumulate_expr(g[n.a], gi.rowwise().sum());
        break;
      case Op::broadcast_rows:
        if (na) accumulate_expr(g[n.a], gi.colwise().sum());
        break;
      case Op::broadcast_scalar:
        if (na) accumulate_expr(g[n.a], Tensor::Constant(1, 1, gi.sum()));
        break;
      case Op::sin:
        if (na) accumulate_expr(g[n.a], (gi.array() * av->array().cos()).matrix());
        break;
      case Op::cos:
        if (na) accumulate_expr(g[n.a], (-gi.array() * av->array().sin()).matrix());
        break;
      case Op::exp:
        if (na) accumulate_expr(g[n.a], gi.cwiseProduct(n.value));
        break;
      case Op::tanh:
        if (na) accumulate_expr(g[n.a], (gi.array() * (1.0 - n.value.array().square())).matrix());
        break;
      case Op::sigmoid:
        if (na) accumulate_expr(g[n.a], gi.cwiseProduct(sigmoid_from(Recorder::logistic(tape, n.a), n.i0 + 1)));
        break;
      case Op::silu:
        if (na) accumulate_expr(g[n.a], gi.cwiseProduct(silu_from(*av, Recorder::logistic(tape, n.a), n.i0 + 1)));
        break;
      case Op::square:
        if (na) accumulate_expr(g[n.a], (2.0 * gi.array() * av->array()).matrix());
        break;
      case Op::pow_const:
        if (na) accumulate_expr(g[n.a], (n.s0 * gi.array() * av->array().pow(n.s0 - 1.0)).matrix());
        break;
      case Op::clamp:
        if (na) {
          accumulate_expr(g[n.a],
                          (gi.array() * (av->array() >= n.s0 && av->array() <= n.s1).cast<double>()).matrix());
        }
        break;
      case Op::col_range:
        if (na) {
          Tensor pad = Tensor::Zero(av->rows(), av->cols());
          pad.middleCols(n.i0, n.i1) = gi;
          accumulate(g[n.a], pad);
        }
        break;
      case Op::pad_cols:
        if (na) accumulate_expr(g[n.a], gi.middleCols(n.i0, av->cols()));
        break;
      case Op::concat_cols:
        if (na) accumulate_expr(g[n.a], gi.leftCols(av->cols()));
        if (nb) accumulate_expr(g[n.b], gi.rightCols(bv->cols()));
        break;
    }
  }
  std::vector<Tensor> out;
  out.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (in.id() < static_cast<int>(g.size()) && g[in.id()].size() != 0) out.push_back(g[in.id()]);
    else out.push_back(Tensor::Zero(in.rows(), in.cols()));
  }
  return out;
}

std::vector<Var> grad_graph(const Var& output, const std::vector<Var>& inputs) {
  const SweepSetup setup = prepare(output, inputs);
  Tape* tape = output.tape();
  const int top = output.id();
  std::vector<Var> g(top + 1);
  g[top] = tape->constant(1.0);
  auto acc = [&](int p, const Var& v) { g[p] = g[p].valid() ? g[p] + v : v; };
  for (int i = top; i >= 0; --i) {
    if (!setup.needed[i] || !g[i].valid()) continue;
    const Tape::Node n = [&] {
      const auto& ref = Recorder::node(tape, i);
      Tape::Node copy;
      copy.op = ref.op;
      copy.a = ref.a;
      copy.b = ref.b;
      copy.i0 = ref.i0;
      copy.i1 = ref.i1;
      copy.s0 = ref.s0;
      copy.s1 = ref.s1;
      copy.ta = ref.ta;
      copy.tb = ref.tb;
      return copy;
    }();
    if (n.op == Op::leaf) continue;
    const Var gi = g[i];
    const bool na = n.a >= 0 && setup.needed[n.a];
    const bool nb = n.b >= 0 && setup.needed[n.b];
    const Var a(tape, n.a);
    const Var b(tape, n.b);
    const Var y(tape, i);
    switch (n.op) {
      case Op::leaf: break;
      case Op::add:
        if (na) acc(n.a, gi);
        if (nb) acc(n.b, gi);
        break;
      case Op::sub:
        if (na) acc(n.a, gi);
        if (nb) acc(n.b, -gi);
        break;
      case Op::mul:
        if (na) acc(n.a, gi * b);
        if (nb) acc(n.b, gi * a);
        break;
      case Op::div:
        if (na) acc(n.a, gi / b);
        if (nb) acc(n.b, -((gi * y) / b));
        break;
      case Op::neg:
        if (na) acc(n.a, -gi);
        break;
      case Op::scale:
        if (na) acc(n.a, n.s0 * gi);
        break;
      case Op::add_const:
        if (na) acc(n.a, gi);
        break;
      case Op::matmul:
        if (na) acc(n.a, n.ta ? matmul(b, gi, n.tb, true) : matmul(gi, b, false, !n.tb));
        if (nb) acc(n.b, n.tb ? matmul(gi, a, true, n.ta) : matmul(a, gi, !n.ta, false));
        break;
      case Op::add_row:
        if (na) acc(n.a, gi);
        if (nb) acc(n.b, col_sum(gi));
        break;
      case Op::mul_row:
        if (na) acc(n.a, mul_row(gi, b));
        if (nb) acc(n.b, col_sum(gi * a));
        break;
      case Op::add_col:
        if (na) acc(n.a, gi);
        if (nb) acc(n.b, row_sum(gi));
        break;
      case Op::mul_col:
        if (na) acc(n.a, mul_col(gi, b));
        if (nb) acc(n.b, row_sum(gi * a));
        break;
      case Op::row_sum:
        if (na) g[n.a] = g[n.a].valid() ? add_col(g[n.a], gi) : broadcast_cols(gi, static_cast<int>(a.cols()));
        break;
      case Op::col_sum:
        if (na) g[n.a] = g[n.a].valid() ? add_row(g[n.a], gi) : broadcast_rows(gi, static_cast<int>(a.rows()));
        break;
      case Op::sum_all:
        if (na) acc(n.a, broadcast_scalar(gi, static_cast<int>(a.rows()), static_cast<int>(a.cols())));
        break;
      case Op::broadcast_cols:
        if (na) acc(n.a, row_sum(gi));
        break;
      case Op::broadcast_rows:
        if (na) acc(n.a, col_sum(gi));
        break;
      case Op::broadcast_scalar:
        if (na) acc(n.a, sum(gi));
        break;
      case Op::sin:
        if (na) acc(n.a, gi * cos(a));
        break;
      case Op::cos:
        if (na) acc(n.a, -(gi * sin(a)));
        break;
      case Op::exp:
        if (na) acc(n.a, gi * y);
        break;
      case Op::tanh:
        if (na) acc(n.a, gi * (1.0 - y * y));
        break;
      case Op::sigmoid:
        if (na) acc(n.a, gi * sigmoid(a, n.i0 + 1));
        break;
      case Op::silu:
        if (na) acc(n.a, gi * silu(a, n.i0 + 1));
        break;
      case Op::square:
        if (na) acc(n.a, gi * (2.0 * a));
        break;
      case Op::pow_const:
        if (na) acc(n.a, n.s0 == 1.0 ? gi : (n.s0 * gi) * pow(a, n.s0 - 1.0));
        break;
      case Op::clamp:
        if (na) {
          const Tensor& av = a.value();
          const Var mask = tape->leaf((av.array() >= n.s0 && av.array() <= n.s1).cast<double>().matrix());
          acc(n.a, gi * mask);
        }
        break;
      case Op::col_range:
        if (na) acc(n.a, pad_cols(gi, n.i0, static_cast<int>(a.cols())));
        break;
      case Op::pad_cols:
        if (na) acc(n.a, col_range(gi, n.i0, static_cast<int>(a.cols())));
        break;
      case Op::concat_cols:
        if (na) acc(n.a, col_range(gi, 0, static_cast<int>(a.cols())));
        if (nb) acc(n.b, col_range(gi, static_cast<int>(a.cols()), static_cast<int>(b.cols())));
        break;
    }
  }
  std::vector<Var> out;
  out.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (in.id() <= top && g[in.id()].valid()) out.push_back(g[in.id()]);
    else out.push_back(tape->leaf(Tensor::Zero(in.rows(), in.cols())));
  }
  return out;
}

}  // namespace cdr::ad
