#include "sga/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sga {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return "config error";
    case ErrorKind::shape: return "shape error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::empty_input: return "empty input";
    case ErrorKind::data: return "data error";
    case ErrorKind::state: return "state error";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::io: return "I/O error";
  }
  return "error";
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

// Tensor ----------------------------------------------------------------------

Tensor::Tensor() : shape_{0}, data_(std::make_shared<const std::vector<double>>()) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)) {
  if (shape_size(shape_) != data.size()) {
    throw ShapeError("tensor shape " + shape_to_string(shape_) + " holds " +
                     std::to_string(shape_size(shape_)) + " elements, got " +
                     std::to_string(data.size()));
  }
  data_ = std::make_shared<const std::vector<double>>(std::move(data));
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  std::vector<double> data(shape_size(shape), value);
  return Tensor(std::move(shape), std::move(data));
}

Tensor Tensor::matrix(const std::vector<std::vector<double>>& rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m ? rows.front().size() : 0;
  std::vector<double> data;
  data.reserve(m * n);
  for (const auto& r : rows) {
    if (r.size() != n) throw ShapeError("ragged rows in Tensor::matrix");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor({m, n}, std::move(data));
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

std::size_t Tensor::rows() const {
  if (rank() == 2) return shape_[0];
  if (rank() <= 1) return 1;
  throw ShapeError("rows() on tensor of shape " + shape_to_string(shape_));
}

std::size_t Tensor::cols() const {
  if (rank() == 2) return shape_[1];
  if (rank() == 1) return shape_[0];
  if (rank() == 0) return 1;
  throw ShapeError("cols() on tensor of shape " + shape_to_string(shape_));
}

double Tensor::at(std::size_t row, std::size_t col) const {
  return (*data_)[row * cols() + col];
}

double Tensor::item() const {
  if (size() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_to_string(shape_));
  }
  return (*data_)[0];
}

Tensor Tensor::detach() const {
  Tensor t = *this;
  t.tape_ = nullptr;
  t.node_ = no_node;
  return t;
}

// Tape ------------------------------------------------------------------------

Tensor Tape::variable(const Tensor& value) {
  Tensor t = value.detach();
  t.tape_ = this;
  t.node_ = nodes_.size();
  nodes_.push_back(Node{t.shape(), {}, {}});
  return t;
}

Tensor Tape::record(Tensor output, std::span<const Tensor> inputs, BackwardFn rule) {
  Node node{output.shape(), {}, std::move(rule)};
  node.inputs.reserve(inputs.size());
  for (const auto& in : inputs) {
    if (in.tape() != nullptr && in.tape() != this) {
      throw ConfigError("operation mixes tensors from different tapes");
    }
    node.inputs.push_back(in.tape() == this ? in.node() : Tensor::no_node);
  }
  output.tape_ = this;
  output.node_ = nodes_.size();
  nodes_.push_back(std::move(node));
  return output;
}

Gradients Tape::backward(const Tensor& loss) const {
  if (loss.size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " +
                     shape_to_string(loss.shape()));
  }
  if (loss.tape() != this) {
    throw ConfigError("backward() loss is not recorded on this tape");
  }

  std::vector<std::vector<double>> grads(nodes_.size());
  grads[loss.node()].assign(1, 1.0);

  std::vector<std::span<double>> in_spans;
  for (std::size_t id = loss.node() + 1; id-- > 0;) {
    if (grads[id].empty()) continue;
    const Node& node = nodes_[id];
    if (!node.rule) continue;
    in_spans.clear();
    for (auto in : node.inputs) {
      if (in == Tensor::no_node) {
        in_spans.emplace_back();
        continue;
      }
      if (grads[in].empty()) grads[in].assign(shape_size(nodes_[in].shape), 0.0);
      in_spans.emplace_back(grads[in]);
    }
    node.rule(grads[id], in_spans);
  }

  Gradients out;
  for (std::size_t id = 0; id <= loss.node(); ++id) {
    if (!nodes_[id].rule && !grads[id].empty()) {
      out.grads_.emplace(id, std::move(grads[id]));
    }
  }
  return out;
}

Tensor Gradients::wrt(const Tensor& leaf) const {
  auto it = grads_.find(leaf.node());
  if (it == grads_.end()) return Tensor::zeros(leaf.shape());
  return Tensor(leaf.shape(), it->second);
}

bool Gradients::contains(const Tensor& leaf) const {
  return grads_.count(leaf.node()) != 0;
}

Tape* common_tape(std::span<const Tensor> inputs) {
  Tape* tape = nullptr;
  for (const auto& in : inputs) {
    if (!in.tape()) continue;
    if (tape && tape != in.tape()) {
      throw ConfigError("operation mixes tensors from different tapes");
    }
    tape = in.tape();
  }
  return tape;
}

Tensor make_result(Tensor output, std::span<const Tensor> inputs, BackwardFn rule) {
  Tape* tape = common_tape(inputs);
  if (!tape) return output;
  return tape->record(std::move(output), inputs, std::move(rule));
}

void require_finite(const Tensor& t, const char* op) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op) + " produced a non-finite value");
    }
  }
}

namespace {

Tensor finish(const char* op, Tensor output, std::initializer_list<Tensor> inputs,
              BackwardFn rule) {
  require_finite(output, op);
  std::vector<Tensor> ins(inputs);
  return make_result(std::move(output), ins, std::move(rule));
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + " expects a matrix, got shape " +
                     shape_to_string(t.shape()));
  }
}

// Applies f elementwise; df(x, y) is dy/dx at input x with output y.
template <class F, class DF>
Tensor unary(const char* op, const Tensor& a, F f, DF df) {
  std::vector<double> out(a.size());
  const auto& x = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  Tensor result(a.shape(), std::move(out));
  Tensor in = a;
  Tensor res = result;
  return finish(op, std::move(result), {a},
                [in, res, df](std::span<const double> g, std::span<const std::span<double>> gi) {
                  if (gi[0].empty()) return;
                  const auto& x = in.values();
                  const auto& y = res.values();
                  for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i] * df(x[i], y[i]);
                });
}

enum class Bcast { none, left_scalar, right_scalar };

Bcast broadcast_mode(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Bcast::none;
  if (b.size() == 1) return Bcast::right_scalar;
  if (a.size() == 1) return Bcast::left_scalar;
  throw ShapeError(std::string(op) + ": shapes " + shape_to_string(a.shape()) + " and " +
                   shape_to_string(b.shape()) + " differ");
}

// f(x, y) value; dfa/dfb partial derivatives at (x, y).
template <class F, class DA, class DB>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, F f, DA dfa, DB dfb) {
  const Bcast mode = broadcast_mode(a, b, op);
  const Shape& shape = mode == Bcast::left_scalar ? b.shape() : a.shape();
  const std::size_t n = shape_size(shape);
  const auto& xa = a.values();
  const auto& xb = b.values();
  auto ia = [mode](std::size_t i) { return mode == Bcast::left_scalar ? 0 : i; };
  auto ib = [mode](std::size_t i) { return mode == Bcast::right_scalar ? 0 : i; };

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(xa[ia(i)], xb[ib(i)]);
  Tensor ta = a, tb = b;
  return finish(op, Tensor(shape, std::move(out)), {a, b},
                [ta, tb, ia, ib, dfa, dfb](std::span<const double> g,
                                           std::span<const std::span<double>> gi) {
                  const auto& xa = ta.values();
                  const auto& xb = tb.values();
                  for (std::size_t i = 0; i < g.size(); ++i) {
                    const double x = xa[ia(i)], y = xb[ib(i)];
                    if (!gi[0].empty()) gi[0][ia(i)] += g[i] * dfa(x, y);
                    if (!gi[1].empty()) gi[1][ib(i)] += g[i] * dfb(x, y);
                  }
                });
}

}  // namespace

// Linear algebra --------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dimensions differ: " + shape_to_string(a.shape()) +
                     " vs " + shape_to_string(b.shape()));
  }
  const auto& x = a.values();
  const auto& y = b.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = x[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += xv * y[p * n + j];
    }
  Tensor ta = a, tb = b;
  return finish("matmul", Tensor({m, n}, std::move(out)), {a, b},
                [ta, tb, m, k, n](std::span<const double> g,
                                  std::span<const std::span<double>> gi) {
                  const auto& x = ta.values();
                  const auto& y = tb.values();
                  if (!gi[0].empty()) {  // dA = G * B^T
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t p = 0; p < k; ++p) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * y[p * n + j];
                        gi[0][i * k + p] += s;
                      }
                  }
                  if (!gi[1].empty()) {  // dB = A^T * G
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t p = 0; p < k; ++p) {
                        const double xv = x[i * k + p];
                        for (std::size_t j = 0; j < n; ++j) gi[1][p * n + j] += xv * g[i * n + j];
                      }
                  }
                });
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  const auto& x = a.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x[i * n + j];
  return finish("transpose", Tensor({n, m}, std::move(out)), {a},
                [m, n](std::span<const double> g, std::span<const std::span<double>> gi) {
                  if (gi[0].empty()) return;
                  for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) gi[0][i * n + j] += g[j * m + i];
                });
}

Tensor add_rowwise(const Tensor& x, const Tensor& row) {
  require_rank2(x, "add_rowwise");
  const std::size_t m = x.rows(), n = x.cols();
  if (row.size() != n) {
    throw ShapeError("add_rowwise: row " + shape_to_string(row.shape()) +
                     " does not match columns of " + shape_to_string(x.shape()));
  }
  const auto& xv = x.values();
  const auto& rv = row.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] + rv[j];
  return finish("add_rowwise", Tensor({m, n}, std::move(out)), {x, row},
                [m, n](std::span<const double> g, std::span<const std::span<double>> gi) {
                  if (!gi[0].empty())
                    for (std::size_t i = 0; i < m * n; ++i) gi[0][i] += g[i];
                  if (!gi[1].empty())
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t j = 0; j < n; ++j) gi[1][j] += g[i * n + j];
                });
}

Tensor pairwise_sq_dist(const Tensor& a, const Tensor& b) {
  require_rank2(a, "pairwise_sq_dist");
  require_rank2(b, "pairwise_sq_dist");
  const std::size_t na = a.rows(), nb = b.rows(), d = a.cols();
  if (b.cols() != d) {
    throw ShapeError("pairwise_sq_dist: feature dimensions differ: " +
                     shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  }
  const auto& x = a.values();
  const auto& y = b.values();
  std::vector<double> out(na * nb);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = x[i * d + k] - y[j * d + k];
        s += diff * diff;
      }
      out[i * nb + j] = s;
    }
  Tensor ta = a, tb = b;
  return finish("pairwise_sq_dist", Tensor({na, nb}, std::move(out)), {a, b},
                [ta, tb, na, nb, d](std::span<const double> g,
                                    std::span<const std::span<double>> gi) {
                  const auto& x = ta.values();
                  const auto& y = tb.values();
                  for (std::size_t i = 0; i < na; ++i)
                    for (std::size_t j = 0; j < nb; ++j) {
                      const double gij = 2.0 * g[i * nb + j];
                      if (gij == 0.0) continue;
                      for (std::size_t k = 0; k < d; ++k) {
                        const double diff = x[i * d + k] - y[j * d + k];
                        if (!gi[0].empty()) gi[0][i * d + k] += gij * diff;
                        if (!gi[1].empty()) gi[1][j * d + k] -= gij * diff;
                      }
                    }
                });
}

// Elementwise -----------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(
      "add_scalar", a, [offset](double x) { return x + offset; },
      [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) {
  return unary(
      "neg", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor exp(const Tensor& a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  for (double v : a.data()) {
    if (!(v > 0.0)) throw DomainError("log of non-positive value " + std::to_string(v));
  }
  return unary(
      "log", a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor pow_scalar(const Tensor& a, double exponent) {
  const bool integral = std::floor(exponent) == exponent;
  for (double v : a.data()) {
    if (v < 0.0 && !integral) {
      throw DomainError("pow of negative base with non-integer exponent");
    }
    if (v == 0.0 && exponent < 0.0) throw DomainError("pow of zero with negative exponent");
  }
  return unary(
      "pow", a, [exponent](double x) { return std::pow(x, exponent); },
      [exponent](double x, double) {
        if (exponent == 0.0) return 0.0;
        if (exponent == 1.0) return 1.0;
        return exponent * std::pow(x, exponent - 1.0);
      });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sqrt_clamped(const Tensor& a) {
  return unary(
      "sqrt", a, [](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; },
      [](double x, double y) { return x > 0.0 ? 0.5 / y : 0.0; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (!(lo <= hi)) throw ConfigError("clamp: lower bound exceeds upper bound");
  return unary(
      "clamp", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

// Reductions ------------------------------------------------------------------

namespace {

Tensor reduce(const char* op, const Tensor& a, std::optional<std::size_t> axis,
              bool average) {
  if (a.size() == 0) throw EmptyInputError(std::string(op) + " over an empty tensor");
  const auto& x = a.values();

  if (!axis) {
    double s = 0.0;
    for (double v : x) s += v;
    const double w = average ? 1.0 / static_cast<double>(x.size()) : 1.0;
    return finish(op, Tensor::scalar(average ? s * w : s), {a},
                  [w](std::span<const double> g, std::span<const std::span<double>> gi) {
                    if (gi[0].empty()) return;
                    for (auto& v : gi[0]) v += g[0] * w;
                  });
  }

  if (*axis >= a.rank()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(*axis) +
                     " out of range for shape " + shape_to_string(a.shape()));
  }
  require_rank2(a, op);
  const std::size_t m = a.rows(), n = a.cols();
  const bool over_rows = *axis == 0;
  const std::size_t out_n = over_rows ? n : m;
  const double w = average ? 1.0 / static_cast<double>(over_rows ? m : n) : 1.0;
  std::vector<double> out(out_n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[over_rows ? j : i] += x[i * n + j];
  if (average)
    for (auto& v : out) v *= w;
  return finish(op, Tensor({out_n}, std::move(out)), {a},
                [m, n, over_rows, w](std::span<const double> g,
                                     std::span<const std::span<double>> gi) {
                  if (gi[0].empty()) return;
                  for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                      gi[0][i * n + j] += g[over_rows ? j : i] * w;
                });
}

}  // namespace

Tensor sum(const Tensor& a, std::optional<std::size_t> axis) {
  return reduce("sum", a, axis, false);
}

Tensor mean(const Tensor& a, std::optional<std::size_t> axis) {
  return reduce("mean", a, axis, true);
}

// Adversarial plumbing --------------------------------------------------------

Tensor gradient_reverse(const Tensor& a, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("gradient_reverse: lambda must be positive, got " +
                      std::to_string(lambda));
  }
  if (!a.on_tape()) return a;
  Tensor out = a.detach();
  return a.tape()->record(
      std::move(out), std::span<const Tensor>(&a, 1),
      [lambda](std::span<const double> g, std::span<const std::span<double>> gi) {
        if (gi[0].empty()) return;
        for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] -= lambda * g[i];
      });
}

// Optimization ----------------------------------------------------------------

void sgd_step(std::span<Tensor> params, std::span<const Tensor> grads,
              double learning_rate) {
  if (params.size() != grads.size()) {
    throw ConfigError("sgd_step: " + std::to_string(params.size()) + " parameters but " +
                      std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape()) {
      throw ShapeError("sgd_step: parameter " + std::to_string(i) + " has shape " +
                       shape_to_string(params[i].shape()) + ", gradient " +
                       shape_to_string(grads[i].shape()));
    }
    for (double g : grads[i].data()) {
      if (!std::isfinite(g)) {
        throw NumericError("sgd_step: non-finite gradient for parameter " +
                           std::to_string(i));
      }
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::vector<double> next = params[i].values();
    const auto& g = grads[i].values();
    for (std::size_t k = 0; k < next.size(); ++k) next[k] -= learning_rate * g[k];
    params[i] = Tensor(params[i].shape(), std::move(next));
  }
}

}  // namespace sga
