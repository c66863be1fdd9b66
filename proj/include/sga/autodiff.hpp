#pragma once

// Dense double-precision tensors with a dynamic reverse-mode tape.
//
// A Tensor is an immutable value. Tensors created through Tape::variable, or
// produced by an operation with at least one taped input, carry a node id on
// that tape. Operations whose inputs are all untaped compute plain values and
// record nothing, so the same model code serves training and evaluation.
// A Tape must outlive every Tensor recorded on it.

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sga/errors.hpp"

namespace sga {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

class Tape;

class Tensor {
 public:
  static constexpr std::size_t no_node = std::numeric_limits<std::size_t>::max();

  /// Empty rank-1 tensor of length zero.
  Tensor();
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  /// Row-major matrix from nested rows; all rows must share a length.
  static Tensor matrix(const std::vector<std::vector<double>>& rows);
  static Tensor vector(std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_->size(); }
  std::span<const double> data() const noexcept { return *data_; }
  const std::vector<double>& values() const noexcept { return *data_; }

  /// Dimension i, with rank-0 and rank-1 tensors treated as row vectors.
  std::size_t rows() const;
  std::size_t cols() const;

  double operator[](std::size_t i) const { return (*data_)[i]; }
  double at(std::size_t row, std::size_t col) const;
  /// Value of a single-element tensor.
  double item() const;

  bool on_tape() const noexcept { return tape_ != nullptr; }
  Tape* tape() const noexcept { return tape_; }
  std::size_t node() const noexcept { return node_; }

  /// Same values, detached from any tape.
  Tensor detach() const;

 private:
  friend class Tape;

  Shape shape_;
  std::shared_ptr<const std::vector<double>> data_;
  Tape* tape_ = nullptr;
  std::size_t node_ = no_node;
};

/// Local gradient rule of a recorded node. `grad_in[k]` is empty when input k
/// is not on the tape; otherwise the rule accumulates into it.
using BackwardFn = std::function<void(std::span<const double> grad_out,
                                      std::span<const std::span<double>> grad_in)>;

/// Gradients of one backward pass, keyed by node id.
class Gradients {
 public:
  /// Gradient with respect to `leaf`; zeros if the loss does not depend on it.
  Tensor wrt(const Tensor& leaf) const;
  bool contains(const Tensor& leaf) const;
  std::size_t size() const noexcept { return grads_.size(); }

 private:
  friend class Tape;
  std::unordered_map<std::size_t, std::vector<double>> grads_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers a leaf whose gradient backward() reports.
  Tensor variable(const Tensor& value);

  /// Records `output` as a node computed from `inputs`. Inputs that are not on
  /// this tape are treated as constants. Throws if an input is on another tape.
  Tensor record(Tensor output, std::span<const Tensor> inputs, BackwardFn rule);

  /// Reverse pass from a scalar loss, visiting nodes in exact reverse order.
  Gradients backward(const Tensor& loss) const;

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Shape shape;
    std::vector<std::size_t> inputs;  // node ids, or Tensor::no_node for constants
    BackwardFn rule;                  // empty for leaves
  };
  std::vector<Node> nodes_;
};

/// Tape shared by the inputs, or nullptr if none is taped. Throws ConfigError
/// when inputs live on different tapes.
Tape* common_tape(std::span<const Tensor> inputs);

/// Wraps an op result: records it when any input is taped, otherwise returns it.
Tensor make_result(Tensor output, std::span<const Tensor> inputs, BackwardFn rule);

/// Throws NumericError naming `op` if any element is non-finite.
void require_finite(const Tensor& t, const char* op);

// Linear algebra --------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// x[m x n] + row[1 x n] added to every row.
Tensor add_rowwise(const Tensor& x, const Tensor& row);
/// D[i][j] = sum_k (A[i][k] - B[j][k])^2.
Tensor pairwise_sq_dist(const Tensor& a, const Tensor& b);

// Elementwise -----------------------------------------------------------------
// Binary ops require equal shapes, or one operand with a single element.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);
Tensor neg(const Tensor& a);
Tensor exp(const Tensor& a);
/// Throws DomainError for any element <= 0.
Tensor log(const Tensor& a);
/// Throws DomainError for a negative base with a non-integer exponent, or a
/// zero base with a negative exponent.
Tensor pow_scalar(const Tensor& a, double exponent);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
/// sqrt(max(a, 0)); the gradient is zero wherever a <= 0.
Tensor sqrt_clamped(const Tensor& a);
/// Gradient passes where lo <= a <= hi and is zero outside.
Tensor clamp(const Tensor& a, double lo, double hi);

// Reductions ------------------------------------------------------------------

/// Sum of all elements (scalar result) or along `axis` of a rank-2 tensor.
Tensor sum(const Tensor& a, std::optional<std::size_t> axis = std::nullopt);
Tensor mean(const Tensor& a, std::optional<std::size_t> axis = std::nullopt);

// Adversarial plumbing --------------------------------------------------------

/// Identity forward; backward multiplies the incoming gradient by -lambda.
/// Requires lambda > 0. An untaped input is returned unchanged.
Tensor gradient_reverse(const Tensor& a, double lambda);

// Optimization ----------------------------------------------------------------

/// p <- p - lr * g for each aligned pair. Validates every gradient before
/// touching any parameter; throws NumericError on a non-finite gradient.
void sgd_step(std::span<Tensor> params, std::span<const Tensor> grads,
              double learning_rate);

}  // namespace sga
