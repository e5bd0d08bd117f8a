#pragma once

// Minimal tape-based reverse-mode differentiation over dense row-major
// tensors. Batched: most ops treat dimension 0 as the batch axis.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hhpnet::ad {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t row, std::size_t col) { return data_[row * shape_.back() + col]; }
  double at(std::size_t row, std::size_t col) const { return data_[row * shape_.back() + col]; }

  /// Row `r` of the tensor viewed as [dim(0), size / dim(0)].
  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  Tensor reshaped(Shape shape) const;
  void fill(double value);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// A trainable tensor and its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
  void zero_grad() { grad.fill(0.0); }
};

struct Var {
  std::size_t index = 0;
};

/// One forward/backward tape. Nodes are appended in evaluation order, so the
/// tape is already topologically sorted and backward walks it in reverse once.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var input(Tensor value);
  /// Gradients reaching this node are added into p.grad by backward().
  Var param(Parameter& p);

  /// x: [B, m] or [m]; w: [m, k]; b: [k]. Returns [B, k] (or [k]).
  Var dense(Var x, Var w, Var b);
  /// Single-channel 1-D cross-correlation with zero "same" padding.
  /// x: [B, n]; filters: [F, k] with k odd and k <= n; bias: [F]. Returns [B, n, F].
  Var conv1d(Var x, Var filters, Var bias);
  Var leaky_relu(Var x, double slope);
  Var sigmoid(Var x);
  Var exp(Var x);
  Var square(Var x);
  Var mul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale(Var x, double factor);
  Var add_scalar(Var x, double offset);
  /// Joins two tensors of the same batch size along the flattened feature axis.
  Var concat(Var a, Var b);
  /// [B, ...] -> [B, prod(...)].
  Var flatten(Var x);
  /// Columns [begin, end) of a [B, k] tensor.
  Var slice_cols(Var x, std::size_t begin, std::size_t end);
  /// Sum of all elements, shape [1].
  Var sum(Var x);
  /// Row-wise softmax cross-entropy against integer labels. logits: [B, K]; returns [B].
  Var softmax_cross_entropy(Var logits, std::vector<std::size_t> labels);

  const Tensor& value(Var v) const { return nodes_.at(v.index).value; }
  /// Gradient of the last backward() target with respect to v.
  const Tensor& grad(Var v) const { return nodes_.at(v.index).grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a single-element output. Throws ShapeError otherwise.
  void backward(Var output);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    std::function<void(Graph&, std::size_t)> backward;
    Parameter* param = nullptr;
  };

  Var push(Tensor value, std::vector<std::size_t> inputs, std::function<void(Graph&, std::size_t)> backward);
  Tensor& grad_of(std::size_t index);

  std::vector<Node> nodes_;
};

struct GradCheckOptions {
  double epsilon = 1e-6;
  /// Denominator floor so gradients that are zero up to rounding compare
  /// absolutely instead of relatively.
  double floor = 1e-8;
  /// Extra floor as a fraction of |f| at the unperturbed point. The central
  /// difference cannot resolve gradients much below ulp(f) / epsilon, so for
  /// large f this keeps rounding noise from reading as gradient error.
  double relative_floor = 0.0;
  /// Coordinates checked per parameter tensor; 0 checks every coordinate.
  /// Sampled coordinates are drawn without replacement from `seed`.
  std::size_t max_coords_per_param = 0;
  unsigned long long seed = 0;
};

/// Central-difference check of d f / d params against reverse mode.
/// `f` must build its graph from the supplied parameters and return the
/// single-element output node. Returns the largest relative error
/// |a - n| / max(|a|, |n|, floor, relative_floor * |f|) over the checked coordinates.
/// Throws std::invalid_argument when epsilon is outside (0, 1e-2] and
/// ShapeError when f returns a non-scalar.
double grad_check(const std::function<Var(Graph&)>& f, std::span<Parameter* const> params,
                  const GradCheckOptions& options = {});

}  // namespace hhpnet::ad
