#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "divuda/matrix.hpp"

namespace divuda {

// Lower clamp applied inside log_clamped.
inline constexpr double kLogClamp = 1e-12;

/// A trainable tensor: value, accumulated gradient and momentum buffer.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix velocity;

  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()),
        velocity(value.rows(), value.cols()) {}
};

/// Ordered collection of uniquely named parameters.
///
/// Graph nodes refer to parameters by address, so a ParamSet must not be
/// resized while a Graph built from it is alive.
class ParamSet {
 public:
  Parameter& add(std::string name, Matrix value);

  std::size_t size() const noexcept { return params_.size(); }
  bool empty() const noexcept { return params_.empty(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::vector<Parameter> params_;
};

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  const Matrix& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  // Value of a 1x1 node.
  double scalar() const;
};

enum class Op {
  kConstant,
  kParam,
  kMatMul,
  kAddRowVector,
  kAdd,
  kSub,
  kMul,
  kScale,
  kRelu,
  kLogClamped,
  kSoftmax,
  kRowSum,
  kSum,
  kMean,
  kGatherRows,
  kDeadZone,
};

/// Tape of operations recorded during a forward pass.
///
/// Nodes are appended after their inputs, so reverse insertion order is a
/// valid reverse topological order.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix value);
  // Leaf bound to `p`; the same parameter always maps to the same node.
  Var param(Parameter& p);

  // Reverse pass from a 1x1 node. Node gradients are recomputed on each call;
  // parameter gradients accumulate until the optimizer or zero_grad clears them.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  Op op(std::size_t id) const { return nodes_[id].op; }

 private:
  struct Node {
    Op op = Op::kConstant;
    Matrix value;
    Matrix grad;
    std::size_t a = kNone;
    std::size_t b = kNone;
    Parameter* param = nullptr;
    double s0 = 0.0;
    double s1 = 0.0;
    std::vector<std::size_t> index;
  };
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  Var push(Node node);
  void propagate(std::size_t id);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;

  friend Var matmul(Var, Var);
  friend Var add_row_vector(Var, Var);
  friend Var add(Var, Var);
  friend Var sub(Var, Var);
  friend Var mul(Var, Var);
  friend Var scale(Var, double);
  friend Var relu(Var);
  friend Var log_clamped(Var);
  friend Var softmax_rows(Var);
  friend Var row_sum(Var);
  friend Var sum(Var);
  friend Var mean(Var);
  friend Var gather_rows(Var, std::span<const std::size_t>);
  friend Var dead_zone_abs(Var, double, double);
};

Var matmul(Var a, Var b);
// a (N x K) plus a 1 x K row vector broadcast over rows.
Var add_row_vector(Var a, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var relu(Var a);
// log(max(x, kLogClamp)); derivative 1/x above the clamp, 0 below.
Var log_clamped(Var a);
Var softmax_rows(Var logits);
// N x K -> N x 1
Var row_sum(Var a);
Var sum(Var a);
Var mean(Var a);
Var gather_rows(Var a, std::span<const std::size_t> rows);
// Elementwise -|x - center| where |x - center| > margin, else 0.
Var dead_zone_abs(Var a, double center, double margin);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

// Copies a column node into a vector.
std::vector<double> column_values(Var v);

}  // namespace divuda
