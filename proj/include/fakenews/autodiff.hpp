#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "fakenews/tensor.hpp"

namespace fakenews {

class Graph;

/// Handle to a node in a Graph. Cheap to copy; valid while its graph lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Graph& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so the tape
/// order is already a topological order of the DAG. A graph supports exactly
/// one backward pass.
class Graph {
 public:
  /// Reads adjoint(self) and accumulates into the adjoints of inputs for
  /// which needs_grad() is true.
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf bound to a parameter tensor. Gradients of a parameter that
  /// requires_grad accumulate straight into its grad buffer. Binding the same
  /// tensor twice returns the same node.
  Var parameter(Tensor& tensor);
  Var constant(Tensor value);

  /// Appends an operation node. Custom ops are built on this.
  Var record(const char* op, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward);

  void backward(Var loss);
  bool backward_done() const { return backward_done_; }
  /// Nodes whose backward rule ran in the last backward pass.
  std::size_t backward_visits() const { return backward_visits_; }

  const Tensor& value(std::size_t id) const;
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  /// Zero-initialized on first access.
  std::span<double> adjoint(std::size_t id);
  std::span<const std::size_t> inputs(std::size_t id) const { return nodes_[id].inputs; }
  const char* op(std::size_t id) const { return nodes_[id].op; }
  std::size_t size() const { return nodes_.size(); }

  /// Folds a discrete forward decision (ReLU mask, max-pool argmax) into a
  /// running signature. Two evaluations with equal signatures lie in the same
  /// differentiable piece of the function.
  void note_kink(std::uint64_t value);
  std::uint64_t kink_signature() const { return kink_signature_; }

 private:
  struct Node {
    const char* op = "";
    std::vector<std::size_t> inputs;
    Tensor owned;
    Tensor* parameter = nullptr;
    bool needs_grad = false;
    std::vector<double> adjoint;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;
  std::unordered_map<const Tensor*, std::size_t> parameter_nodes_;
  bool backward_done_ = false;
  std::size_t backward_visits_ = 0;
  std::uint64_t kink_signature_ = 0x9e3779b97f4a7c15ULL;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var scale(Var x, double factor);
/// Scalar sum of all elements.
Var sum(Var x);
/// Scalar sum of x elementwise-weighted by a constant tensor of equal size.
Var dot(Var x, const Tensor& weights);
/// x·W + b for x of shape [in] or [rows x in], W [in x out], b [out].
Var linear(Var x, Var weight, Var bias);
Var concat(std::span<const Var> parts, std::size_t axis);
Var concat(std::initializer_list<Var> parts, std::size_t axis);
/// Elements [begin, end) along axis.
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);
Var reshape(Var x, Shape shape);
Var relu(Var x);
/// Softmax over a rank-1 tensor.
Var softmax(Var x);
/// Rows of matrix [vocab x width] selected by ids -> [ids x width].
Var embedding_lookup(Var matrix, std::span<const int> ids);
/// Valid 1-D convolution: input [L x m], kernels [F x n x m], bias [F] -> [(L-n+1) x F].
Var conv1d(Var input, Var kernels, Var bias);
/// Per-feature maximum over time: [T x F] -> [F]; ties go to the first step.
Var maxpool_global(Var input);
/// One LSTM direction over input [L x d] with gate columns ordered
/// (input, forget, candidate, output): input_weight [d x 4h],
/// recurrent_weight [h x 4h], bias [4h]. Returns the final hidden state [h].
Var lstm(Var input, Var input_weight, Var recurrent_weight, Var bias, bool reverse);

}  // namespace fakenews
