#include "fakenews/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "eigen_map.hpp"
#include "fakenews/errors.hpp"

namespace fakenews {

using detail::cmap;
using detail::map;
using detail::RowMatrix;

const Tensor& Var::value() const {
  if (!graph_) throw ContractError("use of an unbound Var");
  return graph_->value(id_);
}

// ---------------------------------------------------------------------------
// Graph

Var Graph::parameter(Tensor& tensor) {
  if (auto it = parameter_nodes_.find(&tensor); it != parameter_nodes_.end()) {
    return Var(this, it->second);
  }
  Node node;
  node.op = "parameter";
  node.parameter = &tensor;
  node.needs_grad = tensor.requires_grad();
  nodes_.push_back(std::move(node));
  const std::size_t id = nodes_.size() - 1;
  parameter_nodes_.emplace(&tensor, id);
  return Var(this, id);
}

Var Graph::constant(Tensor value) {
  Node node;
  node.op = "constant";
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(const char* op, std::vector<std::size_t> inputs, Tensor value,
                  BackwardFn backward) {
  if (backward_done_) throw ContractError("cannot extend a graph after backward");
  Node node;
  node.op = op;
  for (auto in : inputs) {
    if (in >= nodes_.size()) throw ContractError(std::string(op) + ": input node does not exist");
    node.needs_grad = node.needs_grad || nodes_[in].needs_grad;
  }
  node.inputs = std::move(inputs);
  node.owned = std::move(value);
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Graph::value(std::size_t id) const {
  const Node& node = nodes_.at(id);
  return node.parameter ? *node.parameter : node.owned;
}

std::span<double> Graph::adjoint(std::size_t id) {
  Node& node = nodes_.at(id);
  if (node.parameter) {
    if (!node.parameter->has_grad()) node.parameter->zero_grad();
    return node.parameter->grad();
  }
  if (node.adjoint.empty()) node.adjoint.assign(node.owned.size(), 0.0);
  return node.adjoint;
}

void Graph::backward(Var loss) {
  if (loss.graph_ != this) throw ContractError("loss belongs to a different graph");
  if (backward_done_) {
    throw ContractError("backward already ran on this graph; rebuild the graph for another pass");
  }
  if (value(loss.id()).size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " +
                        shape_string(value(loss.id()).shape()));
  }
  backward_done_ = true;
  backward_visits_ = 0;
  if (!nodes_[loss.id()].needs_grad) return;
  adjoint(loss.id())[0] += 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.needs_grad || !node.backward || node.adjoint.empty()) continue;
    node.backward(*this, id);
    ++backward_visits_;
  }
}

void Graph::note_kink(std::uint64_t value) {
  kink_signature_ = (kink_signature_ ^ value) * 0x100000001b3ULL;
  kink_signature_ ^= kink_signature_ >> 29;
}

// ---------------------------------------------------------------------------
// Operations

namespace {

Graph& common_graph(std::initializer_list<Var> vars) {
  Graph* g = nullptr;
  for (const Var& v : vars) {
    if (!v.valid()) throw ContractError("use of an unbound Var");
    if (g && &v.graph() != g) throw ContractError("operands belong to different graphs");
    g = &v.graph();
  }
  return *g;
}

void require_rank(const Var& v, std::size_t rank, const char* op, const char* what) {
  if (v.value().rank() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                         ", got " + shape_string(v.shape()));
  }
}

// Rows/cols of a tensor used as a matrix; rank-1 tensors act as a single row.
std::pair<std::size_t, std::size_t> as_matrix(const Tensor& t) {
  if (t.rank() == 1) return {1, t.dim(0)};
  if (t.rank() == 2) return {t.dim(0), t.dim(1)};
  throw DimensionError("expected a vector or matrix, got " + shape_string(t.shape()));
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = common_graph({a, b});
  require_rank(a, 2, "matmul", "left operand");
  require_rank(b, 2, "matmul", "right operand");
  const std::size_t m = a.value().dim(0), k = a.value().dim(1), n = b.value().dim(1);
  if (b.value().dim(0) != k) {
    throw DimensionError("matmul: inner dimensions disagree for " + shape_string(a.shape()) +
                         " and " + shape_string(b.shape()));
  }
  Tensor out({m, n});
  map(out.data(), m, n).noalias() = cmap(a.value().data(), m, k) * cmap(b.value().data(), k, n);
  const std::size_t ia = a.id(), ib = b.id();
  return g.record("matmul", {ia, ib}, std::move(out), [=](Graph& gr, std::size_t self) {
    auto dc = cmap(gr.adjoint(self), m, n);
    if (gr.needs_grad(ia)) {
      map(gr.adjoint(ia), m, k).noalias() += dc * cmap(gr.value(ib).data(), k, n).transpose();
    }
    if (gr.needs_grad(ib)) {
      map(gr.adjoint(ib), k, n).noalias() += cmap(gr.value(ia).data(), m, k).transpose() * dc;
    }
  });
}

Var add(Var a, Var b) {
  Graph& g = common_graph({a, b});
  if (a.shape() != b.shape()) {
    throw DimensionError("add: shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
  }
  Tensor out = a.value();
  out.clear_grad();
  out.set_requires_grad(false);
  const auto& bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return g.record("add", {ia, ib}, std::move(out), [=](Graph& gr, std::size_t self) {
    auto d = gr.adjoint(self);
    for (std::size_t in : {ia, ib}) {
      if (!gr.needs_grad(in)) continue;
      auto di = gr.adjoint(in);
      for (std::size_t i = 0; i < d.size(); ++i) di[i] += d[i];
    }
  });
}

Var scale(Var x, double factor) {
  Graph& g = common_graph({x});
  Tensor out(x.shape());
  const auto xv = x.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * factor;
  const std::size_t ix = x.id();
  return g.record("scale", {ix}, std::move(out), [=](Graph& gr, std::size_t self) {
    auto d = gr.adjoint(self);
    auto dx = gr.adjoint(ix);
    for (std::size_t i = 0; i < d.size(); ++i) dx[i] += d[i] * factor;
  });
}

Var sum(Var x) {
  Graph& g = common_graph({x});
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  const std::size_t ix = x.id();
  return g.record("sum", {ix}, Tensor::scalar(total), [=](Graph& gr, std::size_t self) {
    const double d = gr.adjoint(self)[0];
    for (double& v : gr.adjoint(ix)) v += d;
  });
}

Var dot(Var x, const Tensor& weights) {
  Graph& g = common_graph({x});
  if (weights.size() != x.value().size()) {
    throw DimensionError("dot: weights " + shape_string(weights.shape()) + " do not match " +
                         shape_string(x.shape()));
  }
  double total = 0.0;
  const auto xv = x.value().data();
  for (std::size_t i = 0; i < xv.size(); ++i) total += xv[i] * weights[i];
  const std::size_t ix = x.id();
  auto w = std::make_shared<std::vector<double>>(weights.values());
  return g.record("dot", {ix}, Tensor::scalar(total), [=](Graph& gr, std::size_t self) {
    const double d = gr.adjoint(self)[0];
    auto dx = gr.adjoint(ix);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += d * (*w)[i];
  });
}

Var linear(Var x, Var weight, Var bias) {
  Graph& g = common_graph({x, weight, bias});
  require_rank(weight, 2, "linear", "weight");
  require_rank(bias, 1, "linear", "bias");
  const auto [rows, in] = as_matrix(x.value());
  const std::size_t out_width = weight.value().dim(1);
  if (weight.value().dim(0) != in || bias.value().dim(0) != out_width) {
    throw DimensionError("linear: input " + shape_string(x.shape()) + ", weight " +
                         shape_string(weight.shape()) + ", bias " + shape_string(bias.shape()) +
                         " are inconsistent");
  }
  Shape out_shape = x.value().rank() == 1 ? Shape{out_width} : Shape{rows, out_width};
  Tensor out(out_shape);
  auto y = map(out.data(), rows, out_width);
  y.noalias() = cmap(x.value().data(), rows, in) * cmap(weight.value().data(), in, out_width);
  y.rowwise() += cmap(bias.value().data(), 1, out_width).row(0);
  const std::size_t ix = x.id(), iw = weight.id(), ib = bias.id();
  return g.record("linear", {ix, iw, ib}, std::move(out), [=](Graph& gr, std::size_t self) {
    auto dy = cmap(gr.adjoint(self), rows, out_width);
    if (gr.needs_grad(ix)) {
      map(gr.adjoint(ix), rows, in).noalias() +=
          dy * cmap(gr.value(iw).data(), in, out_width).transpose();
    }
    if (gr.needs_grad(iw)) {
      map(gr.adjoint(iw), in, out_width).noalias() +=
          cmap(gr.value(ix).data(), rows, in).transpose() * dy;
    }
    if (gr.needs_grad(ib)) {
      map(gr.adjoint(ib), 1, out_width) += dy.colwise().sum();
    }
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  Graph& g = common_graph({parts.front()});
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) {
    throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for " +
                         shape_string(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    if (&p.graph() != &g) throw ContractError("concat: operands belong to different graphs");
    const Shape& s = p.shape();
    bool compatible = s.size() == first.size();
    for (std::size_t d = 0; compatible && d < s.size(); ++d) {
      if (d != axis && s[d] != first[d]) compatible = false;
    }
    if (!compatible) {
      throw DimensionError("concat: " + shape_string(s) + " incompatible with " +
                           shape_string(first) + " along axis " + std::to_string(axis));
    }
    out_shape[axis] += s[axis];
    ids.push_back(p.id());
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];

  std::vector<std::size_t> chunk;  // contiguous run per outer index, per part
  for (const Var& p : parts) chunk.push_back(p.shape()[axis] * inner);
  const std::size_t out_chunk = out_shape[axis] * inner;

  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto src = parts[k].value().data();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(src.begin() + o * chunk[k], chunk[k], out.data().begin() + o * out_chunk + offset);
    }
    offset += chunk[k];
  }
  return g.record("concat", ids, std::move(out), [=](Graph& gr, std::size_t self) {
    auto d = gr.adjoint(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (gr.needs_grad(ids[k])) {
        auto dk = gr.adjoint(ids[k]);
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t i = 0; i < chunk[k]; ++i) dk[o * chunk[k] + i] += d[o * out_chunk + off + i];
        }
      }
      off += chunk[k];
    }
  });
}

Var concat(std::initializer_list<Var> parts, std::size_t axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
  Graph& g = common_graph({x});
  const Shape& s = x.shape();
  if (axis >= s.size() || begin >= end || end > s[axis]) {
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") on axis " + std::to_string(axis) + " invalid for " + shape_string(s));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s[d];
  for (std::size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
  Shape out_shape = s;
  out_shape[axis] = end - begin;
  const std::size_t in_chunk = s[axis] * inner, out_chunk = (end - begin) * inner,
                    start = begin * inner;
  Tensor out(out_shape);
  const auto src = x.value().data();
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(src.begin() + o * in_chunk + start, out_chunk, out.data().begin() + o * out_chunk);
  }
  const std::size_t ix = x.id();
  return g.record("slice", {ix}, std::move(out), [=](Graph& gr, std::size_t self) {
    auto d = gr.adjoint(self);
    auto dx = gr.adjoint(ix);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < out_chunk; ++i) dx[o * in_chunk + start + i] += d[o * out_chunk + i];
    }
  });
}

Var reshape(Var x, Shape shape) {
  Graph& g = common_graph({x});
  Tensor out = x.value().reshaped(std::move(shape));
  const std::size_t ix = x.id();
  return g.record("reshape", {ix}, std::move(out), [=](Graph& gr, std::size_t self) {
    auto d = gr.adjoint(self);
    auto dx = gr.adjoint(ix);
    for (std::size_t i = 0; i < d.size(); ++i) dx[i] += d[i];
  });
}

Var relu(Var x) {
  Graph& g = common_graph({x});
  Tensor out(x.shape());
  const auto xv = x.value().data();
  std::uint64_t mask_hash = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool on = xv[i] > 0.0;
    out[i] = on || std::isnan(xv[i]) ? xv[i] : 0.0;  // NaN passes through
    mask_hash = (mask_hash * 31) + (on ? 1 : 2);
  }
  g.note_kink(mask_hash);
  const std::size_t ix = x.id();
  return g.record("relu", {ix}, std::move(out), [=](Graph& gr, std::size_t self) {
    auto d = gr.adjoint(self);
    auto dx = gr.adjoint(ix);
    const auto in = gr.value(ix).data();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (in[i] > 0.0) dx[i] += d[i];
    }
  });
}

Var softmax(Var x) {
  Graph& g = common_graph({x});
  require_rank(x, 1, "softmax", "input");
  const auto xv = x.value().data();
  const double peak = *std::max_element(xv.begin(), xv.end());
  Tensor out(x.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(xv[i] - peak);
    total += out[i];
  }
  for (double& v : out.data()) v /= total;
  const std::size_t ix = x.id();
  return g.record("softmax", {ix}, std::move(out), [=](Graph& gr, std::size_t self) {
    auto d = gr.adjoint(self);
    const auto p = gr.value(self).data();
    double inner = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) inner += d[i] * p[i];
    auto dx = gr.adjoint(ix);
    for (std::size_t i = 0; i < d.size(); ++i) dx[i] += p[i] * (d[i] - inner);
  });
}

Var embedding_lookup(Var matrix, std::span<const int> ids) {
  Graph& g = common_graph({matrix});
  require_rank(matrix, 2, "embedding_lookup", "matrix");
  if (ids.empty()) throw DimensionError("embedding_lookup: empty id sequence");
  const std::size_t vocab = matrix.value().dim(0), width = matrix.value().dim(1);
  Tensor out({ids.size(), width});
  const auto table = matrix.value().data();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= vocab) {
      throw IndexError("embedding_lookup: id " + std::to_string(ids[r]) + " outside vocabulary of " +
                       std::to_string(vocab));
    }
    std::copy_n(table.begin() + ids[r] * width, width, out.data().begin() + r * width);
  }
  const std::size_t im = matrix.id();
  std::vector<int> rows(ids.begin(), ids.end());
  return g.record("embedding", {im}, std::move(out), [=](Graph& gr, std::size_t self) {
    auto d = gr.adjoint(self);
    auto dm = gr.adjoint(im);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t base = static_cast<std::size_t>(rows[r]) * width;
      for (std::size_t j = 0; j < width; ++j) dm[base + j] += d[r * width + j];
    }
  });
}

Var conv1d(Var input, Var kernels, Var bias) {
  Graph& g = common_graph({input, kernels, bias});
  require_rank(input, 2, "conv1d", "input");
  require_rank(kernels, 3, "conv1d", "kernels");
  require_rank(bias, 1, "conv1d", "bias");
  const std::size_t length = input.value().dim(0), width = input.value().dim(1);
  const std::size_t filters = kernels.value().dim(0), window = kernels.value().dim(1);
  if (kernels.value().dim(2) != width || bias.value().dim(0) != filters) {
    throw DimensionError("conv1d: input " + shape_string(input.shape()) + ", kernels " +
                         shape_string(kernels.shape()) + ", bias " + shape_string(bias.shape()) +
                         " are inconsistent");
  }
  if (length < window) {
    throw DimensionError("conv1d: sequence too short, L=" + std::to_string(length) +
                         " < window n=" + std::to_string(window));
  }
  const std::size_t steps = length - window + 1, patch = window * width;
  // Row t of the patch view is input rows t..t+n-1, contiguous in row-major order.
  auto patches = [&](const Tensor& in) {
    return detail::StridedConstMap(in.data().data(), static_cast<Eigen::Index>(steps),
                                   static_cast<Eigen::Index>(patch),
                                   Eigen::OuterStride<>(static_cast<Eigen::Index>(width)));
  };
  Tensor out({steps, filters});
  auto y = map(out.data(), steps, filters);
  y.noalias() = patches(input.value()) * cmap(kernels.value().data(), filters, patch).transpose();
  y.rowwise() += cmap(bias.value().data(), 1, filters).row(0);
  const std::size_t ii = input.id(), ik = kernels.id(), ib = bias.id();
  return g.record("conv1d", {ii, ik, ib}, std::move(out), [=](Graph& gr, std::size_t self) {
    auto dy = cmap(gr.adjoint(self), steps, filters);
    if (gr.needs_grad(ik)) {
      auto view = detail::StridedConstMap(gr.value(ii).data().data(),
                                          static_cast<Eigen::Index>(steps),
                                          static_cast<Eigen::Index>(patch),
                                          Eigen::OuterStride<>(static_cast<Eigen::Index>(width)));
      map(gr.adjoint(ik), filters, patch).noalias() += dy.transpose() * view;
    }
    if (gr.needs_grad(ib)) {
      map(gr.adjoint(ib), 1, filters) += dy.colwise().sum();
    }
    if (gr.needs_grad(ii)) {
      RowMatrix dpatch = dy * cmap(gr.value(ik).data(), filters, patch);
      auto dx = gr.adjoint(ii);
      for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t j = 0; j < patch; ++j) dx[t * width + j] += dpatch(t, j);
      }
    }
  });
}

Var maxpool_global(Var input) {
  Graph& g = common_graph({input});
  require_rank(input, 2, "maxpool_global", "input");
  const std::size_t steps = input.value().dim(0), features = input.value().dim(1);
  const auto x = input.value().data();
  Tensor out({features});
  std::vector<std::size_t> argmax(features, 0);
  std::uint64_t arg_hash = 0;
  for (std::size_t f = 0; f < features; ++f) {
    double best = x[f];
    for (std::size_t t = 1; t < steps; ++t) {
      if (x[t * features + f] > best) {
        best = x[t * features + f];
        argmax[f] = t;
      }
    }
    out[f] = best;
    arg_hash = arg_hash * 1000003 + argmax[f];
  }
  g.note_kink(arg_hash);
  const std::size_t ii = input.id();
  return g.record("maxpool", {ii}, std::move(out), [=](Graph& gr, std::size_t self) {
    auto d = gr.adjoint(self);
    auto dx = gr.adjoint(ii);
    for (std::size_t f = 0; f < features; ++f) dx[argmax[f] * features + f] += d[f];
  });
}

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct LstmTrace {
  RowMatrix gates;    // [L x 4h] activated (i, f, g, o), processing order
  RowMatrix cells;    // [L x h], processing order
  RowMatrix tanh_c;   // [L x h]
  RowMatrix hidden;   // [L x h]
};

}  // namespace

Var lstm(Var input, Var input_weight, Var recurrent_weight, Var bias, bool reverse) {
  Graph& g = common_graph({input, input_weight, recurrent_weight, bias});
  require_rank(input, 2, "lstm", "input");
  require_rank(input_weight, 2, "lstm", "input weight");
  require_rank(recurrent_weight, 2, "lstm", "recurrent weight");
  require_rank(bias, 1, "lstm", "bias");
  const std::size_t steps = input.value().dim(0), in = input.value().dim(1);
  const std::size_t h = recurrent_weight.value().dim(0), h4 = 4 * h;
  if (input_weight.value().dim(0) != in || input_weight.value().dim(1) != h4 ||
      recurrent_weight.value().dim(1) != h4 || bias.value().dim(0) != h4) {
    throw DimensionError("lstm: input " + shape_string(input.shape()) + ", input weight " +
                         shape_string(input_weight.shape()) + ", recurrent weight " +
                         shape_string(recurrent_weight.shape()) + ", bias " +
                         shape_string(bias.shape()) + " are inconsistent");
  }
  auto time_of = [=](std::size_t s) { return reverse ? steps - 1 - s : s; };

  const RowMatrix projected =
      cmap(input.value().data(), steps, in) * cmap(input_weight.value().data(), in, h4);
  const auto wh = cmap(recurrent_weight.value().data(), h, h4);
  const auto b = cmap(bias.value().data(), 1, h4);

  auto trace = std::make_shared<LstmTrace>();
  trace->gates.resize(steps, h4);
  trace->cells.resize(steps, h);
  trace->tanh_c.resize(steps, h);
  trace->hidden.resize(steps, h);
  Eigen::RowVectorXd h_prev = Eigen::RowVectorXd::Zero(h);
  Eigen::RowVectorXd c_prev = Eigen::RowVectorXd::Zero(h);
  Eigen::RowVectorXd z(h4);
  for (std::size_t s = 0; s < steps; ++s) {
    z.noalias() = projected.row(time_of(s)) + b;
    z.noalias() += h_prev * wh;
    auto gate = trace->gates.row(s);
    for (std::size_t j = 0; j < h; ++j) {
      const double i_g = sigmoid(z(j));
      const double f_g = sigmoid(z(h + j));
      const double c_g = std::tanh(z(2 * h + j));
      const double o_g = sigmoid(z(3 * h + j));
      gate(j) = i_g;
      gate(h + j) = f_g;
      gate(2 * h + j) = c_g;
      gate(3 * h + j) = o_g;
      const double c = f_g * c_prev(j) + i_g * c_g;
      const double tc = std::tanh(c);
      trace->cells(s, j) = c;
      trace->tanh_c(s, j) = tc;
      trace->hidden(s, j) = o_g * tc;
    }
    h_prev = trace->hidden.row(s);
    c_prev = trace->cells.row(s);
  }
  Tensor out({h}, std::vector<double>(h_prev.data(), h_prev.data() + h));

  const std::size_t ix = input.id(), iwx = input_weight.id(), iwh = recurrent_weight.id(),
                    ib = bias.id();
  return g.record("lstm", {ix, iwx, iwh, ib}, std::move(out),
                  [=](Graph& gr, std::size_t self) {
    const auto whm = cmap(gr.value(iwh).data(), h, h4);
    RowMatrix dz(steps, h4);         // time order
    RowMatrix h_before(steps, h);    // hidden state entering each time step
    Eigen::RowVectorXd dh = cmap(gr.adjoint(self), 1, h);
    Eigen::RowVectorXd dc = Eigen::RowVectorXd::Zero(h);
    for (std::size_t s = steps; s-- > 0;) {
      const std::size_t t = time_of(s);
      const auto gate = trace->gates.row(s);
      for (std::size_t j = 0; j < h; ++j) {
        const double i_g = gate(j), f_g = gate(h + j), c_g = gate(2 * h + j), o_g = gate(3 * h + j);
        const double tc = trace->tanh_c(s, j);
        const double c_before = s > 0 ? trace->cells(s - 1, j) : 0.0;
        const double d_o = dh(j) * tc;
        dc(j) += dh(j) * o_g * (1.0 - tc * tc);
        dz(t, j) = dc(j) * c_g * i_g * (1.0 - i_g);
        dz(t, h + j) = dc(j) * c_before * f_g * (1.0 - f_g);
        dz(t, 2 * h + j) = dc(j) * i_g * (1.0 - c_g * c_g);
        dz(t, 3 * h + j) = d_o * o_g * (1.0 - o_g);
        dc(j) *= f_g;
        h_before(t, j) = s > 0 ? trace->hidden(s - 1, j) : 0.0;
      }
      dh.noalias() = dz.row(t) * whm.transpose();
    }
    if (gr.needs_grad(iwx)) {
      map(gr.adjoint(iwx), in, h4).noalias() += cmap(gr.value(ix).data(), steps, in).transpose() * dz;
    }
    if (gr.needs_grad(iwh)) {
      map(gr.adjoint(iwh), h, h4).noalias() += h_before.transpose() * dz;
    }
    if (gr.needs_grad(ib)) {
      map(gr.adjoint(ib), 1, h4) += dz.colwise().sum();
    }
    if (gr.needs_grad(ix)) {
      map(gr.adjoint(ix), steps, in).noalias() += dz * cmap(gr.value(iwx).data(), in, h4).transpose();
    }
  });
}

}  // namespace fakenews
