#include "divuda/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "divuda/errors.hpp"
#include "divuda/kernels.hpp"

namespace divuda {

// ParamSet

Parameter& ParamSet::add(std::string name, Matrix value) {
  if (find(name) != nullptr) throw ConfigError("duplicate parameter name: " + name);
  params_.emplace_back(std::move(name), std::move(value));
  return params_.back();
}

Parameter* ParamSet::find(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

const Parameter* ParamSet::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

// Var

const Matrix& Var::value() const { return graph->value(id); }
const Matrix& Var::grad() const { return graph->grad(id); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ContractError("scalar(): node is not 1x1");
  return v(0, 0);
}

std::vector<double> column_values(Var v) {
  const Matrix& m = v.value();
  if (m.cols() != 1) throw DimensionError("column_values: node has more than one column");
  return {m.values().begin(), m.values().end()};
}

// Graph

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Graph::constant(Matrix value) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{this, it->second};
  Node n;
  n.op = Op::kParam;
  n.value = p.value;
  n.param = &p;
  Var v = push(std::move(n));
  param_nodes_.emplace(&p, v.id);
  return v;
}

namespace {

Graph* same_graph(Var a, Var b) {
  if (a.graph != b.graph || a.graph == nullptr)
    throw ContractError("operands belong to different graphs");
  return a.graph;
}

void accumulate(Matrix& dst, const Matrix& src) {
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

void Graph::backward(Var loss) {
  if (loss.graph != this) throw ContractError("backward: loss belongs to another graph");
  const Matrix& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1) throw ContractError("backward: loss must be a 1x1 node");

  std::vector<char> reachable(loss.id + 1, 0);
  reachable[loss.id] = 1;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    n.grad = Matrix(n.value.rows(), n.value.cols());
    if (!reachable[i]) continue;
    if (n.a != kNone) reachable[n.a] = 1;
    if (n.b != kNone) reachable[n.b] = 1;
  }

  nodes_[loss.id].grad(0, 0) = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;)
    if (reachable[i]) propagate(i);
}

void Graph::propagate(std::size_t id) {
  Node& n = nodes_[id];
  const Matrix& g = n.grad;
  switch (n.op) {
    case Op::kConstant:
      break;
    case Op::kParam:
      accumulate(n.param->grad, g);
      break;
    case Op::kMatMul: {
      accumulate(nodes_[n.a].grad, kernels::matmul_bt(g, nodes_[n.b].value));
      accumulate(nodes_[n.b].grad, kernels::matmul_at(nodes_[n.a].value, g));
      break;
    }
    case Op::kAddRowVector: {
      accumulate(nodes_[n.a].grad, g);
      Matrix& gb = nodes_[n.b].grad;
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
      break;
    }
    case Op::kAdd:
      accumulate(nodes_[n.a].grad, g);
      accumulate(nodes_[n.b].grad, g);
      break;
    case Op::kSub: {
      accumulate(nodes_[n.a].grad, g);
      auto gb = nodes_[n.b].grad.values();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g.values()[i];
      break;
    }
    case Op::kMul: {
      auto av = nodes_[n.a].value.values();
      auto bv = nodes_[n.b].value.values();
      auto gv = g.values();
      {
        auto ga = nodes_[n.a].grad.values();
        for (std::size_t i = 0; i < gv.size(); ++i) ga[i] += gv[i] * bv[i];
      }
      auto gb = nodes_[n.b].grad.values();
      for (std::size_t i = 0; i < gv.size(); ++i) gb[i] += gv[i] * av[i];
      break;
    }
    case Op::kScale: {
      auto ga = nodes_[n.a].grad.values();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += n.s0 * g.values()[i];
      break;
    }
    case Op::kRelu: {
      auto x = nodes_[n.a].value.values();
      auto ga = nodes_[n.a].grad.values();
      for (std::size_t i = 0; i < ga.size(); ++i)
        if (x[i] > 0.0) ga[i] += g.values()[i];
      break;
    }
    case Op::kLogClamped: {
      auto x = nodes_[n.a].value.values();
      auto ga = nodes_[n.a].grad.values();
      for (std::size_t i = 0; i < ga.size(); ++i)
        if (x[i] >= kLogClamp) ga[i] += g.values()[i] / x[i];
      break;
    }
    case Op::kSoftmax: {
      // dL/dz_j = p_j * (g_j - sum_k g_k p_k)
      const Matrix& p = n.value;
      Matrix& ga = nodes_[n.a].grad;
      for (std::size_t r = 0; r < p.rows(); ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < p.cols(); ++c) dot += g(r, c) * p(r, c);
        for (std::size_t c = 0; c < p.cols(); ++c) ga(r, c) += p(r, c) * (g(r, c) - dot);
      }
      break;
    }
    case Op::kRowSum: {
      Matrix& ga = nodes_[n.a].grad;
      for (std::size_t r = 0; r < ga.rows(); ++r)
        for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += g(r, 0);
      break;
    }
    case Op::kSum:
    case Op::kMean: {
      auto ga = nodes_[n.a].grad.values();
      const double d = n.op == Op::kSum ? g(0, 0) : g(0, 0) / static_cast<double>(ga.size());
      for (double& v : ga) v += d;
      break;
    }
    case Op::kGatherRows: {
      Matrix& ga = nodes_[n.a].grad;
      for (std::size_t r = 0; r < n.index.size(); ++r) {
        auto dst = ga.row(n.index[r]);
        auto src = g.row(r);
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
      }
      break;
    }
    case Op::kDeadZone: {
      auto x = nodes_[n.a].value.values();
      auto ga = nodes_[n.a].grad.values();
      for (std::size_t i = 0; i < ga.size(); ++i) {
        const double d = x[i] - n.s0;
        if (std::abs(d) > n.s1) ga[i] += (d > 0.0 ? -1.0 : 1.0) * g.values()[i];
      }
      break;
    }
  }
}

// Operations

Var matmul(Var a, Var b) {
  Graph* g = same_graph(a, b);
  Graph::Node n;
  n.op = Op::kMatMul;
  n.value = kernels::matmul(a.value(), b.value());
  n.a = a.id;
  n.b = b.id;
  return g->push(std::move(n));
}

Var add_row_vector(Var a, Var bias) {
  Graph* g = same_graph(a, bias);
  const Matrix& av = a.value();
  const Matrix& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != av.cols())
    throw DimensionError("add_row_vector: bias must be 1 x cols(a)");
  Graph::Node n;
  n.op = Op::kAddRowVector;
  n.value = av;
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = 0; c < av.cols(); ++c) n.value(r, c) += bv(0, c);
  n.a = a.id;
  n.b = bias.id;
  return g->push(std::move(n));
}

namespace {

template <typename F>
Matrix zip(const Matrix& a, const Matrix& b, const char* what, F f) {
  require_same_shape(a, b, what);
  Matrix out(a.rows(), a.cols());
  auto o = out.values();
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(x[i], y[i]);
  return out;
}

template <typename F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  auto o = out.values();
  auto x = a.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(x[i]);
  return out;
}

}  // namespace

Var add(Var a, Var b) {
  Graph* g = same_graph(a, b);
  Graph::Node n;
  n.op = Op::kAdd;
  n.value = zip(a.value(), b.value(), "add", [](double x, double y) { return x + y; });
  n.a = a.id;
  n.b = b.id;
  return g->push(std::move(n));
}

Var sub(Var a, Var b) {
  Graph* g = same_graph(a, b);
  Graph::Node n;
  n.op = Op::kSub;
  n.value = zip(a.value(), b.value(), "sub", [](double x, double y) { return x - y; });
  n.a = a.id;
  n.b = b.id;
  return g->push(std::move(n));
}

Var mul(Var a, Var b) {
  Graph* g = same_graph(a, b);
  Graph::Node n;
  n.op = Op::kMul;
  n.value = zip(a.value(), b.value(), "mul", [](double x, double y) { return x * y; });
  n.a = a.id;
  n.b = b.id;
  return g->push(std::move(n));
}

Var scale(Var a, double s) {
  Graph::Node n;
  n.op = Op::kScale;
  n.value = map(a.value(), [s](double x) { return s * x; });
  n.a = a.id;
  n.s0 = s;
  return a.graph->push(std::move(n));
}

Var relu(Var a) {
  Graph::Node n;
  n.op = Op::kRelu;
  n.value = map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; });
  n.a = a.id;
  return a.graph->push(std::move(n));
}

Var log_clamped(Var a) {
  Graph::Node n;
  n.op = Op::kLogClamped;
  n.value = map(a.value(), [](double x) { return std::log(std::max(x, kLogClamp)); });
  n.a = a.id;
  return a.graph->push(std::move(n));
}

Var softmax_rows(Var logits) {
  Graph::Node n;
  n.op = Op::kSoftmax;
  n.value = kernels::softmax_rows(logits.value());
  n.a = logits.id;
  return logits.graph->push(std::move(n));
}

Var row_sum(Var a) {
  const Matrix& av = a.value();
  Graph::Node n;
  n.op = Op::kRowSum;
  n.value = Matrix(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double acc = 0.0;
    for (double v : av.row(r)) acc += v;
    n.value(r, 0) = acc;
  }
  n.a = a.id;
  return a.graph->push(std::move(n));
}

Var sum(Var a) {
  const auto v = a.value().values();
  Graph::Node n;
  n.op = Op::kSum;
  n.value = Matrix(1, 1, std::accumulate(v.begin(), v.end(), 0.0));
  n.a = a.id;
  return a.graph->push(std::move(n));
}

Var mean(Var a) {
  const auto v = a.value().values();
  if (v.empty()) throw ContractError("mean: empty operand");
  Graph::Node n;
  n.op = Op::kMean;
  n.value = Matrix(1, 1, std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()));
  n.a = a.id;
  return a.graph->push(std::move(n));
}

Var gather_rows(Var a, std::span<const std::size_t> rows) {
  const Matrix& av = a.value();
  Graph::Node n;
  n.op = Op::kGatherRows;
  n.value = Matrix(rows.size(), av.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= av.rows()) throw DimensionError("gather_rows: row index out of range");
    std::copy(av.row(rows[r]).begin(), av.row(rows[r]).end(), n.value.row(r).begin());
  }
  n.index.assign(rows.begin(), rows.end());
  n.a = a.id;
  return a.graph->push(std::move(n));
}

Var dead_zone_abs(Var a, double center, double margin) {
  Graph::Node n;
  n.op = Op::kDeadZone;
  n.value = map(a.value(), [center, margin](double x) {
    const double d = std::abs(x - center);
    return d > margin ? -d : 0.0;
  });
  n.a = a.id;
  n.s0 = center;
  n.s1 = margin;
  return a.graph->push(std::move(n));
}

}  // namespace divuda
