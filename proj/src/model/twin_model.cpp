#include <cmath>
#include <string>

#include "divuda/errors.hpp"
#include "divuda/model.hpp"

namespace divuda {

namespace {

Matrix uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(rows, cols);
  for (double& v : m.values()) v = (2.0 * uniform01(rng) - 1.0) * bound;
  return m;
}

void add_linear(ParamSet& set, const std::string& prefix, std::size_t in, std::size_t out,
                Rng& rng) {
  set.add(prefix + ".weight", uniform_init(in, out, in, rng));
  set.add(prefix + ".bias", uniform_init(1, out, in, rng));
}

Var linear(Graph& g, ParamSet& set, std::size_t layer, Var x) {
  Var w = g.param(set[2 * layer]);
  Var b = g.param(set[2 * layer + 1]);
  return add_row_vector(matmul(x, w), b);
}

}  // namespace

TwinModel TwinModel::init(const Architecture& arch, std::uint64_t seed) {
  if (arch.input_dim == 0 || arch.hidden == 0 || arch.num_classes == 0)
    throw ConfigError("layer widths must be positive");
  if (!(arch.dropout_rate >= 0.0 && arch.dropout_rate < 1.0))
    throw ParameterError("dropout rate must lie in [0, 1)");

  TwinModel m(arch);
  Rng g_rng = make_rng(seed, streams::kGenerator);
  add_linear(m.generator_, "g.fc1", arch.input_dim, arch.hidden, g_rng);
  add_linear(m.generator_, "g.fc2", arch.hidden, arch.hidden, g_rng);
  add_linear(m.generator_, "g.fc3", arch.hidden, arch.hidden, g_rng);

  Rng h1_rng = make_rng(seed, streams::kHead1);
  add_linear(m.head1_, "f1.fc", arch.hidden, arch.num_classes, h1_rng);
  if (arch.mode == HeadMode::kTwin) {
    Rng h2_rng = make_rng(seed, streams::kHead2);
    add_linear(m.head2_, "f2.fc", arch.hidden, arch.num_classes, h2_rng);
  }
  return m;
}

Var TwinModel::generate(Graph& g, const Matrix& x) {
  if (x.cols() != arch_.input_dim)
    throw DimensionError("input has " + std::to_string(x.cols()) + " features, model expects " +
                         std::to_string(arch_.input_dim));
  Var h = g.constant(x);
  for (std::size_t layer = 0; layer < 3; ++layer) h = relu(linear(g, generator_, layer, h));
  return h;
}

Var TwinModel::head_logits(Graph& g, ParamSet& head, Var features) {
  return linear(g, head, 0, features);
}

ProbPair TwinModel::forward_twin(Graph& g, const Matrix& x) {
  if (arch_.mode != HeadMode::kTwin) throw ContractError("forward_twin on a dropout-mode model");
  Var features = generate(g, x);
  return {softmax_rows(head_logits(g, head1_, features)),
          softmax_rows(head_logits(g, head2_, features))};
}

Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ParameterError("dropout rate must lie in [0, 1)");
  Matrix mask(rows, cols, 1.0);
  if (rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& v : mask.values()) v = uniform01(rng) < rate ? 0.0 : keep_scale;
  return mask;
}

ProbPair TwinModel::forward_dropout(Graph& g, const Matrix& x, Rng& rng) {
  if (arch_.mode != HeadMode::kDropout) throw ContractError("forward_dropout on a twin-mode model");
  Var features = generate(g, x);
  const std::size_t n = x.rows();
  Var m1 = g.constant(dropout_mask(n, arch_.hidden, arch_.dropout_rate, rng));
  Var m2 = g.constant(dropout_mask(n, arch_.hidden, arch_.dropout_rate, rng));
  return {softmax_rows(head_logits(g, head1_, features * m1)),
          softmax_rows(head_logits(g, head1_, features * m2))};
}

ProbPair TwinModel::forward(Graph& g, const Matrix& x, Rng& rng) {
  return arch_.mode == HeadMode::kTwin ? forward_twin(g, x) : forward_dropout(g, x, rng);
}

Matrix TwinModel::deterministic_logits(const Matrix& x) {
  Graph g;
  return head_logits(g, head1_, generate(g, x)).value();
}

}  // namespace divuda
