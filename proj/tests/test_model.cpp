#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "divuda/errors.hpp"
#include "divuda/model.hpp"
#include "test_support.hpp"

using namespace divuda;
using divuda::test::random_matrix;

namespace {

void check_row_stochastic(const Matrix& p) {
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double s = 0.0;
    for (double v : p.row(r)) {
      CHECK(v > 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

bool same_params(const ParamSet& a, const ParamSet& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].name != b[i].name || !(a[i].value == b[i].value)) return false;
  return true;
}

}  // namespace

TEST_CASE("init is deterministic and heads differ") {
  const Architecture arch;
  TwinModel a = TwinModel::init(arch, 42);
  TwinModel b = TwinModel::init(arch, 42);
  CHECK(same_params(a.generator(), b.generator()));
  CHECK(same_params(a.head1(), b.head1()));
  CHECK(same_params(a.head2(), b.head2()));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TwinModel m = TwinModel::init(arch, seed);
    CHECK_FALSE(m.head1()[0].value == m.head2()[0].value);
  }
  CHECK_FALSE(same_params(TwinModel::init(arch, 1).generator(), a.generator()));
  CHECK(a.generator().size() == 6);
  CHECK(a.head1()[0].value.rows() == 64);
  CHECK(a.head1()[0].value.cols() == 3);

  Architecture zero = arch;
  zero.hidden = 0;
  CHECK_THROWS_AS(TwinModel::init(zero, 1), ConfigError);
}

TEST_CASE("parameter groups partition the model") {
  TwinModel m = TwinModel::init({}, 3);
  std::set<const Parameter*> seen;
  std::size_t total = 0;
  for (ParamSet* ps : {&m.generator(), &m.head1(), &m.head2()})
    for (Parameter& p : *ps) {
      seen.insert(&p);
      ++total;
    }
  CHECK(seen.size() == total);
  CHECK(total == 10);
}

TEST_CASE("twin forward") {
  TwinModel m = TwinModel::init({}, 7);
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(50, 2, rng, -6.0, 6.0);
  Graph g;
  const ProbPair pair = m.forward_twin(g, x);
  CHECK(pair.p1.rows() == 50);
  CHECK(pair.p1.cols() == 3);
  CHECK(pair.p2.cols() == 3);
  check_row_stochastic(pair.p1.value());
  check_row_stochastic(pair.p2.value());
  CHECK_THROWS_AS(m.forward_twin(g, Matrix(2, 3)), DimensionError);
}

TEST_CASE("untrained heads disagree almost everywhere") {
  std::size_t differ = 0;
  std::size_t total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TwinModel m = TwinModel::init({}, seed);
    std::mt19937_64 rng(seed + 100);
    const Matrix x = random_matrix(100, 2, rng, -6.0, 6.0);
    Graph g;
    const ProbPair pair = m.forward_twin(g, x);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      ++total;
      for (std::size_t c = 0; c < 3; ++c)
        if (pair.p1.value()(r, c) != pair.p2.value()(r, c)) {
          ++differ;
          break;
        }
    }
  }
  CHECK(static_cast<double>(differ) >= 0.99 * static_cast<double>(total));
}

TEST_CASE("rows are processed independently") {
  TwinModel m = TwinModel::init({}, 9);
  std::mt19937_64 rng(2);
  const Matrix x = random_matrix(6, 2, rng);
  const std::vector<std::size_t> perm{3, 0, 5, 5, 1, 4, 2};
  Matrix xp(perm.size(), 2);
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t c = 0; c < 2; ++c) xp(i, c) = x(perm[i], c);
  Graph g1, g2;
  const ProbPair a = m.forward_twin(g1, x);
  const ProbPair b = m.forward_twin(g2, xp);
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(b.p1.value()(i, c) == a.p1.value()(perm[i], c));
      CHECK(b.p2.value()(i, c) == a.p2.value()(perm[i], c));
    }
}

TEST_CASE("dropout mode") {
  Architecture arch;
  arch.mode = HeadMode::kDropout;
  std::mt19937_64 data_rng(3);
  const Matrix x = random_matrix(8, 2, data_rng);

  SUBCASE("single head") {
    TwinModel m = TwinModel::init(arch, 1);
    CHECK(m.head2().empty());
    Graph g;
    CHECK_THROWS_AS(m.forward_twin(g, x), ContractError);
  }
  SUBCASE("rate zero gives identical views") {
    arch.dropout_rate = 0.0;
    TwinModel m = TwinModel::init(arch, 1);
    Rng rng = make_rng(1, streams::kDropout);
    Graph g;
    const ProbPair pair = m.forward_dropout(g, x, rng);
    CHECK(pair.p1.value() == pair.p2.value());
  }
  SUBCASE("seeded masks reproduce") {
    TwinModel m = TwinModel::init(arch, 1);
    Rng r1 = make_rng(5, streams::kDropout);
    Rng r2 = make_rng(5, streams::kDropout);
    Graph g1, g2;
    const ProbPair a = m.forward_dropout(g1, x, r1);
    const ProbPair b = m.forward_dropout(g2, x, r2);
    CHECK(a.p1.value() == b.p1.value());
    CHECK(a.p2.value() == b.p2.value());
    CHECK_FALSE(a.p1.value() == a.p2.value());
    check_row_stochastic(a.p1.value());
  }
  SUBCASE("mask statistics") {
    Rng rng = make_rng(2, streams::kDropout);
    const Matrix mask = dropout_mask(200, 200, 0.5, rng);
    double mean = 0.0;
    for (double v : mask.values()) {
      CHECK((v == 0.0 || v == 2.0));
      mean += v;
    }
    mean /= static_cast<double>(mask.size());
    // 40000 Bernoulli(0.5) draws: standard error of the mean is 0.005.
    CHECK(std::abs(mean - 1.0) < 0.03);
    CHECK_THROWS_AS(dropout_mask(1, 1, 1.0, rng), ParameterError);
  }
  SUBCASE("averaged masked logits approach the deterministic logits") {
    arch.hidden = 256;
    TwinModel m = TwinModel::init(arch, 4);
    const Matrix det = m.deterministic_logits(x);
    Rng rng = make_rng(9, streams::kDropout);
    Matrix acc(det.rows(), det.cols());
    const int draws = 1000;
    for (int i = 0; i < draws; ++i) {
      Graph g;
      Var features = m.generate(g, x);
      const Matrix mask = dropout_mask(features.rows(), features.cols(), 0.5, rng);
      Var logits = m.head_logits(g, m.head1(), features * g.constant(mask));
      for (std::size_t k = 0; k < acc.size(); ++k) acc.values()[k] += logits.value().values()[k];
    }
    double scale = 0.0;
    for (double v : det.values()) scale = std::max(scale, std::abs(v));
    for (std::size_t k = 0; k < acc.size(); ++k)
      CHECK(std::abs(acc.values()[k] / draws - det.values()[k]) < 0.05 * std::max(scale, 1.0));
  }
}

TEST_CASE("checkpoint round trip is bit-exact") {
  for (HeadMode mode : {HeadMode::kTwin, HeadMode::kDropout}) {
    Architecture arch;
    arch.mode = mode;
    arch.hidden = 16;
    TwinModel m = TwinModel::init(arch, 12);
    const std::string text = save_checkpoint_json(m);
    TwinModel back = load_checkpoint_json(text);
    CHECK(back.arch() == m.arch());
    CHECK(same_params(back.generator(), m.generator()));
    CHECK(same_params(back.head1(), m.head1()));
    CHECK(same_params(back.head2(), m.head2()));
    CHECK(save_checkpoint_json(back) == text);
    std::mt19937_64 rng(5);
    const Matrix x = random_matrix(10, 2, rng);
    Rng r1 = make_rng(1, 1), r2 = make_rng(1, 1);
    Graph g1, g2;
    const ProbPair a = m.forward(g1, x, r1);
    const ProbPair b = back.forward(g2, x, r2);
    CHECK(a.p1.value() == b.p1.value());
    CHECK(a.p2.value() == b.p2.value());
  }
  CHECK_THROWS_AS(load_checkpoint_json("{\"format\":\"other\"}"), ConfigError);
  CHECK_THROWS_AS(load_checkpoint_json("not json"), ConfigError);
}
