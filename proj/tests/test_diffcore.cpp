#include <doctest.h>

#include <cmath>
#include <random>

#include "divuda/errors.hpp"
#include "divuda/graph.hpp"
#include "divuda/kernels.hpp"
#include "divuda/optim.hpp"
#include "test_support.hpp"

using namespace divuda;
using divuda::test::max_fd_error;
using divuda::test::random_matrix;

namespace {

// Gradient check of a unary graph function over one parameter.
double unary_fd(const Matrix& x, Var (*build)(Graph&, Var)) {
  ParamSet ps;
  ps.add("x", x);
  auto value = [&] {
    Graph g;
    return build(g, g.param(ps[0])).scalar();
  };
  auto back = [&] {
    Graph g;
    g.backward(build(g, g.param(ps[0])));
  };
  return max_fd_error(ps, value, back);
}

}  // namespace

TEST_CASE("matrix basics") {
  Matrix m(2, 3, 1.5);
  CHECK(m.size() == 6);
  CHECK(m(1, 2) == 1.5);
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(Matrix::from_rows({{1, 2}, {3}}), DimensionError);
  Matrix bad(1, 1, std::nan(""));
  CHECK_FALSE(bad.all_finite());
}

TEST_CASE("matmul forward and shape errors") {
  std::mt19937_64 rng(1);
  const Matrix m = random_matrix(3, 3, rng);
  CHECK(kernels::matmul(Matrix::identity(3), m) == m);
  CHECK_THROWS_AS(kernels::matmul(Matrix(2, 3), Matrix(2, 3)), DimensionError);

  Graph g;
  ParamSet ps;
  ps.add("a", Matrix(1, 1, 2.0));
  ps.add("b", Matrix(1, 1, 3.0));
  Parameter& a = ps[0];
  Parameter& b = ps[1];
  Var prod = matmul(g.param(a), g.param(b));
  CHECK(prod.scalar() == 6.0);
  g.backward(prod);
  CHECK(a.grad(0, 0) == 3.0);
  CHECK(b.grad(0, 0) == 2.0);
}

TEST_CASE("the finite-difference checker flags a wrong gradient") {
  std::mt19937_64 rng(9);
  ParamSet ps;
  ps.add("a", random_matrix(3, 3, rng));
  auto build = [&](Graph& g) { return sum(matmul(g.param(ps[0]), g.param(ps[0]))); };
  auto value = [&] {
    Graph g;
    return build(g).scalar();
  };
  auto scaled_back = [&] {
    Graph g;
    g.backward(build(g));
    for (double& v : ps[0].grad.values()) v *= 1.001;
  };
  CHECK(max_fd_error(ps, value, scaled_back) > 5e-4);
}

TEST_CASE("matmul gradient matches finite differences") {
  std::mt19937_64 rng(2);
  ParamSet ps;
  ps.add("a", random_matrix(4, 3, rng));
  ps.add("b", random_matrix(3, 2, rng));
  const Matrix w = random_matrix(4, 2, rng);
  auto build = [&](Graph& g) { return sum(matmul(g.param(ps[0]), g.param(ps[1])) * g.constant(w)); };
  auto value = [&] {
    Graph g;
    return build(g).scalar();
  };
  auto back = [&] {
    Graph g;
    g.backward(build(g));
  };
  CHECK(max_fd_error(ps, value, back) < 1e-6);
}

TEST_CASE("softmax rows") {
  const Matrix p = kernels::softmax_rows(Matrix::from_rows({{0, 0, 0}, {1000, 0, -5}}));
  for (std::size_t c = 0; c < 3; ++c) CHECK(p(0, c) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(p(1, 0) == doctest::Approx(1.0));
  CHECK(p(1, 1) >= 0.0);
  CHECK(p.all_finite());

  std::mt19937_64 rng(3);
  const Matrix logits = random_matrix(5, 4, rng);
  const Matrix q = kernels::softmax_rows(logits);
  for (std::size_t r = 0; r < q.rows(); ++r) {
    double s = 0.0;
    for (double v : q.row(r)) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("softmax gradient matches finite differences") {
  std::mt19937_64 rng(4);
  const Matrix w = random_matrix(3, 4, rng);
  ParamSet ps;
  ps.add("z", random_matrix(3, 4, rng));
  auto build = [&](Graph& g) { return sum(softmax_rows(g.param(ps[0])) * g.constant(w)); };
  auto value = [&] {
    Graph g;
    return build(g).scalar();
  };
  auto back = [&] {
    Graph g;
    g.backward(build(g));
  };
  CHECK(max_fd_error(ps, value, back) < 1e-6);
}

TEST_CASE("elementwise ops") {
  SUBCASE("relu") {
    Graph g;
    ParamSet ps;
    Parameter& x = ps.add("x", Matrix::from_rows({{-1, 2}}));
    Var y = relu(g.param(x));
    CHECK(y.value() == Matrix::from_rows({{0, 2}}));
    g.backward(sum(y));
    CHECK(x.grad == Matrix::from_rows({{0, 1}}));
  }
  SUBCASE("log clamp") {
    Graph g;
    ParamSet ps;
    Parameter& x = ps.add("x", Matrix::from_rows({{0.0, 0.5}}));
    Var y = log_clamped(g.param(x));
    CHECK(y.value()(0, 0) == std::log(kLogClamp));
    g.backward(sum(y));
    CHECK(x.grad.all_finite());
    CHECK(x.grad(0, 0) == 0.0);
    CHECK(x.grad(0, 1) == doctest::Approx(2.0));
  }
  SUBCASE("mean") {
    Graph g;
    ParamSet ps;
    Parameter& x = ps.add("x", Matrix(2, 2, 1.0));
    Var m = mean(g.param(x));
    CHECK(m.scalar() == 1.0);
    g.backward(m);
    CHECK(x.grad == Matrix(2, 2, 0.25));
  }
  SUBCASE("shape errors") {
    Graph g;
    Var a = g.constant(Matrix(2, 2));
    Var b = g.constant(Matrix(2, 3));
    CHECK_THROWS_AS(add(a, b), DimensionError);
    CHECK_THROWS_AS(mul(a, b), DimensionError);
    CHECK_THROWS_AS(add_row_vector(a, g.constant(Matrix(1, 3))), DimensionError);
  }
}

TEST_CASE("every differentiable op passes a finite-difference check") {
  std::mt19937_64 rng(5);
  const Matrix x = random_matrix(3, 4, rng);
  CHECK(unary_fd(x, [](Graph&, Var v) { return sum(relu(v) * v); }) < 1e-4);
  CHECK(unary_fd(x, [](Graph&, Var v) { return mean(v * v); }) < 1e-4);
  CHECK(unary_fd(x, [](Graph&, Var v) { return sum(scale(v, -1.7) - v * v); }) < 1e-4);
  CHECK(unary_fd(x, [](Graph& g, Var v) {
          return sum(log_clamped(v * v + g.constant(Matrix(3, 4, 0.1))));
        }) < 1e-4);
  CHECK(unary_fd(x, [](Graph&, Var v) { return sum(row_sum(v * v)); }) < 1e-4);
  CHECK(unary_fd(x, [](Graph&, Var v) {
          const std::vector<std::size_t> rows{2, 0, 2};
          Var s = gather_rows(v, rows);
          return sum(s * s);
        }) < 1e-4);
  CHECK(unary_fd(x, [](Graph& g, Var v) {
          return sum(add_row_vector(v, g.constant(Matrix(1, 4, 0.3))) * v);
        }) < 1e-4);
  // Keep inputs away from the dead-zone kinks.
  const Matrix far = Matrix::from_rows({{3.0, -2.5}, {0.2, 4.0}});
  CHECK(unary_fd(far, [](Graph&, Var v) { return sum(dead_zone_abs(v, 1.0, 0.5) * v); }) < 1e-4);
}

TEST_CASE("backward contract") {
  Graph g;
  Var v = g.constant(Matrix(2, 1, 1.0));
  CHECK_THROWS_AS(g.backward(v), ContractError);

  ParamSet ps;
  Parameter& w = ps.add("w", Matrix::from_rows({{1.0}, {-2.0}, {0.5}}));
  Graph h;
  Var c = h.constant(Matrix(1, 1, 4.0));
  h.backward(c);
  CHECK(w.grad == Matrix(3, 1));

  Graph k;
  Var wv = k.param(w);
  Var loss = sum(wv * wv);
  k.backward(loss);
  CHECK(w.grad == Matrix::from_rows({{2.0}, {-4.0}, {1.0}}));
  k.backward(loss);
  CHECK(w.grad == Matrix::from_rows({{4.0}, {-8.0}, {2.0}}));
}

TEST_CASE("diamond graph sums path contributions") {
  // y = a * x, z = b * x, L = sum(y * z); two paths from x.
  ParamSet ps;
  Parameter& x = ps.add("x", Matrix::from_rows({{1.5, -0.5}}));
  const double a = 2.0;
  const double b = -3.0;
  Graph g;
  Var xv = g.param(x);
  Var loss = sum(scale(xv, a) * scale(xv, b));
  g.backward(loss);
  for (std::size_t i = 0; i < 2; ++i) {
    const double xi = x.value(0, i);
    const double path_y = a * (b * xi);
    const double path_z = b * (a * xi);
    CHECK(x.grad(0, i) == doctest::Approx(path_y + path_z));
  }
}

TEST_CASE("duplicate parameter names are rejected") {
  ParamSet ps;
  ps.add("w", Matrix(1, 1));
  CHECK_THROWS(ps.add("w", Matrix(1, 1)));
  CHECK(ps.find("w") != nullptr);
  CHECK(ps.find("missing") == nullptr);
}

TEST_CASE("sgd step") {
  SUBCASE("zero gradient leaves parameters") {
    ParamSet ps;
    ps.add("w", Matrix::from_rows({{1.0, 2.0}}));
    sgd_step(ps, 0.1, 0.0, 0.0);
    CHECK(ps[0].value == Matrix::from_rows({{1.0, 2.0}}));
  }
  SUBCASE("plain step") {
    ParamSet ps;
    Parameter& p = ps.add("w", Matrix(1, 1, 1.0));
    p.grad(0, 0) = 1.0;
    sgd_step(ps, 0.1, 0.0, 0.0);
    CHECK(p.value(0, 0) == doctest::Approx(0.9));
    CHECK(p.grad(0, 0) == 0.0);
  }
  SUBCASE("momentum and weight decay") {
    ParamSet ps;
    Parameter& p = ps.add("w", Matrix(1, 1, 2.0));
    p.grad(0, 0) = 0.5;
    sgd_step(ps, 0.1, 0.9, 0.01);
    const double v1 = 0.5 + 0.01 * 2.0;
    const double w1 = 2.0 - 0.1 * v1;
    CHECK(p.value(0, 0) == doctest::Approx(w1));
    p.grad(0, 0) = 0.5;
    sgd_step(ps, 0.1, 0.9, 0.01);
    const double v2 = 0.9 * v1 + 0.5 + 0.01 * w1;
    CHECK(p.value(0, 0) == doctest::Approx(w1 - 0.1 * v2));
  }
}

TEST_CASE("serial and parallel kernels are bit-identical") {
  std::mt19937_64 rng(6);
  const Matrix a = random_matrix(300, 70, rng);
  const Matrix b = random_matrix(70, 40, rng);
  const Matrix c = random_matrix(300, 40, rng);
  Matrix s(300, 40), p(300, 40);
  kernels::serial::matmul(a, b, s);
  kernels::parallel::matmul(a, b, p);
  CHECK(s == p);
  s = Matrix(300, 70);
  p = Matrix(300, 70);
  kernels::serial::matmul_bt(c, b, s);
  kernels::parallel::matmul_bt(c, b, p);
  CHECK(s == p);
  s = Matrix(70, 40);
  p = Matrix(70, 40);
  kernels::serial::matmul_at(a, c, s);
  kernels::parallel::matmul_at(a, c, p);
  CHECK(s == p);
  s = Matrix(300, 40);
  p = Matrix(300, 40);
  kernels::serial::softmax_rows(c, s);
  kernels::parallel::softmax_rows(c, p);
  CHECK(s == p);
  CHECK(kernels::matmul(a, b) == kernels::matmul(a, b));
}
