#include "divuda/kernels.hpp"

#include <algorithm>
#include <cmath>

#include <omp.h>

#include "divuda/errors.hpp"

namespace divuda::kernels {

namespace {

void check_matmul(const Matrix& a, const Matrix& b, const Matrix& out) {
  if (a.cols() != b.rows() || out.rows() != a.rows() || out.cols() != b.cols())
    throw DimensionError("matmul: inner dimensions or output shape mismatch");
}

void check_matmul_bt(const Matrix& a, const Matrix& b, const Matrix& out) {
  if (a.cols() != b.cols() || out.rows() != a.rows() || out.cols() != b.rows())
    throw DimensionError("matmul_bt: shape mismatch");
}

void check_matmul_at(const Matrix& a, const Matrix& b, const Matrix& out) {
  if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols())
    throw DimensionError("matmul_at: shape mismatch");
}

// Row kernels shared by both variants; each writes exactly one output row.
inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  double* o = out.data() + i * out.cols();
  std::fill(o, o + out.cols(), 0.0);
  const double* arow = a.data() + i * a.cols();
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const double aik = arow[k];
    const double* brow = b.data() + k * b.cols();
    for (std::size_t j = 0; j < b.cols(); ++j) o[j] += aik * brow[j];
  }
}

inline void matmul_bt_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  const double* arow = a.data() + i * a.cols();
  for (std::size_t j = 0; j < b.rows(); ++j) {
    const double* brow = b.data() + j * b.cols();
    double acc = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
    out(i, j) = acc;
  }
}

inline void matmul_at_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t k) {
  double* o = out.data() + k * out.cols();
  std::fill(o, o + out.cols(), 0.0);
  for (std::size_t n = 0; n < a.rows(); ++n) {
    const double ank = a(n, k);
    if (ank == 0.0) continue;
    const double* brow = b.data() + n * b.cols();
    for (std::size_t j = 0; j < b.cols(); ++j) o[j] += ank * brow[j];
  }
}

inline void softmax_row(const Matrix& logits, Matrix& out, std::size_t i) {
  const auto in = logits.row(i);
  auto o = out.row(i);
  const double mx = *std::max_element(in.begin(), in.end());
  double total = 0.0;
  for (std::size_t j = 0; j < in.size(); ++j) {
    o[j] = std::exp(in[j] - mx);
    total += o[j];
  }
  for (double& v : o) v /= total;
}

bool use_parallel(std::size_t work) {
  return work >= kParallelThreshold && !omp_in_parallel() && omp_get_max_threads() > 1;
}

}  // namespace

namespace serial {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul(a, b, out);
  for (std::size_t i = 0; i < a.rows(); ++i) matmul_row(a, b, out, i);
}

void matmul_bt(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul_bt(a, b, out);
  for (std::size_t i = 0; i < a.rows(); ++i) matmul_bt_row(a, b, out, i);
}

void matmul_at(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul_at(a, b, out);
  for (std::size_t k = 0; k < a.cols(); ++k) matmul_at_row(a, b, out, k);
}

void softmax_rows(const Matrix& logits, Matrix& out) {
  require_same_shape(logits, out, "softmax_rows");
  if (logits.cols() == 0) return;
  for (std::size_t i = 0; i < logits.rows(); ++i) softmax_row(logits, out, i);
}

}  // namespace serial

namespace parallel {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul(a, b, out);
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) matmul_row(a, b, out, static_cast<std::size_t>(i));
}

void matmul_bt(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul_bt(a, b, out);
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) matmul_bt_row(a, b, out, static_cast<std::size_t>(i));
}

void matmul_at(const Matrix& a, const Matrix& b, Matrix& out) {
  check_matmul_at(a, b, out);
  const auto rows = static_cast<std::ptrdiff_t>(a.cols());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < rows; ++k) matmul_at_row(a, b, out, static_cast<std::size_t>(k));
}

void softmax_rows(const Matrix& logits, Matrix& out) {
  require_same_shape(logits, out, "softmax_rows");
  if (logits.cols() == 0) return;
  const auto rows = static_cast<std::ptrdiff_t>(logits.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) softmax_row(logits, out, static_cast<std::size_t>(i));
}

}  // namespace parallel

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: a.cols != b.rows");
  Matrix out(a.rows(), b.cols());
  if (use_parallel(a.rows() * a.cols() * b.cols()))
    parallel::matmul(a, b, out);
  else
    serial::matmul(a, b, out);
  return out;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw DimensionError("matmul_bt: a.cols != b.cols");
  Matrix out(a.rows(), b.rows());
  if (use_parallel(a.rows() * a.cols() * b.rows()))
    parallel::matmul_bt(a, b, out);
  else
    serial::matmul_bt(a, b, out);
  return out;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw DimensionError("matmul_at: a.rows != b.rows");
  Matrix out(a.cols(), b.cols());
  if (use_parallel(a.rows() * a.cols() * b.cols()))
    parallel::matmul_at(a, b, out);
  else
    serial::matmul_at(a, b, out);
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  if (use_parallel(logits.size() * 16))
    parallel::softmax_rows(logits, out);
  else
    serial::softmax_rows(logits, out);
  return out;
}

}  // namespace divuda::kernels
