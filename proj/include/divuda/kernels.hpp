#pragma once

#include "divuda/matrix.hpp"

// Dense kernels used by the graph engine.
//
// Every kernel exists twice: `serial` is the reference, `parallel` splits output
// rows across OpenMP threads. Each output element is accumulated in the same
// order in both, so results are bit-identical and the unqualified dispatchers
// may pick either without affecting determinism.
namespace divuda::kernels {

namespace serial {
void matmul(const Matrix& a, const Matrix& b, Matrix& out);       // out = a * b
void matmul_bt(const Matrix& a, const Matrix& b, Matrix& out);    // out = a * b^T
void matmul_at(const Matrix& a, const Matrix& b, Matrix& out);    // out = a^T * b
void softmax_rows(const Matrix& logits, Matrix& out);
}  // namespace serial

namespace parallel {
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_bt(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_at(const Matrix& a, const Matrix& b, Matrix& out);
void softmax_rows(const Matrix& logits, Matrix& out);
}  // namespace parallel

// Multiply-adds below which the serial kernel is used.
inline constexpr std::size_t kParallelThreshold = 1u << 18;

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_bt(const Matrix& a, const Matrix& b);
Matrix matmul_at(const Matrix& a, const Matrix& b);
Matrix softmax_rows(const Matrix& logits);

}  // namespace divuda::kernels
