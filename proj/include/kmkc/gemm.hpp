#pragma once

#include "kmkc/matrix.hpp"

#include <cstddef>
#include <span>

namespace kmkc {

enum class Transpose : bool { no = false, yes = true };

/// C <- alpha * A * op(B) + beta * C, where op(B) is B or B^T.
///
/// Cache-blocked and packed; the row panels of C are distributed over
/// thread_count() workers. The summation order of every C entry depends
/// only on the operand shapes, so results are bit-identical for any thread
/// count. When beta == 0, C is overwritten without being read.
void gemm(double alpha, ConstMatrixView a, ConstMatrixView b, Transpose transpose_b, double beta, MatrixView c);

/// Returns A * B, or A * B^T when `transpose_b` is yes.
[[nodiscard]] Matrix gemm(const Matrix& a, const Matrix& b, Transpose transpose_b = Transpose::no);

/// Product R^T * X where R is the N x Q one-hot matrix whose row i has its
/// single 1 at column assignment[i]. Row q of the result is the sum of the
/// rows of X assigned to q. Runs in O(N * M) and never forms R.
[[nodiscard]] Matrix sparse_onehot_gemm(std::span<const std::size_t> assignment, std::size_t clusters, const Matrix& x);

}  // namespace kmkc
