#pragma once

#include "kmkc/matrix.hpp"

#include <cstddef>
#include <vector>

namespace kmkc {

/// LU factorization with partial (row) pivoting, P A = L U.
///
/// Works for general square matrices, including the symmetric indefinite
/// bordered kernel systems whose leading diagonal entry is zero. The
/// factorization is right-looking and blocked; the trailing updates go
/// through gemm.
class LuFactorization {
public:
    /// Throws SingularMatrix if a pivot is below n * eps * max|A|.
    explicit LuFactorization(Matrix a);

    [[nodiscard]] std::size_t size() const noexcept { return lu_.rows(); }
    /// Solves A X = B for every column of B.
    [[nodiscard]] Matrix solve(const Matrix& b) const;
    /// Row i of P A is row permutation()[i] of A.
    [[nodiscard]] const std::vector<std::size_t>& permutation() const noexcept { return perm_; }

private:
    Matrix lu_;
    std::vector<std::size_t> perm_;
};

/// Solves A X = B with a pivoted LU factorization.
[[nodiscard]] Matrix solve_dense(const Matrix& a, const Matrix& b);

/// ||A X - B||_F / ||B||_F (or ||A X - B||_F when B is zero).
[[nodiscard]] double relative_residual(const Matrix& a, const Matrix& x, const Matrix& b);

}  // namespace kmkc
