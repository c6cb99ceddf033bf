#include "kmkc/linear_solve.hpp"

#include "kmkc/error.hpp"
#include "kmkc/gemm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace kmkc {

namespace {

constexpr std::size_t kPanel = 96;

void swap_rows(Matrix& a, std::size_t r1, std::size_t r2) {
    auto x = a.row(r1);
    auto y = a.row(r2);
    std::swap_ranges(x.begin(), x.end(), y.begin());
}

}  // namespace

LuFactorization::LuFactorization(Matrix a) : lu_(std::move(a)) {
    if (lu_.rows() != lu_.cols()) {
        throw DimensionError("LU: matrix is " + std::to_string(lu_.rows()) + "x" + std::to_string(lu_.cols()) +
                             ", expected square");
    }
    const std::size_t n = lu_.rows();
    perm_.resize(n);
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});

    double scale = 0.0;
    for (double v : lu_.values()) {
        scale = std::max(scale, std::abs(v));
    }
    const double tiny = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * scale;

    for (std::size_t j0 = 0; j0 < n; j0 += kPanel) {
        const std::size_t jb = std::min(kPanel, n - j0);
        const std::size_t jend = j0 + jb;

        // Unblocked factorization of the column panel [j0, jend), all rows below j0.
        for (std::size_t j = j0; j < jend; ++j) {
            std::size_t p = j;
            double best = std::abs(lu_(j, j));
            for (std::size_t i = j + 1; i < n; ++i) {
                const double v = std::abs(lu_(i, j));
                if (v > best) {
                    best = v;
                    p = i;
                }
            }
            if (!(best > tiny)) {
                throw SingularMatrix(j, "matrix is singular to working precision at pivot " + std::to_string(j) +
                                            " (|pivot| = " + std::to_string(best) + ")");
            }
            if (p != j) {
                swap_rows(lu_, p, j);
                std::swap(perm_[p], perm_[j]);
            }
            const double pivot = lu_(j, j);
            const double* urow = &lu_(j, 0);
            for (std::size_t i = j + 1; i < n; ++i) {
                double* row = &lu_(i, 0);
                const double l = row[j] / pivot;
                row[j] = l;
                for (std::size_t c = j + 1; c < jend; ++c) {
                    row[c] -= l * urow[c];
                }
            }
        }

        if (jend == n) {
            break;
        }

        // U12 <- L11^{-1} A12 (unit lower triangular).
        for (std::size_t r = j0 + 1; r < jend; ++r) {
            double* row = &lu_(r, 0);
            for (std::size_t t = j0; t < r; ++t) {
                const double l = row[t];
                const double* src = &lu_(t, 0);
                for (std::size_t c = jend; c < n; ++c) {
                    row[c] -= l * src[c];
                }
            }
        }

        // A22 <- A22 - L21 U12
        const auto full = lu_.view();
        gemm(-1.0, full.block(jend, j0, n - jend, jb), full.block(j0, jend, jb, n - jend), Transpose::no, 1.0,
             full.block(jend, jend, n - jend, n - jend));
    }
}

Matrix LuFactorization::solve(const Matrix& b) const {
    const std::size_t n = size();
    if (b.rows() != n) {
        throw DimensionError("LU solve: right-hand side has " + std::to_string(b.rows()) + " rows, expected " +
                             std::to_string(n));
    }
    const std::size_t k = b.cols();
    Matrix y(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto src = b.row(perm_[i]);
        std::copy(src.begin(), src.end(), y.row(i).begin());
    }
    // L y = P b
    for (std::size_t i = 1; i < n; ++i) {
        double* yi = y.row(i).data();
        const double* li = &lu_(i, 0);
        for (std::size_t t = 0; t < i; ++t) {
            const double l = li[t];
            if (l == 0.0) {
                continue;
            }
            const double* yt = y.row(t).data();
            for (std::size_t c = 0; c < k; ++c) {
                yi[c] -= l * yt[c];
            }
        }
    }
    // U x = y
    for (std::size_t ii = n; ii-- > 0;) {
        double* yi = y.row(ii).data();
        const double* ui = &lu_(ii, 0);
        for (std::size_t t = ii + 1; t < n; ++t) {
            const double u = ui[t];
            if (u == 0.0) {
                continue;
            }
            const double* yt = y.row(t).data();
            for (std::size_t c = 0; c < k; ++c) {
                yi[c] -= u * yt[c];
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            yi[c] /= ui[ii];
        }
    }
    return y;
}

Matrix solve_dense(const Matrix& a, const Matrix& b) {
    if (a.rows() != a.cols()) {
        throw DimensionError("solve_dense: A must be square");
    }
    if (b.rows() != a.rows()) {
        throw DimensionError("solve_dense: B has " + std::to_string(b.rows()) + " rows, A has " +
                             std::to_string(a.rows()));
    }
    return LuFactorization(a).solve(b);
}

double relative_residual(const Matrix& a, const Matrix& x, const Matrix& b) {
    Matrix r = b;
    gemm(1.0, a.view(), x.view(), Transpose::no, -1.0, r.view());
    const double bn = frobenius_norm(b);
    const double rn = frobenius_norm(r);
    return bn > 0.0 ? rn / bn : rn;
}

}  // namespace kmkc
