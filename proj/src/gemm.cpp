#include "kmkc/gemm.hpp"

#include "kmkc/error.hpp"
#include "kmkc/parallel.hpp"

#include <algorithm>
#include <cstring>
#include <memory>
#include <new>
#include <string>

namespace kmkc {

namespace {

// Register tile is kMr x kNr; kNr spans three 8-wide vectors.
constexpr std::size_t kMr = 8;
constexpr std::size_t kNr = 24;
constexpr std::size_t kKc = 512;
constexpr std::size_t kMc = 128;
constexpr std::size_t kNc = 3072;

using v8d = double __attribute__((vector_size(64)));

inline v8d load8(const double* p) {
    v8d v;
    std::memcpy(&v, p, sizeof v);
    return v;
}

inline void store8(double* p, v8d v) { std::memcpy(p, &v, sizeof v); }

struct AlignedDeleter {
    void operator()(double* p) const { ::operator delete[](p, std::align_val_t{64}); }
};

class PackBuffer {
public:
    double* reserve(std::size_t n) {
        if (n > capacity_) {
            data_.reset(static_cast<double*>(::operator new[](n * sizeof(double), std::align_val_t{64})));
            capacity_ = n;
        }
        return data_.get();
    }

private:
    std::unique_ptr<double, AlignedDeleter> data_;
    std::size_t capacity_ = 0;
};

// Packed A: micro-panels of kMr rows, each stored p-major (kMr values per p).
void pack_a(ConstMatrixView a, std::size_t row0, std::size_t mc, std::size_t col0, std::size_t kc, double* dst) {
    for (std::size_t ir = 0; ir < mc; ir += kMr) {
        const std::size_t mr = std::min(kMr, mc - ir);
        for (std::size_t p = 0; p < kc; ++p) {
            std::size_t r = 0;
            for (; r < mr; ++r) {
                dst[r] = a(row0 + ir + r, col0 + p);
            }
            for (; r < kMr; ++r) {
                dst[r] = 0.0;
            }
            dst += kMr;
        }
    }
}

// Packed op(B): micro-panels of kNr columns, each stored p-major (kNr values per p).
void pack_b(ConstMatrixView b, Transpose tb, std::size_t k0, std::size_t kc, std::size_t col0, std::size_t nc, double* dst) {
    for (std::size_t jr = 0; jr < nc; jr += kNr) {
        const std::size_t nr = std::min(kNr, nc - jr);
        if (tb == Transpose::no) {
            for (std::size_t p = 0; p < kc; ++p) {
                const double* src = &b(k0 + p, col0 + jr);
                std::size_t j = 0;
                for (; j < nr; ++j) {
                    dst[p * kNr + j] = src[j];
                }
                for (; j < kNr; ++j) {
                    dst[p * kNr + j] = 0.0;
                }
            }
        } else {
            for (std::size_t j = 0; j < kNr; ++j) {
                if (j < nr) {
                    const double* src = &b(col0 + jr + j, k0);
                    for (std::size_t p = 0; p < kc; ++p) {
                        dst[p * kNr + j] = src[p];
                    }
                } else {
                    for (std::size_t p = 0; p < kc; ++p) {
                        dst[p * kNr + j] = 0.0;
                    }
                }
            }
        }
        dst += kc * kNr;
    }
}

// c[0..mr)[0..nr) += alpha * (packed A micro-panel) * (packed B micro-panel)
void micro_kernel(std::size_t kc, const double* __restrict a, const double* __restrict b, double alpha, double* c,
                  std::size_t ldc, std::size_t mr, std::size_t nr) {
    v8d acc[kMr][3] = {};
    for (std::size_t p = 0; p < kc; ++p) {
        const v8d b0 = load8(b);
        const v8d b1 = load8(b + 8);
        const v8d b2 = load8(b + 16);
#pragma GCC unroll 8
        for (std::size_t r = 0; r < kMr; ++r) {
            const double ar = a[r];
            acc[r][0] += ar * b0;
            acc[r][1] += ar * b1;
            acc[r][2] += ar * b2;
        }
        a += kMr;
        b += kNr;
    }
    if (mr == kMr && nr == kNr) {
#pragma GCC unroll 8
        for (std::size_t r = 0; r < kMr; ++r) {
            double* row = c + r * ldc;
            store8(row, load8(row) + alpha * acc[r][0]);
            store8(row + 8, load8(row + 8) + alpha * acc[r][1]);
            store8(row + 16, load8(row + 16) + alpha * acc[r][2]);
        }
        return;
    }
    alignas(64) double tile[kMr][kNr];
    for (std::size_t r = 0; r < kMr; ++r) {
        store8(&tile[r][0], acc[r][0]);
        store8(&tile[r][8], acc[r][1]);
        store8(&tile[r][16], acc[r][2]);
    }
    for (std::size_t r = 0; r < mr; ++r) {
        for (std::size_t j = 0; j < nr; ++j) {
            c[r * ldc + j] += alpha * tile[r][j];
        }
    }
}

void scale_c(double beta, MatrixView c) {
    for (std::size_t i = 0; i < c.rows; ++i) {
        double* row = &c(i, 0);
        if (beta == 0.0) {
            std::fill(row, row + c.cols, 0.0);
        } else {
            for (std::size_t j = 0; j < c.cols; ++j) {
                row[j] *= beta;
            }
        }
    }
}

}  // namespace

void gemm(double alpha, ConstMatrixView a, ConstMatrixView b, Transpose transpose_b, double beta, MatrixView c) {
    const std::size_t m = a.rows;
    const std::size_t k = a.cols;
    const std::size_t bk = transpose_b == Transpose::no ? b.rows : b.cols;
    const std::size_t n = transpose_b == Transpose::no ? b.cols : b.rows;
    if (bk != k || c.rows != m || c.cols != n) {
        throw DimensionError("gemm: A is " + std::to_string(a.rows) + "x" + std::to_string(a.cols) + ", op(B) is " +
                             std::to_string(bk) + "x" + std::to_string(n) + ", C is " + std::to_string(c.rows) + "x" +
                             std::to_string(c.cols));
    }
    if (m == 0 || n == 0) {
        return;
    }
    if (beta != 1.0) {
        scale_c(beta, c);
    }
    if (k == 0 || alpha == 0.0) {
        return;
    }

    static thread_local PackBuffer b_buffer;
    const std::size_t row_blocks = (m + kMc - 1) / kMc;

    for (std::size_t jc = 0; jc < n; jc += kNc) {
        const std::size_t nc = std::min(kNc, n - jc);
        const std::size_t nc_padded = (nc + kNr - 1) / kNr * kNr;
        for (std::size_t pc = 0; pc < k; pc += kKc) {
            const std::size_t kc = std::min(kKc, k - pc);
            double* packed_b = b_buffer.reserve(kc * nc_padded);
            pack_b(b, transpose_b, pc, kc, jc, nc, packed_b);

            parallel_for(row_blocks, 1, [&](std::size_t first, std::size_t last) {
                static thread_local PackBuffer a_buffer;
                double* packed_a = a_buffer.reserve(kMc * kc);
                for (std::size_t blk = first; blk < last; ++blk) {
                    const std::size_t ic = blk * kMc;
                    const std::size_t mc = std::min(kMc, m - ic);
                    pack_a(a, ic, mc, pc, kc, packed_a);
                    for (std::size_t jr = 0; jr < nc; jr += kNr) {
                        const std::size_t nr = std::min(kNr, nc - jr);
                        const double* bp = packed_b + jr * kc;
                        for (std::size_t ir = 0; ir < mc; ir += kMr) {
                            const std::size_t mr = std::min(kMr, mc - ir);
                            micro_kernel(kc, packed_a + ir * kc, bp, alpha, &c(ic + ir, jc + jr), c.stride, mr, nr);
                        }
                    }
                }
            });
        }
    }
}

Matrix gemm(const Matrix& a, const Matrix& b, Transpose transpose_b) {
    const std::size_t n = transpose_b == Transpose::no ? b.cols() : b.rows();
    const std::size_t bk = transpose_b == Transpose::no ? b.rows() : b.cols();
    if (bk != a.cols()) {
        throw DimensionError("gemm: inner dimensions differ (" + std::to_string(a.cols()) + " vs " + std::to_string(bk) + ")");
    }
    Matrix c(a.rows(), n);
    gemm(1.0, a.view(), b.view(), transpose_b, 0.0, c.view());
    return c;
}

Matrix sparse_onehot_gemm(std::span<const std::size_t> assignment, std::size_t clusters, const Matrix& x) {
    if (assignment.size() != x.rows()) {
        throw DimensionError("sparse_onehot_gemm: " + std::to_string(assignment.size()) + " assignments for " +
                             std::to_string(x.rows()) + " rows");
    }
    Matrix out(clusters, x.cols());
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        const std::size_t q = assignment[i];
        if (q >= clusters) {
            throw InvalidArgument("sparse_onehot_gemm: row " + std::to_string(i) + " has no valid cluster (index " +
                                  std::to_string(q) + ", clusters " + std::to_string(clusters) + ")");
        }
        const auto src = x.row(i);
        auto dst = out.row(q);
        for (std::size_t j = 0; j < src.size(); ++j) {
            dst[j] += src[j];
        }
    }
    return out;
}

}  // namespace kmkc
