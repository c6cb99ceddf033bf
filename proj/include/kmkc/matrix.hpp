#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace kmkc {

/// Non-owning read-only view of a strided row-major block.
struct ConstMatrixView {
    const double* data = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t stride = 0;  // distance between consecutive rows, in elements

    [[nodiscard]] const double& operator()(std::size_t i, std::size_t j) const { return data[i * stride + j]; }
    [[nodiscard]] ConstMatrixView block(std::size_t row0, std::size_t col0, std::size_t nrows, std::size_t ncols) const {
        return {data + row0 * stride + col0, nrows, ncols, stride};
    }
};

/// Non-owning mutable view of a strided row-major block.
struct MatrixView {
    double* data = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t stride = 0;

    [[nodiscard]] double& operator()(std::size_t i, std::size_t j) const { return data[i * stride + j]; }
    [[nodiscard]] MatrixView block(std::size_t row0, std::size_t col0, std::size_t nrows, std::size_t ncols) const {
        return {data + row0 * stride + col0, nrows, ncols, stride};
    }
    operator ConstMatrixView() const { return {data, rows, cols, stride}; }  // NOLINT(google-explicit-constructor)
};

/// Dense row-major matrix of doubles.
///
/// Every sample set, centroid set, kernel matrix and weight matrix in the
/// library is carried by this type. Construction from external values
/// (`from_rows`, `from_values`) rejects NaN and infinities.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Matrix from_values(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Matrix identity(std::size_t n);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    [[nodiscard]] const double& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    [[nodiscard]] std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    [[nodiscard]] std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    [[nodiscard]] double* data() noexcept { return data_.data(); }
    [[nodiscard]] const double* data() const noexcept { return data_.data(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return data_; }

    [[nodiscard]] MatrixView view() noexcept { return {data_.data(), rows_, cols_, cols_}; }
    [[nodiscard]] ConstMatrixView view() const noexcept { return {data_.data(), rows_, cols_, cols_}; }

    [[nodiscard]] Matrix transposed() const;
    /// Copy of the rows listed in `indices`, in that order.
    [[nodiscard]] Matrix gather_rows(std::span<const std::size_t> indices) const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

[[nodiscard]] double dot(std::span<const double> a, std::span<const double> b);
[[nodiscard]] double norm2(std::span<const double> a);
[[nodiscard]] double frobenius_norm(const Matrix& a);
[[nodiscard]] double max_abs_difference(const Matrix& a, const Matrix& b);

}  // namespace kmkc
