#include "kmkc/matrix.hpp"

#include "kmkc/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kmkc {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t nrows = rows.size();
    const std::size_t ncols = nrows == 0 ? 0 : rows.begin()->size();
    std::vector<double> values;
    values.reserve(nrows * ncols);
    for (const auto& r : rows) {
        if (r.size() != ncols) {
            throw DimensionError("Matrix::from_rows: ragged rows");
        }
        values.insert(values.end(), r.begin(), r.end());
    }
    return from_values(nrows, ncols, std::move(values));
}

Matrix Matrix::from_values(std::size_t rows, std::size_t cols, std::vector<double> values) {
    if (values.size() != rows * cols) {
        throw DimensionError("Matrix::from_values: expected " + std::to_string(rows * cols) + " values, got " +
                             std::to_string(values.size()));
    }
    if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
        throw InvalidArgument("Matrix::from_values: non-finite entry");
    }
    Matrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.data_ = std::move(values);
    return m;
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) {
            t(j, i) = (*this)(i, j);
        }
    }
    return t;
}

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= rows_) {
            throw InvalidArgument("Matrix::gather_rows: row index out of range");
        }
        const auto src = row(indices[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionError("dot: length mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double frobenius_norm(const Matrix& a) { return norm2(a.values()); }

double max_abs_difference(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError("max_abs_difference: shape mismatch");
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    }
    return m;
}

}  // namespace kmkc
