#include "kmkc/spectrum.hpp"

#include "kmkc/error.hpp"
#include "kmkc/gemm.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace kmkc {

namespace {

struct Twiddle {
    double re;
    double im;
};

// exp(-2 pi i r / m) for 0 <= r < m
Twiddle twiddle(std::size_t r, std::size_t m) {
    if (r == 0) {
        return {1.0, 0.0};
    }
    if ((4 * r) % m == 0) {
        switch ((4 * r) / m) {
            case 1: return {0.0, -1.0};
            case 2: return {-1.0, 0.0};
            default: return {0.0, 1.0};
        }
    }
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(m);
    return {std::cos(angle), -std::sin(angle)};
}

}  // namespace

RealDftPlan::RealDftPlan(std::size_t length, std::size_t bins)
    : length_(length), bins_(bins), basis_(length, 2 * bins) {
    if (length == 0) {
        throw InvalidArgument("RealDftPlan: empty signal length");
    }
    if (bins > length) {
        throw InvalidArgument("RealDftPlan: more bins than samples");
    }
    for (std::size_t n = 0; n < length; ++n) {
        for (std::size_t k = 0; k < bins; ++k) {
            const Twiddle w = twiddle((k * n) % length, length);
            basis_(n, k) = w.re;
            basis_(n, bins + k) = w.im;
        }
    }
}

Matrix RealDftPlan::magnitudes(const Matrix& signals) const {
    if (signals.cols() != length_) {
        throw DimensionError("RealDftPlan: signal length " + std::to_string(signals.cols()) + ", plan length " +
                             std::to_string(length_));
    }
    const Matrix spectrum = gemm(signals, basis_);
    Matrix out(signals.rows(), bins_);
    const double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t i = 0; i < signals.rows(); ++i) {
        double l1 = 0.0;
        for (double v : signals.row(i)) {
            l1 += std::abs(v);
        }
        const double floor = static_cast<double>(length_) * eps * l1;
        for (std::size_t k = 0; k < bins_; ++k) {
            const double mag = std::hypot(spectrum(i, k), spectrum(i, bins_ + k));
            out(i, k) = mag <= floor ? 0.0 : mag;
        }
    }
    return out;
}

std::vector<double> dft_halfspectrum_sqrtmag(std::span<const double> x) {
    if (x.empty()) {
        throw InvalidArgument("dft_halfspectrum_sqrtmag: empty input");
    }
    const Matrix row = Matrix::from_values(1, x.size(), {x.begin(), x.end()});
    const Matrix out = dft_halfspectrum_sqrtmag(row);
    return {out.values().begin(), out.values().end()};
}

Matrix dft_halfspectrum_sqrtmag(const Matrix& signals) {
    if (signals.cols() == 0) {
        throw InvalidArgument("dft_halfspectrum_sqrtmag: empty input");
    }
    const RealDftPlan plan(signals.cols(), half_spectrum_length(signals.cols()));
    Matrix mags = plan.magnitudes(signals);
    for (std::size_t i = 0; i < mags.size(); ++i) {
        mags.data()[i] = std::sqrt(mags.data()[i]);
    }
    return mags;
}

}  // namespace kmkc
