#pragma once

#include "kmkc/matrix.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace kmkc {

/// Number of retained bins of a real length-m spectrum, ceil(m / 2).
[[nodiscard]] constexpr std::size_t half_spectrum_length(std::size_t m) noexcept { return (m + 1) / 2; }

/// Precomputed forward DFT, X_k = sum_n x_n exp(-2 pi i k n / M), restricted
/// to the first `bins` coefficients of real length-M signals.
///
/// Batches are transformed with a single gemm against an M x 2*bins
/// cos/sin basis. Twiddles are generated from the exact residue (k n) mod M,
/// so quarter-turn entries are exactly 0 or +-1.
class RealDftPlan {
public:
    RealDftPlan(std::size_t length, std::size_t bins);

    [[nodiscard]] std::size_t length() const noexcept { return length_; }
    [[nodiscard]] std::size_t bins() const noexcept { return bins_; }

    /// |X_k| for every row of `signals` (N x length -> N x bins).
    /// Magnitudes below the summation rounding bound length * eps * sum|x_n|
    /// are reported as exactly 0.
    [[nodiscard]] Matrix magnitudes(const Matrix& signals) const;

private:
    std::size_t length_;
    std::size_t bins_;
    Matrix basis_;  // length x 2*bins: [cos | -sin]
};

/// |DFT(x)_k|^(1/2) for k = 0 .. ceil(M/2)-1. Throws InvalidArgument on empty input.
[[nodiscard]] std::vector<double> dft_halfspectrum_sqrtmag(std::span<const double> x);

/// Row-wise dft_halfspectrum_sqrtmag over a batch of equal-length signals.
[[nodiscard]] Matrix dft_halfspectrum_sqrtmag(const Matrix& signals);

}  // namespace kmkc
