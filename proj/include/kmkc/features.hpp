#pragma once

#include "kmkc/matrix.hpp"
#include "kmkc/mnist_io.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kmkc {

enum class FeatureMode : std::uint32_t { raw = 0, raw_fft = 1, patch = 2 };

/// Feature regime: RAW | RAW_FFT | PATCH(patch_side).
struct FeatureRegime {
    FeatureMode mode = FeatureMode::raw;
    std::size_t patch_side = 0;  // only meaningful for FeatureMode::patch

    friend bool operator==(const FeatureRegime&, const FeatureRegime&) = default;
};

[[nodiscard]] std::string to_string(FeatureMode mode);
/// Accepts "raw", "rawfft" (or "raw_fft") and "patch".
[[nodiscard]] FeatureMode parse_feature_mode(std::string_view text);

/// Flattens a row-major rows x cols image by concatenating its columns:
/// out[r + c * rows] = image[r][c].
[[nodiscard]] std::vector<double> vectorize_columns(std::span<const std::uint8_t> image, std::size_t rows, std::size_t cols);

/// Subtracts the mean and scales to unit Euclidean norm, in place. Returns
/// false (leaving the centered values) when nothing is left after centering.
bool center_and_normalize(std::span<double> values);

/// (x - mean(x)) / ||x - mean(x)||. Throws DegenerateInput for constant x.
[[nodiscard]] std::vector<double> normalize_raw(std::span<const double> x);

/// Raw vector concatenated with its centered square-root half spectrum:
///   x <- x - <x>;  f <- |DFT(x)|^(1/2) (first ceil(M/2) bins);  f <- f - <f>;
///   x <- x/||x||;  f <- f/||f||;  out = [x, f] / sqrt(2).
/// A 784-pixel image yields 1176 values. Throws DegenerateInput when x or f
/// is constant.
[[nodiscard]] std::vector<double> fft_augment(std::span<const double> x);

/// All stride-1 patch_side x patch_side sub-images of an L x L image.
struct PatchSet {
    std::size_t image_side = 0;
    std::size_t patch_side = 0;
    Matrix patches;                   // (L - l + 1)^2 x l^2, column-vectorized, centered, unit norm
    std::vector<std::uint8_t> valid;  // 0 for zero-variance patches, whose rows are all zero

    [[nodiscard]] std::size_t count() const noexcept { return patches.rows(); }
    [[nodiscard]] std::size_t valid_count() const noexcept;
};

[[nodiscard]] constexpr std::size_t patches_per_image(std::size_t image_side, std::size_t patch_side) noexcept {
    return (image_side - patch_side + 1) * (image_side - patch_side + 1);
}

/// Patch with origin (i, j) is row i * (L - l + 1) + j, and its entry
/// r + c * l is image[i + r][j + c]. `image` is row-major L x L.
[[nodiscard]] PatchSet extract_patches(std::span<const double> image, std::size_t image_side, std::size_t patch_side);
[[nodiscard]] PatchSet extract_patches(std::span<const std::uint8_t> image, std::size_t image_side, std::size_t patch_side);

/// Feature vectors for a whole image set. Degenerate images get an all-zero
/// row and valid = 0 instead of raising.
struct FeatureBatch {
    Matrix vectors;
    std::vector<std::uint8_t> valid;
};

[[nodiscard]] FeatureBatch raw_features(const ImageSet& images);
[[nodiscard]] FeatureBatch fft_features(const ImageSet& images);
/// Dispatches on the regime; PATCH is not a per-image vector regime and is rejected.
[[nodiscard]] FeatureBatch image_features(const ImageSet& images, FeatureMode mode);

}  // namespace kmkc
