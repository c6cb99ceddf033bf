#include "kmkc/features.hpp"

#include "kmkc/error.hpp"
#include "kmkc/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace kmkc {

namespace {

constexpr std::size_t kSpectrumChunk = 2048;

bool is_degenerate(std::span<const double> centered, double max_abs_input) {
    double sq = 0.0;
    for (double v : centered) {
        sq += v * v;
    }
    const double limit =
        static_cast<double>(centered.size()) * std::numeric_limits<double>::epsilon() * max_abs_input;
    return !(std::sqrt(sq) > limit);
}

void center(std::span<double> values) {
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    for (double& v : values) {
        v -= mean;
    }
}

void scale_to_unit(std::span<double> values) {
    double sq = 0.0;
    for (double v : values) {
        sq += v * v;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : values) {
        v *= inv;
    }
}

double max_abs(std::span<const double> values) {
    double m = 0.0;
    for (double v : values) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

// Steps after the spectrum: center f, normalize x and f, concatenate with 1/sqrt(2).
// `x` is already centered. Returns false when f is degenerate.
bool combine_raw_and_spectrum(std::span<const double> x, std::span<const double> sqrt_mag, std::span<double> out) {
    std::vector<double> f(sqrt_mag.begin(), sqrt_mag.end());
    const double f_scale = max_abs(f);
    center(f);
    if (is_degenerate(f, f_scale)) {
        return false;
    }
    std::copy(x.begin(), x.end(), out.begin());
    auto xs = out.first(x.size());
    scale_to_unit(xs);
    scale_to_unit(f);
    const double s = 1.0 / std::sqrt(2.0);
    for (double& v : xs) {
        v *= s;
    }
    std::transform(f.begin(), f.end(), out.begin() + static_cast<std::ptrdiff_t>(x.size()),
                   [s](double v) { return v * s; });
    return true;
}

template <typename Pixel>
PatchSet extract_patches_impl(std::span<const Pixel> image, std::size_t image_side, std::size_t patch_side) {
    if (patch_side == 0 || patch_side > image_side) {
        throw InvalidArgument("extract_patches: patch side " + std::to_string(patch_side) +
                              " must be in [1, " + std::to_string(image_side) + "]");
    }
    if (image.size() != image_side * image_side) {
        throw DimensionError("extract_patches: image has " + std::to_string(image.size()) + " pixels, expected " +
                             std::to_string(image_side * image_side));
    }
    const std::size_t per_axis = image_side - patch_side + 1;
    const std::size_t dim = patch_side * patch_side;
    PatchSet set;
    set.image_side = image_side;
    set.patch_side = patch_side;
    set.patches = Matrix(per_axis * per_axis, dim);
    set.valid.assign(per_axis * per_axis, 0);
    for (std::size_t i = 0; i < per_axis; ++i) {
        for (std::size_t j = 0; j < per_axis; ++j) {
            const std::size_t idx = i * per_axis + j;
            auto patch = set.patches.row(idx);
            for (std::size_t c = 0; c < patch_side; ++c) {
                for (std::size_t r = 0; r < patch_side; ++r) {
                    patch[r + c * patch_side] = static_cast<double>(image[(i + r) * image_side + (j + c)]);
                }
            }
            if (center_and_normalize(patch)) {
                set.valid[idx] = 1;
            } else {
                std::fill(patch.begin(), patch.end(), 0.0);
            }
        }
    }
    return set;
}

}  // namespace

std::string to_string(FeatureMode mode) {
    switch (mode) {
        case FeatureMode::raw: return "raw";
        case FeatureMode::raw_fft: return "rawfft";
        case FeatureMode::patch: return "patch";
    }
    return "unknown";
}

FeatureMode parse_feature_mode(std::string_view text) {
    if (text == "raw") {
        return FeatureMode::raw;
    }
    if (text == "rawfft" || text == "raw_fft") {
        return FeatureMode::raw_fft;
    }
    if (text == "patch") {
        return FeatureMode::patch;
    }
    throw InvalidArgument("unknown feature mode '" + std::string(text) + "' (expected raw, rawfft or patch)");
}

std::vector<double> vectorize_columns(std::span<const std::uint8_t> image, std::size_t rows, std::size_t cols) {
    if (image.size() != rows * cols) {
        throw DimensionError("vectorize_columns: image size does not match " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    }
    std::vector<double> out(rows * cols);
    for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t r = 0; r < rows; ++r) {
            out[r + c * rows] = static_cast<double>(image[r * cols + c]);
        }
    }
    return out;
}

bool center_and_normalize(std::span<double> values) {
    if (values.empty()) {
        return false;
    }
    const double scale = max_abs(values);
    center(values);
    if (is_degenerate(values, scale)) {
        return false;
    }
    scale_to_unit(values);
    return true;
}

std::vector<double> normalize_raw(std::span<const double> x) {
    if (x.size() < 2) {
        throw InvalidArgument("normalize_raw: need at least 2 values");
    }
    std::vector<double> out(x.begin(), x.end());
    if (!center_and_normalize(out)) {
        throw DegenerateInput("normalize_raw: input is constant");
    }
    return out;
}

std::vector<double> fft_augment(std::span<const double> x) {
    if (x.size() < 2) {
        throw InvalidArgument("fft_augment: need at least 2 values");
    }
    std::vector<double> centered(x.begin(), x.end());
    const double scale = max_abs(centered);
    center(centered);
    if (is_degenerate(centered, scale)) {
        throw DegenerateInput("fft_augment: image is constant");
    }
    const std::vector<double> sqrt_mag = dft_halfspectrum_sqrtmag(centered);
    std::vector<double> out(x.size() + sqrt_mag.size());
    if (!combine_raw_and_spectrum(centered, sqrt_mag, out)) {
        throw DegenerateInput("fft_augment: spectrum is constant after centering");
    }
    return out;
}

std::size_t PatchSet::valid_count() const noexcept {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

PatchSet extract_patches(std::span<const double> image, std::size_t image_side, std::size_t patch_side) {
    return extract_patches_impl(image, image_side, patch_side);
}

PatchSet extract_patches(std::span<const std::uint8_t> image, std::size_t image_side, std::size_t patch_side) {
    return extract_patches_impl(image, image_side, patch_side);
}

FeatureBatch raw_features(const ImageSet& images) {
    FeatureBatch batch{Matrix(images.count, images.pixels_per_image()), std::vector<std::uint8_t>(images.count, 0)};
    for (std::size_t i = 0; i < images.count; ++i) {
        const auto v = vectorize_columns(images.image(i), images.rows, images.cols);
        auto row = batch.vectors.row(i);
        std::copy(v.begin(), v.end(), row.begin());
        if (center_and_normalize(row)) {
            batch.valid[i] = 1;
        } else {
            std::fill(row.begin(), row.end(), 0.0);
        }
    }
    return batch;
}

FeatureBatch fft_features(const ImageSet& images) {
    const std::size_t m = images.pixels_per_image();
    const std::size_t bins = half_spectrum_length(m);
    FeatureBatch batch{Matrix(images.count, m + bins), std::vector<std::uint8_t>(images.count, 0)};
    if (images.count == 0) {
        return batch;
    }
    const RealDftPlan plan(m, bins);
    for (std::size_t start = 0; start < images.count; start += kSpectrumChunk) {
        const std::size_t n = std::min(kSpectrumChunk, images.count - start);
        Matrix centered(n, m);
        std::vector<std::uint8_t> ok(n, 0);
        for (std::size_t r = 0; r < n; ++r) {
            const auto v = vectorize_columns(images.image(start + r), images.rows, images.cols);
            auto row = centered.row(r);
            std::copy(v.begin(), v.end(), row.begin());
            const double scale = max_abs(row);
            center(row);
            ok[r] = is_degenerate(row, scale) ? 0 : 1;
        }
        Matrix sqrt_mag = plan.magnitudes(centered);
        for (std::size_t k = 0; k < sqrt_mag.size(); ++k) {
            sqrt_mag.data()[k] = std::sqrt(sqrt_mag.data()[k]);
        }
        for (std::size_t r = 0; r < n; ++r) {
            auto out = batch.vectors.row(start + r);
            if (ok[r] && combine_raw_and_spectrum(centered.row(r), sqrt_mag.row(r), out)) {
                batch.valid[start + r] = 1;
            } else {
                std::fill(out.begin(), out.end(), 0.0);
            }
        }
    }
    return batch;
}

FeatureBatch image_features(const ImageSet& images, FeatureMode mode) {
    switch (mode) {
        case FeatureMode::raw: return raw_features(images);
        case FeatureMode::raw_fft: return fft_features(images);
        case FeatureMode::patch: break;
    }
    throw InvalidArgument("image_features: the patch regime has no per-image feature vector");
}

}  // namespace kmkc
