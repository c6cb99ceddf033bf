#pragma once

#include "kmkc/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace kmkc {

/// Grayscale images as stored in an IDX3 file: image-major, then row-major
/// pixels, intensities untouched in [0, 255].
struct ImageSet {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> pixels;

    [[nodiscard]] std::size_t pixels_per_image() const noexcept { return rows * cols; }
    [[nodiscard]] std::span<const std::uint8_t> image(std::size_t i) const {
        return {pixels.data() + i * pixels_per_image(), pixels_per_image()};
    }
    /// Copy of the first `n` images (or all of them if n >= count).
    [[nodiscard]] ImageSet head(std::size_t n) const;
};

struct LabelSet {
    std::size_t classes = 0;
    std::vector<std::uint32_t> labels;

    [[nodiscard]] std::size_t count() const noexcept { return labels.size(); }
    [[nodiscard]] LabelSet head(std::size_t n) const;
};

/// Samples (one per row) with integer and one-hot labels.
struct LabeledDataset {
    Matrix samples;
    LabelSet labels;
    Matrix onehot;  // count x classes

    [[nodiscard]] std::size_t classes() const noexcept { return labels.classes; }
};

/// Reads an IDX3 image file (magic 2051). Gzip-compressed files are
/// recognized by their signature and decompressed transparently.
/// Throws FormatError on a wrong magic and TruncatedInput on a short payload.
[[nodiscard]] ImageSet load_idx_images(const std::filesystem::path& path);

/// Reads an IDX1 label file (magic 2049). The class count is `classes` when
/// given (labels >= classes are rejected), otherwise max label + 1.
[[nodiscard]] LabelSet load_idx_labels(const std::filesystem::path& path, std::optional<std::size_t> classes = std::nullopt);

/// Parses an in-memory (uncompressed) IDX3 image buffer.
[[nodiscard]] ImageSet parse_idx_images(std::span<const std::uint8_t> bytes);
/// Parses an in-memory (uncompressed) IDX1 label buffer.
[[nodiscard]] LabelSet parse_idx_labels(std::span<const std::uint8_t> bytes, std::optional<std::size_t> classes = std::nullopt);

/// Encoders used by tests and tools to produce IDX files.
[[nodiscard]] std::vector<std::uint8_t> encode_idx_images(const ImageSet& images);
[[nodiscard]] std::vector<std::uint8_t> encode_idx_labels(const LabelSet& labels);

/// Unit vector e_label of length `classes`.
[[nodiscard]] std::vector<double> one_hot(std::size_t label, std::size_t classes);

/// count x classes indicator matrix of `labels`.
[[nodiscard]] Matrix one_hot_matrix(const LabelSet& labels);

/// Pairs a sample matrix with its labels. Throws DimensionError when the row
/// count differs from the label count.
[[nodiscard]] LabeledDataset make_labeled_dataset(Matrix samples, LabelSet labels);

}  // namespace kmkc
