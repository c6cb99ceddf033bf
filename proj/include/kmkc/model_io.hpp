#pragma once

#include "kmkc/features.hpp"
#include "kmkc/lssvm.hpp"
#include "kmkc/patch_classifier.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace kmkc {

inline constexpr std::uint32_t kModelFormatVersion = 1;
/// Version of the image-to-feature convention (column vectorization, centering,
/// unit norm). Bumped whenever trained models stop being comparable.
inline constexpr std::uint32_t kNormalizationVersion = 1;

/// A trained classifier plus what is needed to featurize its inputs.
struct StoredModel {
    FeatureRegime regime;
    std::size_t image_side = 0;  // images are image_side x image_side
    std::uint32_t normalization_version = kNormalizationVersion;
    KernelModel model;

    friend bool operator==(const StoredModel&, const StoredModel&) = default;
};

/// KKCM container, all integers and floats little-endian:
///
///   "KKCM" | u32 version | u32 feature mode | u32 patch side | u32 image side
///   | u32 normalization version | u32 kernel kind | u32 degree | f64 gamma
///   | f64 epsilon | u64 S | u64 M | u64 K
///   | f64[S*M] support | f64[S*K] weights | f64[K] bias | u32 CRC32
///
/// The CRC (zlib polynomial) covers every preceding byte.
[[nodiscard]] std::vector<std::uint8_t> serialize_model(const StoredModel& model);

/// Throws FormatError (magic, version, tags, trailing bytes), TruncatedInput
/// or IntegrityError (checksum).
[[nodiscard]] StoredModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const StoredModel& model);
[[nodiscard]] StoredModel load_model(const std::filesystem::path& path);

[[nodiscard]] StoredModel store_patch_model(const PatchModel& model);
/// Throws InvalidArgument unless the stored regime is PATCH.
[[nodiscard]] PatchModel as_patch_model(const StoredModel& stored);

}  // namespace kmkc
