#pragma once

#include "kmkc/features.hpp"
#include "kmkc/lssvm.hpp"
#include "kmkc/mnist_io.hpp"
#include "kmkc/model_io.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kmkc {

/// Bordered systems larger than this (K*Q + 1 rows) need an explicit opt-in.
inline constexpr std::size_t kBigSystemThreshold = 15001;

/// Everything needed to train one classifier.
struct ModelSettings {
    FeatureRegime regime;
    std::size_t q = 100;
    double epsilon = 1e-6;
    double tau = 1e-6;
    std::size_t max_iterations = 300;
    KernelSpec kernel;
    bool allow_big = false;
};

struct FitOutcome {
    StoredModel model;
    double residual = 0.0;
    std::size_t kmeans_iterations = 0;
};

/// Train and test splits with a class count shared by both.
struct MnistData {
    ImageSet train_images;
    LabelSet train_labels;
    ImageSet test_images;
    LabelSet test_labels;
};

/// Loads the four IDX files; `limit` of 0 keeps every sample. The class
/// count is `classes` when given, otherwise 1 + the largest label of either split.
[[nodiscard]] MnistData load_mnist(const std::filesystem::path& train_images, const std::filesystem::path& train_labels,
                                   const std::filesystem::path& test_images, const std::filesystem::path& test_labels,
                                   std::size_t train_limit = 0, std::size_t test_limit = 0,
                                   std::optional<std::size_t> classes = std::nullopt);

/// Trains a classifier for any regime; the RNG stream is Rng(seed).
[[nodiscard]] FitOutcome fit_model(const ImageSet& images, const LabelSet& labels, const ModelSettings& settings,
                                   std::uint64_t seed);
/// Vector regimes (RAW, RAW_FFT) on precomputed features.
[[nodiscard]] FitOutcome fit_model(const FeatureBatch& features, const LabelSet& labels, std::size_t image_side,
                                   const ModelSettings& settings, std::uint64_t seed);

/// Predicted class per image, -1 where the image could not be classified.
[[nodiscard]] std::vector<std::int32_t> predict(const StoredModel& model, const ImageSet& images);
/// Vector regimes on precomputed features.
[[nodiscard]] std::vector<std::int32_t> predict(const StoredModel& model, const FeatureBatch& features);

/// Percentage of misclassified samples; -1 predictions count as wrong.
[[nodiscard]] double error_rate(std::span<const std::int32_t> predicted, std::span<const std::uint32_t> truth);

struct ExperimentConfig {
    FeatureRegime regime;
    std::vector<std::size_t> q_values{100};
    std::size_t runs = 5;
    std::uint64_t seed = 1;
    double epsilon = 1e-6;
    double tau = 1e-6;
    std::size_t max_iterations = 300;
    KernelSpec kernel;
    std::filesystem::path train_images;
    std::filesystem::path train_labels;
    std::filesystem::path test_images;
    std::filesystem::path test_labels;
    std::size_t train_limit = 0;
    std::size_t test_limit = 0;
    std::optional<std::size_t> classes;
    bool record_timing = true;  // when false, train_seconds is written as 0
    bool allow_big = false;
    unsigned threads = 1;
};

/// Parses the key=value config format (one pair per line, '#' comments).
/// Relative paths are resolved against `base_dir`.
[[nodiscard]] ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir = {});
[[nodiscard]] ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct ExperimentRow {
    std::string mode;
    std::size_t q = 0;
    std::size_t run = 0;
    std::uint64_t seed = 0;
    double error_pct = 0.0;
    double train_seconds = 0.0;
    std::size_t kmeans_iterations = 0;
    double residual = 0.0;
    std::string failure;  // empty on success

    [[nodiscard]] bool ok() const noexcept { return failure.empty(); }
};

struct SummaryRow {
    std::string mode;
    std::size_t q = 0;
    std::size_t runs = 0;  // successful runs aggregated
    double mean_error = 0.0;
    double stddev = 0.0;  // sample standard deviation, 0 for a single run
};

struct ExperimentReport {
    std::vector<ExperimentRow> rows;

    [[nodiscard]] std::vector<SummaryRow> summary() const;
};

[[nodiscard]] std::string regime_label(const FeatureRegime& regime);

inline constexpr std::string_view kReportHeader = "mode,q,run,seed,error_pct,train_seconds,kmeans_iters,residual";
inline constexpr std::string_view kSummaryHeader = "mode,q,runs,mean_error,stddev";

[[nodiscard]] std::string format_report_row(const ExperimentRow& row);
[[nodiscard]] std::string format_summary_row(const SummaryRow& row);
void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);

/// Runs every (Q, run) cell with seed = config.seed + run. Rows are appended
/// to `csv` (header first) as soon as each cell finishes; a failing cell is
/// recorded with error_pct = nan and the sweep continues. `progress`, when
/// set, receives one line per cell.
ExperimentReport run_experiment(const ExperimentConfig& config, std::ostream* csv = nullptr,
                                const std::function<void(const std::string&)>& progress = {});
/// Same, on data that is already loaded.
ExperimentReport run_experiment(const ExperimentConfig& config, const MnistData& data, std::ostream* csv = nullptr,
                                const std::function<void(const std::string&)>& progress = {});

}  // namespace kmkc
