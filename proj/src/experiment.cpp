#include "kmkc/experiment.hpp"

#include "kmkc/error.hpp"
#include "kmkc/kmeans.hpp"
#include "kmkc/parallel.hpp"
#include "kmkc/patch_classifier.hpp"
#include "kmkc/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace kmkc {

namespace {

std::size_t square_side(const ImageSet& images) {
    if (images.rows != images.cols) {
        throw DimensionError("expected square images, got " + std::to_string(images.rows) + "x" +
                             std::to_string(images.cols));
    }
    return images.rows;
}

void check_system_size(const ModelSettings& settings, std::size_t classes) {
    const std::size_t system = classes * settings.q + 1;
    if (system > kBigSystemThreshold && !settings.allow_big) {
        throw InvalidArgument("Q = " + std::to_string(settings.q) + " gives a " + std::to_string(system) +
                              "-square kernel system; pass --big (or big=true) to allow systems above " +
                              std::to_string(kBigSystemThreshold));
    }
}

KMeansOptions kmeans_options(const ModelSettings& settings) {
    return {settings.q, settings.tau, settings.max_iterations};
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size() || value.front() == '-') {
            throw std::invalid_argument(value);
        }
        return static_cast<std::size_t>(v);
    } catch (const std::logic_error&) {
        throw InvalidArgument("config: '" + key + "' needs a non-negative integer, got '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::logic_error&) {
        throw InvalidArgument("config: '" + key + "' needs a number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "on" || value == "yes" || value == "1") {
        return true;
    }
    if (value == "false" || value == "off" || value == "no" || value == "0") {
        return false;
    }
    throw InvalidArgument("config: '" + key + "' needs on/off, got '" + value + "'");
}

std::string fmt_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    return fmt::format("{}", v);
}

}  // namespace

MnistData load_mnist(const std::filesystem::path& train_images, const std::filesystem::path& train_labels,
                     const std::filesystem::path& test_images, const std::filesystem::path& test_labels,
                     std::size_t train_limit, std::size_t test_limit, std::optional<std::size_t> classes) {
    MnistData d;
    d.train_images = load_idx_images(train_images);
    d.train_labels = load_idx_labels(train_labels, classes);
    d.test_images = load_idx_images(test_images);
    d.test_labels = load_idx_labels(test_labels, classes);
    if (d.train_images.count != d.train_labels.count() || d.test_images.count != d.test_labels.count()) {
        throw DimensionError("image and label files disagree on the sample count");
    }
    if (train_limit != 0) {
        d.train_images = d.train_images.head(train_limit);
        d.train_labels = d.train_labels.head(train_limit);
    }
    if (test_limit != 0) {
        d.test_images = d.test_images.head(test_limit);
        d.test_labels = d.test_labels.head(test_limit);
    }
    const std::size_t k = classes.value_or(std::max(d.train_labels.classes, d.test_labels.classes));
    d.train_labels.classes = k;
    d.test_labels.classes = k;
    return d;
}

FitOutcome fit_model(const FeatureBatch& features, const LabelSet& labels, std::size_t image_side,
                     const ModelSettings& settings, std::uint64_t seed) {
    if (settings.regime.mode == FeatureMode::patch) {
        throw InvalidArgument("fit_model: the patch regime trains from images, not feature vectors");
    }
    check_system_size(settings, labels.classes);
    const Rng rng(seed);
    const PrototypeTrainingSet prototypes = build_prototype_training_set(
        features.vectors, labels.labels, labels.classes, kmeans_options(settings), rng, features.valid);
    TrainResult trained = train(prototypes, settings.kernel, settings.epsilon);
    FitOutcome out;
    out.model.regime = settings.regime;
    out.model.image_side = image_side;
    out.model.model = std::move(trained.model);
    out.residual = trained.residual;
    out.kmeans_iterations = prototypes.total_iterations();
    return out;
}

FitOutcome fit_model(const ImageSet& images, const LabelSet& labels, const ModelSettings& settings, std::uint64_t seed) {
    const std::size_t side = square_side(images);
    if (settings.regime.mode != FeatureMode::patch) {
        return fit_model(image_features(images, settings.regime.mode), labels, side, settings, seed);
    }
    check_system_size(settings, labels.classes);
    PatchTrainingOptions options;
    options.patch_side = settings.regime.patch_side;
    options.kmeans = kmeans_options(settings);
    options.kernel = settings.kernel;
    options.epsilon = settings.epsilon;
    PatchTrainResult trained = train_patch_model(images, labels, options, Rng(seed));
    return {store_patch_model(trained.model), trained.residual, trained.kmeans_iterations};
}

std::vector<std::int32_t> predict(const StoredModel& model, const FeatureBatch& features) {
    if (model.regime.mode == FeatureMode::patch) {
        throw InvalidArgument("predict: patch models classify images, not feature vectors");
    }
    const auto classes = classify(model.model, features.vectors);
    std::vector<std::int32_t> out(classes.size());
    for (std::size_t i = 0; i < classes.size(); ++i) {
        out[i] = features.valid[i] ? static_cast<std::int32_t>(classes[i]) : -1;
    }
    return out;
}

std::vector<std::int32_t> predict(const StoredModel& model, const ImageSet& images) {
    const std::size_t side = square_side(images);
    if (side != model.image_side) {
        throw DimensionError("predict: images have side " + std::to_string(side) + ", model expects " +
                             std::to_string(model.image_side));
    }
    if (model.regime.mode != FeatureMode::patch) {
        return predict(model, image_features(images, model.regime.mode));
    }
    const auto votes = classify_by_vote(as_patch_model(model), images);
    std::vector<std::int32_t> out(votes.size());
    for (std::size_t i = 0; i < votes.size(); ++i) {
        out[i] = votes[i].winner ? static_cast<std::int32_t>(*votes[i].winner) : -1;
    }
    return out;
}

double error_rate(std::span<const std::int32_t> predicted, std::span<const std::uint32_t> truth) {
    if (predicted.size() != truth.size()) {
        throw DimensionError("error_rate: " + std::to_string(predicted.size()) + " predictions for " +
                             std::to_string(truth.size()) + " labels");
    }
    if (truth.empty()) {
        throw InvalidArgument("error_rate: empty test set");
    }
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (predicted[i] < 0 || static_cast<std::uint32_t>(predicted[i]) != truth[i]) {
            ++wrong;
        }
    }
    return 100.0 * static_cast<double>(wrong) / static_cast<double>(truth.size());
}

ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir) {
    ExperimentConfig cfg;
    std::size_t patch_side = 25;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    auto resolve = [&](const std::string& v) {
        std::filesystem::path p(v);
        return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const std::string body = trim(std::string_view(line).substr(0, hash));
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key == "mode") {
            cfg.regime.mode = parse_feature_mode(value);
        } else if (key == "patch_size") {
            patch_side = parse_size(key, value);
        } else if (key == "q") {
            cfg.q_values.clear();
            std::istringstream items(value);
            std::string item;
            while (std::getline(items, item, ',')) {
                const std::size_t q = parse_size(key, trim(item));
                if (q == 0) {
                    throw InvalidArgument("config: Q values must be positive");
                }
                cfg.q_values.push_back(q);
            }
            if (cfg.q_values.empty()) {
                throw InvalidArgument("config: empty Q list");
            }
        } else if (key == "runs") {
            cfg.runs = parse_size(key, value);
        } else if (key == "seed") {
            cfg.seed = parse_size(key, value);
        } else if (key == "epsilon") {
            cfg.epsilon = parse_double(key, value);
        } else if (key == "tau") {
            cfg.tau = parse_double(key, value);
        } else if (key == "max_iter") {
            cfg.max_iterations = parse_size(key, value);
        } else if (key == "kernel") {
            cfg.kernel = parse_kernel_spec(value);
        } else if (key == "train_images") {
            cfg.train_images = resolve(value);
        } else if (key == "train_labels") {
            cfg.train_labels = resolve(value);
        } else if (key == "test_images") {
            cfg.test_images = resolve(value);
        } else if (key == "test_labels") {
            cfg.test_labels = resolve(value);
        } else if (key == "train_limit") {
            cfg.train_limit = parse_size(key, value);
        } else if (key == "test_limit") {
            cfg.test_limit = parse_size(key, value);
        } else if (key == "classes") {
            cfg.classes = parse_size(key, value);
        } else if (key == "timing") {
            cfg.record_timing = parse_bool(key, value);
        } else if (key == "big") {
            cfg.allow_big = parse_bool(key, value);
        } else if (key == "threads") {
            cfg.threads = static_cast<unsigned>(parse_size(key, value));
        } else {
            throw InvalidArgument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    if (cfg.regime.mode == FeatureMode::patch) {
        cfg.regime.patch_side = patch_side;
    }
    if (cfg.runs == 0) {
        throw InvalidArgument("config: runs must be at least 1");
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open config " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_experiment_config(text.str(), path.parent_path());
}

std::string regime_label(const FeatureRegime& regime) {
    if (regime.mode == FeatureMode::patch) {
        return "patch" + std::to_string(regime.patch_side);
    }
    return to_string(regime.mode);
}

std::string format_report_row(const ExperimentRow& row) {
    return fmt::format("{},{},{},{},{},{},{},{}", row.mode, row.q, row.run, row.seed,
                       row.ok() ? fmt_double(row.error_pct) : std::string("nan"), fmt_double(row.train_seconds),
                       row.kmeans_iterations, row.ok() ? fmt_double(row.residual) : std::string("nan"));
}

std::string format_summary_row(const SummaryRow& row) {
    return fmt::format("{},{},{},{},{}", row.mode, row.q, row.runs, fmt_double(row.mean_error), fmt_double(row.stddev));
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
    out << kSummaryHeader << '\n';
    for (const auto& r : rows) {
        out << format_summary_row(r) << '\n';
    }
}

std::vector<SummaryRow> ExperimentReport::summary() const {
    // Keyed by (mode, q) in first-appearance order.
    std::vector<SummaryRow> out;
    std::vector<std::vector<double>> errors;
    for (const auto& row : rows) {
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const SummaryRow& s) { return s.mode == row.mode && s.q == row.q; });
        if (it == out.end()) {
            out.push_back({row.mode, row.q, 0, 0.0, 0.0});
            errors.emplace_back();
            it = out.end() - 1;
        }
        if (row.ok()) {
            errors[static_cast<std::size_t>(it - out.begin())].push_back(row.error_pct);
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto& e = errors[i];
        out[i].runs = e.size();
        if (e.empty()) {
            out[i].mean_error = std::numeric_limits<double>::quiet_NaN();
            out[i].stddev = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        double sum = 0.0;
        for (double v : e) {
            sum += v;
        }
        const double mean = sum / static_cast<double>(e.size());
        double ss = 0.0;
        for (double v : e) {
            ss += (v - mean) * (v - mean);
        }
        out[i].mean_error = mean;
        out[i].stddev = e.size() > 1 ? std::sqrt(ss / static_cast<double>(e.size() - 1)) : 0.0;
    }
    return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config, std::ostream* csv,
                                const std::function<void(const std::string&)>& progress) {
    const MnistData data = load_mnist(config.train_images, config.train_labels, config.test_images,
                                      config.test_labels, config.train_limit, config.test_limit, config.classes);
    return run_experiment(config, data, csv, progress);
}

ExperimentReport run_experiment(const ExperimentConfig& config, const MnistData& data, std::ostream* csv,
                                const std::function<void(const std::string&)>& progress) {
    set_thread_count(config.threads);
    const std::size_t side = square_side(data.train_images);
    const bool vector_regime = config.regime.mode != FeatureMode::patch;
    FeatureBatch train_features;
    FeatureBatch test_features;
    if (vector_regime) {
        train_features = image_features(data.train_images, config.regime.mode);
        test_features = image_features(data.test_images, config.regime.mode);
    }
    if (csv) {
        *csv << kReportHeader << '\n' << std::flush;
    }
    ExperimentReport report;
    const std::string mode = regime_label(config.regime);
    for (const std::size_t q : config.q_values) {
        ModelSettings settings{config.regime, q, config.epsilon, config.tau, config.max_iterations, config.kernel,
                               config.allow_big};
        for (std::size_t run = 0; run < config.runs; ++run) {
            ExperimentRow row;
            row.mode = mode;
            row.q = q;
            row.run = run;
            row.seed = config.seed + run;
            try {
                const auto t0 = std::chrono::steady_clock::now();
                const FitOutcome fitted = vector_regime
                                              ? fit_model(train_features, data.train_labels, side, settings, row.seed)
                                              : fit_model(data.train_images, data.train_labels, settings, row.seed);
                const auto t1 = std::chrono::steady_clock::now();
                const auto predicted =
                    vector_regime ? predict(fitted.model, test_features) : predict(fitted.model, data.test_images);
                row.error_pct = error_rate(predicted, data.test_labels.labels);
                row.train_seconds = config.record_timing ? std::chrono::duration<double>(t1 - t0).count() : 0.0;
                row.kmeans_iterations = fitted.kmeans_iterations;
                row.residual = fitted.residual;
            } catch (const std::exception& e) {
                row.failure = e.what();
                row.error_pct = std::numeric_limits<double>::quiet_NaN();
                row.residual = std::numeric_limits<double>::quiet_NaN();
            }
            if (csv) {
                *csv << format_report_row(row) << '\n' << std::flush;
            }
            if (progress) {
                progress(row.ok() ? fmt::format("{} q={} run={} seed={} error={:.2f}% iters={} residual={:.2e} "
                                                "train={:.1f}s",
                                                row.mode, row.q, row.run, row.seed, row.error_pct,
                                                row.kmeans_iterations, row.residual, row.train_seconds)
                                  : fmt::format("{} q={} run={} seed={} FAILED: {}", row.mode, row.q, row.run,
                                                row.seed, row.failure));
            }
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

}  // namespace kmkc
