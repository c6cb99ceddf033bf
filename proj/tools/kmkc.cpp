// kmkc: prototype extraction, training, evaluation and experiment sweeps
// for the K-means least-squares kernel classifier.

#include "kmkc/error.hpp"
#include "kmkc/experiment.hpp"
#include "kmkc/features.hpp"
#include "kmkc/kmeans.hpp"
#include "kmkc/model_io.hpp"
#include "kmkc/parallel.hpp"
#include "kmkc/patch_classifier.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

struct TrainArgs {
    std::string mode = "raw";
    std::size_t patch_size = 25;
    std::size_t q = 100;
    double epsilon = 1e-6;
    double tau = 1e-6;
    std::size_t max_iter = 300;
    std::string kernel = "poly:4";
    std::uint64_t seed = 1;
    std::string train_images;
    std::string train_labels;
    std::size_t train_limit = 0;
    std::size_t classes = 0;
    bool big = false;
    unsigned threads = 1;
};

void add_train_options(CLI::App* cmd, TrainArgs& a) {
    cmd->add_option("--mode", a.mode, "Feature regime")->check(CLI::IsMember({"raw", "rawfft", "patch"}));
    cmd->add_option("--patch-size", a.patch_size, "Patch side for --mode patch");
    cmd->add_option("--q", a.q, "Prototypes per class")->check(CLI::PositiveNumber);
    cmd->add_option("--epsilon", a.epsilon, "Regularization added to the kernel diagonal");
    cmd->add_option("--tau", a.tau, "K-means alignment threshold");
    cmd->add_option("--max-iter", a.max_iter, "K-means iteration cap");
    cmd->add_option("--kernel", a.kernel, "poly:<degree> or gauss:<gamma>");
    cmd->add_option("--seed", a.seed, "RNG seed");
    cmd->add_option("--train-images", a.train_images, "IDX image file (optionally gzipped)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--train-labels", a.train_labels, "IDX label file (optionally gzipped)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--train-limit", a.train_limit, "Use only the first N training images (0 = all)");
    cmd->add_option("--classes", a.classes, "Force the class count (0 = max label + 1)");
    cmd->add_flag("--big", a.big, "Allow kernel systems above the desk-scale size limit");
    cmd->add_option("--threads", a.threads, "Worker threads (1 = sequential reference mode)");
}

kmkc::ModelSettings settings_from(const TrainArgs& a) {
    kmkc::ModelSettings s;
    s.regime.mode = kmkc::parse_feature_mode(a.mode);
    if (s.regime.mode == kmkc::FeatureMode::patch) {
        s.regime.patch_side = a.patch_size;
    }
    s.q = a.q;
    s.epsilon = a.epsilon;
    s.tau = a.tau;
    s.max_iterations = a.max_iter;
    s.kernel = kmkc::parse_kernel_spec(a.kernel);
    s.allow_big = a.big;
    return s;
}

std::pair<kmkc::ImageSet, kmkc::LabelSet> load_training(const TrainArgs& a) {
    const std::optional<std::size_t> classes = a.classes ? std::optional(a.classes) : std::nullopt;
    kmkc::ImageSet images = kmkc::load_idx_images(a.train_images);
    kmkc::LabelSet labels = kmkc::load_idx_labels(a.train_labels, classes);
    if (images.count != labels.count()) {
        throw kmkc::DimensionError("training images and labels differ in count");
    }
    if (a.train_limit != 0) {
        images = images.head(a.train_limit);
        labels = labels.head(a.train_limit);
    }
    return {std::move(images), std::move(labels)};
}

int run_fit(const TrainArgs& a, const std::string& out) {
    kmkc::set_thread_count(a.threads);
    const auto [images, labels] = load_training(a);
    const auto settings = settings_from(a);
    const auto t0 = std::chrono::steady_clock::now();
    const kmkc::FitOutcome fitted = kmkc::fit_model(images, labels, settings, a.seed);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    kmkc::save_model(out, fitted.model);
    fmt::print("trained {} model: {} prototypes of dimension {}, {} classes\n",
               kmkc::regime_label(settings.regime), fitted.model.model.support.rows(), fitted.model.model.dimension(),
               fitted.model.model.classes());
    fmt::print("kmeans iterations {} | solver residual {:.3e} | {:.2f}s\n", fitted.kmeans_iterations, fitted.residual,
               seconds);
    fmt::print("wrote {}\n", out);
    return 0;
}

int run_eval(const std::string& model_path, const std::string& images_path, const std::string& labels_path,
             std::size_t limit, unsigned threads) {
    kmkc::set_thread_count(threads);
    const kmkc::StoredModel model = kmkc::load_model(model_path);
    kmkc::ImageSet images = kmkc::load_idx_images(images_path);
    kmkc::LabelSet labels = kmkc::load_idx_labels(labels_path, model.model.classes());
    if (limit != 0) {
        images = images.head(limit);
        labels = labels.head(limit);
    }
    const auto predicted = kmkc::predict(model, images);
    const double eta = kmkc::error_rate(predicted, labels.labels);
    const auto unclassified = std::count(predicted.begin(), predicted.end(), -1);
    fmt::print("{} model, {} test images: error {:.2f}% ({} unclassifiable)\n", kmkc::regime_label(model.regime),
               labels.count(), eta, unclassified);
    return 0;
}

int run_experiment_cmd(const std::string& config_path, const std::string& csv_path, const std::string& summary_path,
                       bool big, std::optional<unsigned> threads) {
    kmkc::ExperimentConfig cfg = kmkc::load_experiment_config(config_path);
    cfg.allow_big = cfg.allow_big || big;
    if (threads) {
        cfg.threads = *threads;
    }
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) {
        throw kmkc::Error("cannot write " + csv_path);
    }
    const kmkc::ExperimentReport report =
        kmkc::run_experiment(cfg, &csv, [](const std::string& line) { std::cerr << line << '\n'; });
    const auto summary = report.summary();
    if (!summary_path.empty()) {
        std::ofstream out(summary_path, std::ios::trunc);
        if (!out) {
            throw kmkc::Error("cannot write " + summary_path);
        }
        kmkc::write_summary_csv(out, summary);
    }
    for (const auto& s : summary) {
        fmt::print("{} Q={}: mean error {:.3f}% (sd {:.3f}, {} runs)\n", s.mode, s.q, s.mean_error, s.stddev, s.runs);
    }
    const bool failed = std::any_of(report.rows.begin(), report.rows.end(), [](const auto& r) { return !r.ok(); });
    return failed ? 2 : 0;
}

int run_kmeans(const TrainArgs& a, std::size_t class_id, const std::string& out) {
    kmkc::set_thread_count(a.threads);
    const auto [images, labels] = load_training(a);
    const auto settings = settings_from(a);
    if (class_id >= labels.classes) {
        throw kmkc::InvalidArgument("class " + std::to_string(class_id) + " out of range");
    }
    kmkc::ImageSet subset;
    subset.rows = images.rows;
    subset.cols = images.cols;
    for (std::size_t i = 0; i < images.count; ++i) {
        if (labels.labels[i] == class_id) {
            const auto img = images.image(i);
            subset.pixels.insert(subset.pixels.end(), img.begin(), img.end());
            ++subset.count;
        }
    }
    kmkc::Matrix samples;
    if (settings.regime.mode == kmkc::FeatureMode::patch) {
        std::vector<double> pooled;
        std::size_t rows = 0;
        for (std::size_t i = 0; i < subset.count; ++i) {
            const auto set = kmkc::extract_patches(subset.image(i), subset.rows, settings.regime.patch_side);
            for (std::size_t p = 0; p < set.count(); ++p) {
                if (set.valid[p]) {
                    pooled.insert(pooled.end(), set.patches.row(p).begin(), set.patches.row(p).end());
                    ++rows;
                }
            }
        }
        samples = kmkc::Matrix::from_values(rows, settings.regime.patch_side * settings.regime.patch_side, std::move(pooled));
    } else {
        const auto batch = kmkc::image_features(subset, settings.regime.mode);
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < batch.valid.size(); ++i) {
            if (batch.valid[i]) {
                keep.push_back(i);
            }
        }
        samples = batch.vectors.gather_rows(keep);
    }
    // Same stream a full training run uses for this class.
    kmkc::Rng rng = kmkc::Rng(a.seed).fork(class_id);
    const kmkc::CentroidSet set = kmkc::fit(samples, {settings.q, settings.tau, settings.max_iterations}, rng, class_id);
    fmt::print("class {}: {} samples of dimension {}, Q={}\n", class_id, samples.rows(), samples.cols(), settings.q);
    fmt::print("converged in {} iterations, final delta {:.3e}, {} empty-cluster re-seeds\n", set.iterations,
               set.final_delta, set.reseeded);
    for (std::size_t i = 0; i < set.delta_trace.size(); ++i) {
        fmt::print("  iter {:4d}  delta {:.6e}\n", i + 1, set.delta_trace[i]);
    }
    if (!out.empty()) {
        std::ofstream f(out, std::ios::trunc);
        if (!f) {
            throw kmkc::Error("cannot write " + out);
        }
        for (std::size_t q = 0; q < set.centroids.rows(); ++q) {
            const auto row = set.centroids.row(q);
            f << fmt::format("{}", fmt::join(row.begin(), row.end(), ",")) << '\n';
        }
        fmt::print("wrote {} centroids to {}\n", set.centroids.rows(), out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"K-means prototype extraction + least-squares kernel classification"};
    app.require_subcommand(1);

    TrainArgs fit_args;
    std::string fit_out = "model.kkcm";
    auto* fit_cmd = app.add_subcommand("fit", "Extract prototypes, train the classifier and save it");
    add_train_options(fit_cmd, fit_args);
    fit_cmd->add_option("--out", fit_out, "Model file to write");

    std::string eval_model;
    std::string eval_images;
    std::string eval_labels;
    std::size_t eval_limit = 0;
    unsigned eval_threads = 1;
    auto* eval_cmd = app.add_subcommand("eval", "Report the test error of a saved model");
    eval_cmd->add_option("--model", eval_model, "Model file")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--test-images", eval_images, "IDX image file")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--test-labels", eval_labels, "IDX label file")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--test-limit", eval_limit, "Use only the first N test images (0 = all)");
    eval_cmd->add_option("--threads", eval_threads, "Worker threads");

    std::string exp_config;
    std::string exp_csv = "report.csv";
    std::string exp_summary;
    bool exp_big = false;
    std::optional<unsigned> exp_threads;
    auto* exp_cmd = app.add_subcommand("experiment", "Sweep Q over several seeds and write CSV reports");
    exp_cmd->add_option("--config", exp_config, "key=value config file")->required()->check(CLI::ExistingFile);
    exp_cmd->add_option("--csv", exp_csv, "Per-run report");
    exp_cmd->add_option("--summary", exp_summary, "Per-(mode, Q) mean/stddev report");
    exp_cmd->add_flag("--big", exp_big, "Allow kernel systems above the desk-scale size limit");
    exp_cmd->add_option("--threads", exp_threads, "Worker threads (overrides the config)");

    TrainArgs km_args;
    std::size_t km_class = 0;
    std::string km_out;
    auto* km_cmd = app.add_subcommand("kmeans", "Extract the prototypes of one class only");
    add_train_options(km_cmd, km_args);
    km_cmd->add_option("--class", km_class, "Class to cluster")->required();
    km_cmd->add_option("--out", km_out, "CSV file for the centroid rows");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*fit_cmd) {
            return run_fit(fit_args, fit_out);
        }
        if (*eval_cmd) {
            return run_eval(eval_model, eval_images, eval_labels, eval_limit, eval_threads);
        }
        if (*exp_cmd) {
            return run_experiment_cmd(exp_config, exp_csv, exp_summary, exp_big, exp_threads);
        }
        if (*km_cmd) {
            return run_kmeans(km_args, km_class, km_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
