#pragma once

#include "kmkc/kmeans.hpp"
#include "kmkc/lssvm.hpp"
#include "kmkc/mnist_io.hpp"
#include "kmkc/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace kmkc {

/// Kernel classifier trained on per-class patch prototypes.
struct PatchModel {
    KernelModel inner;  // support dimension patch_side^2
    std::size_t patch_side = 0;
    std::size_t image_side = 0;
};

/// Outcome of the majority vote over an image's patches.
struct VoteResult {
    std::vector<std::size_t> votes;      // per class
    std::vector<double> score_sums;      // decision scores summed over the voting patches
    std::optional<std::uint32_t> winner;  // empty when every patch was degenerate
    std::size_t valid_patches = 0;
};

struct PatchTrainingOptions {
    std::size_t patch_side = 25;
    KMeansOptions kmeans;
    KernelSpec kernel;
    double epsilon = 1e-6;
};

struct PatchTrainResult {
    PatchModel model;
    double residual = 0.0;
    std::size_t kmeans_iterations = 0;          // summed over classes
    std::vector<std::size_t> patches_per_class;  // valid patches pooled per class
};

/// Pools every valid patch of every training image of class k, extracts Q
/// prototypes with fit(..., rng.fork(k), k), and trains the kernel
/// classifier on the K*Q labeled prototypes. Classes are processed one at a
/// time so only one class's patch matrix is alive.
[[nodiscard]] PatchTrainResult train_patch_model(const ImageSet& images, const LabelSet& labels,
                                                 const PatchTrainingOptions& options, const Rng& rng);

/// Majority vote from per-patch decision scores (patches x K). Each valid
/// patch votes for its argmax class; ties between vote counts go to the
/// larger summed score, then to the lower class index.
[[nodiscard]] VoteResult tally_votes(const Matrix& patch_scores, std::span<const std::uint8_t> valid);

/// Classifies one square image by its patches. Throws Unclassifiable when
/// all of them are degenerate.
[[nodiscard]] VoteResult classify_by_vote(const PatchModel& model, std::span<const std::uint8_t> image);

/// Batch form; unclassifiable images come back with an empty winner.
[[nodiscard]] std::vector<VoteResult> classify_by_vote(const PatchModel& model, const ImageSet& images);

}  // namespace kmkc
