#include "kmkc/patch_classifier.hpp"

#include "kmkc/error.hpp"
#include "kmkc/features.hpp"

#include <algorithm>
#include <string>

namespace kmkc {

namespace {

constexpr std::size_t kImagesPerBlock = 256;

void check_square(const ImageSet& images, std::size_t patch_side) {
    if (images.rows != images.cols) {
        throw DimensionError("patch classifier needs square images, got " + std::to_string(images.rows) + "x" +
                             std::to_string(images.cols));
    }
    if (patch_side == 0 || patch_side > images.rows) {
        throw InvalidArgument("patch side " + std::to_string(patch_side) + " must be in [1, " +
                              std::to_string(images.rows) + "]");
    }
}

Matrix pooled_class_patches(const ImageSet& images, std::span<const std::size_t> members, std::size_t patch_side) {
    const std::size_t side = images.rows;
    const std::size_t per_image = patches_per_image(side, patch_side);
    Matrix pool(members.size() * per_image, patch_side * patch_side);
    std::size_t used = 0;
    for (std::size_t idx : members) {
        const PatchSet set = extract_patches(images.image(idx), side, patch_side);
        for (std::size_t p = 0; p < set.count(); ++p) {
            if (set.valid[p]) {
                const auto src = set.patches.row(p);
                std::copy(src.begin(), src.end(), pool.row(used++).begin());
            }
        }
    }
    if (used == pool.rows()) {
        return pool;
    }
    Matrix compact(used, pool.cols());
    std::copy_n(pool.data(), used * pool.cols(), compact.data());
    return compact;
}

}  // namespace

PatchTrainResult train_patch_model(const ImageSet& images, const LabelSet& labels, const PatchTrainingOptions& options,
                                   const Rng& rng) {
    check_square(images, options.patch_side);
    if (labels.count() != images.count) {
        throw DimensionError("train_patch_model: " + std::to_string(images.count) + " images, " +
                             std::to_string(labels.count()) + " labels");
    }
    const std::size_t classes = labels.classes;
    if (classes == 0) {
        throw InvalidArgument("train_patch_model: no classes");
    }
    std::vector<std::vector<std::size_t>> members(classes);
    for (std::size_t i = 0; i < labels.count(); ++i) {
        members.at(labels.labels[i]).push_back(i);
    }

    PatchTrainResult result;
    std::vector<CentroidSet> sets(classes);
    for (std::size_t k = 0; k < classes; ++k) {
        const Matrix pool = pooled_class_patches(images, members[k], options.patch_side);
        result.patches_per_class.push_back(pool.rows());
        if (pool.rows() < options.kmeans.clusters) {
            throw InvalidArgument("train_patch_model: class " + std::to_string(k) + " has " +
                                  std::to_string(pool.rows()) + " valid patches, fewer than Q = " +
                                  std::to_string(options.kmeans.clusters));
        }
        Rng stream = rng.fork(k);
        sets[k] = fit(pool, options.kmeans, stream, k);
        result.kmeans_iterations += sets[k].iterations;
    }
    const PrototypeTrainingSet prototypes = stack_prototypes(std::move(sets), classes);
    TrainResult trained = train(prototypes, options.kernel, options.epsilon);
    result.residual = trained.residual;
    result.model = PatchModel{std::move(trained.model), options.patch_side, images.rows};
    return result;
}

VoteResult tally_votes(const Matrix& patch_scores, std::span<const std::uint8_t> valid) {
    if (valid.size() != patch_scores.rows()) {
        throw DimensionError("tally_votes: mask length does not match patch count");
    }
    const std::size_t k = patch_scores.cols();
    VoteResult r{std::vector<std::size_t>(k, 0), std::vector<double>(k, 0.0), std::nullopt, 0};
    for (std::size_t p = 0; p < patch_scores.rows(); ++p) {
        if (!valid[p]) {
            continue;
        }
        const auto s = patch_scores.row(p);
        ++r.votes[argmax(s)];
        for (std::size_t j = 0; j < k; ++j) {
            r.score_sums[j] += s[j];
        }
        ++r.valid_patches;
    }
    if (r.valid_patches == 0) {
        return r;
    }
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
        if (r.votes[j] > r.votes[best] || (r.votes[j] == r.votes[best] && r.score_sums[j] > r.score_sums[best])) {
            best = j;
        }
    }
    r.winner = static_cast<std::uint32_t>(best);
    return r;
}

VoteResult classify_by_vote(const PatchModel& model, std::span<const std::uint8_t> image) {
    if (image.size() != model.image_side * model.image_side) {
        throw DimensionError("classify_by_vote: image has " + std::to_string(image.size()) + " pixels, model expects " +
                             std::to_string(model.image_side) + "x" + std::to_string(model.image_side));
    }
    const PatchSet set = extract_patches(image, model.image_side, model.patch_side);
    VoteResult r = tally_votes(decision_scores(model.inner, set.patches), set.valid);
    if (!r.winner) {
        throw Unclassifiable("classify_by_vote: every patch is degenerate");
    }
    return r;
}

std::vector<VoteResult> classify_by_vote(const PatchModel& model, const ImageSet& images) {
    if (images.rows != model.image_side || images.cols != model.image_side) {
        throw DimensionError("classify_by_vote: images are " + std::to_string(images.rows) + "x" +
                             std::to_string(images.cols) + ", model expects side " + std::to_string(model.image_side));
    }
    const std::size_t per_image = patches_per_image(model.image_side, model.patch_side);
    const std::size_t dim = model.patch_side * model.patch_side;
    std::vector<VoteResult> out;
    out.reserve(images.count);
    for (std::size_t start = 0; start < images.count; start += kImagesPerBlock) {
        const std::size_t n = std::min(kImagesPerBlock, images.count - start);
        Matrix patches(n * per_image, dim);
        std::vector<std::uint8_t> valid(n * per_image);
        for (std::size_t i = 0; i < n; ++i) {
            const PatchSet set = extract_patches(images.image(start + i), model.image_side, model.patch_side);
            std::copy_n(set.patches.data(), set.patches.size(), patches.row(i * per_image).data());
            std::copy(set.valid.begin(), set.valid.end(), valid.begin() + static_cast<std::ptrdiff_t>(i * per_image));
        }
        const Matrix scores = decision_scores(model.inner, patches);
        for (std::size_t i = 0; i < n; ++i) {
            Matrix block(per_image, scores.cols());
            std::copy_n(scores.row(i * per_image).data(), block.size(), block.data());
            out.push_back(tally_votes(block, std::span(valid).subspan(i * per_image, per_image)));
        }
    }
    return out;
}

}  // namespace kmkc
