#pragma once

#include "kmkc/matrix.hpp"
#include "kmkc/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace kmkc {

struct KMeansOptions {
    std::size_t clusters = 100;        // Q, prototypes per class
    double tolerance = 1e-6;           // tau, stop once delta <= tau
    std::size_t max_iterations = 300;
};

/// Sample-to-centroid assignment; the index form of the one-hot matrix R^.
struct Assignment {
    std::vector<std::size_t> cluster;  // cluster[i] in [0, clusters)
    std::size_t clusters = 0;
};

/// Prototypes of one class.
struct CentroidSet {
    Matrix centroids;  // Q x M, unit-norm rows
    std::size_t class_id = 0;
    std::size_t iterations = 0;
    double final_delta = 0.0;
    std::vector<double> delta_trace;  // delta after each iteration
    std::size_t reseeded = 0;         // empty clusters re-seeded over the run
};

struct CentroidUpdate {
    Matrix centroids;                 // Q x M, unit-norm rows
    std::vector<std::size_t> empties;  // clusters that had no members and were re-seeded
};

/// KQ labeled prototypes, class blocks contiguous in class order.
struct PrototypeTrainingSet {
    Matrix vectors;                   // (K*Q) x M
    Matrix onehot;                    // (K*Q) x K
    std::vector<std::uint32_t> labels;
    std::size_t classes = 0;
    std::vector<CentroidSet> per_class;  // centroid matrices moved into `vectors`; metadata only

    [[nodiscard]] std::size_t total_iterations() const noexcept;
};

/// Most similar centroid for every row of x: argmax_q (x Xi^T)[i][q], lowest
/// index on ties. Similarities are evaluated in row blocks through gemm.
[[nodiscard]] Assignment assign(const Matrix& x, const Matrix& centroids);

/// New centroids normalize_rows(R^T x). A cluster with no members (or whose
/// members sum to zero) is re-seeded with a uniformly drawn row of x.
[[nodiscard]] CentroidUpdate update_centroids(const Assignment& assignment, const Matrix& x, Rng& rng);

/// 1 - (1/Q) sum_q <updated_q, previous_q>, index to index.
[[nodiscard]] double alignment_delta(const Matrix& updated, const Matrix& previous);

/// Spherical K-means on unit-norm rows. Initial centroids are Q distinct
/// samples drawn from `rng`; iterates assign / update / delta until
/// delta <= tolerance or max_iterations is reached.
[[nodiscard]] CentroidSet fit(const Matrix& x, const KMeansOptions& options, Rng& rng, std::size_t class_id = 0);

/// Runs `fit` on the rows of each class, using rng.fork(k) for class k, and
/// stacks the K centroid blocks with their one-hot labels. Rows whose
/// `usable` flag is 0 are skipped (pass an empty span to use every row).
[[nodiscard]] PrototypeTrainingSet build_prototype_training_set(const Matrix& samples, std::span<const std::uint32_t> labels,
                                                                std::size_t classes, const KMeansOptions& options,
                                                                const Rng& rng,
                                                                std::span<const std::uint8_t> usable = {});

/// Stacks per-class centroid sets (in class order) into a labeled training set.
[[nodiscard]] PrototypeTrainingSet stack_prototypes(std::vector<CentroidSet> sets, std::size_t classes);

}  // namespace kmkc
