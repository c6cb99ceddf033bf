#include "kmkc/kmeans.hpp"

#include "kmkc/error.hpp"
#include "kmkc/gemm.hpp"
#include "kmkc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kmkc {

namespace {

// Rows of x scored against all centroids per gemm call; bounds the N x Q
// similarity block for large patch populations.
constexpr std::size_t kAssignBlock = 4096;

void normalize_rows(Matrix& m) {
    for (std::size_t q = 0; q < m.rows(); ++q) {
        auto row = m.row(q);
        double sq = 0.0;
        for (double v : row) {
            sq += v * v;
        }
        const double inv = 1.0 / std::sqrt(sq);
        for (double& v : row) {
            v *= inv;
        }
    }
}

}  // namespace

std::size_t PrototypeTrainingSet::total_iterations() const noexcept {
    std::size_t total = 0;
    for (const auto& c : per_class) {
        total += c.iterations;
    }
    return total;
}

Assignment assign(const Matrix& x, const Matrix& centroids) {
    if (x.cols() != centroids.cols()) {
        throw DimensionError("assign: samples have dimension " + std::to_string(x.cols()) + ", centroids " +
                             std::to_string(centroids.cols()));
    }
    if (centroids.rows() == 0) {
        throw InvalidArgument("assign: no centroids");
    }
    const std::size_t q = centroids.rows();
    Assignment out{std::vector<std::size_t>(x.rows(), 0), q};
    const std::size_t blocks = (x.rows() + kAssignBlock - 1) / kAssignBlock;
    parallel_for(blocks, 1, [&](std::size_t first, std::size_t last) {
        Matrix sim;
        for (std::size_t b = first; b < last; ++b) {
            const std::size_t row0 = b * kAssignBlock;
            const std::size_t n = std::min(kAssignBlock, x.rows() - row0);
            if (sim.rows() != n) {
                sim = Matrix(n, q);
            }
            gemm(1.0, x.view().block(row0, 0, n, x.cols()), centroids.view(), Transpose::yes, 0.0, sim.view());
            for (std::size_t i = 0; i < n; ++i) {
                const auto r = sim.row(i);
                out.cluster[row0 + i] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
            }
        }
    });
    return out;
}

CentroidUpdate update_centroids(const Assignment& assignment, const Matrix& x, Rng& rng) {
    if (assignment.cluster.size() != x.rows()) {
        throw DimensionError("update_centroids: assignment covers " + std::to_string(assignment.cluster.size()) +
                             " samples, x has " + std::to_string(x.rows()));
    }
    CentroidUpdate out{sparse_onehot_gemm(assignment.cluster, assignment.clusters, x), {}};
    for (std::size_t q = 0; q < out.centroids.rows(); ++q) {
        auto row = out.centroids.row(q);
        const bool empty = std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; });
        if (empty) {
            out.empties.push_back(q);
            if (x.rows() == 0) {
                throw InvalidArgument("update_centroids: cannot re-seed from an empty sample set");
            }
            const auto src = x.row(static_cast<std::size_t>(rng.uniform_index(x.rows())));
            std::copy(src.begin(), src.end(), row.begin());
        }
    }
    normalize_rows(out.centroids);
    return out;
}

double alignment_delta(const Matrix& updated, const Matrix& previous) {
    if (updated.rows() != previous.rows() || updated.cols() != previous.cols()) {
        throw DimensionError("alignment_delta: centroid sets differ in shape");
    }
    if (updated.rows() == 0) {
        throw InvalidArgument("alignment_delta: no centroids");
    }
    double sum = 0.0;
    for (std::size_t q = 0; q < updated.rows(); ++q) {
        sum += dot(updated.row(q), previous.row(q));
    }
    return 1.0 - sum / static_cast<double>(updated.rows());
}

CentroidSet fit(const Matrix& x, const KMeansOptions& options, Rng& rng, std::size_t class_id) {
    if (x.rows() == 0) {
        throw InvalidArgument("kmeans: class " + std::to_string(class_id) + " has no samples");
    }
    if (options.clusters == 0) {
        throw InvalidArgument("kmeans: cluster count must be positive");
    }
    if (options.clusters > x.rows()) {
        throw InvalidArgument("kmeans: class " + std::to_string(class_id) + " has " + std::to_string(x.rows()) +
                              " samples, fewer than Q = " + std::to_string(options.clusters));
    }
    if (options.max_iterations == 0) {
        throw InvalidArgument("kmeans: max_iterations must be positive");
    }

    CentroidSet set;
    set.class_id = class_id;
    set.centroids = x.gather_rows(sample_without_replacement(rng, x.rows(), options.clusters));

    for (std::size_t iter = 1; iter <= options.max_iterations; ++iter) {
        const Assignment a = assign(x, set.centroids);
        CentroidUpdate update = update_centroids(a, x, rng);
        const double delta = alignment_delta(update.centroids, set.centroids);
        set.centroids = std::move(update.centroids);
        set.reseeded += update.empties.size();
        set.iterations = iter;
        set.final_delta = delta;
        set.delta_trace.push_back(delta);
        if (delta <= options.tolerance) {
            break;
        }
    }
    return set;
}

PrototypeTrainingSet stack_prototypes(std::vector<CentroidSet> sets, std::size_t classes) {
    if (sets.size() != classes) {
        throw DimensionError("stack_prototypes: " + std::to_string(sets.size()) + " centroid sets for " +
                             std::to_string(classes) + " classes");
    }
    std::size_t total = 0;
    std::size_t dim = sets.empty() ? 0 : sets.front().centroids.cols();
    for (const auto& s : sets) {
        if (s.centroids.cols() != dim) {
            throw DimensionError("stack_prototypes: centroid dimension differs between classes");
        }
        total += s.centroids.rows();
    }
    PrototypeTrainingSet out;
    out.classes = classes;
    out.vectors = Matrix(total, dim);
    out.onehot = Matrix(total, classes);
    out.labels.reserve(total);
    std::size_t row = 0;
    for (auto& s : sets) {
        for (std::size_t q = 0; q < s.centroids.rows(); ++q, ++row) {
            const auto src = s.centroids.row(q);
            std::copy(src.begin(), src.end(), out.vectors.row(row).begin());
            out.onehot(row, s.class_id) = 1.0;
            out.labels.push_back(static_cast<std::uint32_t>(s.class_id));
        }
        s.centroids = Matrix();
    }
    out.per_class = std::move(sets);
    return out;
}

PrototypeTrainingSet build_prototype_training_set(const Matrix& samples, std::span<const std::uint32_t> labels,
                                                  std::size_t classes, const KMeansOptions& options, const Rng& rng,
                                                  std::span<const std::uint8_t> usable) {
    if (labels.size() != samples.rows()) {
        throw DimensionError("build_prototype_training_set: " + std::to_string(samples.rows()) + " samples, " +
                             std::to_string(labels.size()) + " labels");
    }
    if (!usable.empty() && usable.size() != samples.rows()) {
        throw DimensionError("build_prototype_training_set: usable mask length mismatch");
    }
    if (classes == 0) {
        throw InvalidArgument("build_prototype_training_set: no classes");
    }
    std::vector<std::vector<std::size_t>> members(classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= classes) {
            throw InvalidArgument("build_prototype_training_set: label " + std::to_string(labels[i]) +
                                  " out of range");
        }
        if (usable.empty() || usable[i]) {
            members[labels[i]].push_back(i);
        }
    }
    for (std::size_t k = 0; k < classes; ++k) {
        if (members[k].size() < options.clusters) {
            throw InvalidArgument("build_prototype_training_set: class " + std::to_string(k) + " has " +
                                  std::to_string(members[k].size()) + " samples, fewer than Q = " +
                                  std::to_string(options.clusters));
        }
    }
    std::vector<CentroidSet> sets(classes);
    for (std::size_t k = 0; k < classes; ++k) {
        const Matrix xk = samples.gather_rows(members[k]);
        Rng stream = rng.fork(k);
        sets[k] = fit(xk, options, stream, k);
    }
    return stack_prototypes(std::move(sets), classes);
}

}  // namespace kmkc
