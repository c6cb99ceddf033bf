#pragma once

#include "kmkc/kmeans.hpp"
#include "kmkc/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kmkc {

enum class KernelKind : std::uint32_t { polynomial = 0, gaussian = 1 };

/// POLY(d): <a, b>^d.  GAUSSIAN(gamma): exp(-gamma ||a - b||^2).
struct KernelSpec {
    KernelKind kind = KernelKind::polynomial;
    unsigned degree = 4;
    double gamma = 1.0;

    static KernelSpec polynomial(unsigned degree);
    static KernelSpec gaussian(double gamma);

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// "poly:4", "gauss:0.5" (also "gaussian:0.5"); a bare "poly" is degree 4
/// and a bare "gauss" has gamma 1.
[[nodiscard]] KernelSpec parse_kernel_spec(std::string_view text);
[[nodiscard]] std::string to_string(const KernelSpec& spec);

/// Trained least-squares kernel classifier. Immutable after training.
struct KernelModel {
    Matrix support;             // S x M prototypes
    Matrix weights;             // S x K multipliers
    std::vector<double> bias;   // K
    KernelSpec kernel;
    double epsilon = 1e-6;

    [[nodiscard]] std::size_t classes() const noexcept { return bias.size(); }
    [[nodiscard]] std::size_t dimension() const noexcept { return support.cols(); }

    friend bool operator==(const KernelModel&, const KernelModel&) = default;
};

/// Bordered system Phi W = Y with
///   Phi = [ 0  u^T         ]     Y = [ 0 ]
///         [ u  Omega + eps I ]         [ one-hot labels ]
struct ExtendedSystem {
    Matrix phi;  // (S+1) x (S+1)
    Matrix rhs;  // (S+1) x K
};

struct TrainResult {
    KernelModel model;
    double residual = 0.0;  // ||Phi W - Y||_F / ||Y||_F
};

/// P x S kernel matrix between the rows of a and b (one gemm plus an
/// element-wise map).
[[nodiscard]] Matrix kernel_matrix(const Matrix& a, const Matrix& b, const KernelSpec& spec);

/// Builds the bordered system. Phi is exactly symmetric: the lower triangle
/// of Omega is copied from the upper one.
[[nodiscard]] ExtendedSystem assemble(const Matrix& prototypes, const Matrix& onehot, const KernelSpec& spec, double epsilon);
[[nodiscard]] ExtendedSystem assemble(const PrototypeTrainingSet& prototypes, const KernelSpec& spec, double epsilon);

/// Solves the bordered system with a pivoted LU; row 0 of W is the bias and
/// rows 1..S the multipliers. A singular system raises SingularMatrix.
[[nodiscard]] TrainResult train(const Matrix& prototypes, const Matrix& onehot, const KernelSpec& spec, double epsilon);
[[nodiscard]] TrainResult train(const PrototypeTrainingSet& prototypes, const KernelSpec& spec, double epsilon);

/// f_j(x) = sum_q Omega(x, xi_q) a_qj + b_j for every row of x (P x K).
[[nodiscard]] Matrix decision_scores(const KernelModel& model, const Matrix& x);
[[nodiscard]] std::vector<double> decision_scores(const KernelModel& model, std::span<const double> x);

/// Softmax diagnostic with the exponential applied term by term:
///   g_j = sum_q exp(Omega(x, xi_q) a_qj + b_j) / sum_i sum_q exp(Omega(x, xi_q) a_qi + b_i).
/// Not used for classification.
[[nodiscard]] Matrix softmax_scores(const KernelModel& model, const Matrix& x);
[[nodiscard]] std::vector<double> softmax_scores(const KernelModel& model, std::span<const double> x);

/// Index of the largest entry, lowest index on ties.
[[nodiscard]] std::size_t argmax(std::span<const double> values);

/// argmax_j f_j(x) per row.
[[nodiscard]] std::vector<std::uint32_t> classify(const KernelModel& model, const Matrix& x);
[[nodiscard]] std::uint32_t classify(const KernelModel& model, std::span<const double> x);

}  // namespace kmkc
