#include "kmkc/lssvm.hpp"

#include "kmkc/error.hpp"
#include "kmkc/gemm.hpp"
#include "kmkc/linear_solve.hpp"
#include "kmkc/parallel.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <limits>
#include <cmath>
#include <string>

namespace kmkc {

namespace {

// Test rows per kernel block in batch prediction.
constexpr std::size_t kPredictBlock = 1024;

double int_pow(double base, unsigned exponent) {
    double result = 1.0;
    while (exponent > 0) {
        if (exponent & 1U) {
            result *= base;
        }
        exponent >>= 1U;
        if (exponent > 0) {
            base *= base;
        }
    }
    return result;
}

std::vector<double> squared_row_norms(const Matrix& m) {
    std::vector<double> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out[i] = dot(m.row(i), m.row(i));
    }
    return out;
}

void check_model_input(const KernelModel& model, std::size_t dim) {
    if (dim != model.dimension()) {
        throw DimensionError("model expects dimension " + std::to_string(model.dimension()) + ", got " +
                             std::to_string(dim));
    }
}

Matrix row_as_matrix(std::span<const double> x) { return Matrix::from_values(1, x.size(), {x.begin(), x.end()}); }

// Runs `body(block_kernel, row0)` for row blocks of x against the support set.
template <typename Body>
void for_each_kernel_block(const KernelModel& model, const Matrix& x, Body&& body) {
    const std::size_t blocks = (x.rows() + kPredictBlock - 1) / kPredictBlock;
    parallel_for(blocks, 1, [&](std::size_t first, std::size_t last) {
        for (std::size_t b = first; b < last; ++b) {
            const std::size_t row0 = b * kPredictBlock;
            const std::size_t n = std::min(kPredictBlock, x.rows() - row0);
            Matrix rows(n, x.cols());
            std::copy_n(x.row(row0).data(), n * x.cols(), rows.data());
            body(kernel_matrix(rows, model.support, model.kernel), row0);
        }
    });
}

}  // namespace

KernelSpec KernelSpec::polynomial(unsigned degree) {
    if (degree < 1) {
        throw InvalidArgument("polynomial kernel degree must be >= 1");
    }
    return {KernelKind::polynomial, degree, 1.0};
}

KernelSpec KernelSpec::gaussian(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw InvalidArgument("gaussian kernel width must be positive");
    }
    return {KernelKind::gaussian, 4, gamma};
}

KernelSpec parse_kernel_spec(std::string_view text) {
    const auto colon = text.find(':');
    const std::string_view name = text.substr(0, colon);
    const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
    if (name == "poly" || name == "polynomial") {
        if (arg.empty()) {
            return KernelSpec::polynomial(4);
        }
        unsigned degree = 0;
        const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), degree);
        if (ec != std::errc{} || ptr != arg.data() + arg.size()) {
            throw InvalidArgument("bad polynomial degree '" + std::string(arg) + "'");
        }
        return KernelSpec::polynomial(degree);
    }
    if (name == "gauss" || name == "gaussian") {
        if (arg.empty()) {
            return KernelSpec::gaussian(1.0);
        }
        try {
            std::size_t used = 0;
            const double gamma = std::stod(std::string(arg), &used);
            if (used != arg.size()) {
                throw std::invalid_argument("trailing characters");
            }
            return KernelSpec::gaussian(gamma);
        } catch (const std::logic_error&) {
            throw InvalidArgument("bad gaussian width '" + std::string(arg) + "'");
        }
    }
    throw InvalidArgument("unknown kernel '" + std::string(text) + "' (expected poly:<d> or gauss:<gamma>)");
}

std::string to_string(const KernelSpec& spec) {
    if (spec.kind == KernelKind::polynomial) {
        return "poly:" + std::to_string(spec.degree);
    }
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), spec.gamma);
    return "gauss:" + std::string(buf.data(), res.ptr);
}

Matrix kernel_matrix(const Matrix& a, const Matrix& b, const KernelSpec& spec) {
    if (a.cols() != b.cols()) {
        throw DimensionError("kernel_matrix: dimensions " + std::to_string(a.cols()) + " and " +
                             std::to_string(b.cols()));
    }
    Matrix k = gemm(a, b, Transpose::yes);
    if (spec.kind == KernelKind::polynomial) {
        if (spec.degree != 1) {
            for (std::size_t i = 0; i < k.size(); ++i) {
                k.data()[i] = int_pow(k.data()[i], spec.degree);
            }
        }
        return k;
    }
    const auto na = squared_row_norms(a);
    const auto nb = squared_row_norms(b);
    for (std::size_t i = 0; i < k.rows(); ++i) {
        auto row = k.row(i);
        for (std::size_t j = 0; j < k.cols(); ++j) {
            const double d2 = std::max(0.0, na[i] + nb[j] - 2.0 * row[j]);
            row[j] = std::exp(-spec.gamma * d2);
        }
    }
    return k;
}

ExtendedSystem assemble(const Matrix& prototypes, const Matrix& onehot, const KernelSpec& spec, double epsilon) {
    const std::size_t s = prototypes.rows();
    if (s == 0) {
        throw InvalidArgument("assemble: no prototypes");
    }
    if (onehot.rows() != s) {
        throw DimensionError("assemble: " + std::to_string(s) + " prototypes, " + std::to_string(onehot.rows()) +
                             " label rows");
    }
    if (!(epsilon > 0.0)) {
        throw InvalidArgument("assemble: epsilon must be positive");
    }
    const Matrix omega = kernel_matrix(prototypes, prototypes, spec);
    ExtendedSystem sys{Matrix(s + 1, s + 1), Matrix(s + 1, onehot.cols())};
    for (std::size_t i = 0; i < s; ++i) {
        sys.phi(0, i + 1) = 1.0;
        sys.phi(i + 1, 0) = 1.0;
        sys.phi(i + 1, i + 1) = omega(i, i) + epsilon;
        for (std::size_t j = i + 1; j < s; ++j) {
            sys.phi(i + 1, j + 1) = omega(i, j);
            sys.phi(j + 1, i + 1) = omega(i, j);
        }
        const auto y = onehot.row(i);
        std::copy(y.begin(), y.end(), sys.rhs.row(i + 1).begin());
    }
    return sys;
}

ExtendedSystem assemble(const PrototypeTrainingSet& prototypes, const KernelSpec& spec, double epsilon) {
    return assemble(prototypes.vectors, prototypes.onehot, spec, epsilon);
}

TrainResult train(const Matrix& prototypes, const Matrix& onehot, const KernelSpec& spec, double epsilon) {
    const ExtendedSystem sys = assemble(prototypes, onehot, spec, epsilon);
    Matrix w;
    try {
        w = solve_dense(sys.phi, sys.rhs);
    } catch (const SingularMatrix& e) {
        throw SingularMatrix(e.pivot(), std::string(e.what()) + "; increase the regularization epsilon");
    }
    TrainResult result;
    result.residual = relative_residual(sys.phi, w, sys.rhs);
    const std::size_t s = prototypes.rows();
    const std::size_t k = onehot.cols();
    KernelModel& model = result.model;
    model.support = prototypes;
    model.weights = Matrix(s, k);
    std::copy_n(w.row(1).data(), s * k, model.weights.data());
    model.bias.assign(w.row(0).begin(), w.row(0).end());
    model.kernel = spec;
    model.epsilon = epsilon;
    return result;
}

TrainResult train(const PrototypeTrainingSet& prototypes, const KernelSpec& spec, double epsilon) {
    return train(prototypes.vectors, prototypes.onehot, spec, epsilon);
}

Matrix decision_scores(const KernelModel& model, const Matrix& x) {
    check_model_input(model, x.cols());
    const std::size_t k = model.classes();
    Matrix scores(x.rows(), k);
    for_each_kernel_block(model, x, [&](const Matrix& omega, std::size_t row0) {
        auto out = scores.view().block(row0, 0, omega.rows(), k);
        for (std::size_t i = 0; i < omega.rows(); ++i) {
            std::copy(model.bias.begin(), model.bias.end(), &out(i, 0));
        }
        gemm(1.0, omega.view(), model.weights.view(), Transpose::no, 1.0, out);
    });
    return scores;
}

std::vector<double> decision_scores(const KernelModel& model, std::span<const double> x) {
    const Matrix s = decision_scores(model, row_as_matrix(x));
    return {s.values().begin(), s.values().end()};
}

Matrix softmax_scores(const KernelModel& model, const Matrix& x) {
    check_model_input(model, x.cols());
    const std::size_t k = model.classes();
    const std::size_t s = model.support.rows();
    Matrix g(x.rows(), k);
    for_each_kernel_block(model, x, [&](const Matrix& omega, std::size_t row0) {
        std::vector<double> terms(s * k);
        for (std::size_t i = 0; i < omega.rows(); ++i) {
            double peak = -std::numeric_limits<double>::infinity();
            for (std::size_t q = 0; q < s; ++q) {
                for (std::size_t j = 0; j < k; ++j) {
                    const double t = omega(i, q) * model.weights(q, j) + model.bias[j];
                    terms[q * k + j] = t;
                    peak = std::max(peak, t);
                }
            }
            auto out = g.row(row0 + i);
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t q = 0; q < s; ++q) {
                for (std::size_t j = 0; j < k; ++j) {
                    out[j] += std::exp(terms[q * k + j] - peak);
                }
            }
            double total = 0.0;
            for (double v : out) {
                total += v;
            }
            for (double& v : out) {
                v /= total;
            }
        }
    });
    return g;
}

std::vector<double> softmax_scores(const KernelModel& model, std::span<const double> x) {
    const Matrix g = softmax_scores(model, row_as_matrix(x));
    return {g.values().begin(), g.values().end()};
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) {
        throw InvalidArgument("argmax: empty input");
    }
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

std::vector<std::uint32_t> classify(const KernelModel& model, const Matrix& x) {
    const Matrix scores = decision_scores(model, x);
    std::vector<std::uint32_t> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        out[i] = static_cast<std::uint32_t>(argmax(scores.row(i)));
    }
    return out;
}

std::uint32_t classify(const KernelModel& model, std::span<const double> x) {
    return static_cast<std::uint32_t>(argmax(decision_scores(model, x)));
}

}  // namespace kmkc
