#include "doctest.h"
#include "oracles.hpp"

#include "kmkc/error.hpp"
#include "kmkc/kmeans.hpp"
#include "kmkc/lssvm.hpp"

#include <cmath>
#include <numeric>

using namespace kmkc;

TEST_CASE("polynomial kernel values") {
    const KernelSpec poly4 = KernelSpec::polynomial(4);
    const Matrix a = Matrix::from_rows({{1, 0}, {0, 1}, {0.5, std::sqrt(0.75)}});
    const Matrix k = kernel_matrix(a, a, poly4);
    CHECK(k(0, 0) == 1.0);
    CHECK(k(0, 1) == 0.0);
    CHECK(k(0, 2) == doctest::Approx(0.0625).epsilon(1e-15));
    CHECK(k(2, 2) == doctest::Approx(1.0).epsilon(1e-15));

    std::mt19937_64 gen(1);
    const Matrix x = oracle::random_matrix(gen, 30, 12);
    const Matrix y = oracle::random_matrix(gen, 20, 12);
    const Matrix ip = oracle::naive_gemm(x, y, true);
    for (unsigned d : {1u, 2u, 3u, 4u, 7u}) {
        const Matrix got = kernel_matrix(x, y, KernelSpec::polynomial(d));
        double worst = 0.0;
        for (std::size_t i = 0; i < 30; ++i) {
            for (std::size_t j = 0; j < 20; ++j) {
                const double want = std::pow(ip(i, j), d);
                worst = std::max(worst, std::abs(got(i, j) - want) / std::max(1.0, std::abs(want)));
            }
        }
        CAPTURE(d);
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("gaussian kernel values") {
    const Matrix a = Matrix::from_rows({{0, 0}, {1, 1}});
    const Matrix k = kernel_matrix(a, a, KernelSpec::gaussian(0.5));
    CHECK(k(0, 0) == 1.0);
    CHECK(k(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK_THROWS_AS((void)kernel_matrix(a, Matrix(2, 3), KernelSpec::gaussian(1)), DimensionError);
}

TEST_CASE("kernel spec parsing") {
    CHECK(parse_kernel_spec("poly:4") == KernelSpec::polynomial(4));
    CHECK(parse_kernel_spec("poly") == KernelSpec::polynomial(4));
    CHECK(parse_kernel_spec("poly:2") == KernelSpec::polynomial(2));
    CHECK(parse_kernel_spec("gauss:0.5") == KernelSpec::gaussian(0.5));
    CHECK(parse_kernel_spec("gaussian:2") == KernelSpec::gaussian(2));
    CHECK(parse_kernel_spec("gauss") == KernelSpec::gaussian(1));
    CHECK(parse_kernel_spec(to_string(KernelSpec::gaussian(0.25))) == KernelSpec::gaussian(0.25));
    CHECK_THROWS_AS((void)parse_kernel_spec("poly:0"), InvalidArgument);
    CHECK_THROWS_AS((void)parse_kernel_spec("poly:x"), InvalidArgument);
    CHECK_THROWS_AS((void)parse_kernel_spec("gauss:-1"), InvalidArgument);
    CHECK_THROWS_AS((void)parse_kernel_spec("rbf"), InvalidArgument);
}

TEST_CASE("bordered system layout") {
    const Matrix protos = Matrix::from_rows({{1, 0}, {0, 1}});
    const Matrix onehot = Matrix::from_rows({{1, 0}, {0, 1}});
    const ExtendedSystem sys = assemble(protos, onehot, KernelSpec::polynomial(1), 0.1);
    CHECK(sys.phi == Matrix::from_rows({{0, 1, 1}, {1, 1.1, 0}, {1, 0, 1.1}}));
    CHECK(sys.rhs == Matrix::from_rows({{0, 0}, {1, 0}, {0, 1}}));
    CHECK_THROWS_AS((void)assemble(protos, onehot, KernelSpec::polynomial(1), 0.0), InvalidArgument);
    CHECK_THROWS_AS((void)assemble(protos, Matrix(3, 2), KernelSpec::polynomial(1), 0.1), DimensionError);
}

TEST_CASE("bordered system is exactly symmetric with eps only on the kernel diagonal") {
    std::mt19937_64 gen(2);
    const Matrix protos = oracle::random_unit_rows(gen, 57, 30);
    Matrix onehot(57, 3);
    for (std::size_t i = 0; i < 57; ++i) {
        onehot(i, i % 3) = 1.0;
    }
    const ExtendedSystem sys = assemble(protos, onehot, KernelSpec::polynomial(4), 1e-6);
    CHECK(sys.phi == sys.phi.transposed());
    CHECK(sys.phi(0, 0) == 0.0);
    const Matrix omega = kernel_matrix(protos, protos, KernelSpec::polynomial(4));
    for (std::size_t i = 0; i < 57; ++i) {
        CHECK(sys.phi(0, i + 1) == 1.0);
        CHECK(sys.phi(i + 1, i + 1) == doctest::Approx(omega(i, i) + 1e-6).epsilon(1e-15));
    }
}

TEST_CASE("two-prototype problem has the closed-form solution") {
    // Phi = [[0,1,1],[1,1.1,0],[1,0,1.1]]: a_1 + a_2 = 0, b + 1.1 a_n = y_n,
    // so b = 1/2 and a = +-1/2.2 per column.
    const Matrix protos = Matrix::from_rows({{1, 0}, {0, 1}});
    const Matrix onehot = Matrix::from_rows({{1, 0}, {0, 1}});
    const TrainResult r = train(protos, onehot, KernelSpec::polynomial(1), 0.1);
    const double a = 1.0 / 2.2;
    CHECK(r.model.bias[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r.model.bias[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r.model.weights(0, 0) == doctest::Approx(a).epsilon(1e-14));
    CHECK(r.model.weights(1, 0) == doctest::Approx(-a).epsilon(1e-14));
    CHECK(r.model.weights(0, 1) == doctest::Approx(-a).epsilon(1e-14));
    CHECK(r.model.weights(1, 1) == doctest::Approx(a).epsilon(1e-14));
    CHECK(r.residual <= 1e-15);
    CHECK(classify(r.model, protos) == std::vector<std::uint32_t>{0, 1});
    const auto s = decision_scores(r.model, std::vector<double>{1, 0});
    CHECK(s[0] == doctest::Approx(0.5 + a).epsilon(1e-14));
    CHECK(s[1] == doctest::Approx(0.5 - a).epsilon(1e-14));
}

TEST_CASE("training matches a naive solve of the assembled system") {
    std::mt19937_64 gen(3);
    const Matrix protos = oracle::random_unit_rows(gen, 40, 16);
    Matrix onehot(40, 4);
    for (std::size_t i = 0; i < 40; ++i) {
        onehot(i, i / 10) = 1.0;
    }
    const TrainResult r = train(protos, onehot, KernelSpec::polynomial(4), 1e-6);
    const ExtendedSystem sys = assemble(protos, onehot, KernelSpec::polynomial(4), 1e-6);
    const Matrix w = oracle::naive_solve(sys.phi, sys.rhs);
    const double scale = oracle::max_abs(w);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(std::abs(r.model.bias[j] - w(0, j)) <= 1e-8 * scale);
        for (std::size_t i = 0; i < 40; ++i) {
            CHECK(std::abs(r.model.weights(i, j) - w(i + 1, j)) <= 1e-8 * scale);
        }
    }
    CHECK(r.residual <= 1e-8);
    // every prototype is reproduced
    const std::vector<std::uint32_t> pred = classify(r.model, protos);
    for (std::size_t i = 0; i < 40; ++i) {
        CHECK(pred[i] == i / 10);
    }
}

TEST_CASE("multipliers of each class column sum to zero") {
    std::mt19937_64 gen(4);
    const Matrix protos = oracle::random_unit_rows(gen, 30, 10);
    Matrix onehot(30, 3);
    for (std::size_t i = 0; i < 30; ++i) {
        onehot(i, i % 3) = 1.0;
    }
    const TrainResult r = train(protos, onehot, KernelSpec::polynomial(4), 1e-3);
    for (std::size_t j = 0; j < 3; ++j) {
        double s = 0.0, m = 0.0;
        for (std::size_t i = 0; i < 30; ++i) {
            s += r.model.weights(i, j);
            m = std::max(m, std::abs(r.model.weights(i, j)));
        }
        CHECK(std::abs(s) <= 1e-10 * m);
    }
}

TEST_CASE("duplicate prototypes without regularization headroom are singular") {
    const Matrix protos = Matrix::from_rows({{1, 0}, {1, 0}});
    const Matrix onehot = Matrix::from_rows({{1, 0}, {0, 1}});
    // eps far below the rounding floor of Omega: the duplicated rows cancel exactly
    CHECK_THROWS_AS((void)train(protos, onehot, KernelSpec::polynomial(4), 1e-300), SingularMatrix);
    CHECK_NOTHROW((void)train(protos, onehot, KernelSpec::polynomial(4), 1e-3));
}

TEST_CASE("scores of a zero-weight model are its bias") {
    KernelModel m;
    m.support = Matrix::from_rows({{1, 0}, {0, 1}});
    m.weights = Matrix(2, 3);
    m.bias = {0.25, -1.0, 0.75};
    const auto s = decision_scores(m, std::vector<double>{0.3, 0.4});
    CHECK(s == m.bias);
    CHECK(classify(m, std::vector<double>{0.3, 0.4}) == 2);
    CHECK_THROWS_AS((void)decision_scores(m, std::vector<double>{1, 2, 3}), DimensionError);
}

TEST_CASE("a single support vector scores a + b at itself") {
    KernelModel m;
    m.support = Matrix::from_rows({{0.6, 0.8}});
    m.weights = Matrix::from_rows({{2.0, -1.0}});
    m.bias = {0.5, 0.25};
    const auto s = decision_scores(m, std::vector<double>{0.6, 0.8});
    CHECK(s[0] == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(s[1] == doctest::Approx(-0.75).epsilon(1e-15));
}

TEST_CASE("shifting every bias by a constant leaves labels unchanged") {
    std::mt19937_64 gen(5);
    const Matrix protos = oracle::random_unit_rows(gen, 20, 8);
    Matrix onehot(20, 4);
    for (std::size_t i = 0; i < 20; ++i) {
        onehot(i, i % 4) = 1.0;
    }
    KernelModel m = train(protos, onehot, KernelSpec::polynomial(4), 1e-6).model;
    const Matrix x = oracle::random_unit_rows(gen, 200, 8);
    const auto before = classify(m, x);
    for (double& b : m.bias) {
        b += 17.5;
    }
    CHECK(classify(m, x) == before);
}

TEST_CASE("softmax diagnostic") {
    KernelModel m;
    m.support = Matrix::from_rows({{1, 0}});
    m.weights = Matrix(1, 2);
    m.bias = {0.3, 0.3};
    const auto g = softmax_scores(m, std::vector<double>{0, 1});
    CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g[1] == doctest::Approx(0.5).epsilon(1e-15));

    std::mt19937_64 gen(6);
    const Matrix protos = oracle::random_unit_rows(gen, 12, 5);
    Matrix onehot(12, 3);
    for (std::size_t i = 0; i < 12; ++i) {
        onehot(i, i % 3) = 1.0;
    }
    const KernelModel t = train(protos, onehot, KernelSpec::polynomial(4), 1e-6).model;
    const Matrix x = oracle::random_unit_rows(gen, 25, 5);
    const Matrix gs = softmax_scores(t, x);
    for (std::size_t i = 0; i < 25; ++i) {
        const auto row = gs.row(i);
        CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        // term-wise reference without max shift
        const Matrix k = kernel_matrix(x.gather_rows(std::vector<std::size_t>{i}), protos, KernelSpec::polynomial(4));
        std::vector<double> num(3, 0.0);
        for (std::size_t j = 0; j < 3; ++j) {
            for (std::size_t q = 0; q < 12; ++q) {
                num[j] += std::exp(k(0, q) * t.weights(q, j) + t.bias[j]);
            }
        }
        const double den = std::accumulate(num.begin(), num.end(), 0.0);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(row[j] == doctest::Approx(num[j] / den).epsilon(1e-12));
        }
    }
}

TEST_CASE("argmax takes the first maximum") {
    CHECK(argmax(std::vector<double>{1, 3, 3, 2}) == 1);
    CHECK(argmax(std::vector<double>{-1}) == 0);
    CHECK_THROWS_AS((void)argmax(std::vector<double>{}), InvalidArgument);
}

TEST_CASE("training from a prototype set") {
    std::mt19937_64 gen(7);
    const Matrix x = oracle::random_unit_rows(gen, 60, 6);
    std::vector<std::uint32_t> labels(60);
    for (std::size_t i = 0; i < 60; ++i) {
        labels[i] = static_cast<std::uint32_t>(i % 2);
    }
    const PrototypeTrainingSet set = build_prototype_training_set(x, labels, 2, {5, 1e-6, 300}, Rng(1));
    const TrainResult a = train(set, KernelSpec::polynomial(4), 1e-6);
    const TrainResult b = train(set.vectors, set.onehot, KernelSpec::polynomial(4), 1e-6);
    CHECK(a.model == b.model);
    CHECK(a.model.support.rows() == 10);
}
