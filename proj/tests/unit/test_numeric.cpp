#include "doctest.h"
#include "oracles.hpp"

#include "kmkc/error.hpp"
#include "kmkc/gemm.hpp"
#include "kmkc/linear_solve.hpp"
#include "kmkc/matrix.hpp"
#include "kmkc/parallel.hpp"
#include "kmkc/rng.hpp"
#include "kmkc/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

using namespace kmkc;

namespace {

double rel_err(const Matrix& got, const Matrix& want) {
    const double scale = std::max(oracle::max_abs(want), 1e-300);
    return max_abs_difference(got, want) / scale;
}

struct ThreadGuard {
    unsigned saved = thread_count();
    ~ThreadGuard() { set_thread_count(saved); }
};

}  // namespace

TEST_CASE("matrix construction rejects non-finite values") {
    CHECK_THROWS_AS(Matrix::from_values(1, 2, {1.0, std::nan("")}), InvalidArgument);
    CHECK_THROWS_AS(Matrix::from_values(1, 1, {std::numeric_limits<double>::infinity()}), InvalidArgument);
    CHECK_THROWS_AS(Matrix::from_values(2, 2, {1.0, 2.0, 3.0}), DimensionError);
    CHECK_THROWS_AS(Matrix::from_rows({{1.0, 2.0}, {3.0}}), DimensionError);
    const Matrix m = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
    CHECK(m.transposed() == Matrix::from_rows({{1, 4}, {2, 5}, {3, 6}}));
    const std::vector<std::size_t> idx{1, 0, 1};
    CHECK(m.gather_rows(idx) == Matrix::from_rows({{4, 5, 6}, {1, 2, 3}, {4, 5, 6}}));
}

TEST_CASE("gemm small worked example") {
    const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    const Matrix b = Matrix::from_rows({{5, 6}, {7, 8}});
    CHECK(gemm(a, b) == Matrix::from_rows({{19, 22}, {43, 50}}));
    CHECK(gemm(a, b.transposed(), Transpose::yes) == Matrix::from_rows({{19, 22}, {43, 50}}));
}

TEST_CASE("gemm with identity returns the operand") {
    std::mt19937_64 gen(7);
    const Matrix a = oracle::random_matrix(gen, 37, 53);
    CHECK(gemm(a, Matrix::identity(53)) == a);
    CHECK(gemm(Matrix::identity(37), a) == a);
}

TEST_CASE("gemm matches naive triple loop on random shapes") {
    std::mt19937_64 gen(11);
    std::uniform_int_distribution<std::size_t> dim(1, 150);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t m = dim(gen), k = dim(gen), n = dim(gen);
        const Matrix a = oracle::random_matrix(gen, m, k);
        const bool tb = trial % 2 == 1;
        const Matrix b = tb ? oracle::random_matrix(gen, n, k) : oracle::random_matrix(gen, k, n);
        const Matrix got = gemm(a, b, tb ? Transpose::yes : Transpose::no);
        const Matrix want = oracle::naive_gemm(a, b, tb);
        CAPTURE(m);
        CAPTURE(k);
        CAPTURE(n);
        CHECK(rel_err(got, want) <= 1e-12);
    }
}

TEST_CASE("gemm crosses every blocking boundary") {
    // k > KC, m > MC, n > NR multiples with ragged edges
    std::mt19937_64 gen(3);
    const Matrix a = oracle::random_matrix(gen, 300, 1100);
    const Matrix b = oracle::random_matrix(gen, 77, 1100);
    CHECK(rel_err(gemm(a, b, Transpose::yes), oracle::naive_gemm(a, b, true)) <= 1e-12);
}

TEST_CASE("gemm alpha/beta accumulate into strided blocks") {
    std::mt19937_64 gen(5);
    const Matrix a = oracle::random_matrix(gen, 20, 30);
    const Matrix b = oracle::random_matrix(gen, 30, 25);
    Matrix c = oracle::random_matrix(gen, 40, 50);
    const Matrix c0 = c;
    gemm(2.0, a.view(), b.view(), Transpose::no, -0.5, c.view().block(10, 5, 20, 25));
    const Matrix ab = oracle::naive_gemm(a, b, false);
    double worst = 0.0;
    for (std::size_t i = 0; i < 40; ++i) {
        for (std::size_t j = 0; j < 50; ++j) {
            const bool inside = i >= 10 && i < 30 && j >= 5 && j < 30;
            const double want = inside ? 2.0 * ab(i - 10, j - 5) - 0.5 * c0(i, j) : c0(i, j);
            worst = std::max(worst, std::abs(c(i, j) - want));
        }
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("gemm with beta zero ignores NaN garbage in C") {
    const Matrix a = Matrix::from_rows({{1, 2}});
    const Matrix b = Matrix::from_rows({{3}, {4}});
    Matrix c(1, 1);
    c(0, 0) = std::nan("");
    gemm(1.0, a.view(), b.view(), Transpose::no, 0.0, c.view());
    CHECK(c(0, 0) == 11.0);
}

TEST_CASE("gemm rejects mismatched inner dimensions") {
    const Matrix a(3, 4), b(5, 2);
    CHECK_THROWS_AS((void)gemm(a, b), DimensionError);
    CHECK_THROWS_AS((void)gemm(a, b, Transpose::yes), DimensionError);
    Matrix c(2, 2);
    CHECK_THROWS_AS(gemm(1.0, a.view(), Matrix(4, 2).view(), Transpose::no, 0.0, c.view()), DimensionError);
}

TEST_CASE("gemm is bitwise identical across thread counts") {
    ThreadGuard guard;
    std::mt19937_64 gen(9);
    const Matrix a = oracle::random_matrix(gen, 700, 300);
    const Matrix b = oracle::random_matrix(gen, 90, 300);
    set_thread_count(1);
    const Matrix one = gemm(a, b, Transpose::yes);
    set_thread_count(4);
    const Matrix four = gemm(a, b, Transpose::yes);
    CHECK(one == four);
}

TEST_CASE("gemm associativity spot check") {
    std::mt19937_64 gen(31);
    const Matrix a = oracle::random_matrix(gen, 30, 30);
    const Matrix b = oracle::random_matrix(gen, 30, 30);
    const Matrix c = oracle::random_matrix(gen, 30, 30);
    CHECK(max_abs_difference(gemm(gemm(a, b), c), gemm(a, gemm(b, c))) <= 1e-9);
}

TEST_CASE("sparse one-hot product edge assignments") {
    std::mt19937_64 gen(37);
    const Matrix x = oracle::random_matrix(gen, 20, 5);
    std::vector<std::size_t> ident(20);
    std::iota(ident.begin(), ident.end(), 0);
    CHECK(sparse_onehot_gemm(ident, 20, x) == x);

    const Matrix all0 = sparse_onehot_gemm(std::vector<std::size_t>(20, 0), 4, x);
    for (std::size_t j = 0; j < 5; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < 20; ++i) {
            s += x(i, j);
        }
        CHECK(all0(0, j) == s);
        for (std::size_t q = 1; q < 4; ++q) {
            CHECK(all0(q, j) == 0.0);
        }
    }
}

TEST_CASE("sparse one-hot product sums the assigned rows") {
    const Matrix x = Matrix::from_rows({{1, 0}, {0, 1}, {2, 2}, {-1, 3}});
    const std::vector<std::size_t> a{0, 2, 0, 2};
    const Matrix got = sparse_onehot_gemm(a, 3, x);
    CHECK(got == Matrix::from_rows({{3, 2}, {0, 0}, {-1, 4}}));

    // same as the dense R^T X
    Matrix r(4, 3);
    for (std::size_t i = 0; i < 4; ++i) {
        r(i, a[i]) = 1.0;
    }
    CHECK(got == oracle::naive_gemm(r.transposed(), x, false));

    const std::vector<std::size_t> bad{0, 3, 0, 0};
    CHECK_THROWS_AS((void)sparse_onehot_gemm(bad, 3, x), InvalidArgument);
    const std::vector<std::size_t> short_assign{0, 1};
    CHECK_THROWS_AS((void)sparse_onehot_gemm(short_assign, 3, x), DimensionError);
}

TEST_CASE("solve_dense matches naive Gaussian elimination") {
    std::mt19937_64 gen(13);
    for (std::size_t n : {1u, 2u, 7u, 50u, 97u, 130u, 260u}) {
        Matrix a = oracle::random_matrix(gen, n, n);
        const Matrix b = oracle::random_matrix(gen, n, 3);
        const Matrix got = solve_dense(a, b);
        const Matrix want = oracle::naive_solve(a, b);
        CAPTURE(n);
        CHECK(max_abs_difference(got, want) <= 1e-10 * std::max(1.0, oracle::max_abs(want)));
        CHECK(relative_residual(a, got, b) <= 1e-12);
    }
}

TEST_CASE("solve_dense on identity returns the right-hand side") {
    std::mt19937_64 gen(17);
    const Matrix b = oracle::random_matrix(gen, 40, 4);
    CHECK(solve_dense(Matrix::identity(40), b) == b);
}

TEST_CASE("solve_dense handles a zero leading diagonal") {
    const Matrix a = Matrix::from_rows({{0, 1, 1}, {1, 1.1, 0}, {1, 0, 1.1}});
    const Matrix b = Matrix::from_rows({{0}, {1}, {0}});
    const Matrix x = solve_dense(a, b);
    CHECK(relative_residual(a, x, b) <= 1e-15);
    CHECK(max_abs_difference(x, oracle::naive_solve(a, b)) <= 1e-15);
}

TEST_CASE("singular systems are reported with the failing pivot") {
    Matrix a = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}, {1, 2, 3}});
    CHECK_THROWS_AS((void)solve_dense(a, Matrix(3, 1, 1.0)), SingularMatrix);
    bool thrown = false;
    try {
        (void)LuFactorization(a);
    } catch (const SingularMatrix& e) {
        thrown = true;
        CHECK(e.pivot() == 2);  // rows 0 and 2 agree; elimination runs out at the last column
    }
    CHECK(thrown);
    CHECK_THROWS_AS((void)solve_dense(Matrix(4, 4), Matrix(4, 1)), SingularMatrix);
    CHECK_THROWS_AS((void)solve_dense(Matrix(3, 4), Matrix(3, 1)), DimensionError);
    CHECK_THROWS_AS((void)solve_dense(Matrix(3, 3), Matrix(2, 1)), DimensionError);
}

TEST_CASE("LU permutation is a permutation") {
    std::mt19937_64 gen(19);
    const LuFactorization lu(oracle::random_matrix(gen, 200, 200));
    std::set<std::size_t> seen(lu.permutation().begin(), lu.permutation().end());
    CHECK(seen.size() == 200);
    CHECK(*seen.rbegin() == 199);
}

TEST_CASE("DFT magnitudes match the direct O(M^2) transform") {
    std::mt19937_64 gen(23);
    for (std::size_t m : {1u, 2u, 4u, 5u, 17u, 64u, 784u}) {
        const Matrix x = oracle::random_matrix(gen, 3, m, 0.0, 255.0);
        const std::size_t bins = half_spectrum_length(m);
        const RealDftPlan plan(m, bins);
        const Matrix got = plan.magnitudes(x);
        double worst = 0.0, scale = 0.0;
        for (std::size_t r = 0; r < 3; ++r) {
            const auto row = x.row(r);
            const auto ref = oracle::naive_dft({row.begin(), row.end()});
            for (std::size_t k = 0; k < bins; ++k) {
                worst = std::max(worst, std::abs(got(r, k) - std::abs(ref[k])));
                scale = std::max(scale, std::abs(ref[k]));
            }
        }
        CAPTURE(m);
        CHECK(worst <= 1e-9 * scale);
    }
}

TEST_CASE("sqrt half spectrum: lengths, zeros, constants, Parseval") {
    CHECK(half_spectrum_length(784) == 392);
    CHECK(half_spectrum_length(17) == 9);
    CHECK(dft_halfspectrum_sqrtmag(std::vector<double>(784, 0.0)).size() == 392);
    for (double v : dft_halfspectrum_sqrtmag(std::vector<double>(784, 0.0))) {
        CHECK(v == 0.0);
    }

    // constant c over M = 4: X_0 = 4c, the rest vanish
    const std::vector<double> c(4, 3.0);
    const auto s = dft_halfspectrum_sqrtmag(c);
    REQUIRE(s.size() == 2);
    CHECK(s[0] == doctest::Approx(std::sqrt(12.0)).epsilon(1e-15));
    CHECK(s[1] == 0.0);

    // Parseval: sum |x|^2 = (1/M) sum_k |X_k|^2 over all M bins
    std::mt19937_64 gen(29);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> x(784);
    double energy = 0.0;
    for (double& v : x) {
        v = d(gen);
        energy += v * v;
    }
    const RealDftPlan full(784, 784);
    const Matrix mag = full.magnitudes(Matrix::from_values(1, 784, x));
    double spec = 0.0;
    for (double v : mag.values()) {
        spec += v * v;
    }
    CHECK(spec / 784.0 == doctest::Approx(energy).epsilon(1e-12));

    CHECK_THROWS_AS((void)dft_halfspectrum_sqrtmag(std::vector<double>{}), InvalidArgument);
}

TEST_CASE("SplitMix64 reproduces pinned reference vectors") {
    std::ifstream in(KMKC_TEST_DATA_DIR "/rng_vectors.txt");
    REQUIRE(in.good());
    std::string line;
    int checked = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        Rng rng(std::stoull(tok, nullptr, 16));
        while (ss >> tok) {
            CHECK(rng.next_u64() == std::stoull(tok, nullptr, 16));
            ++checked;
        }
    }
    CHECK(checked == 25);
}

TEST_CASE("rng determinism, forks and bounded draws") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    // forks depend only on the seed and stream id
    Rng fresh(42);
    CHECK(a.fork(3).next_u64() == fresh.fork(3).next_u64());
    CHECK(fresh.fork(3).next_u64() != fresh.fork(4).next_u64());

    Rng r(1);
    std::vector<int> hist(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto v = r.uniform_index(7);
        REQUIRE(v < 7);
        ++hist[v];
    }
    for (int h : hist) {
        CHECK(std::abs(h - 10000) < 500);
    }
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform01();
        CHECK((u >= 0.0 && u < 1.0));
    }
    CHECK_THROWS_AS((void)r.uniform_index(0), InvalidArgument);
}

TEST_CASE("sampling without replacement") {
    Rng r(5);
    const auto p = sample_without_replacement(r, 5, 5);
    CHECK(std::set<std::size_t>(p.begin(), p.end()) == std::set<std::size_t>{0, 1, 2, 3, 4});
    const auto s = sample_without_replacement(r, 100, 100);
    CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 100);
    const auto t = sample_without_replacement(r, 1000, 10);
    CHECK(t.size() == 10);
    CHECK(std::set<std::size_t>(t.begin(), t.end()).size() == 10);
    CHECK_THROWS_AS((void)sample_without_replacement(r, 3, 4), InvalidArgument);
    Rng x(77), y(77);
    CHECK(sample_without_replacement(x, 50, 20) == sample_without_replacement(y, 50, 20));
}

TEST_CASE("parallel_for covers the range and rethrows") {
    ThreadGuard guard;
    set_thread_count(3);
    std::vector<int> hits(1000, 0);
    parallel_for(1000, 10, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            ++hits[i];
        }
    });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    CHECK_THROWS_AS(parallel_for(100, 1, [](std::size_t b, std::size_t) {
                        if (b == 0) {
                            throw InvalidArgument("boom");
                        }
                    }),
                    InvalidArgument);
}
