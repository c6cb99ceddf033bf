#include "doctest.h"
#include "synthetic.hpp"

#include "kmkc/error.hpp"
#include "kmkc/experiment.hpp"
#include "kmkc/patch_classifier.hpp"

#include <numeric>

using namespace kmkc;

namespace {

// 16 patches x K scores where patch p prefers class winners[p].
Matrix scores_for(const std::vector<std::size_t>& winners, std::size_t classes, double strength = 1.0) {
    Matrix s(winners.size(), classes);
    for (std::size_t p = 0; p < winners.size(); ++p) {
        s(p, winners[p]) = strength;
    }
    return s;
}

}  // namespace

TEST_CASE("unanimous patches decide the image") {
    const Matrix s = scores_for(std::vector<std::size_t>(16, 3), 10);
    const VoteResult r = tally_votes(s, std::vector<std::uint8_t>(16, 1));
    REQUIRE(r.winner.has_value());
    CHECK(*r.winner == 3);
    CHECK(r.votes[3] == 16);
    CHECK(r.valid_patches == 16);
}

TEST_CASE("an 8/8 split goes to the larger score sum, then to the lower class") {
    std::vector<std::size_t> w(16);
    for (std::size_t p = 0; p < 16; ++p) {
        w[p] = p < 8 ? 6 : 2;
    }
    Matrix s = scores_for(w, 10);
    const std::vector<std::uint8_t> all(16, 1);
    CHECK(*tally_votes(s, all).winner == 2);  // equal sums: lower index
    s(0, 6) = 1.5;
    CHECK(*tally_votes(s, all).winner == 6);  // class 6 now has the larger sum
    s(15, 2) = 1.5;
    CHECK(*tally_votes(s, all).winner == 2);
    // a strict majority beats any score sum
    s(15, 2) = 0.0;
    s(15, 6) = 0.1;
    const VoteResult r = tally_votes(s, all);
    CHECK(r.votes[6] == 9);
    CHECK(*r.winner == 6);
}

TEST_CASE("votes are conserved and masked patches abstain") {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> d(-1, 1);
    for (int t = 0; t < 50; ++t) {
        Matrix s(16, 10);
        for (std::size_t i = 0; i < s.size(); ++i) {
            s.data()[i] = d(gen);
        }
        std::vector<std::uint8_t> valid(16);
        for (auto& v : valid) {
            v = d(gen) > -0.5;
        }
        const VoteResult r = tally_votes(s, valid);
        const std::size_t n_valid = static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
        CHECK(std::accumulate(r.votes.begin(), r.votes.end(), std::size_t{0}) == n_valid);
        CHECK(r.valid_patches == n_valid);
        CHECK(r.winner.has_value() == (n_valid > 0));
    }
    CHECK_THROWS_AS((void)tally_votes(Matrix(4, 2), std::vector<std::uint8_t>(3, 1)), DimensionError);
}

TEST_CASE("patch model learns synthetic strokes") {
    const auto [train_x, train_y] = synthetic::strokes(3, 30, 12, 1);
    const auto [test_x, test_y] = synthetic::strokes(3, 10, 12, 2);
    PatchTrainingOptions opts;
    opts.patch_side = 10;
    opts.kmeans.clusters = 6;
    const PatchTrainResult r = train_patch_model(train_x, train_y, opts, Rng(3));
    CHECK(r.model.inner.support.rows() == 18);
    CHECK(r.model.inner.support.cols() == 100);
    CHECK(r.patches_per_class == std::vector<std::size_t>{270, 270, 270});
    CHECK(r.residual <= 1e-8);

    std::size_t correct = 0;
    const auto votes = classify_by_vote(r.model, test_x);
    for (std::size_t i = 0; i < test_x.count; ++i) {
        REQUIRE(votes[i].winner.has_value());
        CHECK(votes[i].valid_patches == 9);
        correct += *votes[i].winner == test_y.labels[i];
        const VoteResult single = classify_by_vote(r.model, test_x.image(i));
        CHECK(single.winner == votes[i].winner);
        CHECK(single.votes == votes[i].votes);
    }
    CHECK(correct >= 28);
}

TEST_CASE("blank images are unclassifiable") {
    const auto [train_x, train_y] = synthetic::strokes(2, 10, 8, 4);
    PatchTrainingOptions opts;
    opts.patch_side = 6;
    opts.kmeans.clusters = 3;
    const PatchModel m = train_patch_model(train_x, train_y, opts, Rng(1)).model;
    const std::vector<std::uint8_t> blank(64, 0);
    CHECK_THROWS_AS((void)classify_by_vote(m, blank), Unclassifiable);
    ImageSet set;
    set.count = 1;
    set.rows = set.cols = 8;
    set.pixels = blank;
    const auto v = classify_by_vote(m, set);
    CHECK_FALSE(v[0].winner.has_value());
    CHECK(predict(store_patch_model(m), set) == std::vector<std::int32_t>{-1});
    CHECK_THROWS_AS((void)classify_by_vote(m, std::vector<std::uint8_t>(49, 1)), DimensionError);
}

TEST_CASE("full-size patches reproduce the raw pipeline exactly") {
    const auto [train_x, train_y] = synthetic::strokes(4, 25, 10, 5);
    const auto [test_x, test_y] = synthetic::strokes(4, 15, 10, 6);
    ModelSettings raw;
    raw.q = 5;
    ModelSettings patch = raw;
    patch.regime = {FeatureMode::patch, 10};
    const FitOutcome a = fit_model(train_x, train_y, raw, 9);
    const FitOutcome b = fit_model(train_x, train_y, patch, 9);
    CHECK(a.model.model == b.model.model);
    CHECK(predict(a.model, test_x) == predict(b.model, test_x));
}

TEST_CASE("patch training rejects classes with too few patches") {
    const auto [x, y] = synthetic::strokes(2, 2, 8, 7);
    PatchTrainingOptions opts;
    opts.patch_side = 8;  // one patch per image, two images per class
    opts.kmeans.clusters = 3;
    CHECK_THROWS_AS((void)train_patch_model(x, y, opts, Rng(1)), InvalidArgument);
    opts.patch_side = 9;
    CHECK_THROWS_AS((void)train_patch_model(x, y, opts, Rng(1)), InvalidArgument);
}
