#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "confide/confusion.hpp"
#include "confide/errors.hpp"
#include "helpers.hpp"

using namespace confide;
using test_helpers::row;

namespace {

CombinationDataset counted_dataset(int k, const std::vector<std::tuple<int, int, int>>& hyc) {
    // (h, y, count) triples with a flat model vector; only labels matter here.
    std::vector<Example> rows;
    const std::vector<double> flat(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k));
    for (const auto& [h, y, count] : hyc)
        for (int c = 0; c < count; ++c) rows.push_back(row(h, flat, y));
    return CombinationDataset(LabelSpace(k), std::move(rows));
}

double max_abs_diff(const ConfusionMatrix& a, const ConfusionMatrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.entries().size(); ++i)
        worst = std::max(worst, std::abs(a.entries()[i] - b.entries()[i]));
    return worst;
}

} // namespace

TEST_CASE("prior anchored at an accuracy has that accuracy as its mode") {
    const auto prior = prior_from_accuracy(0.9, LabelSpace(10), 9.0);
    CHECK(prior.gamma == doctest::Approx(9.1).epsilon(1e-12));
    CHECK(prior.beta == doctest::Approx(1.1).epsilon(1e-12));
    // Dirichlet mode oracle: (alpha_i - 1) / (alpha_0 - K)
    const double alpha0 = prior.gamma + 9.0 * prior.beta;
    CHECK((prior.gamma - 1.0) / (alpha0 - 10.0) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(prior.mode()(0, 0) == doctest::Approx(0.9).epsilon(1e-9));
    CHECK(prior.mode()(1, 0) == doctest::Approx(0.1 / 9.0).epsilon(1e-9));

    const auto sym = prior_from_accuracy(0.5, LabelSpace(2), 4.0);
    CHECK(sym.gamma == doctest::Approx(3.0));
    CHECK(sym.beta == doctest::Approx(3.0));
    CHECK(sym.mode()(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("prior anchor must exceed chance") {
    CHECK_THROWS_WITH_AS(prior_from_accuracy(0.1, LabelSpace(10), 5.0),
                         doctest::Contains("AccuracyOutOfRange"), Error);
    CHECK_THROWS_AS(prior_from_accuracy(1.0, LabelSpace(10), 5.0), Error);
}

TEST_CASE("mle estimate counts and normalizes") {
    const auto data = counted_dataset(2, {{0, 0, 8}, {1, 0, 2}, {1, 1, 10}});
    const auto phi = estimate_mle(data);
    CHECK(phi(0, 0) == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(phi(1, 0) == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(phi(0, 1) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(phi(1, 1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("mle falls back to uniform on unseen classes") {
    const auto data = counted_dataset(2, {{0, 0, 1}});
    const auto phi = estimate_mle(data);
    CHECK(phi(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(phi(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(phi(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("mle of an always-correct labeler is the identity") {
    const auto data = counted_dataset(3, {{0, 0, 5}, {1, 1, 5}, {2, 2, 5}});
    CHECK(max_abs_diff(estimate_mle(data), ConfusionMatrix::identity(LabelSpace(3))) < 1e-9);
}

TEST_CASE("mle requires supervised rows") {
    const auto data = CombinationDataset(
        LabelSpace(2), {row(0, {0.5, 0.5})});
    CHECK_THROWS_WITH_AS(estimate_mle(data), doctest::Contains("NoSupervisedRows"), Error);
}

TEST_CASE("map with no data returns the prior mode") {
    const auto prior = prior_from_accuracy(0.8, LabelSpace(4), 10.0);
    const auto phi = estimate_map(CombinationDataset(LabelSpace(4), {}), prior);
    for (int j = 0; j < 4; ++j) CHECK(phi(j, j) == doctest::Approx(0.8).epsilon(1e-9));
}

TEST_CASE("map posterior mode matches the hand-computed example") {
    // K=2, gamma=beta=3, column 0 counts (h=0: 8, h=1: 2)
    const DirichletPrior prior(LabelSpace(2), 3.0, 3.0);
    const auto data = counted_dataset(2, {{0, 0, 8}, {1, 0, 2}});
    const auto phi = estimate_map(data, prior);
    CHECK(phi(0, 0) == doctest::Approx(10.0 / 14.0).epsilon(1e-9));
    CHECK(phi(1, 0) == doctest::Approx(4.0 / 14.0).epsilon(1e-9));
}

TEST_CASE("map converges to mle for large samples") {
    const auto world = test_helpers::make_ci_data(5, 100000, 0.85, 1.0, 99);
    const auto prior = prior_from_accuracy(0.6, LabelSpace(5), 10.0);
    CHECK(max_abs_diff(estimate_map(world.data, prior), estimate_mle(world.data)) < 0.005);
}

TEST_CASE("map estimate is consistent for the true matrix") {
    const auto world = test_helpers::make_ci_data(10, 50000, 0.9, 1.0, 123);
    const auto prior = prior_from_accuracy(0.7, LabelSpace(10), 10.0);
    const auto phi_hat = estimate_map(world.data, prior);
    const auto phi_star = ConfusionMatrix::symmetric(LabelSpace(10), 0.9);
    CHECK(max_abs_diff(phi_hat, phi_star) < 0.02);
}

TEST_CASE("estimates are column-stochastic") {
    std::mt19937_64 rng(5);
    const auto world = test_helpers::make_ci_data(7, 500, 0.6, 1.0, 11);
    for (const auto& phi :
         {estimate_mle(world.data),
          estimate_map(world.data, prior_from_accuracy(0.5, LabelSpace(7), 3.0))}) {
        for (int j = 0; j < 7; ++j) {
            double col = 0.0;
            for (int i = 0; i < 7; ++i) {
                col += phi(i, j);
                CHECK(phi(i, j) >= kProbFloor);
            }
            CHECK(col == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("weak priors approach the mle on observed columns") {
    const auto data = counted_dataset(3, {{0, 0, 30}, {1, 0, 10}, {1, 1, 25}, {2, 2, 35}});
    const auto mle = estimate_mle(data);
    const auto map = estimate_map(data, DirichletPrior(LabelSpace(3), 1.0 + 1e-7, 1.0));
    CHECK(max_abs_diff(map, mle) < 1e-6);
}

TEST_CASE("map estimation is permutation-equivariant") {
    const auto data = counted_dataset(3, {{0, 0, 12}, {1, 0, 3}, {1, 1, 9}, {2, 1, 2}, {2, 2, 7}});
    const auto prior = prior_from_accuracy(0.7, LabelSpace(3), 6.0);
    const auto phi = estimate_map(data, prior);

    const int perm[3] = {2, 0, 1};
    std::vector<Example> relabeled;
    for (const auto& r : data.rows()) {
        Example e = r;
        e.human_label = perm[r.human_label];
        e.true_label = perm[*r.true_label];
        relabeled.push_back(std::move(e));
    }
    const auto phi_perm =
        estimate_map(CombinationDataset(LabelSpace(3), relabeled), prior);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(phi_perm(perm[i], perm[j]) == doctest::Approx(phi(i, j)).epsilon(1e-12));
}

TEST_CASE("human confidence is a plain lookup") {
    const auto identity = ConfusionMatrix::identity(LabelSpace(4));
    CHECK(human_confidence(identity, 0, 0) == doctest::Approx(1.0).epsilon(1e-9));
    const auto uniform = ConfusionMatrix::uniform(LabelSpace(4));
    CHECK(human_confidence(uniform, 2, 1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK_THROWS_AS(human_confidence(identity, 4, 0), Error);
}
