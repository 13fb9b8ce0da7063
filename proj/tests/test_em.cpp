#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "confide/em.hpp"
#include "confide/errors.hpp"
#include "helpers.hpp"

using namespace confide;
using test_helpers::row;

namespace {

EmConfig map_config(int k, double anchor = 0.7) {
    EmConfig config;
    config.variant = EmVariant::MAP;
    config.confusion_prior = prior_from_accuracy(anchor, LabelSpace(k), 10.0);
    config.temp_prior = LogTempPrior(0.5, 0.5);
    return config;
}

std::vector<double> one_hot_resp(const CombinationDataset& data) {
    const std::size_t k = static_cast<std::size_t>(data.k());
    std::vector<double> resp(data.size() * k, kProbFloor);
    for (std::size_t l = 0; l < data.size(); ++l) {
        double* r = resp.data() + l * k;
        r[static_cast<std::size_t>(*data.rows()[l].true_label)] =
            1.0 - static_cast<double>(k - 1) * kProbFloor;
    }
    return resp;
}

} // namespace

TEST_CASE("e-step rows equal the product rule") {
    const auto world = test_helpers::make_ci_data(4, 50, 0.8, 1.5, 3);
    const auto phi = ConfusionMatrix::symmetric(LabelSpace(4), 0.75);
    const Temperature t(1.4);
    const auto resp = e_step(world.data, phi, t);
    for (std::size_t l = 0; l < world.data.size(); ++l) {
        const auto& r = world.data.rows()[l];
        const auto expected = combine_pl(r.human_label, r.model_probs, phi, t);
        double total = 0.0;
        for (int j = 0; j < 4; ++j) {
            CHECK(resp[l * 4 + static_cast<std::size_t>(j)] ==
                  doctest::Approx(expected[static_cast<std::size_t>(j)]).epsilon(1e-12));
            total += resp[l * 4 + static_cast<std::size_t>(j)];
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("e-step degenerate confusion matrices") {
    const auto world = test_helpers::make_ci_data(3, 20, 0.8, 1.0, 5);
    const auto identity_resp = e_step(world.data, ConfusionMatrix::identity(LabelSpace(3)),
                                      Temperature(1.0));
    for (std::size_t l = 0; l < world.data.size(); ++l) {
        const int h = world.data.rows()[l].human_label;
        CHECK(identity_resp[l * 3 + static_cast<std::size_t>(h)] > 1.0 - 1e-6);
    }

    const Temperature t(1.9);
    const auto uniform_resp =
        e_step(world.data, ConfusionMatrix::uniform(LabelSpace(3)), t);
    for (std::size_t l = 0; l < world.data.size(); ++l) {
        const auto tempered = temper(world.data.rows()[l].model_probs, t);
        for (int j = 0; j < 3; ++j)
            CHECK(uniform_resp[l * 3 + static_cast<std::size_t>(j)] ==
                  doctest::Approx(tempered[static_cast<std::size_t>(j)]).epsilon(1e-12));
    }
}

TEST_CASE("confusion m-step with hard responsibilities reduces to counting") {
    const auto world = test_helpers::make_ci_data(3, 400, 0.8, 1.0, 9);
    const auto resp = one_hot_resp(world.data);

    const auto ml = m_step_confusion(world.data, resp, EmVariant::ML, {});
    const auto mle = estimate_mle(world.data);
    for (std::size_t i = 0; i < ml.entries().size(); ++i)
        CHECK(ml.entries()[i] == doctest::Approx(mle.entries()[i]).epsilon(1e-6));

    const auto prior = prior_from_accuracy(0.7, LabelSpace(3), 10.0);
    const auto map = m_step_confusion(world.data, resp, EmVariant::MAP, prior);
    const auto map_direct = estimate_map(world.data, prior);
    for (std::size_t i = 0; i < map.entries().size(); ++i)
        CHECK(map.entries()[i] == doctest::Approx(map_direct.entries()[i]).epsilon(1e-6));
}

TEST_CASE("confusion m-step with uniform responsibilities gives the h marginal") {
    const auto world = test_helpers::make_ci_data(3, 300, 0.7, 1.0, 13);
    std::vector<double> resp(world.data.size() * 3, 1.0 / 3.0);
    const auto phi = m_step_confusion(world.data, resp, EmVariant::ML, {});
    std::vector<double> marginal(3, 0.0);
    for (const auto& r : world.data.rows())
        marginal[static_cast<std::size_t>(r.human_label)] += 1.0 / static_cast<double>(world.data.size());
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(phi(i, j) == doctest::Approx(marginal[static_cast<std::size_t>(i)]).epsilon(1e-9));
}

TEST_CASE("map confusion m-step with no rows returns the prior mode") {
    const CombinationDataset empty(LabelSpace(3), {});
    const auto prior = prior_from_accuracy(0.8, LabelSpace(3), 10.0);
    const auto phi = m_step_confusion(empty, {}, EmVariant::MAP, prior);
    for (int j = 0; j < 3; ++j) CHECK(phi(j, j) == doctest::Approx(0.8).epsilon(1e-9));
}

TEST_CASE("temperature m-step with hard responsibilities matches the direct fits") {
    const auto world = test_helpers::make_ci_data(5, 2000, 0.85, 2.0, 17);
    const auto resp = one_hot_resp(world.data);

    const double t_ml = m_step_temperature(world.data, resp, EmVariant::ML, {}).t;
    const double t_direct = fit_temperature_ml(world.data).t;
    CHECK(t_ml == doctest::Approx(t_direct).epsilon(1e-3));

    const LogTempPrior prior(0.5, 0.5);
    const double t_map = m_step_temperature(world.data, resp, EmVariant::MAP, prior).t;
    const double t_map_direct = fit_temperature_map(world.data, prior).t;
    CHECK(t_map == doctest::Approx(t_map_direct).epsilon(1e-3));
}

TEST_CASE("temperature m-step with uniform responsibilities flattens") {
    const auto world = test_helpers::make_ci_data(4, 200, 0.8, 1.0, 19);
    std::vector<double> resp(world.data.size() * 4, 0.25);
    // sum_j log p_j is maximized by the uniform vector, so the optimizer
    // pushes toward the largest temperature in the domain.
    const double t = m_step_temperature(world.data, resp, EmVariant::ML, {}).t;
    CHECK(t > 900.0);
}

TEST_CASE("temperature m-step is self-consistent at the fixed point") {
    std::mt19937_64 rng(21);
    std::vector<Example> rows;
    std::vector<double> resp;
    for (int i = 0; i < 200; ++i) {
        const auto m = test_helpers::random_prob(rng, 3, 0.8);
        rows.push_back(row(0, m.probs()));
        for (int j = 0; j < 3; ++j) resp.push_back(m[static_cast<std::size_t>(j)]);
    }
    const CombinationDataset data(LabelSpace(3), rows);
    const double t = m_step_temperature(data, resp, EmVariant::ML, {}).t;
    CHECK(t == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("em recovers confusion and temperature without ground truth") {
    const auto world = test_helpers::make_ci_data(10, 10000, 0.95, 2.5, 23, 0.2);
    const auto unlabeled = test_helpers::strip_labels(world.data);

    const auto [params, trace] = run_em(unlabeled, map_config(10));
    CHECK(params.temperature->t > 2.3);
    CHECK(params.temperature->t < 2.7);
    for (int j = 0; j < 10; ++j) {
        CHECK((*params.phi_human)(j, j) > 0.90);
        CHECK((*params.phi_human)(j, j) < 1.0);
    }
    CHECK(trace.converged);

    for (std::size_t i = 1; i < trace.loglik_history.size(); ++i)
        CHECK(trace.loglik_history[i] >= trace.loglik_history[i - 1] - 1e-8);
}

TEST_CASE("em never reads the true labels") {
    const auto world = test_helpers::make_ci_data(5, 800, 0.85, 2.0, 29);

    // adversarially shuffle the true labels; the fit must be bit-identical
    auto shuffled_rows = world.data.rows();
    std::mt19937_64 rng(31);
    for (auto& r : shuffled_rows) r.true_label = static_cast<int>(rng() % 5);
    const CombinationDataset shuffled(LabelSpace(5), shuffled_rows);

    const auto config = map_config(5);
    const auto [a, trace_a] = run_em(world.data, config);
    const auto [b, trace_b] = run_em(shuffled, config);
    CHECK(a.temperature->t == b.temperature->t);
    for (std::size_t i = 0; i < a.phi_human->entries().size(); ++i)
        CHECK(a.phi_human->entries()[i] == b.phi_human->entries()[i]);
    CHECK(trace_a.iterations == trace_b.iterations);
}

TEST_CASE("em on perfectly agreeing one-hot data converges immediately") {
    std::vector<Example> rows;
    for (int i = 0; i < 60; ++i) {
        const int c = i % 3;
        std::vector<double> m(3, 0.0);
        m[static_cast<std::size_t>(c)] = 1.0;
        rows.push_back(row(c, m));
    }
    const CombinationDataset data(LabelSpace(3), rows);
    EmConfig config;
    config.variant = EmVariant::ML;
    const auto [params, trace] = run_em(data, config);
    CHECK(trace.iterations <= 2);
    for (int j = 0; j < 3; ++j) CHECK((*params.phi_human)(j, j) > 0.99);
}

TEST_CASE("em is equivariant under class relabeling") {
    const auto world = test_helpers::make_ci_data(4, 1500, 0.85, 2.0, 37);
    const auto unlabeled = test_helpers::strip_labels(world.data);

    const int perm[4] = {2, 3, 1, 0};
    std::vector<Example> permuted;
    for (const auto& r : unlabeled.rows()) {
        Example e;
        e.human_label = perm[r.human_label];
        std::vector<double> m(4);
        for (int j = 0; j < 4; ++j)
            m[static_cast<std::size_t>(perm[j])] = r.model_probs[static_cast<std::size_t>(j)];
        e.model_probs = ProbVector::validated(m, 4);
        permuted.push_back(std::move(e));
    }
    const CombinationDataset permuted_data(LabelSpace(4), permuted);

    const auto config = map_config(4);
    const auto [a, ta] = run_em(unlabeled, config);
    const auto [b, tb] = run_em(permuted_data, config);
    CHECK(a.temperature->t == doctest::Approx(b.temperature->t).epsilon(1e-6));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK((*b.phi_human)(perm[i], perm[j]) ==
                  doctest::Approx((*a.phi_human)(i, j)).epsilon(1e-6));
}

TEST_CASE("map em requires its priors") {
    EmConfig config;
    config.variant = EmVariant::MAP;
    const auto world = test_helpers::make_ci_data(3, 10, 0.8, 1.0, 41);
    CHECK_THROWS_WITH_AS(run_em(world.data, config), doctest::Contains("ConfigInvalid"), Error);
}
