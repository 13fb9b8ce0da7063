#include "confide/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "confide/dataset.hpp"
#include "confide/errors.hpp"
#include "confide/metrics.hpp"
#include "confide/parallel.hpp"
#include "confide/rng.hpp"

namespace confide {

namespace {

int inverse_cdf(std::span<const double> probs, double u) {
    double acc = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        acc += probs[j];
        if (u < acc) return static_cast<int>(j);
    }
    return static_cast<int>(probs.size()) - 1;
}

} // namespace

SyntheticConfig SyntheticConfig::make(LabelSpace space, std::size_t n, ProbVector class_prior,
                                      ConfusionMatrix phi_star, double t_star, double rho,
                                      std::uint64_t seed, double concentration) {
    SyntheticConfig config;
    config.space = space;
    config.n = n;
    config.dirichlet_alpha.resize(static_cast<std::size_t>(space.k));
    for (int j = 0; j < space.k; ++j)
        config.dirichlet_alpha[static_cast<std::size_t>(j)] =
            class_prior[static_cast<std::size_t>(j)] * concentration;
    config.class_prior = std::move(class_prior);
    config.phi_star = std::move(phi_star);
    config.t_star = t_star;
    config.rho = rho;
    config.seed = seed;
    config.validate();
    return config;
}

void SyntheticConfig::validate() const {
    if (space.k < 2) throw Error("ConfigInvalid", "K must be at least 2");
    if (n == 0) throw Error("ConfigInvalid", "row count must be positive");
    if (class_prior.size() != space.k || phi_star.k() != space.k)
        throw Error("ConfigInvalid", "component K mismatch");
    if (dirichlet_alpha.size() != static_cast<std::size_t>(space.k))
        throw Error("ConfigInvalid", "dirichlet_alpha must have K entries");
    for (double a : dirichlet_alpha)
        if (!(a > 0.0)) throw Error("ConfigInvalid", "dirichlet_alpha entries must be positive");
    if (!(t_star > 0.0)) throw Error("ConfigInvalid", "t_star must be positive");
    if (!(rho >= 0.0 && rho <= 1.0)) throw Error("ConfigInvalid", "rho must lie in [0,1]");
}

SyntheticData generate(const SyntheticConfig& config) {
    config.validate();
    const int k = config.space.k;
    const std::size_t ks = static_cast<std::size_t>(k);
    const std::size_t n = config.n;

    // Flooring p at kProbFloor^(1/T*) keeps every reported m_i above the
    // probability floor, so tempering m at t_star inverts exactly.
    const double p_floor = std::pow(kProbFloor, 1.0 / std::max(config.t_star, 1.0));

    std::vector<int> hs(n), ys(n);
    std::vector<double> ms(n * ks), ps(n * ks);

#pragma omp parallel num_threads(confide::par::thread_count())
    {
        std::vector<double> p(ks), m(ks);
#pragma omp for schedule(static)
        for (long long row = 0; row < static_cast<long long>(n); ++row) {
            const std::size_t l = static_cast<std::size_t>(row);
            auto rng = sub_rng(config.seed, l);
            std::uniform_real_distribution<double> unif(0.0, 1.0);

            for (std::size_t j = 0; j < ks; ++j) {
                std::gamma_distribution<double> gamma(config.dirichlet_alpha[j], 1.0);
                p[j] = gamma(rng);
            }
            floor_and_normalize(p, p_floor);

            const int y = inverse_cdf(p, unif(rng));

            double mx = -HUGE_VAL;
            for (std::size_t j = 0; j < ks; ++j) {
                m[j] = config.t_star * std::log(p[j]);
                mx = std::max(mx, m[j]);
            }
            for (std::size_t j = 0; j < ks; ++j) m[j] = std::exp(m[j] - mx);
            floor_and_normalize(m);

            int h;
            const double u_dep = unif(rng);
            const double u_h = unif(rng);
            if (u_dep < config.rho) {
                h = static_cast<int>(std::max_element(m.begin(), m.end()) - m.begin());
            } else {
                // column y of phi_star as a distribution over h
                std::vector<double> col(ks);
                for (int i = 0; i < k; ++i) col[static_cast<std::size_t>(i)] = config.phi_star(i, y);
                h = inverse_cdf(col, u_h);
            }

            hs[l] = h;
            ys[l] = y;
            std::copy(p.begin(), p.end(), ps.begin() + static_cast<std::ptrdiff_t>(l * ks));
            std::copy(m.begin(), m.end(), ms.begin() + static_cast<std::ptrdiff_t>(l * ks));
        }
    }

    std::vector<Example> rows;
    rows.reserve(n);
    SyntheticData out;
    out.oracle_posteriors.reserve(n);
    for (std::size_t l = 0; l < n; ++l) {
        Example row;
        row.human_label = hs[l];
        row.true_label = ys[l];
        row.model_probs = ProbVector::from_normalized(
            std::vector<double>(ms.begin() + static_cast<std::ptrdiff_t>(l * ks),
                                ms.begin() + static_cast<std::ptrdiff_t>((l + 1) * ks)));
        rows.push_back(std::move(row));
        out.oracle_posteriors.push_back(ProbVector::from_normalized(
            std::vector<double>(ps.begin() + static_cast<std::ptrdiff_t>(l * ks),
                                ps.begin() + static_cast<std::ptrdiff_t>((l + 1) * ks))));
    }
    out.data = CombinationDataset(config.space, std::move(rows));
    return out;
}

std::vector<LearningCurvePoint> learning_curve(const CombinationDataset& train,
                                               const CombinationDataset& eval,
                                               FitMethod method, const FitOptions& opts,
                                               std::span<const std::size_t> sizes, int seeds,
                                               std::uint64_t base_seed) {
    if (eval.size() == 0 || eval.supervised_count() != eval.size())
        throw Error("NoSupervisedRows", "evaluation set must be fully labeled");
    if (seeds < 1) throw Error("ConfigInvalid", "need at least one seed");
    for (std::size_t s : sizes)
        if (s == 0 || s > train.size())
            throw Error("SizeTooLarge", "subsample size " + std::to_string(s) +
                                            " exceeds training rows " + std::to_string(train.size()));

    std::vector<int> truth(eval.size());
    for (std::size_t i = 0; i < eval.size(); ++i) truth[i] = *eval.rows()[i].true_label;

    const std::size_t cells = sizes.size() * static_cast<std::size_t>(seeds);
    std::vector<double> errors(cells, 0.0);

#pragma omp parallel for schedule(dynamic) num_threads(confide::par::thread_count())
    for (long long c = 0; c < static_cast<long long>(cells); ++c) {
        const std::size_t cell = static_cast<std::size_t>(c);
        const std::size_t si = cell / static_cast<std::size_t>(seeds);
        const std::size_t ri = cell % static_cast<std::size_t>(seeds);
        const std::size_t size = sizes[si];

        std::vector<std::size_t> order(train.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto rng = sub_rng(base_seed, size, ri);
        std::shuffle(order.begin(), order.end(), rng);
        const CombinationDataset sub =
            subset(train, std::span<const std::size_t>(order).first(size));

        const CombinerParams params = fit_combiner(sub, method, opts);
        std::vector<int> preds(eval.size());
        for (std::size_t i = 0; i < eval.size(); ++i)
            preds[i] = predict(params, eval.rows()[i].human_label, eval.rows()[i].model_probs).first;
        errors[cell] = error_rate(preds, truth);
    }

    std::vector<LearningCurvePoint> table;
    table.reserve(sizes.size());
    for (std::size_t si = 0; si < sizes.size(); ++si) {
        const double* cell = errors.data() + si * static_cast<std::size_t>(seeds);
        double mean = 0.0;
        for (int r = 0; r < seeds; ++r) mean += cell[r];
        mean /= static_cast<double>(seeds);
        double var = 0.0;
        for (int r = 0; r < seeds; ++r) var += (cell[r] - mean) * (cell[r] - mean);
        const double sd = seeds > 1 ? std::sqrt(var / static_cast<double>(seeds - 1)) : 0.0;
        table.push_back({sizes[si], mean, sd});
    }
    return table;
}

} // namespace confide
