#include "confide/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "confide/errors.hpp"
#include "confide/kernels.hpp"

namespace confide {

Temperature::Temperature(double t_) : t(t_) {
    if (!(t > 0.0) || !std::isfinite(t))
        throw Error("BadTemperature", "temperature must be positive and finite");
    t = std::clamp(t, 1e-3, 1e3);
}

double Temperature::tau() const { return std::log(t); }

LogTempPrior::LogTempPrior(double mu_, double sigma_) : mu(mu_), sigma(sigma_) {
    if (!(sigma > 0.0)) throw Error("BadPrior", "sigma must be positive");
}

ProbVector temper(const ProbVector& m, Temperature t) {
    const std::size_t k = static_cast<std::size_t>(m.size());
    std::vector<double> log_m(k), out(k);
    for (std::size_t j = 0; j < k; ++j) log_m[j] = std::log(m[j]);
    kernels::tempered_row(log_m, 1.0 / t.t, out);
    return ProbVector::from_normalized(std::move(out));
}

double nll_of_temperature(const CombinationDataset& data, double tau) {
    if (data.supervised_count() == 0)
        throw Error("NoSupervisedRows", "temperature NLL needs ground-truth labels");
    const PackedData packed = PackedData::from(data);
    return kernels::nll_sum(packed, tau) / static_cast<double>(data.supervised_count());
}

namespace detail {

double minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                       double tie_center, double tol) {
    constexpr int kCoarse = 64;
    double best_x = lo, best_f = HUGE_VAL, worst_f = -HUGE_VAL;
    int best_i = 0;
    std::vector<double> xs(kCoarse), fs(kCoarse);
    for (int i = 0; i < kCoarse; ++i) {
        xs[static_cast<std::size_t>(i)] =
            lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kCoarse - 1);
        fs[static_cast<std::size_t>(i)] = f(xs[static_cast<std::size_t>(i)]);
        const double fi = fs[static_cast<std::size_t>(i)];
        worst_f = std::max(worst_f, fi);
        // Ties on the coarse grid go to the point nearest the tie center.
        if (fi < best_f ||
            (fi == best_f && std::abs(xs[static_cast<std::size_t>(i)] - tie_center) <
                                 std::abs(best_x - tie_center))) {
            best_f = fi;
            best_x = xs[static_cast<std::size_t>(i)];
            best_i = i;
        }
    }
    if (worst_f - best_f <= 1e-12 * std::max(1.0, std::abs(best_f)))
        return std::clamp(tie_center, lo, hi);

    double a = xs[static_cast<std::size_t>(std::max(0, best_i - 1))];
    double b = xs[static_cast<std::size_t>(std::min(kCoarse - 1, best_i + 1))];

    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

} // namespace detail

Temperature fit_temperature_ml(const CombinationDataset& data, double tol) {
    if (data.supervised_count() == 0)
        throw Error("NoSupervisedRows", "ML temperature fit needs ground-truth labels");
    const PackedData packed = PackedData::from(data);
    const double n = static_cast<double>(data.supervised_count());
    auto objective = [&](double tau) { return kernels::nll_sum(packed, tau) / n; };
    const double tau = detail::minimize_scalar(objective, kTauMin, kTauMax, 0.0, tol);
    return Temperature(std::exp(tau));
}

Temperature fit_temperature_map(const CombinationDataset& data, const LogTempPrior& prior,
                                double tol) {
    if (data.supervised_count() == 0) return Temperature(std::exp(prior.mu));
    const PackedData packed = PackedData::from(data);
    const double inv_two_var = 1.0 / (2.0 * prior.sigma * prior.sigma);
    auto objective = [&](double tau) {
        const double d = tau - prior.mu;
        return kernels::nll_sum(packed, tau) + d * d * inv_two_var;
    };
    const double tau = detail::minimize_scalar(objective, kTauMin, kTauMax, prior.mu, tol);
    return Temperature(std::exp(tau));
}

TemperaturePosterior posterior_temperature(const CombinationDataset& data,
                                           const LogTempPrior& prior, int nodes) {
    if (data.supervised_count() == 0)
        throw Error("NoSupervisedRows", "temperature posterior needs ground-truth labels");
    if (nodes < 33 || nodes % 2 == 0)
        throw Error("ConfigInvalid", "quadrature nodes must be odd and at least 33");

    const double tau_map = fit_temperature_map(data, prior).tau();
    const double lo = std::min(prior.mu - 4.0 * prior.sigma, tau_map - 2.0);
    const double hi = std::max(prior.mu + 4.0 * prior.sigma, tau_map + 2.0);

    const PackedData packed = PackedData::from(data);
    const double inv_two_var = 1.0 / (2.0 * prior.sigma * prior.sigma);

    TemperaturePosterior post;
    post.grid.resize(static_cast<std::size_t>(nodes));
    post.weights.resize(static_cast<std::size_t>(nodes));
    double max_lp = -HUGE_VAL;
    for (int g = 0; g < nodes; ++g) {
        const double tau =
            lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(nodes - 1);
        post.grid[static_cast<std::size_t>(g)] = tau;
        const double d = tau - prior.mu;
        const double lp = -kernels::nll_sum(packed, tau) - d * d * inv_two_var;
        post.weights[static_cast<std::size_t>(g)] = lp;
        max_lp = std::max(max_lp, lp);
    }
    double total = 0.0;
    for (double& w : post.weights) {
        w = std::exp(w - max_lp);
        total += w;
    }
    for (double& w : post.weights) w /= total;
    return post;
}

ProbVector bayes_calibrated_probs(const ProbVector& m, const TemperaturePosterior& post) {
    if (post.grid.empty() || post.grid.size() != post.weights.size())
        throw Error("ConfigInvalid", "empty or inconsistent temperature posterior");
    const std::size_t k = static_cast<std::size_t>(m.size());
    std::vector<double> log_m(k), row(k), acc(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) log_m[j] = std::log(m[j]);
    for (std::size_t g = 0; g < post.grid.size(); ++g) {
        kernels::tempered_row(log_m, std::exp(-post.grid[g]), row);
        for (std::size_t j = 0; j < k; ++j) acc[j] += post.weights[g] * row[j];
    }
    floor_and_normalize(acc);
    return ProbVector::from_normalized(std::move(acc));
}

} // namespace confide
