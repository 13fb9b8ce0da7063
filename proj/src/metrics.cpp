#include "confide/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "confide/errors.hpp"

namespace confide {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b || a == 0)
        throw Error("LengthMismatch", "prediction/truth lists must be nonempty and equal length");
}

/// Indices sorted ascending by key (stable: ties keep input order), then
/// chopped into `bins` contiguous groups whose sizes differ by at most one;
/// the r = n % bins larger groups sit at the low-key end.
struct EqualMassBins {
    std::vector<std::size_t> order;
    std::vector<std::size_t> offsets; // bins+1 boundaries into order

    EqualMassBins(std::span<const double> keys, int bins) {
        const std::size_t n = keys.size();
        order.resize(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
        const std::size_t b = static_cast<std::size_t>(bins);
        const std::size_t q = n / b, r = n % b;
        offsets.assign(b + 1, 0);
        for (std::size_t i = 0; i < b; ++i) offsets[i + 1] = offsets[i] + q + (i < r ? 1 : 0);
    }
};

} // namespace

double error_rate(std::span<const int> preds, std::span<const int> truth) {
    check_lengths(preds.size(), truth.size());
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] != truth[i]) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(preds.size());
}

double nll(std::span<const ProbVector> posteriors, std::span<const int> truth) {
    check_lengths(posteriors.size(), truth.size());
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        s -= std::log(std::max(posteriors[i][static_cast<std::size_t>(truth[i])], kProbFloor));
    return s / static_cast<double>(truth.size());
}

double ece(std::span<const ProbVector> posteriors, std::span<const int> truth, int bins) {
    check_lengths(posteriors.size(), truth.size());
    const std::size_t n = posteriors.size();
    if (bins < 1 || n < static_cast<std::size_t>(bins))
        throw Error("TooFewRows", "need at least `bins` rows for equal-mass binning");

    std::vector<double> conf(n);
    std::vector<int> pred(n);
    for (std::size_t i = 0; i < n; ++i) {
        pred[i] = posteriors[i].argmax();
        conf[i] = posteriors[i][static_cast<std::size_t>(pred[i])];
    }
    const EqualMassBins em(conf, bins);
    double total = 0.0;
    for (int b = 0; b < bins; ++b) {
        const std::size_t lo = em.offsets[static_cast<std::size_t>(b)];
        const std::size_t hi = em.offsets[static_cast<std::size_t>(b) + 1];
        if (lo == hi) continue;
        double acc = 0.0, mean_conf = 0.0;
        for (std::size_t p = lo; p < hi; ++p) {
            const std::size_t i = em.order[p];
            acc += pred[i] == truth[i] ? 1.0 : 0.0;
            mean_conf += conf[i];
        }
        const double nb = static_cast<double>(hi - lo);
        total += nb / static_cast<double>(n) * std::abs(acc / nb - mean_conf / nb);
    }
    return total;
}

double cw_ece(std::span<const ProbVector> posteriors, std::span<const int> truth, int bins) {
    check_lengths(posteriors.size(), truth.size());
    const std::size_t n = posteriors.size();
    if (bins < 1 || n < static_cast<std::size_t>(bins))
        throw Error("TooFewRows", "need at least `bins` rows for equal-mass binning");
    const int k = posteriors[0].size();

    std::vector<double> pj(n);
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < n; ++i) pj[i] = posteriors[i][static_cast<std::size_t>(j)];
        const EqualMassBins em(pj, bins);
        double ece_j = 0.0;
        for (int b = 0; b < bins; ++b) {
            const std::size_t lo = em.offsets[static_cast<std::size_t>(b)];
            const std::size_t hi = em.offsets[static_cast<std::size_t>(b) + 1];
            if (lo == hi) continue;
            double freq = 0.0, mean_p = 0.0;
            for (std::size_t p = lo; p < hi; ++p) {
                const std::size_t i = em.order[p];
                freq += truth[i] == j ? 1.0 : 0.0;
                mean_p += pj[i];
            }
            const double nb = static_cast<double>(hi - lo);
            ece_j += nb / static_cast<double>(n) * std::abs(freq / nb - mean_p / nb);
        }
        total += ece_j;
    }
    return total / static_cast<double>(k);
}

double mce_l1(std::span<const ProbVector> posteriors, std::span<const int> truth, int bins,
              std::span<const ProbVector> oracle_posteriors) {
    check_lengths(posteriors.size(), truth.size());
    const std::size_t n = posteriors.size();

    if (!oracle_posteriors.empty()) {
        if (oracle_posteriors.size() != n)
            throw Error("LengthMismatch", "oracle posterior count mismatch");
        // sum_j p(y=j) E[|p(y=j|m) - m_j| | y=j] collapses to a single mean
        // over rows when the true conditionals are known.
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t y = static_cast<std::size_t>(truth[i]);
            s += std::abs(oracle_posteriors[i][y] - posteriors[i][y]);
        }
        return s / static_cast<double>(n);
    }

    if (bins < 1 || n < static_cast<std::size_t>(bins))
        throw Error("TooFewRows", "need at least `bins` rows for equal-mass binning");
    const int k = posteriors[0].size();
    std::vector<double> pj(n);
    std::vector<std::size_t> bin_of(n);
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < n; ++i) pj[i] = posteriors[i][static_cast<std::size_t>(j)];
        const EqualMassBins em(pj, bins);
        std::vector<double> freq(static_cast<std::size_t>(bins), 0.0);
        for (int b = 0; b < bins; ++b) {
            const std::size_t lo = em.offsets[static_cast<std::size_t>(b)];
            const std::size_t hi = em.offsets[static_cast<std::size_t>(b) + 1];
            double f = 0.0;
            for (std::size_t p = lo; p < hi; ++p) {
                bin_of[em.order[p]] = static_cast<std::size_t>(b);
                f += truth[em.order[p]] == j ? 1.0 : 0.0;
            }
            if (hi > lo) freq[static_cast<std::size_t>(b)] = f / static_cast<double>(hi - lo);
        }
        // E[|p_hat(y=j|m_j) - m_j| | y=j], weighted by p(y=j) = n_j / n.
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (truth[i] == j) s += std::abs(freq[bin_of[i]] - pj[i]);
        total += s / static_cast<double>(n);
    }
    return total;
}

MetricsReport evaluate_metrics(std::span<const ProbVector> posteriors, std::span<const int> truth,
                               int bins, std::span<const ProbVector> oracle_posteriors) {
    MetricsReport report;
    report.n = posteriors.size();
    report.bins = bins;
    std::vector<int> preds(posteriors.size());
    for (std::size_t i = 0; i < posteriors.size(); ++i) preds[i] = posteriors[i].argmax();
    report.error_rate = error_rate(preds, truth);
    report.nll = nll(posteriors, truth);
    report.ece = ece(posteriors, truth, bins);
    report.cw_ece = cw_ece(posteriors, truth, bins);
    if (!oracle_posteriors.empty())
        report.mce_l1 = mce_l1(posteriors, truth, bins, oracle_posteriors);
    return report;
}

} // namespace confide
