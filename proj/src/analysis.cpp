#include "confide/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "confide/combiner.hpp"
#include "confide/errors.hpp"
#include "confide/metrics.hpp"

namespace confide {

namespace {

double odds(double c) {
    const double denom = 1.0 - c;
    if (denom <= 0.0) return kOddsCap;
    return std::min(c / denom, kOddsCap);
}

void require_supervised(const CombinationDataset& data) {
    if (data.size() == 0 || data.supervised_count() != data.size())
        throw Error("NoSupervisedRows", "every row needs a ground-truth label");
}

} // namespace

double confidence_ratio_model(const ProbVector& m, Temperature t, int y) {
    return odds(temper(m, t)[static_cast<std::size_t>(y)]);
}

double confidence_ratio_human(const ConfusionMatrix& phi, int h, int y) {
    return odds(human_confidence(phi, h, y));
}

BoundReport theorem1_report(const CombinationDataset& data, const ConfusionMatrix& phi,
                            Temperature t) {
    require_supervised(data);
    const int k = data.k();
    BoundReport report;
    report.n = data.size();

    std::size_t correct = 0, weak = 0, strong = 0;
    for (const Example& row : data.rows()) {
        const int y = *row.true_label;
        const int h = row.human_label;
        const ProbVector cal = temper(row.model_probs, t);
        const ProbVector post = combine_pl(h, row.model_probs, phi, t);
        if (post.argmax() == y) ++correct;

        const double my = cal[static_cast<std::size_t>(y)];
        const double phy = phi(h, y);
        // Strict inequality, matching the final line of the proof.
        if (odds(my) > 1.0 / odds(phy)) ++weak;

        double max_m = 0.0, max_phi = 0.0;
        for (int j = 0; j < k; ++j) {
            if (j == y) continue;
            max_m = std::max(max_m, cal[static_cast<std::size_t>(j)]);
            max_phi = std::max(max_phi, phi(h, j));
        }
        if (my / std::max(max_m, 1.0 / kOddsCap) >
            max_phi / std::max(phy, 1.0 / kOddsCap))
            ++strong;
    }
    const double n = static_cast<double>(report.n);
    report.empirical_accuracy = static_cast<double>(correct) / n;
    report.bound_weak = static_cast<double>(weak) / n;
    report.bound_strong = static_cast<double>(strong) / n;
    if (k == 2) report.binary_gap = report.empirical_accuracy - report.bound_weak;
    return report;
}

EstimationErrorReport theorem2_report(const CombinationDataset& data,
                                      std::span<const ProbVector> oracle_posteriors,
                                      const ConfusionMatrix& phi_true,
                                      const ConfusionMatrix& phi_hat, Temperature t) {
    require_supervised(data);
    if (oracle_posteriors.size() != data.size())
        throw Error("OracleRequired", "theorem2_report needs one oracle posterior per row");

    double eta = 0.0;
    std::vector<ProbVector> tempered;
    tempered.reserve(data.size());
    for (std::size_t l = 0; l < data.size(); ++l) {
        const Example& row = data.rows()[l];
        const int y = *row.true_label;
        const int h = row.human_label;
        tempered.push_back(temper(row.model_probs, t));
        const double truth_side = phi_true(h, y) * oracle_posteriors[l][static_cast<std::size_t>(y)];
        const double est_side =
            tempered.back()[static_cast<std::size_t>(y)] * phi_hat(h, y);
        eta += std::abs(truth_side - est_side);
    }
    eta /= static_cast<double>(data.size());

    double l1 = 0.0;
    for (std::size_t i = 0; i < phi_true.entries().size(); ++i)
        l1 += std::abs(phi_true.entries()[i] - phi_hat.entries()[i]);

    std::vector<int> truth(data.size());
    for (std::size_t l = 0; l < data.size(); ++l) truth[l] = *data.rows()[l].true_label;
    const double mce = mce_l1(tempered, truth, 15, oracle_posteriors);

    EstimationErrorReport report;
    report.eta_mean = eta;
    report.bound = l1 + mce;
    report.holds = eta <= report.bound + 1e-9;
    return report;
}

bool lemma1_check(double a1, double b1, double a2, double b2) {
    return std::abs(a1 * b1 - a2 * b2) <= std::abs(a1 - a2) + std::abs(b1 - b2);
}

DependenceReport cmi_discrete(const CombinationDataset& data) {
    require_supervised(data);
    const int k = data.k();
    const std::size_t ks = static_cast<std::size_t>(k);
    const double n = static_cast<double>(data.size());

    // Joint counts over (model label, human label, true label).
    std::vector<double> c_mhy(ks * ks * ks, 0.0);
    std::vector<double> c_my(ks * ks, 0.0), c_hy(ks * ks, 0.0), c_mh(ks * ks, 0.0);
    std::vector<double> c_y(ks, 0.0), c_m(ks, 0.0), c_h(ks, 0.0);
    std::vector<double> shift_sum(ks, 0.0), shift_sum_hy(ks, 0.0), shift_n(ks, 0.0),
        shift_n_hy(ks, 0.0);

    for (const Example& row : data.rows()) {
        const std::size_t m = static_cast<std::size_t>(row.model_probs.argmax());
        const std::size_t h = static_cast<std::size_t>(row.human_label);
        const std::size_t y = static_cast<std::size_t>(*row.true_label);
        c_mhy[(m * ks + h) * ks + y] += 1.0;
        c_my[m * ks + y] += 1.0;
        c_hy[h * ks + y] += 1.0;
        c_mh[m * ks + h] += 1.0;
        c_y[y] += 1.0;
        c_m[m] += 1.0;
        c_h[h] += 1.0;

        shift_sum[y] += row.model_probs[y];
        shift_n[y] += 1.0;
        if (h == y) {
            shift_sum_hy[y] += row.model_probs[y];
            shift_n_hy[y] += 1.0;
        }
    }

    DependenceReport report;
    double cmi = 0.0;
    for (std::size_t y = 0; y < ks; ++y) {
        if (c_y[y] == 0.0) continue;
        for (std::size_t m = 0; m < ks; ++m)
            for (std::size_t h = 0; h < ks; ++h) {
                const double joint = c_mhy[(m * ks + h) * ks + y];
                if (joint == 0.0) continue;
                cmi += joint / n *
                       std::log(joint * c_y[y] / (c_my[m * ks + y] * c_hy[h * ks + y]));
            }
    }
    double mi = 0.0;
    for (std::size_t m = 0; m < ks; ++m)
        for (std::size_t h = 0; h < ks; ++h) {
            const double joint = c_mh[m * ks + h];
            if (joint == 0.0) continue;
            mi += joint / n * std::log(joint * n / (c_m[m] * c_h[h]));
        }
    report.cmi = std::max(cmi, 0.0);
    report.mi = std::max(mi, 0.0);

    report.per_class_shift.resize(ks);
    for (std::size_t y = 0; y < ks; ++y) {
        ClassShift& s = report.per_class_shift[y];
        s.mean_given_y = shift_n[y] > 0.0 ? shift_sum[y] / shift_n[y] : 0.0;
        s.mean_given_y_and_hy = shift_n_hy[y] > 0.0 ? shift_sum_hy[y] / shift_n_hy[y] : 0.0;
    }
    return report;
}

} // namespace confide
