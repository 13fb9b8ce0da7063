#include "confide/fit.hpp"

#include <algorithm>
#include <cmath>

#include "confide/errors.hpp"

namespace confide {

FitMethod fit_method_from_name(const std::string& name) {
    if (name == "pl-ml") return FitMethod::PlMl;
    if (name == "pl-map") return FitMethod::PlMap;
    if (name == "pl-em-ml") return FitMethod::PlEmMl;
    if (name == "pl-em-map") return FitMethod::PlEmMap;
    if (name == "ll") return FitMethod::Ll;
    if (name == "sp") return FitMethod::Sp;
    if (name == "lr") return FitMethod::Lr;
    if (name == "pl-bayes") return FitMethod::PlBayes;
    throw Error("ConfigInvalid", "unknown fit method '" + name + "'");
}

std::string fit_method_name(FitMethod m) {
    switch (m) {
        case FitMethod::PlMl: return "pl-ml";
        case FitMethod::PlMap: return "pl-map";
        case FitMethod::PlEmMl: return "pl-em-ml";
        case FitMethod::PlEmMap: return "pl-em-map";
        case FitMethod::Ll: return "ll";
        case FitMethod::Sp: return "sp";
        case FitMethod::Lr: return "lr";
        case FitMethod::PlBayes: return "pl-bayes";
    }
    throw Error("ConfigInvalid", "unknown fit method tag");
}

namespace {

double clamp_anchor(double a, int k) {
    const double lo = 1.0 / static_cast<double>(k) + 1e-3;
    return std::clamp(a, lo, 1.0 - 1e-3);
}

/// Dirichlet posterior mean (not mode), used by the fully Bayesian method.
ConfusionMatrix posterior_mean_confusion(const CombinationDataset& data,
                                         const DirichletPrior& prior) {
    const int k = data.k();
    const std::size_t ks = static_cast<std::size_t>(k);
    std::vector<double> counts(ks * ks, 0.0), col(ks, 0.0);
    for (const Example& row : data.rows()) {
        if (!row.true_label) continue;
        counts[static_cast<std::size_t>(row.human_label) * ks +
               static_cast<std::size_t>(*row.true_label)] += 1.0;
        col[static_cast<std::size_t>(*row.true_label)] += 1.0;
    }
    std::vector<double> e(ks * ks);
    for (int j = 0; j < k; ++j) {
        const double denom = prior.alpha_total() + col[static_cast<std::size_t>(j)];
        for (int i = 0; i < k; ++i) {
            const std::size_t idx = static_cast<std::size_t>(i) * ks + static_cast<std::size_t>(j);
            e[idx] = (prior.alpha(i, j) + counts[idx]) / denom;
        }
    }
    return ConfusionMatrix::from_entries(data.space(), std::move(e));
}

/// Dataset view where the "labeler" is the model's argmax.
CombinationDataset model_as_labeler(const CombinationDataset& data) {
    std::vector<Example> rows;
    rows.reserve(data.size());
    for (const Example& row : data.rows()) {
        Example copy = row;
        copy.human_label = row.model_probs.argmax();
        rows.push_back(std::move(copy));
    }
    return CombinationDataset(data.space(), std::move(rows));
}

ProbVector smoothed_class_prior(const CombinationDataset& data) {
    const int k = data.k();
    // Symmetric Dirichlet(1 + 1/K) mode over the label frequencies.
    std::vector<double> counts(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k));
    double total = 1.0;
    for (const Example& row : data.rows()) {
        if (!row.true_label) continue;
        counts[static_cast<std::size_t>(*row.true_label)] += 1.0;
        total += 1.0;
    }
    for (double& c : counts) c /= total;
    floor_and_normalize(counts);
    return ProbVector::from_normalized(std::move(counts));
}

} // namespace

double default_prior_anchor(const CombinationDataset& data) {
    if (data.supervised_count() == 0) return 0.7;
    std::size_t correct = 0;
    for (const Example& row : data.rows())
        if (row.true_label && row.model_probs.argmax() == *row.true_label) ++correct;
    return clamp_anchor(
        static_cast<double>(correct) / static_cast<double>(data.supervised_count()), data.k());
}

CombinerParams fit_combiner(const CombinationDataset& train, FitMethod method,
                            const FitOptions& opts) {
    const int k = train.k();
    const double anchor =
        clamp_anchor(opts.prior_accuracy.value_or(default_prior_anchor(train)), k);
    const auto prior = [&] {
        return prior_from_accuracy(anchor, train.space(), opts.prior_strength);
    };

    CombinerParams params;
    params.space = train.space();
    switch (method) {
        case FitMethod::PlMl:
            params.method = Method::PL;
            params.phi_human = estimate_mle(train);
            params.temperature = fit_temperature_ml(train, opts.fit_tol);
            break;
        case FitMethod::PlMap:
            params.method = Method::PL;
            params.phi_human = estimate_map(train, prior());
            params.temperature = fit_temperature_map(train, opts.temp_prior, opts.fit_tol);
            break;
        case FitMethod::PlEmMl:
        case FitMethod::PlEmMap: {
            EmConfig config;
            config.variant = method == FitMethod::PlEmMl ? EmVariant::ML : EmVariant::MAP;
            if (config.variant == EmVariant::MAP) {
                config.confusion_prior = prior();
                config.temp_prior = opts.temp_prior;
            }
            config.max_iters = opts.em_max_iters;
            config.loglik_tol = opts.em_tol;
            config.fit_tol = opts.fit_tol;
            auto [fitted, trace] = run_em(train, config);
            params = std::move(fitted);
            nlohmann::ordered_json t;
            t["iterations"] = trace.iterations;
            t["loglik"] = trace.loglik_history;
            t["converged"] = trace.converged;
            params.trace = std::move(t);
            break;
        }
        case FitMethod::Ll:
            if (train.supervised_count() == 0)
                throw Error("NoSupervisedRows", "L+L needs ground-truth labels");
            params.method = Method::LL;
            params.phi_human = estimate_map(train, prior());
            params.phi_model = estimate_map(model_as_labeler(train), prior());
            params.class_prior = smoothed_class_prior(train);
            break;
        case FitMethod::Sp: {
            if (train.supervised_count() == 0)
                throw Error("NoSupervisedRows", "SP needs ground-truth labels");
            params.method = Method::SP;
            // Beta posterior mode for the human's marginal accuracy,
            // anchored the same way as the confusion prior.
            double correct = 0.0, total = 0.0;
            for (const Example& row : train.rows()) {
                if (!row.true_label) continue;
                total += 1.0;
                if (row.human_label == *row.true_label) correct += 1.0;
            }
            const double diag = (anchor * opts.prior_strength + correct) /
                                (opts.prior_strength + total);
            params.sp_diag = clamp_anchor(diag, k);
            params.temperature = fit_temperature_map(train, opts.temp_prior, opts.fit_tol);
            break;
        }
        case FitMethod::Lr:
            params = fit_lr(train, opts.lr_l2, opts.lr_max_iters, opts.lr_tol);
            break;
        case FitMethod::PlBayes:
            params.method = Method::PL_BAYES;
            params.phi_human = posterior_mean_confusion(train, prior());
            params.tau_posterior =
                posterior_temperature(train, opts.temp_prior, opts.bayes_nodes);
            break;
    }
    params.validate();
    return params;
}

} // namespace confide
