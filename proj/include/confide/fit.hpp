#pragma once

#include <optional>
#include <string>

#include "confide/combiner.hpp"
#include "confide/em.hpp"
#include "confide/types.hpp"

namespace confide {

/// CLI-level method tags (Table-of-methods naming).
enum class FitMethod { PlMl, PlMap, PlEmMl, PlEmMap, Ll, Sp, Lr, PlBayes };

FitMethod fit_method_from_name(const std::string& name);
std::string fit_method_name(FitMethod m);

struct FitOptions {
    /// Anchor for the confusion prior mode. Defaults to the model's argmax
    /// accuracy on whatever supervised rows exist, else 0.7.
    std::optional<double> prior_accuracy;
    double prior_strength = 10.0;
    LogTempPrior temp_prior{0.5, 0.5};
    double fit_tol = 1e-6;
    int em_max_iters = 500;
    double em_tol = 1e-6;
    double lr_l2 = 1e-4;
    int lr_max_iters = 2000;
    double lr_tol = 1e-6;
    int bayes_nodes = 513;
};

/// Anchor accuracy used when none is given: model argmax accuracy on the
/// supervised rows, 0.7 without any; clamped into (1/K, 1).
double default_prior_anchor(const CombinationDataset& data);

/// Fits any method on `train` and returns its parameters (with EM trace
/// attached for the EM variants).
CombinerParams fit_combiner(const CombinationDataset& train, FitMethod method,
                            const FitOptions& opts);

} // namespace confide
