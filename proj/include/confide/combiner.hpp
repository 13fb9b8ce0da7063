#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "confide/calibration.hpp"
#include "confide/confusion.hpp"
#include "confide/types.hpp"

namespace confide {

enum class Method { PL, PL_EM, LL, SP, LR, PL_BAYES };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

/// Multinomial logistic head over z = log(m) (+) onehot(h):
/// posterior = softmax(W z + b), W is K x 2K row-major.
struct LrWeights {
    int k = 0;
    std::vector<double> w; // k rows, 2k columns, row-major
    std::vector<double> b; // k
};

/// Fitted parameters for any combination method. Exactly the fields the
/// method requires are populated (checked on use and on deserialization).
struct CombinerParams {
    Method method = Method::PL;
    LabelSpace space;
    std::optional<ConfusionMatrix> phi_human;        // PL, PL_EM, LL, PL_BAYES
    std::optional<ConfusionMatrix> phi_model;        // LL
    std::optional<ProbVector> class_prior;           // LL
    std::optional<Temperature> temperature;          // PL, PL_EM, SP
    std::optional<TemperaturePosterior> tau_posterior; // PL_BAYES
    std::optional<double> sp_diag;                   // SP
    std::optional<LrWeights> lr;                     // LR
    nlohmann::ordered_json meta;                     // fit configuration echo
    nlohmann::ordered_json trace;                    // EM trace, when applicable

    void validate() const; // MethodFieldMissing on violations

    nlohmann::ordered_json to_json() const;
    static CombinerParams from_json(const nlohmann::json& j);
};

/// Eq.-style product rule: posterior_j proportional to
/// phi[h][j] * temper(m, t)[j].
ProbVector combine_pl(int h, const ProbVector& m, const ConfusionMatrix& phi, Temperature t);

/// Naive-Bayes rule over two hard labels:
/// posterior_j proportional to prior_j * phi_h[h][j] * phi_m[m_label][j].
ProbVector combine_ll(int h, int m_label, const ConfusionMatrix& phi_h,
                      const ConfusionMatrix& phi_m, const ProbVector& class_prior);

/// Single-parameter confusion: symmetric matrix with sp_diag on the
/// diagonal, then the product rule. sp_diag must lie in (1/K, 1).
ProbVector combine_sp(int h, const ProbVector& m, double sp_diag, Temperature t);

/// LR posterior for one row.
ProbVector lr_posterior(const LrWeights& lr, int h, const ProbVector& m);

/// Mean cross-entropy over the supervised rows plus l2 * ||W||^2; fills the
/// gradient arrays (k x 2k and k) when given.
double lr_objective(const CombinationDataset& data, const LrWeights& lr, double l2,
                    std::vector<double>* grad_w = nullptr, std::vector<double>* grad_b = nullptr);

/// Full-batch first-order fit of the LR combiner with backtracking line
/// search. Needs at least K supervised rows.
CombinerParams fit_lr(const CombinationDataset& data, double l2 = 1e-4, int max_iters = 2000,
                      double tol = 1e-6);

/// Posterior + argmax label (ties to the smallest index) for any method.
std::pair<int, ProbVector> predict(const CombinerParams& params, int h, const ProbVector& m);

} // namespace confide
