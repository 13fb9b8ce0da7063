#include "confide/combiner.hpp"

#include <algorithm>
#include <cmath>

#include "confide/errors.hpp"
#include "confide/kernels.hpp"

namespace confide {

std::string method_name(Method m) {
    switch (m) {
        case Method::PL: return "PL";
        case Method::PL_EM: return "PL_EM";
        case Method::LL: return "LL";
        case Method::SP: return "SP";
        case Method::LR: return "LR";
        case Method::PL_BAYES: return "PL_BAYES";
    }
    throw Error("ConfigInvalid", "unknown method tag");
}

Method method_from_name(const std::string& name) {
    if (name == "PL") return Method::PL;
    if (name == "PL_EM") return Method::PL_EM;
    if (name == "LL") return Method::LL;
    if (name == "SP") return Method::SP;
    if (name == "LR") return Method::LR;
    if (name == "PL_BAYES") return Method::PL_BAYES;
    throw Error("ConfigInvalid", "unknown method '" + name + "'");
}

ProbVector combine_pl(int h, const ProbVector& m, const ConfusionMatrix& phi, Temperature t) {
    const std::size_t k = static_cast<std::size_t>(m.size());
    std::vector<double> log_m(k), out(k);
    for (std::size_t j = 0; j < k; ++j) log_m[j] = std::log(m[j]);
    kernels::combine_pl_row(log_m, 1.0 / t.t, phi.row(h), out);
    return ProbVector::from_normalized(std::move(out));
}

ProbVector combine_ll(int h, int m_label, const ConfusionMatrix& phi_h,
                      const ConfusionMatrix& phi_m, const ProbVector& class_prior) {
    const std::size_t k = static_cast<std::size_t>(class_prior.size());
    std::vector<double> out(k);
    for (std::size_t j = 0; j < k; ++j)
        out[j] = class_prior[j] * phi_h(h, static_cast<int>(j)) * phi_m(m_label, static_cast<int>(j));
    floor_and_normalize(out);
    return ProbVector::from_normalized(std::move(out));
}

ProbVector combine_sp(int h, const ProbVector& m, double sp_diag, Temperature t) {
    const int k = m.size();
    if (!(sp_diag > 1.0 / static_cast<double>(k) && sp_diag < 1.0))
        throw Error("SpOutOfRange", "sp_diag must lie in (1/K, 1)");
    return combine_pl(h, m, ConfusionMatrix::symmetric(LabelSpace(k), sp_diag), t);
}

namespace {

void softmax_inplace(std::vector<double>& u) {
    const double mx = *std::max_element(u.begin(), u.end());
    double s = 0.0;
    for (double& x : u) {
        x = std::exp(x - mx);
        s += x;
    }
    for (double& x : u) x /= s;
}

// logits = W z + b for z = log(m) (+) onehot(h)
void lr_logits(const LrWeights& lr, int h, std::span<const double> log_m,
               std::vector<double>& out) {
    const std::size_t k = static_cast<std::size_t>(lr.k);
    out.assign(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        const double* wrow = lr.w.data() + i * 2 * k;
        double u = lr.b[i];
        for (std::size_t j = 0; j < k; ++j) u += wrow[j] * log_m[j];
        u += wrow[k + static_cast<std::size_t>(h)];
        out[i] = u;
    }
}

} // namespace

ProbVector lr_posterior(const LrWeights& lr, int h, const ProbVector& m) {
    const std::size_t k = static_cast<std::size_t>(m.size());
    std::vector<double> log_m(k);
    for (std::size_t j = 0; j < k; ++j) log_m[j] = std::log(m[j]);
    std::vector<double> u;
    lr_logits(lr, h, log_m, u);
    softmax_inplace(u);
    floor_and_normalize(u);
    return ProbVector::from_normalized(std::move(u));
}

namespace {

struct LrBatch {
    std::size_t n = 0;
    std::vector<double> log_m;
    std::vector<int> hs, ys;

    static LrBatch pack(const CombinationDataset& data) {
        LrBatch batch;
        const int k = data.k();
        for (const Example& row : data.rows()) {
            if (!row.true_label) continue;
            for (int j = 0; j < k; ++j)
                batch.log_m.push_back(std::log(row.model_probs[static_cast<std::size_t>(j)]));
            batch.hs.push_back(row.human_label);
            batch.ys.push_back(*row.true_label);
        }
        batch.n = batch.hs.size();
        return batch;
    }
};

double lr_eval(const LrBatch& batch, const LrWeights& p, double l2, std::vector<double>* grad_w,
               std::vector<double>* grad_b) {
    const std::size_t ks = static_cast<std::size_t>(p.k);
    const std::size_t nw = ks * 2 * ks;
    if (grad_w) {
        grad_w->assign(nw, 0.0);
        grad_b->assign(ks, 0.0);
    }
    std::vector<double> u(ks);
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.n);
    for (std::size_t l = 0; l < batch.n; ++l) {
        const double* z = batch.log_m.data() + l * ks;
        lr_logits(p, batch.hs[l], {z, ks}, u);
        const double mx = *std::max_element(u.begin(), u.end());
        double lse = 0.0;
        for (double x : u) lse += std::exp(x - mx);
        lse = mx + std::log(lse);
        loss += (lse - u[static_cast<std::size_t>(batch.ys[l])]) * inv_n;
        if (!grad_w) continue;
        for (std::size_t i = 0; i < ks; ++i) {
            double g = std::exp(u[i] - lse);
            if (static_cast<int>(i) == batch.ys[l]) g -= 1.0;
            g *= inv_n;
            (*grad_b)[i] += g;
            double* gw = grad_w->data() + i * 2 * ks;
            for (std::size_t j = 0; j < ks; ++j) gw[j] += g * z[j];
            gw[ks + static_cast<std::size_t>(batch.hs[l])] += g;
        }
    }
    for (std::size_t i = 0; i < nw; ++i) {
        loss += l2 * p.w[i] * p.w[i];
        if (grad_w) (*grad_w)[i] += 2.0 * l2 * p.w[i];
    }
    return loss;
}

} // namespace

double lr_objective(const CombinationDataset& data, const LrWeights& lr, double l2,
                    std::vector<double>* grad_w, std::vector<double>* grad_b) {
    if (data.supervised_count() == 0)
        throw Error("NoSupervisedRows", "LR objective needs ground-truth labels");
    return lr_eval(LrBatch::pack(data), lr, l2, grad_w, grad_b);
}

CombinerParams fit_lr(const CombinationDataset& data, double l2, int max_iters, double tol) {
    const int k = data.k();
    if (data.supervised_count() < static_cast<std::size_t>(k))
        throw Error("TooFewRows", "LR needs at least K supervised rows");

    const LrBatch batch = LrBatch::pack(data);
    const std::size_t ks = static_cast<std::size_t>(k);
    const std::size_t nw = ks * 2 * ks;

    LrWeights lr;
    lr.k = k;
    lr.w.assign(nw, 0.0);
    lr.b.assign(ks, 0.0);

    std::vector<double> grad_w(nw), grad_b(ks);
    auto evaluate = [&](const LrWeights& p, bool want_grad) {
        return lr_eval(batch, p, l2, want_grad ? &grad_w : nullptr, want_grad ? &grad_b : nullptr);
    };

    double step = 1.0;
    double loss = evaluate(lr, true);
    for (int it = 0; it < max_iters; ++it) {
        if (!std::isfinite(loss)) throw Error("NonFinite", "LR objective diverged");
        double gmax = 0.0, gsq = 0.0;
        for (double g : grad_w) {
            gmax = std::max(gmax, std::abs(g));
            gsq += g * g;
        }
        for (double g : grad_b) {
            gmax = std::max(gmax, std::abs(g));
            gsq += g * g;
        }
        if (gmax < tol) break;

        // Backtracking line search on the full-batch objective.
        LrWeights trial = lr;
        double trial_loss = HUGE_VAL;
        while (step > 1e-16) {
            for (std::size_t i = 0; i < nw; ++i) trial.w[i] = lr.w[i] - step * grad_w[i];
            for (std::size_t i = 0; i < ks; ++i) trial.b[i] = lr.b[i] - step * grad_b[i];
            trial_loss = evaluate(trial, false);
            if (trial_loss <= loss - 1e-4 * step * gsq) break;
            step *= 0.5;
        }
        if (step <= 1e-16) break; // no further progress possible
        lr.w.swap(trial.w);
        lr.b.swap(trial.b);
        loss = evaluate(lr, true);
        step = std::min(step * 2.0, 1e4);
    }

    CombinerParams params;
    params.method = Method::LR;
    params.space = data.space();
    params.lr = std::move(lr);
    return params;
}

void CombinerParams::validate() const {
    auto need = [&](bool ok, const char* field) {
        if (!ok)
            throw Error("MethodFieldMissing",
                        method_name(method) + " parameters require field '" + field + "'");
    };
    switch (method) {
        case Method::PL:
        case Method::PL_EM:
            need(phi_human.has_value(), "phi");
            need(temperature.has_value(), "temperature");
            break;
        case Method::LL:
            need(phi_human.has_value(), "phi");
            need(phi_model.has_value(), "phi_model");
            need(class_prior.has_value(), "class_prior");
            break;
        case Method::SP:
            need(sp_diag.has_value(), "sp_diag");
            need(temperature.has_value(), "temperature");
            break;
        case Method::LR:
            need(lr.has_value(), "lr_w");
            break;
        case Method::PL_BAYES:
            need(phi_human.has_value(), "phi");
            need(tau_posterior.has_value(), "tau_grid");
            break;
    }
}

std::pair<int, ProbVector> predict(const CombinerParams& params, int h, const ProbVector& m) {
    params.validate();
    if (m.size() != params.space.k) throw Error("InconsistentK", "probability vector length");
    if (h < 0 || h >= params.space.k) throw Error("LabelOutOfRange", "human label");
    ProbVector post;
    switch (params.method) {
        case Method::PL:
        case Method::PL_EM:
            post = combine_pl(h, m, *params.phi_human, *params.temperature);
            break;
        case Method::LL:
            post = combine_ll(h, m.argmax(), *params.phi_human, *params.phi_model,
                              *params.class_prior);
            break;
        case Method::SP:
            post = combine_sp(h, m, *params.sp_diag, *params.temperature);
            break;
        case Method::LR:
            post = lr_posterior(*params.lr, h, m);
            break;
        case Method::PL_BAYES: {
            const ProbVector cal = bayes_calibrated_probs(m, *params.tau_posterior);
            const std::size_t k = static_cast<std::size_t>(m.size());
            std::vector<double> out(k);
            for (std::size_t j = 0; j < k; ++j)
                out[j] = cal[j] * (*params.phi_human)(h, static_cast<int>(j));
            floor_and_normalize(out);
            post = ProbVector::from_normalized(std::move(out));
            break;
        }
    }
    return {post.argmax(), post};
}

nlohmann::ordered_json CombinerParams::to_json() const {
    validate();
    nlohmann::ordered_json j;
    j["method"] = method_name(method);
    j["k"] = space.k;
    if (phi_human) j["phi"] = phi_human->entries();
    if (phi_model) j["phi_model"] = phi_model->entries();
    if (class_prior) j["class_prior"] = class_prior->probs();
    if (temperature) j["temperature"] = temperature->t;
    if (tau_posterior) {
        j["tau_grid"] = tau_posterior->grid;
        j["tau_weights"] = tau_posterior->weights;
    }
    if (sp_diag) j["sp_diag"] = *sp_diag;
    if (lr) {
        j["lr_w"] = lr->w;
        j["lr_b"] = lr->b;
    }
    if (!meta.is_null()) j["meta"] = meta;
    if (!trace.is_null()) j["trace"] = trace;
    return j;
}

CombinerParams CombinerParams::from_json(const nlohmann::json& j) {
    static const std::vector<std::string> known = {
        "method", "k",        "phi",         "phi_model", "class_prior", "temperature",
        "tau_grid", "tau_weights", "sp_diag", "lr_w",      "lr_b",        "meta",
        "trace"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw Error("ConfigInvalid", "unknown parameter key '" + it.key() + "'");

    CombinerParams p;
    p.method = method_from_name(j.at("method").get<std::string>());
    p.space = LabelSpace(j.at("k").get<int>());
    const std::size_t k = static_cast<std::size_t>(p.space.k);
    if (j.contains("phi"))
        p.phi_human = ConfusionMatrix::from_entries(p.space, j.at("phi").get<std::vector<double>>());
    if (j.contains("phi_model"))
        p.phi_model =
            ConfusionMatrix::from_entries(p.space, j.at("phi_model").get<std::vector<double>>());
    if (j.contains("class_prior")) {
        const auto v = j.at("class_prior").get<std::vector<double>>();
        p.class_prior = ProbVector::validated(v, p.space.k);
    }
    if (j.contains("temperature")) p.temperature = Temperature(j.at("temperature").get<double>());
    if (j.contains("tau_grid") || j.contains("tau_weights")) {
        TemperaturePosterior post;
        post.grid = j.at("tau_grid").get<std::vector<double>>();
        post.weights = j.at("tau_weights").get<std::vector<double>>();
        if (post.grid.size() != post.weights.size() || post.grid.empty())
            throw Error("ConfigInvalid", "tau_grid / tau_weights mismatch");
        p.tau_posterior = std::move(post);
    }
    if (j.contains("sp_diag")) p.sp_diag = j.at("sp_diag").get<double>();
    if (j.contains("lr_w")) {
        LrWeights lr;
        lr.k = p.space.k;
        lr.w = j.at("lr_w").get<std::vector<double>>();
        lr.b = j.at("lr_b").get<std::vector<double>>();
        if (lr.w.size() != k * 2 * k || lr.b.size() != k)
            throw Error("ConfigInvalid", "LR weight shapes");
        p.lr = std::move(lr);
    }
    if (j.contains("meta")) p.meta = j.at("meta");
    if (j.contains("trace")) p.trace = j.at("trace");
    p.validate();
    return p;
}

} // namespace confide
