// confide: combine a hard labeler's class decisions with a probabilistic
// classifier's calibrated probabilities into a single posterior.
//
// Subcommands: simulate | fit | combine | evaluate | learning-curve |
// diagnose | theory. All reports are JSON; datasets are CSV or JSONL.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "confide/analysis.hpp"
#include "confide/combiner.hpp"
#include "confide/dataset.hpp"
#include "confide/errors.hpp"
#include "confide/fit.hpp"
#include "confide/metrics.hpp"
#include "confide/simulate.hpp"
#include "confide/version.hpp"

namespace {

using confide::Error;
using nlohmann::ordered_json;

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoError", "cannot write " + path);
    out << content;
}

void emit_json(const ordered_json& j, const std::string& out_path) {
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty()) std::cout << text;
    else write_file(out_path, text);
}

ordered_json metrics_json(const confide::MetricsReport& r) {
    ordered_json j;
    j["n"] = r.n;
    j["error_rate"] = r.error_rate;
    j["nll"] = r.nll;
    j["ece"] = r.ece;
    j["cw_ece"] = r.cw_ece;
    if (r.mce_l1) j["mce_l1"] = *r.mce_l1;
    j["bins"] = r.bins;
    return j;
}

std::vector<confide::ProbVector> load_oracle_csv(const std::string& path, int k) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error("ParseError", "line 1: empty oracle file");
    std::vector<confide::ProbVector> oracle;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<double> vals;
        while (std::getline(ss, field, ',')) vals.push_back(std::stod(field));
        if (static_cast<int>(vals.size()) != k + 1)
            throw Error("ParseError", "line " + std::to_string(line_no) + ": expected row," +
                                          std::to_string(k) + " posterior entries");
        oracle.push_back(confide::ProbVector::validated(
            std::span<const double>(vals).subspan(1), k));
    }
    return oracle;
}

void save_oracle_csv(const std::vector<confide::ProbVector>& oracle, const std::string& path) {
    std::ostringstream out;
    const int k = oracle.empty() ? 0 : oracle.front().size();
    out << "row";
    for (int j = 0; j < k; ++j) out << ",o_" << j;
    out << "\n";
    for (std::size_t i = 0; i < oracle.size(); ++i) {
        out << i;
        for (int j = 0; j < k; ++j) out << ',' << fmt17(oracle[i][static_cast<std::size_t>(j)]);
        out << "\n";
    }
    write_file(path, out.str());
}

/// Applies values from --config for every option the user did not pass on
/// the command line (flags win on conflict). Unknown keys are rejected.
void apply_config_file(CLI::App* cmd, const std::string& config_path) {
    std::ifstream in(config_path);
    if (!in) throw Error("IoError", "cannot open " + config_path);
    nlohmann::json config;
    try {
        in >> config;
    } catch (const std::exception& e) {
        throw Error("ParseError", std::string("config: ") + e.what());
    }
    for (auto it = config.begin(); it != config.end(); ++it) {
        CLI::Option* opt = nullptr;
        for (CLI::Option* candidate : cmd->get_options()) {
            if (candidate->get_lnames().empty()) continue;
            if (candidate->get_lnames()[0] == it.key()) {
                opt = candidate;
                break;
            }
        }
        if (opt == nullptr)
            throw Error("ConfigInvalid", "unknown config key '" + it.key() + "'");
        if (opt->count() > 0) continue; // explicit flag wins
        if (it.value().is_array()) {
            for (const auto& v : it.value())
                opt->add_result(v.is_string() ? v.get<std::string>() : v.dump());
        } else {
            opt->add_result(it.value().is_string() ? it.value().get<std::string>()
                                                   : it.value().dump());
        }
    }
}

struct FitFlags {
    std::string method;
    double prior_accuracy = -1.0; // <0 means "derive from data"
    double prior_strength = 10.0;
    double temp_mu = 0.5;
    double temp_sigma = 0.5;
    double tol = 1e-6;
    int em_max_iters = 500;
    double em_tol = 1e-6;
    double lr_l2 = 1e-4;
    int lr_max_iters = 2000;
    double lr_tol = 1e-6;
    int bayes_nodes = 513;

    void add_to(CLI::App* cmd, bool need_method = true) {
        auto* m = cmd->add_option("--method", method,
                                  "pl-ml|pl-map|pl-em-ml|pl-em-map|ll|sp|lr|pl-bayes");
        if (need_method) m->required();
        cmd->add_option("--prior-accuracy", prior_accuracy,
                        "confusion prior anchor (default: model accuracy on labeled rows)");
        cmd->add_option("--prior-strength", prior_strength, "pseudo-observations per column");
        cmd->add_option("--temp-mu", temp_mu, "log-temperature prior mean");
        cmd->add_option("--temp-sigma", temp_sigma, "log-temperature prior stddev");
        cmd->add_option("--tol", tol, "1-D search tolerance");
        cmd->add_option("--em-max-iters", em_max_iters);
        cmd->add_option("--em-tol", em_tol);
        cmd->add_option("--lr-l2", lr_l2);
        cmd->add_option("--lr-max-iters", lr_max_iters);
        cmd->add_option("--lr-tol", lr_tol);
        cmd->add_option("--bayes-nodes", bayes_nodes);
    }

    confide::FitOptions options() const {
        confide::FitOptions opts;
        if (prior_accuracy > 0.0) opts.prior_accuracy = prior_accuracy;
        opts.prior_strength = prior_strength;
        opts.temp_prior = confide::LogTempPrior(temp_mu, temp_sigma);
        opts.fit_tol = tol;
        opts.em_max_iters = em_max_iters;
        opts.em_tol = em_tol;
        opts.lr_l2 = lr_l2;
        opts.lr_max_iters = lr_max_iters;
        opts.lr_tol = lr_tol;
        opts.bayes_nodes = bayes_nodes;
        return opts;
    }

    ordered_json echo() const {
        ordered_json j;
        j["method"] = method;
        if (prior_accuracy > 0.0) j["prior_accuracy"] = prior_accuracy;
        j["prior_strength"] = prior_strength;
        j["temp_mu"] = temp_mu;
        j["temp_sigma"] = temp_sigma;
        j["tol"] = tol;
        j["em_max_iters"] = em_max_iters;
        j["em_tol"] = em_tol;
        j["lr_l2"] = lr_l2;
        j["lr_max_iters"] = lr_max_iters;
        j["lr_tol"] = lr_tol;
        j["bayes_nodes"] = bayes_nodes;
        return j;
    }
};

int run(int argc, char** argv) {
    CLI::App app{"combine hard labels with model probabilities"};
    app.require_subcommand(1);
    app.set_version_flag("--version", confide::kVersion);

    // ---- simulate ----------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "generate a synthetic CI dataset");
    std::string sim_config, sim_out, sim_oracle_out, sim_echo_out;
    int sim_k = 10;
    std::size_t sim_n = 1000;
    double sim_conc = 5.0, sim_phi_diag = 0.9, sim_t_star = 1.0, sim_rho = 0.0;
    std::uint64_t sim_seed = 0;
    std::vector<double> sim_prior, sim_phi;
    sim->add_option("--config", sim_config, "JSON config; explicit flags win");
    sim->add_option("--k", sim_k);
    sim->add_option("--n", sim_n);
    sim->add_option("--class-prior", sim_prior, "K values (default uniform)");
    sim->add_option("--concentration", sim_conc, "Dirichlet concentration");
    sim->add_option("--phi-diag", sim_phi_diag, "symmetric confusion diagonal");
    sim->add_option("--phi", sim_phi, "full row-major K*K confusion matrix");
    sim->add_option("--t-star", sim_t_star);
    sim->add_option("--rho", sim_rho, "dependence knob in [0,1]");
    sim->add_option("--seed", sim_seed);
    sim->add_option("--out", sim_out)->required();
    sim->add_option("--oracle-out", sim_oracle_out, "default: <out>.oracle.csv");
    sim->add_option("--echo-out", sim_echo_out, "default: <out>.config.json");

    // ---- fit ---------------------------------------------------------
    auto* fit = app.add_subcommand("fit", "fit combination parameters");
    std::string fit_config, fit_train, fit_out;
    FitFlags fit_flags;
    fit->add_option("--config", fit_config, "JSON config; explicit flags win");
    fit->add_option("--train", fit_train)->required();
    fit->add_option("--out", fit_out)->required();
    fit_flags.add_to(fit);

    // ---- combine -----------------------------------------------------
    auto* comb = app.add_subcommand("combine", "emit per-row combined posteriors");
    std::string comb_params, comb_data, comb_out;
    comb->add_option("--params", comb_params)->required();
    comb->add_option("--data", comb_data)->required();
    comb->add_option("--out", comb_out)->required();

    // ---- evaluate ------------------------------------------------------
    auto* eval = app.add_subcommand("evaluate", "score model, combination, and human");
    std::string eval_params, eval_data, eval_oracle, eval_out;
    int eval_bins = 15;
    eval->add_option("--params", eval_params)->required();
    eval->add_option("--data", eval_data)->required();
    eval->add_option("--bins", eval_bins);
    eval->add_option("--oracle", eval_oracle, "oracle posterior CSV (adds mce_l1)");
    eval->add_option("--out", eval_out, "report path (default stdout)");

    // ---- learning-curve ------------------------------------------------
    auto* lc = app.add_subcommand("learning-curve", "error vs training-set size");
    std::string lc_train, lc_eval, lc_out, lc_json_out;
    std::vector<std::size_t> lc_sizes;
    int lc_seeds = 10;
    std::uint64_t lc_seed = 0;
    FitFlags lc_flags;
    lc->add_option("--train", lc_train)->required();
    lc->add_option("--eval", lc_eval)->required();
    lc->add_option("--sizes", lc_sizes, "training sizes")->required()->delimiter(',');
    lc->add_option("--seeds", lc_seeds, "repeats per size");
    lc->add_option("--seed", lc_seed, "base seed");
    lc->add_option("--out", lc_out, "CSV table path")->required();
    lc->add_option("--json-out", lc_json_out, "optional JSON copy");
    lc_flags.add_to(lc);

    // ---- diagnose ------------------------------------------------------
    auto* diag = app.add_subcommand("diagnose", "conditional-dependence diagnostics");
    std::string diag_data, diag_out;
    diag->add_option("--data", diag_data)->required();
    diag->add_option("--out", diag_out, "report path (default stdout)");

    // ---- theory --------------------------------------------------------
    auto* theory = app.add_subcommand("theory", "accuracy bound and estimation-error checks");
    std::string th_params, th_data, th_oracle, th_phi_true, th_out;
    theory->add_option("--params", th_params)->required();
    theory->add_option("--data", th_data)->required();
    theory->add_option("--oracle", th_oracle, "oracle posterior CSV (enables estimation bound)");
    theory->add_option("--phi-true", th_phi_true, "params JSON holding the true phi");
    theory->add_option("--out", th_out, "report path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    if (sim->parsed()) {
        if (!sim_config.empty()) apply_config_file(sim, sim_config);
        const confide::LabelSpace space(sim_k);
        if (sim_prior.empty())
            sim_prior.assign(static_cast<std::size_t>(sim_k), 1.0 / static_cast<double>(sim_k));
        const auto prior = confide::ProbVector::validated(sim_prior, sim_k);
        confide::ConfusionMatrix phi =
            sim_phi.empty() ? confide::ConfusionMatrix::symmetric(space, sim_phi_diag)
                            : confide::ConfusionMatrix::from_entries(space, sim_phi);
        const auto config = confide::SyntheticConfig::make(space, sim_n, prior, phi, sim_t_star,
                                                           sim_rho, sim_seed, sim_conc);
        const auto result = confide::generate(config);
        confide::save_dataset(result.data, sim_out);
        save_oracle_csv(result.oracle_posteriors,
                        sim_oracle_out.empty() ? sim_out + ".oracle.csv" : sim_oracle_out);
        ordered_json echo;
        echo["version"] = confide::kVersion;
        echo["k"] = sim_k;
        echo["n"] = sim_n;
        echo["class_prior"] = prior.probs();
        echo["dirichlet_alpha"] = config.dirichlet_alpha;
        echo["phi_star"] = phi.entries();
        echo["t_star"] = sim_t_star;
        echo["rho"] = sim_rho;
        echo["seed"] = sim_seed;
        emit_json(echo, sim_echo_out.empty() ? sim_out + ".config.json" : sim_echo_out);
        return 0;
    }

    if (fit->parsed()) {
        if (!fit_config.empty()) apply_config_file(fit, fit_config);
        const auto data = confide::load_dataset(fit_train);
        const auto method = confide::fit_method_from_name(fit_flags.method);
        confide::CombinerParams params = confide::fit_combiner(data, method, fit_flags.options());
        ordered_json meta = fit_flags.echo();
        meta["train"] = fit_train;
        meta["version"] = confide::kVersion;
        params.meta = std::move(meta);
        emit_json(params.to_json(), fit_out);
        return 0;
    }

    if (comb->parsed()) {
        std::ifstream in(comb_params);
        if (!in) throw Error("IoError", "cannot open " + comb_params);
        nlohmann::json pj;
        in >> pj;
        const auto params = confide::CombinerParams::from_json(pj);
        const auto data = confide::load_dataset(comb_data);
        std::ostringstream out;
        out << "row,label";
        for (int j = 0; j < data.k(); ++j) out << ",q_" << j;
        out << "\n";
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto [label, post] =
                confide::predict(params, data.rows()[i].human_label, data.rows()[i].model_probs);
            out << i << ',' << label;
            for (int j = 0; j < data.k(); ++j)
                out << ',' << fmt17(post[static_cast<std::size_t>(j)]);
            out << "\n";
        }
        write_file(comb_out, out.str());
        return 0;
    }

    if (eval->parsed()) {
        std::ifstream in(eval_params);
        if (!in) throw Error("IoError", "cannot open " + eval_params);
        nlohmann::json pj;
        in >> pj;
        const auto params = confide::CombinerParams::from_json(pj);
        const auto data = confide::load_dataset(eval_data);
        if (data.supervised_count() != data.size() || data.size() == 0)
            throw Error("NoSupervisedRows", "evaluation data must be fully labeled");
        const std::size_t n = data.size();
        const int k = data.k();

        std::vector<int> truth(n);
        std::vector<confide::ProbVector> raw(n), calibrated(n), combined(n), human(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& row = data.rows()[i];
            truth[i] = *row.true_label;
            raw[i] = row.model_probs;
            if (params.temperature)
                calibrated[i] = confide::temper(row.model_probs, *params.temperature);
            else if (params.tau_posterior)
                calibrated[i] = confide::bayes_calibrated_probs(row.model_probs, *params.tau_posterior);
            else
                calibrated[i] = row.model_probs;
            combined[i] = confide::predict(params, row.human_label, row.model_probs).second;
            std::vector<double> onehot(static_cast<std::size_t>(k), 0.0);
            onehot[static_cast<std::size_t>(row.human_label)] = 1.0;
            confide::floor_and_normalize(onehot);
            human[i] = confide::ProbVector::from_normalized(std::move(onehot));
        }
        std::vector<confide::ProbVector> oracle;
        if (!eval_oracle.empty()) oracle = load_oracle_csv(eval_oracle, k);

        ordered_json report;
        report["version"] = confide::kVersion;
        ordered_json meta;
        meta["params"] = eval_params;
        meta["data"] = eval_data;
        meta["bins"] = eval_bins;
        meta["method"] = confide::method_name(params.method);
        report["meta"] = std::move(meta);
        // The oracle is p(y | m), so mce_l1 applies to the model rows only.
        report["model_calibrated"] = metrics_json(confide::evaluate_metrics(calibrated, truth, eval_bins, oracle));
        report["model_uncalibrated"] = metrics_json(confide::evaluate_metrics(raw, truth, eval_bins, oracle));
        report["combination"] = metrics_json(confide::evaluate_metrics(combined, truth, eval_bins));
        report["human"] = metrics_json(confide::evaluate_metrics(human, truth, eval_bins));
        emit_json(report, eval_out);
        return 0;
    }

    if (lc->parsed()) {
        const auto train = confide::load_dataset(lc_train);
        const auto eval_data = confide::load_dataset(lc_eval);
        const auto method = confide::fit_method_from_name(lc_flags.method);
        const auto table = confide::learning_curve(train, eval_data, method, lc_flags.options(),
                                                   lc_sizes, lc_seeds, lc_seed);
        std::ostringstream out;
        out << "size,mean_error,std_error\n";
        for (const auto& point : table)
            out << point.size << ',' << fmt17(point.mean_error) << ',' << fmt17(point.std_error)
                << "\n";
        write_file(lc_out, out.str());
        if (!lc_json_out.empty()) {
            ordered_json j;
            j["version"] = confide::kVersion;
            ordered_json meta = lc_flags.echo();
            meta["seeds"] = lc_seeds;
            meta["seed"] = lc_seed;
            j["meta"] = std::move(meta);
            ordered_json rows = ordered_json::array();
            for (const auto& point : table) {
                ordered_json r;
                r["size"] = point.size;
                r["mean_error"] = point.mean_error;
                r["std_error"] = point.std_error;
                rows.push_back(std::move(r));
            }
            j["curve"] = std::move(rows);
            emit_json(j, lc_json_out);
        }
        return 0;
    }

    if (diag->parsed()) {
        const auto data = confide::load_dataset(diag_data);
        const auto report = confide::cmi_discrete(data);
        ordered_json j;
        j["version"] = confide::kVersion;
        j["cmi"] = report.cmi;
        j["mi"] = report.mi;
        ordered_json shifts = ordered_json::array();
        for (const auto& s : report.per_class_shift) {
            ordered_json pair;
            pair["mean_given_y"] = s.mean_given_y;
            pair["mean_given_y_and_hy"] = s.mean_given_y_and_hy;
            shifts.push_back(std::move(pair));
        }
        j["per_class_shift"] = std::move(shifts);
        emit_json(j, diag_out);
        return 0;
    }

    if (theory->parsed()) {
        std::ifstream in(th_params);
        if (!in) throw Error("IoError", "cannot open " + th_params);
        nlohmann::json pj;
        in >> pj;
        const auto params = confide::CombinerParams::from_json(pj);
        if (!params.phi_human || !params.temperature)
            throw Error("MethodFieldMissing", "theory needs params with phi and temperature");
        const auto data = confide::load_dataset(th_data);
        const auto report = confide::theorem1_report(data, *params.phi_human, *params.temperature);

        ordered_json j;
        j["version"] = confide::kVersion;
        j["n"] = report.n;
        j["empirical_accuracy"] = report.empirical_accuracy;
        j["bound_weak"] = report.bound_weak;
        j["bound_strong"] = report.bound_strong;
        if (report.binary_gap) j["binary_gap"] = *report.binary_gap;

        if (!th_oracle.empty() && !th_phi_true.empty()) {
            std::ifstream tin(th_phi_true);
            if (!tin) throw Error("IoError", "cannot open " + th_phi_true);
            nlohmann::json tj;
            tin >> tj;
            const auto true_params = confide::CombinerParams::from_json(tj);
            if (!true_params.phi_human)
                throw Error("MethodFieldMissing", "--phi-true params must carry phi");
            const auto oracle = load_oracle_csv(th_oracle, data.k());
            const auto est = confide::theorem2_report(data, oracle, *true_params.phi_human,
                                                      *params.phi_human, *params.temperature);
            ordered_json e;
            e["eta_mean"] = est.eta_mean;
            e["bound"] = est.bound;
            e["holds"] = est.holds;
            j["estimation_error"] = std::move(e);
        }
        emit_json(j, th_out);
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        ordered_json err;
        err["error"] = e.code();
        err["message"] = e.what();
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        ordered_json err;
        err["error"] = "Internal";
        err["message"] = e.what();
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
