// Command-line surface: evaluate logits files, tabulate the weight
// bias/MSE formulas, run batch convergence sweeps, and print the
// 2x-lower-bound counterexample.

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "aurc/aurc.hpp"

namespace {

using namespace aurc;

LossKind parse_loss(const std::string& name) {
    if (name == "01" || name == "zero_one") return LossKind::zero_one;
    if (name == "ce" || name == "cross_entropy") return LossKind::cross_entropy;
    throw CLI::ValidationError("--loss", "unknown loss '" + name + "' (01|ce)");
}

CsfKind parse_csf(const std::string& name) {
    if (name == "msp") return CsfKind::msp;
    if (name == "max-logit" || name == "max_logit") return CsfKind::max_logit;
    if (name == "softmax-margin" || name == "softmax_margin") return CsfKind::softmax_margin;
    if (name == "neg-entropy" || name == "neg_entropy") return CsfKind::neg_entropy;
    if (name == "max-logit-p-norm" || name == "max_logit_p_norm")
        return CsfKind::max_logit_p_norm;
    if (name == "neg-gini" || name == "neg_gini") return CsfKind::neg_gini;
    throw CLI::ValidationError("--csf", "unknown CSF '" + name + "'");
}

TiePolicy parse_tie(const std::string& name) {
    if (name == "stable") return TiePolicy::stable;
    if (name == "average") return TiePolicy::average;
    throw CLI::ValidationError("--tie", "unknown tie policy '" + name + "' (stable|average)");
}

EstimatorKind parse_estimator(const std::string& name) {
    if (name == "alpha") return EstimatorKind::plugin_alpha_hat;
    if (name == "alpha-prime") return EstimatorKind::plugin_alpha_prime;
    if (name == "sele") return EstimatorKind::sele;
    if (name == "sele2") return EstimatorKind::sele_times_two;
    if (name == "naive") return EstimatorKind::naive_empirical;
    throw CLI::ValidationError(
        "--weights", "unknown estimator '" + name + "' (alpha|alpha-prime|sele|sele2|naive)");
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    if (out.empty()) throw CLI::ValidationError("list", "empty list '" + csv + "'");
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& csv) {
    std::vector<std::size_t> sizes;
    for (const auto& item : split_list(csv)) {
        const long v = std::stol(item);
        if (v < 1) throw CLI::ValidationError("--sizes", "sizes must be >= 1");
        sizes.push_back(static_cast<std::size_t>(v));
    }
    return sizes;
}

DatasetFormat format_for_path(const std::string& path, const std::string& override_name) {
    if (override_name == "jsonl") return DatasetFormat::jsonl;
    if (override_name == "csv") return DatasetFormat::csv;
    if (!override_name.empty())
        throw CLI::ValidationError("--input-format", "unknown format '" + override_name + "'");
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") return DatasetFormat::csv;
    return DatasetFormat::jsonl;
}

ReportFormat parse_report_format(const std::string& name) {
    if (name == "csv") return ReportFormat::csv;
    if (name == "json") return ReportFormat::json;
    throw CLI::ValidationError("--format", "unknown format '" + name + "' (csv|json)");
}

std::vector<double> beta_grid(double start, double stop, double step) {
    if (!(step > 0.0) || !(start > 0.0) || !(stop < 1.0) || start > stop)
        throw CLI::ValidationError("--beta-*", "need 0 < start <= stop < 1 and step > 0");
    std::vector<double> grid;
    for (std::size_t i = 0;; ++i) {
        const double b = start + static_cast<double>(i) * step;
        if (b > stop + 1e-12) break;
        grid.push_back(b);
    }
    return grid;
}

// Streams the dataset once, producing the per-sample loss and score.
void load_scores_losses(const std::string& path, DatasetFormat format, LossKind loss,
                        CsfKind csf, double p, std::vector<double>& scores,
                        std::vector<double>& losses) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    for_each_record(in, format, path, [&](const LogitsRecord& rec, std::size_t) {
        losses.push_back(sample_loss(rec, loss));
        scores.push_back(confidence_score(rec, csf, p));
    });
    if (scores.empty()) throw std::runtime_error(path + ": dataset is empty");
}

template <typename WriterFn>
void emit(const std::string& output, WriterFn&& writer) {
    if (output.empty()) {
        writer(std::cout);
    } else {
        write_file(output, writer);
    }
}

struct CommonOpts {
    std::uint64_t seed = 42;
    std::string output;
    std::string format = "csv";
    std::string tie = "stable";
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--seed", opts.seed, "RNG seed")->capture_default_str();
    cmd->add_option("--output", opts.output, "output file (stdout when omitted)");
    cmd->add_option("--format", opts.format, "output format: csv|json")
        ->capture_default_str();
    cmd->add_option("--tie", opts.tie, "tie policy: stable|average")
        ->capture_default_str();
    cmd->add_option("--threads", opts.threads, "worker threads")->capture_default_str();
}

int run_evaluate(const std::string& input, const std::string& input_format,
                 const std::string& loss_name, const std::string& csf_name, double p,
                 const std::string& weights_csv, const CommonOpts& opts) {
    const LossKind loss = parse_loss(loss_name);
    const CsfKind csf = parse_csf(csf_name);
    const TiePolicy tie = parse_tie(opts.tie);
    const ReportFormat rformat = parse_report_format(opts.format);
    std::vector<double> scores, losses;
    load_scores_losses(input, format_for_path(input, input_format), loss, csf, p, scores,
                       losses);
    const HarmonicTable table = harmonic_prefix(scores.size());
    std::vector<EstimatorReport> reports;
    for (const auto& name : split_list(weights_csv)) {
        EstimatorReport rep =
            evaluate_estimator(parse_estimator(name), losses, scores, tie, table);
        rep.loss_kind = loss;
        rep.csf_kind = csf;
        rep.seed = opts.seed;
        reports.push_back(rep);
    }
    Provenance prov{opts.seed, "evaluate --input " + input + " --loss " + loss_name +
                                   " --csf " + csf_name + " --weights " + weights_csv +
                                   " --tie " + opts.tie};
    emit(opts.output, [&](std::ostream& out) {
        write_estimator_reports(out, reports, prov, rformat);
    });
    return 0;
}

int run_bias(const std::string& n_csv, double beta_start, double beta_stop, double beta_step,
             const std::string& weights_csv, std::size_t mc_reps, const CommonOpts& opts) {
    const ReportFormat rformat = parse_report_format(opts.format);
    const auto betas = beta_grid(beta_start, beta_stop, beta_step);
    const RngHandle rng(opts.seed);
    std::vector<BiasMseCurve> curves;
    std::uint64_t stream = 0;
    for (const auto& size_name : split_list(n_csv)) {
        const auto n = static_cast<std::size_t>(std::stol(size_name));
        for (const auto& weight_name : split_list(weights_csv)) {
            BiasMseQuantity quantity;
            if (weight_name == "alpha") {
                quantity = BiasMseQuantity::bias_alpha_hat;
            } else if (weight_name == "alpha-prime") {
                quantity = BiasMseQuantity::bias_alpha_prime;
            } else if (weight_name == "sele") {
                quantity = BiasMseQuantity::bias_sele;
            } else {
                throw CLI::ValidationError("--weights",
                                           "bias supports alpha|alpha-prime|sele");
            }
            curves.push_back(
                make_bias_curve(quantity, n, betas, mc_reps, rng.derive(stream++)));
        }
    }
    std::ostringstream cfg;
    cfg << "bias --n " << n_csv << " --betas " << beta_start << ':' << beta_stop << ':'
        << beta_step << " --weights " << weights_csv << " --mc " << mc_reps;
    Provenance prov{opts.seed, cfg.str()};
    emit(opts.output, [&](std::ostream& out) {
        write_bias_mse_curves(out, curves, prov, rformat);
    });
    return 0;
}

int run_mse(const std::string& n_csv, double beta_start, double beta_stop, double beta_step,
            std::size_t mc_reps, const CommonOpts& opts) {
    const ReportFormat rformat = parse_report_format(opts.format);
    const auto betas = beta_grid(beta_start, beta_stop, beta_step);
    const RngHandle rng(opts.seed);
    std::vector<BiasMseCurve> curves;
    std::uint64_t stream = 0;
    for (const auto& size_name : split_list(n_csv)) {
        const auto n = static_cast<std::size_t>(std::stol(size_name));
        curves.push_back(make_mse_curve(BiasMseQuantity::mse_alpha_hat, n, betas, mc_reps,
                                        rng.derive(stream++)));
        curves.push_back(make_mse_curve(BiasMseQuantity::mse_alpha_prime, n, betas, mc_reps,
                                        rng.derive(stream++)));
        curves.push_back(
            make_mse_curve(BiasMseQuantity::mse_bound, n, betas, 0, rng.derive(stream++)));
    }
    std::ostringstream cfg;
    cfg << "mse --n " << n_csv << " --betas " << beta_start << ':' << beta_stop << ':'
        << beta_step << " --mc " << mc_reps;
    Provenance prov{opts.seed, cfg.str()};
    emit(opts.output, [&](std::ostream& out) {
        write_bias_mse_curves(out, curves, prov, rformat);
    });
    return 0;
}

int run_converge(const std::string& input, const std::string& input_format,
                 const std::string& loss_name, const std::string& csf_name, double p,
                 const std::string& model_name, double gamma, double threshold,
                 std::size_t population_size, const std::string& sizes_csv,
                 const std::string& estimators_csv, std::size_t reps,
                 const CommonOpts& opts) {
    const ReportFormat rformat = parse_report_format(opts.format);
    const auto sizes = parse_sizes(sizes_csv);
    std::vector<EstimatorKind> estimators;
    for (const auto& name : split_list(estimators_csv))
        estimators.push_back(parse_estimator(name));
    const RngHandle rng(opts.seed);
    ConvergenceTable table;
    std::ostringstream cfg;
    if (!input.empty()) {
        std::vector<double> scores, losses;
        load_scores_losses(input, format_for_path(input, input_format), parse_loss(loss_name),
                           parse_csf(csf_name), p, scores, losses);
        const TiePolicy tie = parse_tie(opts.tie);
        const double reference =
            plugin_aurc(losses, scores, WeightKind::alpha_hat, tie).value;
        table = convergence_study(scores, losses, reference, sizes, estimators,
                                  rng.derive(1), reps, opts.threads, tie);
        cfg << "converge --input " << input << " --loss " << loss_name << " --csf "
            << csf_name;
    } else {
        LossModel model;
        if (model_name == "bernoulli") {
            model = LossModel::bernoulli(gamma);
        } else if (model_name == "threshold") {
            model = LossModel::deterministic(threshold);
        } else {
            throw CLI::ValidationError("--model",
                                       "unknown model '" + model_name + "' (bernoulli|threshold)");
        }
        RngHandle gen_rng = rng.derive(0);
        const SyntheticPopulation pop = generate_population(model, population_size, gen_rng);
        table = convergence_study(pop, sizes, estimators, rng.derive(1), reps, opts.threads);
        cfg << "converge --model " << model_name << " --gamma " << gamma
            << " --population-size " << population_size;
    }
    cfg << " --sizes " << sizes_csv << " --estimators " << estimators_csv << " --reps "
        << reps << " --seed " << opts.seed;
    Provenance prov{opts.seed, cfg.str()};
    emit(opts.output, [&](std::ostream& out) {
        write_convergence_table(out, table, prov, rformat);
    });
    return 0;
}

int run_counterexample(double top_loss) {
    const CounterexampleReport report = counterexample_demo(top_loss);
    std::cout << "top alpha_hat weight:  " << format_real(report.top_weight) << "\n"
              << "plugin alpha_hat AURC: " << format_real(report.plugin_alpha_hat) << "\n"
              << "SELE score:            " << format_real(report.sele) << "\n"
              << "2 x SELE:              " << format_real(report.sele_times_two) << "\n"
              << (report.upper_bound_violated
                      ? "2 x SELE < plug-in estimate: the claimed upper bound fails\n"
                      : "no violation at this loss value\n");
    return report.upper_bound_violated ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Risk-coverage evaluation toolkit: plug-in AURC estimators, SELE "
                 "baseline, weight bias/MSE tables, and convergence studies"};
    app.require_subcommand(1);

    CommonOpts ev_opts, bias_opts, mse_opts, conv_opts;

    auto* evaluate = app.add_subcommand("evaluate", "estimate AURC from a logits file");
    std::string ev_input, ev_input_format, ev_loss = "01", ev_csf = "msp";
    std::string ev_weights = "alpha,alpha-prime,sele,sele2";
    double ev_p = 2.0;
    evaluate->add_option("--input", ev_input, "logits+labels file (jsonl or csv)")
        ->required();
    evaluate->add_option("--input-format", ev_input_format, "jsonl|csv (default: by extension)");
    evaluate->add_option("--loss", ev_loss, "loss: 01|ce")->capture_default_str();
    evaluate->add_option("--csf", ev_csf, "confidence score function")->capture_default_str();
    evaluate->add_option("--p", ev_p, "p for max-logit-p-norm")->capture_default_str();
    evaluate->add_option("--weights", ev_weights, "estimators: alpha,alpha-prime,sele,sele2,naive")
        ->capture_default_str();
    add_common(evaluate, ev_opts);

    auto* bias = app.add_subcommand("bias", "closed-form weight bias curves");
    std::string bias_n = "8,16,32,64,128,256,512,1024";
    std::string bias_weights = "alpha,alpha-prime,sele";
    double bias_b0 = 0.05, bias_b1 = 0.95, bias_bs = 0.05;
    std::size_t bias_mc = 0;
    bias->add_option("--n", bias_n, "sample sizes")->capture_default_str();
    bias->add_option("--beta-start", bias_b0, "")->capture_default_str();
    bias->add_option("--beta-stop", bias_b1, "")->capture_default_str();
    bias->add_option("--beta-step", bias_bs, "")->capture_default_str();
    bias->add_option("--weights", bias_weights, "alpha,alpha-prime,sele")
        ->capture_default_str();
    bias->add_option("--mc", bias_mc, "Monte Carlo reps per point (0 = closed form only)")
        ->capture_default_str();
    add_common(bias, bias_opts);

    auto* mse = app.add_subcommand("mse", "closed-form weight MSE curves and the bound");
    std::string mse_n = "8,16,32,64,128,256,512,1024";
    double mse_b0 = 0.05, mse_b1 = 0.95, mse_bs = 0.05;
    std::size_t mse_mc = 0;
    mse->add_option("--n", mse_n, "sample sizes")->capture_default_str();
    mse->add_option("--beta-start", mse_b0, "")->capture_default_str();
    mse->add_option("--beta-stop", mse_b1, "")->capture_default_str();
    mse->add_option("--beta-step", mse_bs, "")->capture_default_str();
    mse->add_option("--mc", mse_mc, "Monte Carlo reps per point")->capture_default_str();
    add_common(mse, mse_opts);

    auto* converge = app.add_subcommand("converge", "batch-size convergence study");
    std::string cv_input, cv_input_format, cv_loss = "01", cv_csf = "msp";
    std::string cv_model = "bernoulli", cv_sizes = "8,16,32,64,128,256,512,1024";
    std::string cv_estimators = "alpha,alpha-prime,sele,sele2";
    double cv_p = 2.0, cv_gamma = 1.0, cv_threshold = 0.5;
    std::size_t cv_population = 131072, cv_reps = 5;
    converge->add_option("--input", cv_input, "logits file; omit for a synthetic population");
    converge->add_option("--input-format", cv_input_format, "jsonl|csv");
    converge->add_option("--loss", cv_loss, "loss: 01|ce")->capture_default_str();
    converge->add_option("--csf", cv_csf, "confidence score function")->capture_default_str();
    converge->add_option("--p", cv_p, "p for max-logit-p-norm")->capture_default_str();
    converge->add_option("--model", cv_model, "synthetic loss model: bernoulli|threshold")
        ->capture_default_str();
    converge->add_option("--gamma", cv_gamma, "bernoulli model exponent")
        ->capture_default_str();
    converge->add_option("--threshold-t", cv_threshold, "threshold model cutoff")
        ->capture_default_str();
    converge->add_option("--population-size", cv_population, "synthetic population size")
        ->capture_default_str();
    converge->add_option("--sizes", cv_sizes, "batch sizes")->capture_default_str();
    converge->add_option("--estimators", cv_estimators, "estimators to sweep")
        ->capture_default_str();
    converge->add_option("--reps", cv_reps, "independent shuffles per size")
        ->capture_default_str();
    add_common(converge, conv_opts);

    auto* counterexample =
        app.add_subcommand("counterexample", "the 5-point 2xSELE bound violation");
    double cx_loss = 1.0;
    counterexample->add_option("--loss-value", cx_loss, "loss on the top-ranked sample")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(evaluate))
            return run_evaluate(ev_input, ev_input_format, ev_loss, ev_csf, ev_p, ev_weights,
                                ev_opts);
        if (app.got_subcommand(bias))
            return run_bias(bias_n, bias_b0, bias_b1, bias_bs, bias_weights, bias_mc,
                            bias_opts);
        if (app.got_subcommand(mse))
            return run_mse(mse_n, mse_b0, mse_b1, mse_bs, mse_mc, mse_opts);
        if (app.got_subcommand(converge))
            return run_converge(cv_input, cv_input_format, cv_loss, cv_csf, cv_p, cv_model,
                                cv_gamma, cv_threshold, cv_population, cv_sizes,
                                cv_estimators, cv_reps, conv_opts);
        if (app.got_subcommand(counterexample)) return run_counterexample(cx_loss);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
