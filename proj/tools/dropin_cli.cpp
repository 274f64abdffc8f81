// dropin: reservoir-computing experiment CLI.
//
// Subcommands: import-uci, synth, train, gridsearch, evaluate, ablate, predict.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

#include <cstdlib>
#include <iostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dropin/data.hpp"
#include "dropin/dropin.hpp"
#include "dropin/eval.hpp"
#include "dropin/experiment.hpp"
#include "dropin/model_io.hpp"
#include "dropin/model_select.hpp"

namespace {

using namespace dropin;

std::string config_path_from_env(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("DROPIN_CONFIG")) return env;
    return {};
}

ExperimentConfig load_config_or_die(const std::string& path) {
    if (path.empty())
        throw SchemaMismatch("no config file given (use --config or DROPIN_CONFIG)");
    return load_experiment_config(path);
}

std::set<int> parse_feature_list(const std::string& s) {
    std::set<int> out;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) return;
        out.insert(std::stoi(cur));
        cur.clear();
    };
    for (char c : s) {
        if (c == ',' || c == ';')
            flush();
        else
            cur += c;
    }
    flush();
    return out;
}

// train/val split plus optional scaling; scaler is fit on the training part
// only and stored in the model so inference consumes raw inputs.
TrainedModel run_training(const ExperimentConfig& cfg, const Dataset& raw) {
    Dataset train = raw;
    Dataset val;
    if (cfg.validation_fraction > 0.0 && raw.size() >= 5) {
        auto [tr, va] = holdout_split(raw, cfg.validation_fraction,
                                      derive_seed(cfg.shuffle_seed, 0x76616cull));
        train = std::move(tr);
        val = std::move(va);
    }
    std::vector<std::string> warnings;
    const Scaler scaler = fit_scaler(train, cfg.scaling, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

    DropInConfig dc = cfg.dropin_config(raw.task_mode);
    dc.log = [](const std::string& line) { std::cerr << line << "\n"; };
    TrainedModel m = train_dropin(apply_scaler(train, scaler),
                                  apply_scaler(val, scaler),
                                  cfg.reservoir_config(raw.n_inputs), dc,
                                  cfg.model.delta, cfg.lambda);
    m.scaler = scaler;
    return m;
}

int run(int argc, char** argv) {
    CLI::App app{"DropIn echo state networks: training and missing-input evaluation"};
    app.require_subcommand(1);

    // import-uci
    auto* imp = app.add_subcommand("import-uci",
                                   "Import the UCI indoor movement dataset");
    std::string imp_dir, imp_manifest, imp_out;
    imp->add_option("--dir", imp_dir, "UCI download directory")->required();
    imp->add_option("--manifest", imp_manifest, "import manifest JSON");
    imp->add_option("--out", imp_out, "output dataset directory")->required();

    // synth
    auto* synth = app.add_subcommand("synth", "Generate the synthetic redundant-channel dataset");
    std::string synth_out, synth_task = "per_step_regression";
    int synth_n = 60, synth_len = 60, synth_ch = 6;
    double synth_noise = 0.3;
    std::uint64_t synth_seed = 1;
    synth->add_option("--out", synth_out, "output dataset directory")->required();
    synth->add_option("--n-seq", synth_n, "number of sequences");
    synth->add_option("--seq-len", synth_len, "timesteps per sequence");
    synth->add_option("--channels", synth_ch, "redundant input channels");
    synth->add_option("--noise", synth_noise, "per-channel noise sigma");
    synth->add_option("--task", synth_task,
                      "last_step_classification | per_step_regression");
    synth->add_option("--seed", synth_seed, "generator seed");

    // train
    auto* train = app.add_subcommand("train", "Train a single model (standard or DropIn)");
    std::string train_config, train_out = "model.json", train_data;
    double train_p = -1.0;
    int train_nr = -1;
    double train_leak = -1.0, train_delta = -1.0;
    train->add_option("--config", train_config, "experiment config JSON");
    train->add_option("--out", train_out, "model file to write");
    train->add_option("--dataset", train_data, "override config dataset path");
    train->add_option("--retention-p", train_p, "override retention probability");
    train->add_option("--n-reservoir", train_nr, "override reservoir size");
    train->add_option("--leak", train_leak, "override leak rate");
    train->add_option("--delta", train_delta, "override RLS delta");

    // gridsearch
    auto* gs = app.add_subcommand("gridsearch", "Cross-validated hyperparameter search");
    std::string gs_config, gs_report = "grid_report.csv", gs_model = "best_model.json";
    bool gs_fast = false;
    int gs_jobs = static_cast<int>(std::thread::hardware_concurrency());
    gs->add_option("--config", gs_config, "experiment config JSON");
    gs->add_option("--report", gs_report, "report CSV to write");
    gs->add_option("--best-model", gs_model, "refit best-model file to write");
    gs->add_flag("--fast", gs_fast, "reduced CI-scale grid");
    gs->add_option("--jobs", gs_jobs, "parallel trials");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Score a model on a dataset");
    std::string ev_model, ev_data;
    ev->add_option("--model", ev_model, "model file")->required();
    ev->add_option("--data", ev_data, "dataset directory")->required();

    // ablate
    auto* ab = app.add_subcommand("ablate", "Missing-input degradation curve");
    std::string ab_model, ab_data, ab_features, ab_prefix = "ablation";
    int ab_kmax = -1;
    ab->add_option("--model", ab_model, "model file")->required();
    ab->add_option("--data", ab_data, "dataset directory")->required();
    ab->add_option("--k-max", ab_kmax, "largest number of missing inputs");
    ab->add_option("--ablatable", ab_features,
                   "feature indices eligible for removal (default: all)");
    ab->add_option("--out-prefix", ab_prefix, "writes <prefix>_detail.csv and <prefix>_summary.csv");

    // predict
    auto* pr = app.add_subcommand("predict", "Predict one sequence file");
    std::string pr_model, pr_seq, pr_missing, pr_out = "predictions.csv";
    pr->add_option("--model", pr_model, "model file")->required();
    pr->add_option("--seq", pr_seq, "sequence CSV (t,u_1..u_N columns)")->required();
    pr->add_option("--missing", pr_missing, "comma-separated missing feature indices");
    pr->add_option("--out", pr_out, "predictions CSV to write");

    CLI11_PARSE(app, argc, argv);

    if (imp->parsed()) {
        Dataset ds = imp_manifest.empty()
                         ? import_uci_movement(imp_dir)
                         : import_uci_movement(imp_dir, load_import_manifest(imp_manifest));
        save_canonical(ds, imp_out);
        std::cout << "imported sequences=" << ds.size() << " n_inputs=" << ds.n_inputs
                  << " out=" << imp_out << "\n";
        return 0;
    }

    if (synth->parsed()) {
        Dataset ds = gen_synthetic_redundant(synth_n, synth_len, synth_ch, synth_noise,
                                             task_mode_from_string(synth_task), synth_seed);
        save_canonical(ds, synth_out);
        std::cout << "generated sequences=" << ds.size() << " out=" << synth_out << "\n";
        return 0;
    }

    if (train->parsed()) {
        ExperimentConfig cfg = load_config_or_die(config_path_from_env(train_config));
        if (!train_data.empty()) cfg.dataset_path = train_data;
        if (train_p >= 0.0) cfg.model.retention_p = train_p;
        if (train_nr > 0) cfg.model.n_reservoir = train_nr;
        if (train_leak >= 0.0) cfg.model.leak = train_leak;
        if (train_delta > 0.0) cfg.model.delta = train_delta;
        Dataset raw = load_canonical(cfg.dataset_path);
        TrainedModel m = run_training(cfg, raw);
        save_model(m, train_out);
        std::cout << "trained epochs=" << m.meta.epochs_run
                  << " best_epoch=" << m.meta.best_epoch
                  << " val_metric=" << format_double(m.meta.final_val_metric)
                  << " model=" << train_out << "\n";
        return 0;
    }

    if (gs->parsed()) {
        ExperimentConfig cfg = load_config_or_die(config_path_from_env(gs_config));
        if (gs_fast) {
            const auto keep_p = cfg.grid.retention_p;
            cfg.grid = fast_grid();
            cfg.grid.retention_p = keep_p;
            cfg.grid.lambda = cfg.lambda;
        }
        Dataset raw = load_canonical(cfg.dataset_path);
        std::vector<std::string> warnings;
        const Scaler scaler = fit_scaler(raw, cfg.scaling, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        Dataset scaled = apply_scaler(raw, scaler);

        GridSearchResult r = grid_search(scaled, cfg.reservoir_config(raw.n_inputs),
                                         cfg.dropin_config(raw.task_mode), cfg.grid,
                                         cfg.cv_folds, cfg.n_topologies,
                                         cfg.weight_seed, std::max(1, gs_jobs));
        write_grid_report_csv(r, gs_report);
        FinalReport fin = refit_and_test(r.best, cfg.reservoir_config(raw.n_inputs),
                                         cfg.dropin_config(raw.task_mode), cfg.lambda,
                                         scaled, scaled, cfg.weight_seed);
        fin.model.scaler = scaler;
        save_model(fin.model, gs_model);
        std::cout << "best n_reservoir=" << r.best.n_reservoir
                  << " leak=" << format_double(r.best.leak)
                  << " delta=" << format_double(r.best.delta)
                  << " retention_p=" << format_double(r.best.retention_p)
                  << " report=" << gs_report << " model=" << gs_model << "\n";
        return 0;
    }

    if (ev->parsed()) {
        TrainedModel m = load_model(ev_model);
        Dataset ds = load_canonical(ev_data);
        const double v = dataset_metric(m, ds);
        std::cout << "metric=" << to_string(metric_for(m.task_mode))
                  << " value=" << format_double(v) << " n_sequences=" << ds.size() << "\n";
        return 0;
    }

    if (ab->parsed()) {
        TrainedModel m = load_model(ab_model);
        Dataset ds = load_canonical(ab_data);
        std::vector<int> ablatable;
        if (ab_features.empty()) {
            ablatable = all_features(m.config.n_inputs);
        } else {
            for (int f : parse_feature_list(ab_features)) ablatable.push_back(f);
        }
        const int kmax = ab_kmax < 0 ? static_cast<int>(ablatable.size()) : ab_kmax;
        AblationReport curve = ablation_curve(m, ds, kmax, ablatable);
        write_ablation_detail_csv(curve, ab_prefix + "_detail.csv");
        write_ablation_summary_csv(curve, ab_prefix + "_summary.csv");
        for (const auto& level : curve.levels)
            std::cout << "k=" << level.k << " mean=" << format_double(level.mean)
                      << " std=" << format_double(level.stddev)
                      << " n_subsets=" << level.per_subset.size() << "\n";
        return 0;
    }

    if (pr->parsed()) {
        TrainedModel m = load_model(pr_model);
        Matrix inputs;
        try {
            inputs = read_sequence_csv(pr_seq, m.config.n_inputs, 0,
                                       /*per_step=*/false, nullptr);
        } catch (const ParseError&) {
            // canonical per-step files carry target columns; ignore them
            inputs = read_sequence_csv(pr_seq, m.config.n_inputs, m.n_outputs,
                                       /*per_step=*/true, nullptr);
        }
        const std::set<int> missing = parse_feature_list(pr_missing);
        const Matrix preds = predict_sequence_missing(m, inputs, missing);
        std::ofstream out(pr_out, std::ios::binary);
        if (!out) throw ParseError("cannot open " + pr_out + " for writing");
        out << "t";
        for (int j = 0; j < m.n_outputs; ++j) out << ",y_" << (j + 1);
        out << "\n";
        for (Eigen::Index t = 0; t < preds.rows(); ++t) {
            out << (m.task_mode == TaskMode::per_step_regression ? t + 1 : inputs.rows());
            for (Eigen::Index j = 0; j < preds.cols(); ++j)
                out << "," << format_double(preds(t, j));
            out << "\n";
        }
        std::cout << "predictions=" << pr_out << "\n";
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const dropin::Error& e) {
        std::cerr << "error category=" << static_cast<int>(e.category())
                  << " kind=" << e.name() << " message=\"" << e.what() << "\"\n";
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error category=4 kind=Unhandled message=\"" << e.what() << "\"\n";
        return 4;
    }
}
