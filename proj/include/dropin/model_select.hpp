#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "dropin/dropin.hpp"

namespace dropin {

struct Grid {
    std::vector<int> n_reservoir{50, 100, 300, 500};
    std::vector<double> leak{0.1, 0.2, 0.3, 0.5, 1.0};
    std::vector<double> delta{0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0};
    std::vector<double> retention_p{1.0};
    double lambda = 0.9999995;

    void validate() const {
        if (n_reservoir.empty() || leak.empty() || delta.empty() || retention_p.empty())
            throw InvalidHyperparameter("grid lists must be non-empty");
        for (int n : n_reservoir)
            if (n < 1) throw InvalidHyperparameter("n_reservoir values must be >= 1");
        for (double a : leak)
            if (a < 0.0 || a > 1.0) throw InvalidHyperparameter("leak values must be in [0, 1]");
        for (double d : delta)
            if (d <= 0.0) throw InvalidHyperparameter("delta values must be positive");
        for (double p : retention_p)
            if (p < 0.0 || p > 1.0)
                throw InvalidHyperparameter("retention_p values must be in [0, 1]");
        if (lambda <= 0.0 || lambda > 1.0)
            throw InvalidHyperparameter("lambda must be in (0, 1]");
    }
};

inline Grid fast_grid() {
    Grid g;
    g.n_reservoir = {50, 100};
    g.leak = {0.1, 0.5, 1.0};
    g.delta = {0.01, 1.0, 100.0};
    return g;
}

struct ModelHyperparams {
    int n_reservoir = 100;
    double leak = 1.0;
    double delta = 1.0;
    double retention_p = 1.0;
};

struct TrialRecord {
    ModelHyperparams hp;
    int config_index = 0;
    int fold = 0;
    int topology = 0;
    double train_metric = std::numeric_limits<double>::quiet_NaN();
    double val_metric = std::numeric_limits<double>::quiet_NaN();
    bool failed = false;
    std::string error;
};

struct ConfigSummary {
    ModelHyperparams hp;
    int config_index = 0;
    double val_mean = std::numeric_limits<double>::quiet_NaN();
    double val_std = std::numeric_limits<double>::quiet_NaN();
    double train_mean = std::numeric_limits<double>::quiet_NaN();
    double train_std = std::numeric_limits<double>::quiet_NaN();
    int n_ok = 0;
    int n_failed = 0;
};

struct GridSearchResult {
    std::vector<TrialRecord> trials;
    std::vector<ConfigSummary> summaries;
    ModelHyperparams best;
    MetricKind metric_kind;
};

// Topology seed depends only on (master seed, N_R, topology index), so every
// config sharing N_R reuses the same pre-rescale recurrent draw and the same
// input weights; hyperparameter effects are isolated from topology noise.
inline std::uint64_t topology_seed(std::uint64_t seed, int n_reservoir, int topology) {
    return derive_seed(derive_seed(seed, 0x746f706full + n_reservoir), topology);
}

// Deterministic selection: best mean validation metric, ties broken by
// smaller N_R, then smaller delta, then smaller leak, then larger p.
inline const ConfigSummary& select_best(const std::vector<ConfigSummary>& summaries,
                                        MetricKind mk) {
    const ConfigSummary* best = nullptr;
    for (const auto& s : summaries) {
        if (s.n_ok == 0) continue;  // all trials failed: disqualified
        if (!best) {
            best = &s;
            continue;
        }
        if (s.val_mean != best->val_mean) {
            if (metric_better(mk, s.val_mean, best->val_mean)) best = &s;
            continue;
        }
        auto key = [](const ConfigSummary& c) {
            return std::make_tuple(c.hp.n_reservoir, c.hp.delta, c.hp.leak,
                                   -c.hp.retention_p);
        };
        if (key(s) < key(*best)) best = &s;
    }
    if (!best) throw NumericalBreakdown("every grid configuration failed");
    return *best;
}

inline GridSearchResult grid_search(const Dataset& train, const ReservoirConfig& base_rc,
                                    const DropInConfig& base_dc, const Grid& grid,
                                    int k, int n_topologies, std::uint64_t seed,
                                    int jobs = 1) {
    train.validate();
    grid.validate();
    if (k < 2) throw InvalidHyperparameter("k must be >= 2");
    if (n_topologies < 1) throw InvalidHyperparameter("n_topologies must be >= 1");

    std::vector<ModelHyperparams> configs;
    for (int nr : grid.n_reservoir)
        for (double a : grid.leak)
            for (double d : grid.delta)
                for (double p : grid.retention_p)
                    configs.push_back({nr, a, d, p});

    const auto folds = kfold(train, k, derive_seed(seed, 0x666f6c64ull));
    const MetricKind mk = metric_for(train.task_mode);

    std::vector<TrialRecord> trials(configs.size() * folds.size() * n_topologies);
    for (std::size_t ci = 0; ci < configs.size(); ++ci)
        for (std::size_t f = 0; f < folds.size(); ++f)
            for (int j = 0; j < n_topologies; ++j) {
                auto& t = trials[(ci * folds.size() + f) * n_topologies + j];
                t.hp = configs[ci];
                t.config_index = static_cast<int>(ci);
                t.fold = static_cast<int>(f);
                t.topology = j;
            }

    auto run_trial = [&](TrialRecord& t) {
        try {
            ReservoirConfig rc = base_rc;
            rc.n_inputs = train.n_inputs;
            rc.n_reservoir = t.hp.n_reservoir;
            rc.leak_rate = t.hp.leak;
            rc.seed = topology_seed(seed, t.hp.n_reservoir, t.topology);
            DropInConfig dc = base_dc;
            dc.task_mode = train.task_mode;
            dc.retention_p = t.hp.retention_p;
            dc.shuffle_seed = derive_seed(derive_seed(derive_seed(seed, 0x73686600ull + t.config_index), t.fold), t.topology);
            dc.mask_seed = derive_seed(derive_seed(derive_seed(seed, 0x6d736b00ull + t.config_index), t.fold), t.topology);
            const auto& [fold_train, fold_val] = folds[t.fold];
            TrainedModel m = train_dropin(fold_train, fold_val, rc, dc,
                                          t.hp.delta, grid.lambda);
            t.train_metric = dataset_metric(m, fold_train);
            t.val_metric = dataset_metric(m, fold_val);
        } catch (const Error& e) {
            t.failed = true;
            t.error = e.what();
        }
    };

    if (jobs <= 1) {
        for (auto& t : trials) run_trial(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const int n_threads = static_cast<int>(
            std::min<std::size_t>(static_cast<std::size_t>(jobs), trials.size()));
        for (int w = 0; w < n_threads; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= trials.size()) return;
                    run_trial(trials[i]);
                }
            });
        for (auto& th : pool) th.join();
    }

    GridSearchResult result;
    result.trials = trials;
    result.metric_kind = mk;
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
        ConfigSummary s;
        s.hp = configs[ci];
        s.config_index = static_cast<int>(ci);
        std::vector<double> vals, trains;
        for (const auto& t : trials) {
            if (t.config_index != static_cast<int>(ci)) continue;
            if (t.failed) {
                ++s.n_failed;
                continue;
            }
            vals.push_back(t.val_metric);
            trains.push_back(t.train_metric);
        }
        s.n_ok = static_cast<int>(vals.size());
        auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
            mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            sd = 0.0;
            for (double x : v) sd += (x - mean) * (x - mean);
            sd = std::sqrt(sd / static_cast<double>(v.size()));
        };
        if (s.n_ok > 0) {
            mean_std(vals, s.val_mean, s.val_std);
            mean_std(trains, s.train_mean, s.train_std);
        }
        result.summaries.push_back(s);
    }
    result.best = select_best(result.summaries, mk).hp;
    return result;
}

struct FinalReport {
    ModelHyperparams hp;
    double train_metric = std::numeric_limits<double>::quiet_NaN();
    double test_metric = std::numeric_limits<double>::quiet_NaN();
    TrainedModel model;
    AblationReport curve;  // empty unless k_max >= 0
    bool has_curve = false;
};

// Refit on the full training data with a fresh topology seed, then score the
// hold-out set; optionally attach a degradation curve.
inline FinalReport refit_and_test(const ModelHyperparams& hp,
                                  const ReservoirConfig& base_rc,
                                  const DropInConfig& base_dc, double lambda,
                                  const Dataset& train, const Dataset& test,
                                  std::uint64_t seed, int ablation_k_max = -1,
                                  const std::vector<int>& ablatable = {}) {
    ReservoirConfig rc = base_rc;
    rc.n_inputs = train.n_inputs;
    rc.n_reservoir = hp.n_reservoir;
    rc.leak_rate = hp.leak;
    rc.seed = derive_seed(seed, 0x726566ull);
    DropInConfig dc = base_dc;
    dc.task_mode = train.task_mode;
    dc.retention_p = hp.retention_p;
    dc.shuffle_seed = derive_seed(seed, 0x72736866ull);
    dc.mask_seed = derive_seed(seed, 0x726d736bull);

    // early stopping still needs a validation signal; carve it from the
    // training set when requested, otherwise run the full epoch budget
    Dataset fit_train = train;
    Dataset fit_val;
    if (dc.validation_fraction > 0.0 && train.size() >= 5) {
        auto [tr, va] = holdout_split(train, dc.validation_fraction,
                                      derive_seed(seed, 0x76616c00ull));
        fit_train = std::move(tr);
        fit_val = std::move(va);
    }

    FinalReport report;
    report.hp = hp;
    report.model = train_dropin(fit_train, fit_val, rc, dc, hp.delta, lambda);
    report.train_metric = dataset_metric(report.model, train);
    report.test_metric = dataset_metric(report.model, test);
    if (ablation_k_max >= 0) {
        const auto abl = ablatable.empty() ? all_features(train.n_inputs) : ablatable;
        report.curve = ablation_curve(report.model, test, ablation_k_max, abl);
        report.has_curve = true;
    }
    return report;
}

// one row per trial plus one summary row per config
inline void write_grid_report_csv(const GridSearchResult& r, const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open " + path.string() + " for writing");
    f << "row_type,n_reservoir,leak,delta,retention_p,fold,topology,"
         "train_metric,val_metric,val_mean,val_std,n_ok,n_failed,error\n";
    for (const auto& t : r.trials) {
        f << "trial," << t.hp.n_reservoir << "," << format_double(t.hp.leak) << ","
          << format_double(t.hp.delta) << "," << format_double(t.hp.retention_p)
          << "," << t.fold << "," << t.topology << ",";
        if (t.failed) {
            std::string err = t.error;  // keep the CSV parseable
            for (char& c : err)
                if (c == ',' || c == '\n') c = ';';
            f << ",,,,,," << err << "\n";
        }
        else
            f << format_double(t.train_metric) << "," << format_double(t.val_metric)
              << ",,,,,\n";
    }
    for (const auto& s : r.summaries) {
        f << "summary," << s.hp.n_reservoir << "," << format_double(s.hp.leak) << ","
          << format_double(s.hp.delta) << "," << format_double(s.hp.retention_p)
          << ",,,,," << (s.n_ok ? format_double(s.val_mean) : "") << ","
          << (s.n_ok ? format_double(s.val_std) : "") << "," << s.n_ok << ","
          << s.n_failed << ",\n";
    }
}

}  // namespace dropin
