#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "dropin/data.hpp"
#include "dropin/model.hpp"

namespace dropin {

enum class MetricKind { accuracy, mae };

inline std::string to_string(MetricKind k) {
    return k == MetricKind::accuracy ? "accuracy" : "mae";
}

inline MetricKind metric_for(TaskMode mode) {
    return mode == TaskMode::last_step_classification ? MetricKind::accuracy
                                                      : MetricKind::mae;
}

// true when a is a better metric value than b
inline bool metric_better(MetricKind k, double a, double b) {
    return k == MetricKind::accuracy ? a > b : a < b;
}

inline double metric_worst(MetricKind k) {
    return k == MetricKind::accuracy ? -std::numeric_limits<double>::infinity()
                                     : std::numeric_limits<double>::infinity();
}

// Fraction of positions where the sign of the raw readout output matches
// the +-1 target. Threshold at 0; an exactly-zero output counts as -1.
inline double accuracy(const Vector& raw_preds, const Vector& targets) {
    if (raw_preds.size() != targets.size())
        throw DimensionMismatch("prediction and target lengths differ");
    if (raw_preds.size() == 0) throw EmptyInput("accuracy of an empty vector");
    long correct = 0;
    for (Eigen::Index i = 0; i < raw_preds.size(); ++i) {
        const double sign = raw_preds(i) > 0.0 ? 1.0 : -1.0;
        if (sign == targets(i)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(raw_preds.size());
}

inline double mae(const Matrix& preds, const Matrix& targets) {
    if (preds.rows() != targets.rows() || preds.cols() != targets.cols())
        throw DimensionMismatch("prediction and target shapes differ");
    if (preds.size() == 0) throw EmptyInput("mae of an empty matrix");
    return (preds - targets).cwiseAbs().mean();
}

inline Matrix predict_with_missing(const TrainedModel& m, const Matrix& seq,
                                   const std::set<int>& missing) {
    return predict_sequence_missing(m, seq, missing);
}

// Task metric over a whole dataset with the given features missing.
inline double dataset_metric(const TrainedModel& m, const Dataset& ds,
                             const std::set<int>& missing = {}) {
    ds.validate();
    if (m.task_mode != ds.task_mode)
        throw InvalidHyperparameter("model and dataset task modes differ");
    if (m.task_mode == TaskMode::last_step_classification) {
        Vector preds(ds.size()), targets(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) {
            preds(i) = predict_sequence_missing(m, ds.sequences[i].inputs, missing)(0, 0);
            targets(i) = ds.sequences[i].targets(0, 0);
        }
        return accuracy(preds, targets);
    }
    double abs_sum = 0.0;
    long count = 0;
    for (const auto& s : ds.sequences) {
        const Matrix p = predict_sequence_missing(m, s.inputs, missing);
        abs_sum += (p - s.targets).cwiseAbs().sum();
        count += p.size();
    }
    return abs_sum / static_cast<double>(count);
}

struct AblationLevel {
    int k = 0;
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<std::pair<std::set<int>, double>> per_subset;
};

struct AblationReport {
    MetricKind metric_kind;
    std::vector<int> ablatable;  // feature indices eligible for removal
    std::vector<AblationLevel> levels;
};

namespace detail {

inline void for_each_subset(const std::vector<int>& pool, int k,
                            const std::function<void(const std::set<int>&)>& fn) {
    const int n = static_cast<int>(pool.size());
    std::vector<int> pick(k);
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
        std::set<int> subset;
        for (int i : pick) subset.insert(pool[i]);
        fn(subset);
        if (k == 0) return;
        int i = k - 1;
        while (i >= 0 && pick[i] == n - k + i) --i;
        if (i < 0) return;
        ++pick[i];
        for (int j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
    }
}

}  // namespace detail

// Evaluate the task metric with every size-k subset of the ablatable
// features missing, over the whole test set.
inline AblationLevel ablate(const TrainedModel& m, const Dataset& test, int k,
                            const std::vector<int>& ablatable) {
    if (k < 0 || k > static_cast<int>(ablatable.size()))
        throw KTooLarge("k exceeds the number of ablatable features");
    AblationLevel level;
    level.k = k;
    detail::for_each_subset(ablatable, k, [&](const std::set<int>& subset) {
        level.per_subset.emplace_back(subset, dataset_metric(m, test, subset));
    });
    double sum = 0.0;
    for (const auto& [_, v] : level.per_subset) sum += v;
    level.mean = sum / static_cast<double>(level.per_subset.size());
    double sq = 0.0;
    for (const auto& [_, v] : level.per_subset) sq += (v - level.mean) * (v - level.mean);
    level.stddev = std::sqrt(sq / static_cast<double>(level.per_subset.size()));
    return level;
}

inline AblationReport ablation_curve(const TrainedModel& m, const Dataset& test,
                                     int k_max, const std::vector<int>& ablatable) {
    if (k_max > static_cast<int>(ablatable.size()))
        throw KTooLarge("k_max exceeds the number of ablatable features");
    AblationReport report;
    report.metric_kind = metric_for(m.task_mode);
    report.ablatable = ablatable;
    for (int k = 0; k <= k_max; ++k)
        report.levels.push_back(ablate(m, test, k, ablatable));
    return report;
}

inline std::vector<int> all_features(int n_inputs) {
    std::vector<int> v(n_inputs);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

// one row per (k, subset): k, subset(semicolon-joined 0-based indices), metric, metric_kind
inline void write_ablation_detail_csv(const AblationReport& r, const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open " + path.string() + " for writing");
    f << "k,subset,metric,metric_kind\n";
    for (const auto& level : r.levels)
        for (const auto& [subset, v] : level.per_subset) {
            f << level.k << ",";
            bool first = true;
            for (int idx : subset) {
                if (!first) f << ";";
                f << idx;
                first = false;
            }
            f << "," << format_double(v) << "," << to_string(r.metric_kind) << "\n";
        }
}

inline void write_ablation_summary_csv(const AblationReport& r, const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open " + path.string() + " for writing");
    f << "k,mean,std,n_subsets\n";
    for (const auto& level : r.levels)
        f << level.k << "," << format_double(level.mean) << ","
          << format_double(level.stddev) << "," << level.per_subset.size() << "\n";
}

}  // namespace dropin
