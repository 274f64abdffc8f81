#pragma once

#include <cstdint>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "dropin/data.hpp"
#include "dropin/eval.hpp"
#include "dropin/model.hpp"
#include "dropin/readout.hpp"
#include "dropin/reservoir.hpp"

namespace dropin {

// Per-sequence input retention mask: 1 = keep the feature, 0 = zero it.
struct Mask {
    std::vector<std::uint8_t> bits;
};

inline Mask sample_mask(int n_inputs, double p, Rng& rng) {
    if (p < 0.0 || p > 1.0)
        throw InvalidHyperparameter("retention probability must be in [0, 1]");
    Mask m;
    m.bits.resize(n_inputs);
    for (int i = 0; i < n_inputs; ++i) m.bits[i] = rng.bernoulli(p) ? 1 : 0;
    return m;
}

inline Vector apply_mask(const Vector& u, const Mask& m) {
    if (static_cast<std::size_t>(u.size()) != m.bits.size())
        throw DimensionMismatch("mask length does not match input vector");
    Vector out = u;
    for (Eigen::Index i = 0; i < u.size(); ++i)
        if (!m.bits[i]) out(i) = 0.0;
    return out;
}

struct DropInConfig {
    double retention_p = 1.0;
    int max_epochs = 100;
    int patience = 10;  // epochs without validation improvement before stopping
    std::uint64_t shuffle_seed = 1;
    std::uint64_t mask_seed = 2;
    TaskMode task_mode = TaskMode::last_step_classification;
    double validation_fraction = 0.2;  // used by callers that carve a val split
    bool masked_validation = false;    // validate with the epoch's masks applied

    // instrumentation: invoked with the mask in effect at every timestep
    std::function<void(int epoch, const std::string& seq_id, int t, const Mask&)>
        mask_hook;
    // machine-parsable key=value progress lines
    std::function<void(const std::string&)> log;

    void validate() const {
        if (retention_p < 0.0 || retention_p > 1.0)
            throw InvalidHyperparameter("retention_p must be in [0, 1]");
        if (max_epochs < 1) throw InvalidHyperparameter("max_epochs must be >= 1");
        if (patience < 0) throw InvalidHyperparameter("patience must be >= 0");
        if (validation_fraction < 0.0 || validation_fraction >= 1.0)
            throw InvalidHyperparameter("validation_fraction must be in [0, 1)");
    }
};

// DropIn training loop: one fresh Bernoulli mask per sequence presentation
// (constant across its timesteps), reservoir reset to zero per sequence,
// RLS update at every step (per-step mode) or at the final step only
// (last-step mode). Three independent RNG streams (weights, shuffling,
// masks) keep DropIn and standard runs on identical reservoirs.
inline TrainedModel train_dropin(const Dataset& train, const Dataset& val,
                                 const ReservoirConfig& rc, const DropInConfig& dc,
                                 double delta, double lambda) {
    train.validate();
    rc.validate();
    dc.validate();
    if (dc.task_mode != train.task_mode)
        throw InvalidHyperparameter("DropInConfig task_mode does not match dataset");
    if (rc.n_inputs != train.n_inputs)
        throw InvalidHyperparameter("reservoir n_inputs does not match dataset");
    const bool has_val = !val.sequences.empty();
    if (has_val) val.validate();

    TrainedModel model;
    model.config = rc;
    model.weights = init_weights(rc);
    model.n_outputs = train.n_outputs;
    model.task_mode = train.task_mode;
    model.readout.w_out = Matrix::Zero(train.n_outputs, rc.n_reservoir);
    model.meta.retention_p = dc.retention_p;
    model.meta.lambda = lambda;
    model.meta.delta = delta;
    model.meta.weight_seed = rc.seed;
    model.meta.shuffle_seed = dc.shuffle_seed;
    model.meta.mask_seed = dc.mask_seed;
    model.meta.dataset_fingerprint = dataset_fingerprint(train);

    RlsState rls = rls_init(delta, rc.n_reservoir, lambda);
    Rng rng_shuffle(dc.shuffle_seed);
    Rng rng_mask(dc.mask_seed);

    const bool per_step = train.task_mode == TaskMode::per_step_regression;
    const MetricKind mk = metric_for(train.task_mode);
    const double a = rc.leak_rate;

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    Readout best = model.readout;
    double best_metric = metric_worst(mk);
    int best_epoch = 0;
    int stale = 0;
    int epoch = 0;

    for (epoch = 1; epoch <= dc.max_epochs; ++epoch) {
        rng_shuffle.shuffle(order);
        std::vector<double> step_sq_errors;
        for (std::size_t oi : order) {
            const Sequence& seq = train.sequences[oi];
            const Mask mask = sample_mask(train.n_inputs, dc.retention_p, rng_mask);
            ReservoirState state = zero_state(rc.n_reservoir);
            const Eigen::Index T = seq.inputs.rows();
            for (Eigen::Index t = 0; t < T; ++t) {
                const Vector u = apply_mask(seq.inputs.row(t).transpose(), mask);
                if (dc.mask_hook)
                    dc.mask_hook(epoch, seq.id, static_cast<int>(t), mask);
                state = update_state(state, u, model.weights, a);
                if (per_step || t == T - 1) {
                    const Vector target =
                        per_step ? Vector(seq.targets.row(t).transpose())
                                 : Vector(seq.targets.row(0).transpose());
                    const Vector e = rls_step(rls, model.readout, state.x, target);
                    step_sq_errors.push_back(e.squaredNorm());
                }
            }
        }

        // Eq.-style discounted error over this epoch's update residuals
        double disc = 0.0;
        {
            double w = 1.0;
            for (auto it = step_sq_errors.rbegin(); it != step_sq_errors.rend(); ++it) {
                disc += w * *it;
                w *= lambda;
            }
            disc /= static_cast<double>(train.n_outputs);
        }

        double val_metric = std::numeric_limits<double>::quiet_NaN();
        if (has_val) {
            if (dc.masked_validation) {
                // per-sequence masks, resampled from a stream derived per epoch
                Rng vrng(derive_seed(dc.mask_seed, 0x76616cull + epoch));
                if (train.task_mode == TaskMode::last_step_classification) {
                    Vector preds(val.size()), targets(val.size());
                    for (std::size_t i = 0; i < val.size(); ++i) {
                        const Mask vm = sample_mask(val.n_inputs, dc.retention_p, vrng);
                        std::set<int> missing;
                        for (int f = 0; f < val.n_inputs; ++f)
                            if (!vm.bits[f]) missing.insert(f);
                        preds(i) = predict_sequence_missing(model, val.sequences[i].inputs,
                                                            missing)(0, 0);
                        targets(i) = val.sequences[i].targets(0, 0);
                    }
                    val_metric = accuracy(preds, targets);
                } else {
                    double abs_sum = 0.0;
                    long count = 0;
                    for (const auto& s : val.sequences) {
                        const Mask vm = sample_mask(val.n_inputs, dc.retention_p, vrng);
                        std::set<int> missing;
                        for (int f = 0; f < val.n_inputs; ++f)
                            if (!vm.bits[f]) missing.insert(f);
                        const Matrix p = predict_sequence_missing(model, s.inputs, missing);
                        abs_sum += (p - s.targets).cwiseAbs().sum();
                        count += p.size();
                    }
                    val_metric = abs_sum / static_cast<double>(count);
                }
            } else {
                val_metric = dataset_metric(model, val);
            }
            if (metric_better(mk, val_metric, best_metric)) {
                best_metric = val_metric;
                best = model.readout;
                best_epoch = epoch;
                stale = 0;
            } else {
                ++stale;
            }
        }

        if (dc.log) {
            std::ostringstream os;
            os << "epoch=" << epoch << " discounted_error=" << format_double(disc)
               << " val_metric=" << format_double(val_metric);
            dc.log(os.str());
        }

        if (has_val && dc.patience > 0 && stale >= dc.patience) break;
    }

    if (has_val) {
        model.readout = best;
        model.meta.best_epoch = best_epoch;
        model.meta.final_val_metric = best_metric;
    } else {
        model.meta.best_epoch = std::min(epoch, dc.max_epochs);
    }
    model.meta.epochs_run = std::min(epoch, dc.max_epochs);
    return model;
}

// Standard LI-ESN training is the degenerate p = 1 case.
inline TrainedModel train_standard(const Dataset& train, const Dataset& val,
                                   const ReservoirConfig& rc, const DropInConfig& dc,
                                   double delta, double lambda) {
    DropInConfig std_dc = dc;
    std_dc.retention_p = 1.0;
    return train_dropin(train, val, rc, std_dc, delta, lambda);
}

}  // namespace dropin
