#pragma once

#include <cstdint>
#include <set>
#include <string>

#include "dropin/data.hpp"
#include "dropin/readout.hpp"
#include "dropin/reservoir.hpp"

namespace dropin {

struct TrainingMetadata {
    double retention_p = 1.0;
    double lambda = 1.0;
    double delta = 1.0;
    int epochs_run = 0;
    int best_epoch = 0;
    double final_val_metric = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t weight_seed = 0;
    std::uint64_t shuffle_seed = 0;
    std::uint64_t mask_seed = 0;
    std::string dataset_fingerprint;
};

struct TrainedModel {
    ReservoirConfig config;
    ReservoirWeights weights;
    Readout readout;
    int n_outputs = 1;
    TaskMode task_mode = TaskMode::last_step_classification;
    Scaler scaler;  // applied to raw inputs before the reservoir; none by default
    TrainingMetadata meta;
};

// Raw inputs -> predictions: scale, run the reservoir from x(0) = 0, apply
// the readout. Per-step mode returns T x N_Y, last-step mode 1 x N_Y.
// Prediction never touches the retention probability: weights are used as
// trained, with no re-scaling.
inline Matrix predict_sequence(const TrainedModel& m, const Matrix& inputs) {
    const Matrix states = run_sequence(m.weights, m.config.leak_rate,
                                       apply_scaler_inputs(inputs, m.scaler));
    if (m.task_mode == TaskMode::per_step_regression)
        return states * m.readout.w_out.transpose();
    return (m.readout.w_out * states.row(states.rows() - 1).transpose()).transpose();
}

// Same, with the listed feature columns zeroed at every timestep
// (zeroing happens after scaling, matching the training-time masking regime).
inline Matrix predict_sequence_missing(const TrainedModel& m, const Matrix& inputs,
                                       const std::set<int>& missing) {
    for (int f : missing)
        if (f < 0 || f >= m.config.n_inputs)
            throw InvalidFeatureIndex("feature index " + std::to_string(f) +
                                      " out of range [0, " +
                                      std::to_string(m.config.n_inputs) + ")");
    Matrix scaled = apply_scaler_inputs(inputs, m.scaler);
    for (int f : missing) scaled.col(f).setZero();
    const Matrix states = run_sequence(m.weights, m.config.leak_rate, scaled);
    if (m.task_mode == TaskMode::per_step_regression)
        return states * m.readout.w_out.transpose();
    return (m.readout.w_out * states.row(states.rows() - 1).transpose()).transpose();
}

}  // namespace dropin
