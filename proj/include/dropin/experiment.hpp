#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "dropin/data.hpp"
#include "dropin/dropin.hpp"
#include "dropin/model_select.hpp"

namespace dropin {

// Experiment configuration document shared by `train` and `gridsearch`.
// Validated up front; command-line flags override individual fields.
struct ExperimentConfig {
    std::string dataset_path;
    Scaler::Method scaling = Scaler::Method::none;

    // single-run model parameters (train)
    ModelHyperparams model;
    double connectivity = 0.10;
    double input_scale = 0.4;
    double recurrent_init_bound = 0.4;
    double spectral_target = 0.99;
    double lambda = 0.9999995;

    // training loop
    int max_epochs = 100;
    int patience = 10;
    double validation_fraction = 0.2;
    bool masked_validation = false;

    // grid search
    Grid grid;
    int cv_folds = 5;
    int n_topologies = 3;

    std::string output_dir = ".";
    std::uint64_t weight_seed = 1;
    std::uint64_t shuffle_seed = 2;
    std::uint64_t mask_seed = 3;

    ReservoirConfig reservoir_config(int n_inputs) const {
        ReservoirConfig rc;
        rc.n_inputs = n_inputs;
        rc.n_reservoir = model.n_reservoir;
        rc.leak_rate = model.leak;
        rc.connectivity = connectivity;
        rc.input_scale = input_scale;
        rc.recurrent_init_bound = recurrent_init_bound;
        rc.spectral_target = spectral_target;
        rc.seed = weight_seed;
        return rc;
    }

    DropInConfig dropin_config(TaskMode mode) const {
        DropInConfig dc;
        dc.retention_p = model.retention_p;
        dc.max_epochs = max_epochs;
        dc.patience = patience;
        dc.shuffle_seed = shuffle_seed;
        dc.mask_seed = mask_seed;
        dc.task_mode = mode;
        dc.validation_fraction = validation_fraction;
        dc.masked_validation = masked_validation;
        return dc;
    }
};

namespace detail {

template <class T>
void read_field(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw SchemaMismatch(std::string("field '") + key + "': " + e.what());
        }
    }
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const json& j) {
    if (!j.is_object()) throw SchemaMismatch("experiment config must be a JSON object");
    ExperimentConfig c;
    detail::read_field(j, "dataset", c.dataset_path);
    if (j.contains("scaling"))
        c.scaling = scaler_method_from_string(j.at("scaling").get<std::string>());

    if (j.contains("model")) {
        const auto& m = j["model"];
        detail::read_field(m, "n_reservoir", c.model.n_reservoir);
        detail::read_field(m, "leak", c.model.leak);
        detail::read_field(m, "delta", c.model.delta);
        detail::read_field(m, "retention_p", c.model.retention_p);
    }
    detail::read_field(j, "connectivity", c.connectivity);
    detail::read_field(j, "input_scale", c.input_scale);
    detail::read_field(j, "recurrent_init_bound", c.recurrent_init_bound);
    detail::read_field(j, "spectral_target", c.spectral_target);
    detail::read_field(j, "lambda", c.lambda);
    detail::read_field(j, "max_epochs", c.max_epochs);
    detail::read_field(j, "patience", c.patience);
    detail::read_field(j, "validation_fraction", c.validation_fraction);
    detail::read_field(j, "masked_validation", c.masked_validation);

    if (j.contains("grid")) {
        const auto& g = j["grid"];
        detail::read_field(g, "n_reservoir", c.grid.n_reservoir);
        detail::read_field(g, "leak", c.grid.leak);
        detail::read_field(g, "delta", c.grid.delta);
        detail::read_field(g, "retention_p", c.grid.retention_p);
        detail::read_field(g, "lambda", c.grid.lambda);
    }
    c.grid.lambda = c.lambda;
    detail::read_field(j, "cv_folds", c.cv_folds);
    detail::read_field(j, "n_topologies", c.n_topologies);
    detail::read_field(j, "output_dir", c.output_dir);

    if (j.contains("seeds")) {
        const auto& s = j["seeds"];
        detail::read_field(s, "weights", c.weight_seed);
        detail::read_field(s, "shuffle", c.shuffle_seed);
        detail::read_field(s, "mask", c.mask_seed);
    }

    // range checks before any computation
    if (c.dataset_path.empty()) throw SchemaMismatch("config needs a 'dataset' path");
    if (c.model.n_reservoir < 1) throw InvalidHyperparameter("n_reservoir must be >= 1");
    if (c.model.leak < 0.0 || c.model.leak > 1.0)
        throw InvalidHyperparameter("leak must be in [0, 1]");
    if (c.model.delta <= 0.0) throw InvalidHyperparameter("delta must be positive");
    if (c.model.retention_p < 0.0 || c.model.retention_p > 1.0)
        throw InvalidHyperparameter("retention_p must be in [0, 1]");
    if (c.lambda <= 0.0 || c.lambda > 1.0)
        throw InvalidHyperparameter("lambda must be in (0, 1]");
    if (c.max_epochs < 1) throw InvalidHyperparameter("max_epochs must be >= 1");
    if (c.patience < 0) throw InvalidHyperparameter("patience must be >= 0");
    if (c.validation_fraction < 0.0 || c.validation_fraction >= 1.0)
        throw InvalidHyperparameter("validation_fraction must be in [0, 1)");
    if (c.cv_folds < 2) throw InvalidHyperparameter("cv_folds must be >= 2");
    if (c.n_topologies < 1) throw InvalidHyperparameter("n_topologies must be >= 1");
    c.grid.validate();
    return c;
}

inline ExperimentConfig load_experiment_config(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw SchemaMismatch("cannot open config file " + path.string());
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw SchemaMismatch(path.string() + ": " + e.what());
    }
    return parse_experiment_config(j);
}

}  // namespace dropin
