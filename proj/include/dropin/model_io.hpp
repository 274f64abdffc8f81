#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "dropin/model.hpp"

namespace dropin {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline json matrix_to_json(const Matrix& m) {
    json data = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Matrix matrix_from_json(const json& j, const std::string& name) {
    if (!j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        throw SchemaMismatch("matrix '" + name + "' missing rows/cols/data");
    const auto rows = j["rows"].get<Eigen::Index>();
    const auto cols = j["cols"].get<Eigen::Index>();
    const auto& data = j["data"];
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw SchemaMismatch("matrix '" + name + "' data size mismatch");
    Matrix m(rows, cols);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[k++].get<double>();
    return m;
}

inline json vector_to_json(const Vector& v) {
    json data = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v(i));
    return data;
}

inline Vector vector_from_json(const json& j) {
    Vector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

}  // namespace detail

// JSON model file with full-precision (shortest round-trip) number arrays;
// save -> load -> predict is bit-identical to the in-memory model.
inline void save_model(const TrainedModel& m, const fs::path& path) {
    json j = {
        {"format_version", kModelFormatVersion},
        {"reservoir_config",
         {{"n_inputs", m.config.n_inputs},
          {"n_reservoir", m.config.n_reservoir},
          {"leak_rate", m.config.leak_rate},
          {"connectivity", m.config.connectivity},
          {"input_scale", m.config.input_scale},
          {"recurrent_init_bound", m.config.recurrent_init_bound},
          {"spectral_target", m.config.spectral_target},
          {"activation", "tanh"},
          {"seed", m.config.seed}}},
        {"w_in", detail::matrix_to_json(m.weights.w_in)},
        {"w_h", detail::matrix_to_json(m.weights.w_h)},
        {"rescale_factor", m.weights.rescale_factor},
        {"achieved_rho", m.weights.achieved_rho},
        {"w_out", detail::matrix_to_json(m.readout.w_out)},
        {"n_outputs", m.n_outputs},
        {"task_mode", to_string(m.task_mode)},
        {"scaler",
         {{"method", to_string(m.scaler.method)},
          {"offset", detail::vector_to_json(m.scaler.offset)},
          {"scale", detail::vector_to_json(m.scaler.scale)}}},
        {"metadata",
         {{"retention_p", m.meta.retention_p},
          {"lambda", m.meta.lambda},
          {"delta", m.meta.delta},
          {"epochs_run", m.meta.epochs_run},
          {"best_epoch", m.meta.best_epoch},
          {"final_val_metric", std::isnan(m.meta.final_val_metric)
                                   ? json(nullptr)
                                   : json(m.meta.final_val_metric)},
          {"weight_seed", m.meta.weight_seed},
          {"shuffle_seed", m.meta.shuffle_seed},
          {"mask_seed", m.meta.mask_seed},
          {"dataset_fingerprint", m.meta.dataset_fingerprint}}},
    };
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open " + path.string() + " for writing");
    f << j.dump(1) << "\n";
}

inline TrainedModel load_model(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open " + path.string());
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (!j.contains("format_version"))
        throw SchemaMismatch(path.string() + " has no format_version field");
    if (j["format_version"].get<int>() != kModelFormatVersion)
        throw SchemaMismatch("unsupported model format version " +
                             j["format_version"].dump());

    TrainedModel m;
    const auto& rc = j.at("reservoir_config");
    m.config.n_inputs = rc.at("n_inputs").get<int>();
    m.config.n_reservoir = rc.at("n_reservoir").get<int>();
    m.config.leak_rate = rc.at("leak_rate").get<double>();
    m.config.connectivity = rc.at("connectivity").get<double>();
    m.config.input_scale = rc.at("input_scale").get<double>();
    m.config.recurrent_init_bound = rc.at("recurrent_init_bound").get<double>();
    m.config.spectral_target = rc.at("spectral_target").get<double>();
    m.config.seed = rc.at("seed").get<std::uint64_t>();

    m.weights.w_in = detail::matrix_from_json(j.at("w_in"), "w_in");
    m.weights.w_h = detail::matrix_from_json(j.at("w_h"), "w_h");
    m.weights.rescale_factor = j.at("rescale_factor").get<double>();
    m.weights.achieved_rho = j.at("achieved_rho").get<double>();
    m.readout.w_out = detail::matrix_from_json(j.at("w_out"), "w_out");
    m.n_outputs = j.at("n_outputs").get<int>();
    m.task_mode = task_mode_from_string(j.at("task_mode").get<std::string>());

    if (j.contains("scaler")) {
        const auto& sc = j["scaler"];
        m.scaler.method = scaler_method_from_string(sc.at("method").get<std::string>());
        m.scaler.offset = detail::vector_from_json(sc.at("offset"));
        m.scaler.scale = detail::vector_from_json(sc.at("scale"));
    }

    if (j.contains("metadata")) {
        const auto& md = j["metadata"];
        m.meta.retention_p = md.value("retention_p", 1.0);
        m.meta.lambda = md.value("lambda", 1.0);
        m.meta.delta = md.value("delta", 1.0);
        m.meta.epochs_run = md.value("epochs_run", 0);
        m.meta.best_epoch = md.value("best_epoch", 0);
        if (md.contains("final_val_metric") && !md["final_val_metric"].is_null())
            m.meta.final_val_metric = md["final_val_metric"].get<double>();
        m.meta.weight_seed = md.value("weight_seed", std::uint64_t{0});
        m.meta.shuffle_seed = md.value("shuffle_seed", std::uint64_t{0});
        m.meta.mask_seed = md.value("mask_seed", std::uint64_t{0});
        m.meta.dataset_fingerprint = md.value("dataset_fingerprint", std::string{});
    }

    if (m.weights.w_in.rows() != m.config.n_reservoir ||
        m.weights.w_in.cols() != m.config.n_inputs ||
        m.weights.w_h.rows() != m.config.n_reservoir ||
        m.weights.w_h.cols() != m.config.n_reservoir ||
        m.readout.w_out.cols() != m.config.n_reservoir ||
        m.readout.w_out.rows() != m.n_outputs)
        throw SchemaMismatch(path.string() + " has inconsistent matrix dimensions");
    return m;
}

}  // namespace dropin
