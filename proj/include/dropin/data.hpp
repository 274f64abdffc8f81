#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <limits>
#include <map>
#include <fstream>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dropin/errors.hpp"
#include "dropin/reservoir.hpp"
#include "dropin/rng.hpp"

namespace dropin {

namespace fs = std::filesystem;
using nlohmann::json;

enum class TaskMode { last_step_classification, per_step_regression };

inline std::string to_string(TaskMode m) {
    return m == TaskMode::last_step_classification ? "last_step_classification"
                                                   : "per_step_regression";
}

inline TaskMode task_mode_from_string(const std::string& s) {
    if (s == "last_step_classification") return TaskMode::last_step_classification;
    if (s == "per_step_regression") return TaskMode::per_step_regression;
    throw SchemaMismatch("unknown task_mode: " + s);
}

struct Sequence {
    std::string id;
    Matrix inputs;   // T x N_U
    Matrix targets;  // T x N_Y (per-step) or 1 x N_Y (last-step)
};

struct Dataset {
    std::vector<Sequence> sequences;
    int n_inputs = 0;
    int n_outputs = 0;
    TaskMode task_mode = TaskMode::last_step_classification;
    std::vector<std::string> feature_names;
    std::string provenance;

    std::size_t size() const { return sequences.size(); }

    void validate() const {
        if (sequences.empty()) throw EmptyDataset("dataset has no sequences");
        std::set<std::string> ids;
        for (const auto& s : sequences) {
            if (s.inputs.rows() < 1) throw EmptySequence("sequence " + s.id + " is empty");
            if (s.inputs.cols() != n_inputs)
                throw InconsistentFeatureCount("sequence " + s.id + " has " +
                                               std::to_string(s.inputs.cols()) +
                                               " features, expected " +
                                               std::to_string(n_inputs));
            if (s.targets.cols() != n_outputs)
                throw DimensionMismatch("sequence " + s.id + " target width mismatch");
            const auto want = task_mode == TaskMode::per_step_regression
                                  ? s.inputs.rows() : Eigen::Index{1};
            if (s.targets.rows() != want)
                throw DimensionMismatch("sequence " + s.id + " target length mismatch");
            if (!ids.insert(s.id).second)
                throw SchemaMismatch("duplicate sequence id " + s.id);
        }
    }
};

// ---------------------------------------------------------------------------
// number formatting / parsing (shortest round-trip, '.' decimal separator)

inline std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

inline double parse_double(const std::string& tok, const std::string& where) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    while (first < last && (*first == ' ' || *first == '\t')) ++first;
    while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last)
        throw ParseError("bad number '" + tok + "' at " + where);
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

// ---------------------------------------------------------------------------
// canonical on-disk format: directory with manifest.json + one CSV per sequence

inline void write_sequence_csv(const Sequence& s, int n_outputs, bool per_step,
                               const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open " + path.string() + " for writing");
    f << "t";
    for (Eigen::Index j = 0; j < s.inputs.cols(); ++j) f << ",u_" << (j + 1);
    if (per_step)
        for (int j = 0; j < n_outputs; ++j) f << ",y_" << (j + 1);
    f << "\n";
    for (Eigen::Index t = 0; t < s.inputs.rows(); ++t) {
        f << (t + 1);
        for (Eigen::Index j = 0; j < s.inputs.cols(); ++j)
            f << "," << format_double(s.inputs(t, j));
        if (per_step)
            for (Eigen::Index j = 0; j < s.targets.cols(); ++j)
                f << "," << format_double(s.targets(t, j));
        f << "\n";
    }
}

inline void save_canonical(const Dataset& ds, const fs::path& dir) {
    ds.validate();
    fs::create_directories(dir);
    const bool per_step = ds.task_mode == TaskMode::per_step_regression;
    json index = json::array();
    for (const auto& s : ds.sequences) {
        const std::string file = "seq_" + s.id + ".csv";
        write_sequence_csv(s, ds.n_outputs, per_step, dir / file);
        json entry = {{"id", s.id}, {"file", file}, {"length", s.inputs.rows()}};
        if (!per_step) {
            json tgt = json::array();
            for (Eigen::Index j = 0; j < s.targets.cols(); ++j)
                tgt.push_back(s.targets(0, j));
            entry["target"] = tgt;
        }
        index.push_back(entry);
    }
    json manifest = {
        {"format_version", 1},
        {"n_inputs", ds.n_inputs},
        {"n_outputs", ds.n_outputs},
        {"task_mode", to_string(ds.task_mode)},
        {"feature_names", ds.feature_names},
        {"provenance", ds.provenance},
        {"sequences", index},
    };
    std::ofstream f(dir / "manifest.json", std::ios::binary);
    f << manifest.dump(2) << "\n";
}

inline Matrix read_sequence_csv(const fs::path& path, int n_inputs, int n_outputs,
                                bool per_step, Matrix* targets_out) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open " + path.string());
    std::string line;
    std::vector<std::vector<double>> rows;
    const int want = 1 + n_inputs + (per_step ? n_outputs : 0);
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        if (lineno == 1 && line.rfind("t,", 0) == 0) continue;  // header
        auto toks = split_csv_line(line);
        if (static_cast<int>(toks.size()) != want)
            throw ParseError(path.string() + " line " + std::to_string(lineno) +
                             ": expected " + std::to_string(want) + " columns, got " +
                             std::to_string(toks.size()));
        std::vector<double> row;
        for (std::size_t c = 1; c < toks.size(); ++c)
            row.push_back(parse_double(toks[c], path.string() + " line " +
                                       std::to_string(lineno) + " col " +
                                       std::to_string(c + 1)));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw EmptySequence(path.string() + " has no data rows");
    Matrix inputs(rows.size(), n_inputs);
    Matrix targets;
    if (per_step) targets.resize(rows.size(), n_outputs);
    for (std::size_t t = 0; t < rows.size(); ++t) {
        for (int j = 0; j < n_inputs; ++j) inputs(t, j) = rows[t][j];
        if (per_step)
            for (int j = 0; j < n_outputs; ++j) targets(t, j) = rows[t][n_inputs + j];
    }
    if (targets_out) *targets_out = std::move(targets);
    return inputs;
}

inline Dataset load_canonical(const fs::path& dir) {
    const fs::path mpath = dir / "manifest.json";
    std::ifstream mf(mpath, std::ios::binary);
    if (!mf) throw ParseError("cannot open " + mpath.string());
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw ParseError(mpath.string() + ": " + e.what());
    }
    for (const char* key : {"format_version", "n_inputs", "n_outputs",
                            "task_mode", "sequences"})
        if (!manifest.contains(key))
            throw SchemaMismatch(mpath.string() + " missing field '" + std::string(key) + "'");

    Dataset ds;
    ds.n_inputs = manifest["n_inputs"].get<int>();
    ds.n_outputs = manifest["n_outputs"].get<int>();
    ds.task_mode = task_mode_from_string(manifest["task_mode"].get<std::string>());
    if (manifest.contains("feature_names"))
        ds.feature_names = manifest["feature_names"].get<std::vector<std::string>>();
    if (manifest.contains("provenance"))
        ds.provenance = manifest["provenance"].get<std::string>();
    const bool per_step = ds.task_mode == TaskMode::per_step_regression;
    for (const auto& entry : manifest["sequences"]) {
        Sequence s;
        s.id = entry.at("id").get<std::string>();
        Matrix targets;
        s.inputs = read_sequence_csv(dir / entry.at("file").get<std::string>(),
                                     ds.n_inputs, ds.n_outputs, per_step, &targets);
        if (per_step) {
            s.targets = std::move(targets);
        } else {
            if (!entry.contains("target"))
                throw SchemaMismatch("sequence " + s.id + " has no target in manifest");
            auto tgt = entry["target"].get<std::vector<double>>();
            if (static_cast<int>(tgt.size()) != ds.n_outputs)
                throw SchemaMismatch("sequence " + s.id + " target width mismatch");
            s.targets.resize(1, ds.n_outputs);
            for (int j = 0; j < ds.n_outputs; ++j) s.targets(0, j) = tgt[j];
        }
        ds.sequences.push_back(std::move(s));
    }
    ds.validate();
    return ds;
}

// FNV-1a over dimensions, ids and raw value bits; identifies a dataset in
// model metadata.
inline std::string dataset_fingerprint(const Dataset& ds) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto feed = [&](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) h = (h ^ b[i]) * 0x100000001b3ull;
    };
    auto feed64 = [&](std::uint64_t v) { feed(&v, 8); };
    feed64(static_cast<std::uint64_t>(ds.n_inputs));
    feed64(static_cast<std::uint64_t>(ds.n_outputs));
    feed64(static_cast<std::uint64_t>(ds.task_mode));
    for (const auto& s : ds.sequences) {
        feed(s.id.data(), s.id.size());
        for (Eigen::Index i = 0; i < s.inputs.size(); ++i) {
            const double v = s.inputs.data()[i];
            std::uint64_t bits;
            std::memcpy(&bits, &v, 8);
            feed64(bits);
        }
        for (Eigen::Index i = 0; i < s.targets.size(); ++i) {
            const double v = s.targets.data()[i];
            std::uint64_t bits;
            std::memcpy(&bits, &v, 8);
            feed64(bits);
        }
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

// ---------------------------------------------------------------------------
// UCI "Indoor User Movement Prediction" importer, driven by a small manifest
// so the adapter survives dataset-packaging drift.

struct ImportManifest {
    std::string sequence_glob;          // relative glob, '*' and '?' supported
    std::string target_file;            // CSV mapping sequence id -> label
    std::string id_pattern = "(\\d+)";  // regex; last match in the filename is the id
    int id_column = 0;                  // columns of the target file
    int label_column = 1;
    // optional group filter: keep only ids whose group value is listed
    std::string group_file;
    int group_id_column = 0;
    int group_value_column = 1;
    std::vector<std::string> group_values;
};

inline ImportManifest load_import_manifest(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open " + path.string());
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    ImportManifest m;
    if (!j.contains("sequence_glob") || !j.contains("target_file"))
        throw SchemaMismatch(path.string() +
                             " needs 'sequence_glob' and 'target_file'");
    m.sequence_glob = j["sequence_glob"].get<std::string>();
    m.target_file = j["target_file"].get<std::string>();
    if (j.contains("id_pattern")) m.id_pattern = j["id_pattern"].get<std::string>();
    if (j.contains("target_column_map")) {
        const auto& tcm = j["target_column_map"];
        if (tcm.contains("id_column")) m.id_column = tcm["id_column"].get<int>();
        if (tcm.contains("label_column")) m.label_column = tcm["label_column"].get<int>();
    }
    if (j.contains("group_filter")) {
        const auto& gf = j["group_filter"];
        m.group_file = gf.at("file").get<std::string>();
        if (gf.contains("id_column")) m.group_id_column = gf["id_column"].get<int>();
        if (gf.contains("value_column")) m.group_value_column = gf["value_column"].get<int>();
        for (const auto& v : gf.at("values")) m.group_values.push_back(v.get<std::string>());
    }
    return m;
}

inline bool glob_match(const std::string& pat, const std::string& str) {
    std::size_t p = 0, s = 0, star = std::string::npos, mark = 0;
    while (s < str.size()) {
        if (p < pat.size() && (pat[p] == '?' || pat[p] == str[s])) {
            ++p, ++s;
        } else if (p < pat.size() && pat[p] == '*') {
            star = p++;
            mark = s;
        } else if (star != std::string::npos) {
            p = star + 1;
            s = ++mark;
        } else {
            return false;
        }
    }
    while (p < pat.size() && pat[p] == '*') ++p;
    return p == pat.size();
}

namespace detail {

// id -> value map from a 2-column-ish CSV (header lines starting with '#'
// or containing non-numeric ids are skipped)
inline std::vector<std::pair<std::string, std::string>>
read_id_value_csv(const fs::path& path, int id_col, int val_col) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open " + path.string());
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
        std::size_t b = s.find_first_not_of(' ');
        return b == std::string::npos ? std::string{} : s.substr(b);
    };
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto toks = split_csv_line(line);
        const int need = std::max(id_col, val_col) + 1;
        if (static_cast<int>(toks.size()) < need)
            throw ParseError(path.string() + " line " + std::to_string(lineno) +
                             ": fewer than " + std::to_string(need) + " columns");
        std::string id = trim(toks[id_col]);
        if (id.empty() || id.find_first_not_of("0123456789") != std::string::npos)
            continue;  // header or non-numeric id row
        out.emplace_back(std::move(id), trim(toks[val_col]));
    }
    return out;
}

}  // namespace detail

inline Dataset import_uci_movement(const fs::path& dir, const ImportManifest& m) {
    // targets
    std::map<std::string, int> labels;
    for (auto& [id, val] : detail::read_id_value_csv(dir / m.target_file,
                                                     m.id_column, m.label_column)) {
        const double v = parse_double(val, m.target_file + " (label for id " + id + ")");
        if (v != 1.0 && v != -1.0)
            throw LabelOutOfDomain("label for sequence " + id + " is " + val +
                                   ", expected +1 or -1");
        labels[id] = static_cast<int>(v);
    }

    // optional group filter
    std::set<std::string> keep_ids;
    bool filtered = false;
    if (!m.group_file.empty() && !m.group_values.empty()) {
        filtered = true;
        std::set<std::string> wanted(m.group_values.begin(), m.group_values.end());
        for (auto& [id, val] : detail::read_id_value_csv(dir / m.group_file,
                                                         m.group_id_column,
                                                         m.group_value_column))
            if (wanted.count(val)) keep_ids.insert(id);
    }

    // sequence files
    const fs::path glob_path(m.sequence_glob);
    const fs::path sub = glob_path.parent_path();
    const std::string fname_pat = glob_path.filename().string();
    const fs::path scan_dir = sub.empty() ? dir : dir / sub;
    if (!fs::is_directory(scan_dir))
        throw ParseError("sequence directory " + scan_dir.string() + " not found");

    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(scan_dir))
        if (e.is_regular_file() && glob_match(fname_pat, e.path().filename().string()))
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw ParseError("no files match " + m.sequence_glob + " under " + dir.string());

    const std::regex id_re(m.id_pattern);
    Dataset ds;
    ds.n_inputs = -1;
    ds.n_outputs = 1;
    ds.task_mode = TaskMode::last_step_classification;
    ds.provenance = "UCI Indoor User Movement Prediction import from " + dir.string();

    for (const auto& file : files) {
        const std::string name = file.filename().string();
        std::string id;
        for (auto it = std::sregex_iterator(name.begin(), name.end(), id_re);
             it != std::sregex_iterator(); ++it)
            id = (*it)[it->size() > 1 ? 1 : 0].str();
        if (id.empty())
            throw ParseError("cannot extract sequence id from filename " + name);
        if (filtered && !keep_ids.count(id)) continue;

        std::ifstream f(file, std::ios::binary);
        std::string line;
        std::vector<std::vector<double>> rows;
        int lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            if (line.empty() || line == "\r" || line[0] == '#') continue;
            auto toks = split_csv_line(line);
            std::vector<double> row;
            bool numeric = true;
            for (const auto& t : toks) {
                try {
                    row.push_back(parse_double(t, name + " line " + std::to_string(lineno)));
                } catch (const ParseError&) {
                    numeric = false;
                    break;
                }
            }
            if (!numeric) {
                if (rows.empty()) continue;  // header
                throw ParseError(name + " line " + std::to_string(lineno) +
                                 ": non-numeric data row");
            }
            if (ds.n_inputs < 0 && rows.empty() && !row.empty())
                ds.n_inputs = std::max(ds.n_inputs, static_cast<int>(row.size()));
            rows.push_back(std::move(row));
        }
        if (rows.empty()) throw EmptySequence(name + " has no data rows");
        if (ds.n_inputs < 0) ds.n_inputs = static_cast<int>(rows[0].size());
        for (std::size_t t = 0; t < rows.size(); ++t)
            if (static_cast<int>(rows[t].size()) != ds.n_inputs)
                throw InconsistentFeatureCount(name + " row " + std::to_string(t + 1) +
                                               " has " + std::to_string(rows[t].size()) +
                                               " columns, expected " +
                                               std::to_string(ds.n_inputs));

        auto lab = labels.find(id);
        if (lab == labels.end())
            throw MissingTargetEntry("no target entry for sequence " + id);

        Sequence s;
        s.id = id;
        s.inputs.resize(rows.size(), ds.n_inputs);
        for (std::size_t t = 0; t < rows.size(); ++t)
            for (int j = 0; j < ds.n_inputs; ++j) s.inputs(t, j) = rows[t][j];
        s.targets.resize(1, 1);
        s.targets(0, 0) = lab->second;
        ds.sequences.push_back(std::move(s));
    }
    for (int j = 0; j < ds.n_inputs; ++j)
        ds.feature_names.push_back("rss_anchor" + std::to_string(j + 1));
    ds.validate();
    return ds;
}

inline Dataset import_uci_movement(const fs::path& dir) {
    const fs::path mpath = dir / "import_manifest.json";
    if (fs::exists(mpath)) return import_uci_movement(dir, load_import_manifest(mpath));
    ImportManifest m;
    m.sequence_glob = "dataset/MovementAAL_RSS_*.csv";
    m.target_file = "dataset/MovementAAL_target.csv";
    return import_uci_movement(dir, m);
}

// ---------------------------------------------------------------------------
// synthetic redundant-channel task: latent z(t) = sum of 3 random-phase
// sinusoids, every channel observes z plus independent Gaussian noise, so
// the task stays solvable with any channel subset.

inline Dataset gen_synthetic_redundant(int n_seq, int seq_len, int n_channels,
                                       double noise, TaskMode mode,
                                       std::uint64_t seed) {
    if (n_seq < 1 || seq_len < 1) throw InvalidParameters("n_seq and seq_len must be >= 1");
    if (n_channels < 2) throw InvalidParameters("need at least 2 channels");
    if (noise < 0.0) throw InvalidParameters("noise sigma must be >= 0");

    Rng rng(seed);
    Dataset ds;
    ds.n_inputs = n_channels;
    ds.n_outputs = 1;
    ds.task_mode = mode;
    ds.provenance = "synthetic redundant-channel task, seed " + std::to_string(seed);
    for (int j = 0; j < n_channels; ++j)
        ds.feature_names.push_back("ch_" + std::to_string(j + 1));

    const bool classify = mode == TaskMode::last_step_classification;
    const int quota = classify ? (n_seq * 6 + 9) / 10 : n_seq;  // <= 60% per class
    int n_pos = 0, n_neg = 0;
    int attempts = 0;
    while (static_cast<int>(ds.sequences.size()) < n_seq) {
        if (++attempts > 50 * n_seq + 100)
            throw InvalidParameters("class balancing did not converge");
        Vector z(seq_len);
        z.setZero();
        for (int k = 0; k < 3; ++k) {
            const double period = rng.uniform(10.0, static_cast<double>(std::max(10, seq_len)));
            const double phase = rng.uniform(0.0, 2.0 * M_PI);
            for (int t = 0; t < seq_len; ++t)
                z(t) += std::sin(2.0 * M_PI * (t + 1) / period + phase);
        }
        const double label = z.mean() >= 0.0 ? 1.0 : -1.0;
        if (classify) {
            if (label > 0 && n_pos >= quota) continue;
            if (label < 0 && n_neg >= quota) continue;
        }
        Sequence s;
        s.id = std::to_string(ds.sequences.size() + 1);
        s.inputs.resize(seq_len, n_channels);
        for (int t = 0; t < seq_len; ++t)
            for (int j = 0; j < n_channels; ++j)
                s.inputs(t, j) = z(t) + (noise > 0.0 ? noise * rng.gaussian() : 0.0);
        if (classify) {
            s.targets.resize(1, 1);
            s.targets(0, 0) = label;
            (label > 0 ? n_pos : n_neg)++;
        } else {
            s.targets = z;
        }
        ds.sequences.push_back(std::move(s));
    }
    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------
// splits

inline Dataset subset_by_indices(const Dataset& ds, const std::vector<std::size_t>& idx) {
    Dataset out = ds;
    out.sequences.clear();
    for (auto i : idx) out.sequences.push_back(ds.sequences[i]);
    return out;
}

inline std::pair<Dataset, Dataset> holdout_split(const Dataset& ds, double fraction,
                                                 std::uint64_t seed) {
    if (fraction <= 0.0 || fraction >= 1.0)
        throw InvalidHyperparameter("holdout fraction must be in (0, 1)");
    const std::size_t n = ds.size();
    if (n < 2) throw DatasetTooSmall("need at least 2 sequences to split");
    auto n_test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);
    std::vector<std::size_t> test_idx(idx.begin(), idx.begin() + n_test);
    std::vector<std::size_t> train_idx(idx.begin() + n_test, idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    return {subset_by_indices(ds, train_idx), subset_by_indices(ds, test_idx)};
}

inline std::vector<std::pair<Dataset, Dataset>> kfold(const Dataset& ds, int k,
                                                      std::uint64_t seed) {
    if (k < 2) throw InvalidHyperparameter("k must be >= 2");
    const std::size_t n = ds.size();
    if (static_cast<std::size_t>(k) > n)
        throw KTooLarge("k exceeds the number of sequences");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);

    std::vector<std::pair<Dataset, Dataset>> folds;
    std::size_t pos = 0;
    for (int f = 0; f < k; ++f) {
        const std::size_t sz = n / k + (static_cast<std::size_t>(f) < n % k ? 1 : 0);
        std::vector<std::size_t> val_idx(idx.begin() + pos, idx.begin() + pos + sz);
        std::vector<std::size_t> train_idx;
        train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + pos);
        train_idx.insert(train_idx.end(), idx.begin() + pos + sz, idx.end());
        pos += sz;
        std::sort(val_idx.begin(), val_idx.end());
        std::sort(train_idx.begin(), train_idx.end());
        folds.emplace_back(subset_by_indices(ds, train_idx),
                           subset_by_indices(ds, val_idx));
    }
    return folds;
}

// ---------------------------------------------------------------------------
// per-feature affine scaling, fit on training data only

struct Scaler {
    enum class Method { none, minmax_to_unit, standardize };
    Method method = Method::none;
    Vector offset;  // u' = (u - offset) / scale
    Vector scale;

    bool identity() const { return method == Method::none; }
};

inline std::string to_string(Scaler::Method m) {
    switch (m) {
        case Scaler::Method::none: return "none";
        case Scaler::Method::minmax_to_unit: return "minmax_to_unit";
        case Scaler::Method::standardize: return "standardize";
    }
    return "none";
}

inline Scaler::Method scaler_method_from_string(const std::string& s) {
    if (s == "none") return Scaler::Method::none;
    if (s == "minmax_to_unit") return Scaler::Method::minmax_to_unit;
    if (s == "standardize") return Scaler::Method::standardize;
    throw SchemaMismatch("unknown scaling method: " + s);
}

inline Scaler fit_scaler(const Dataset& ds, Scaler::Method method,
                         std::vector<std::string>* warnings = nullptr) {
    ds.validate();
    Scaler sc;
    sc.method = method;
    sc.offset = Vector::Zero(ds.n_inputs);
    sc.scale = Vector::Ones(ds.n_inputs);
    if (method == Scaler::Method::none) return sc;

    for (int j = 0; j < ds.n_inputs; ++j) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        double sum = 0.0, sumsq = 0.0;
        long count = 0;
        for (const auto& s : ds.sequences)
            for (Eigen::Index t = 0; t < s.inputs.rows(); ++t) {
                const double v = s.inputs(t, j);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                sum += v;
                sumsq += v * v;
                ++count;
            }
        const double mean = sum / static_cast<double>(count);
        const double var = std::max(0.0, sumsq / static_cast<double>(count) - mean * mean);
        double off = 0.0, scale = 1.0;
        if (method == Scaler::Method::minmax_to_unit) {
            off = lo;
            scale = hi - lo;
        } else {
            off = mean;
            scale = std::sqrt(var);
        }
        if (scale == 0.0) {
            if (warnings)
                warnings->push_back("feature " + std::to_string(j) +
                                    " is constant; leaving it unscaled");
            off = 0.0;
            scale = 1.0;
        }
        sc.offset(j) = off;
        sc.scale(j) = scale;
    }
    return sc;
}

inline Matrix apply_scaler_inputs(const Matrix& inputs, const Scaler& sc) {
    if (sc.identity()) return inputs;
    if (inputs.cols() != sc.offset.size())
        throw DimensionMismatch("scaler width does not match inputs");
    return (inputs.rowwise() - sc.offset.transpose()).array().rowwise() /
           sc.scale.transpose().array();
}

inline Dataset apply_scaler(const Dataset& ds, const Scaler& sc) {
    if (sc.identity()) return ds;
    Dataset out = ds;
    for (auto& s : out.sequences) s.inputs = apply_scaler_inputs(s.inputs, sc);
    return out;
}

}  // namespace dropin
