// End-to-end tests driving the installed `dropin` binary through a full
// synth -> train -> evaluate -> ablate -> predict workflow.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#ifndef _WIN32
#include <unistd.h>
#include <sys/wait.h>
#endif
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifndef DROPIN_CLI_PATH
#error "DROPIN_CLI_PATH must point at the dropin binary"
#endif

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd =
        std::string("\"") + DROPIN_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
#ifdef _WIN32
    return status;
#else
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#endif
}

struct Workspace {
    fs::path dir;
    Workspace() {
        dir = fs::temp_directory_path() /
              ("dropin_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~Workspace() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    std::string p(const std::string& name) const { return (dir / name).string(); }
};

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream f(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line)) lines.push_back(line);
    return lines;
}

void write_config(const fs::path& path, const std::string& dataset,
                  double retention_p) {
    std::ofstream f(path);
    f << "{\n"
      << "  \"dataset\": \"" << dataset << "\",\n"
      << "  \"scaling\": \"standardize\",\n"
      << "  \"model\": {\"n_reservoir\": 20, \"leak\": 0.3, \"delta\": 0.1, "
         "\"retention_p\": " << retention_p << "},\n"
      << "  \"connectivity\": 0.3,\n"
      << "  \"max_epochs\": 3,\n"
      << "  \"patience\": 2,\n"
      << "  \"validation_fraction\": 0.2,\n"
      << "  \"seeds\": {\"weights\": 11, \"shuffle\": 12, \"mask\": 13}\n"
      << "}\n";
}

}  // namespace

TEST_CASE("cli workflow: synth, train, evaluate, predict, ablate") {
    Workspace ws;
    const std::string data = ws.p("data");

    REQUIRE(run_cli("synth --out " + data +
                    " --n-seq 12 --seq-len 15 --channels 4 --noise 0.3"
                    " --task per_step_regression --seed 5") == 0);
    REQUIRE(fs::exists(fs::path(data) / "manifest.json"));

    write_config(ws.p("config.json"), data, 0.8);
    const std::string model = ws.p("model.json");
    REQUIRE(run_cli("train --config " + ws.p("config.json") + " --out " + model) == 0);
    REQUIRE(fs::exists(model));

    REQUIRE(run_cli("evaluate --model " + model + " --data " + data) == 0);

    // predict with no missing features writes one row per timestep
    const std::string seq_csv = (fs::path(data) / "seq_1.csv").string();
    REQUIRE(run_cli("predict --model " + model + " --seq " + seq_csv + " --out " +
                    ws.p("pred_full.csv")) == 0);
    auto full = read_lines(ws.p("pred_full.csv"));
    REQUIRE(full.size() == 15 + 1);
    REQUIRE(full[0] == "t,y_1");

    // an explicitly empty missing list gives identical output
    REQUIRE(run_cli("predict --model " + model + " --seq " + seq_csv +
                    " --missing \"\" --out " + ws.p("pred_empty.csv")) == 0);
    REQUIRE(read_lines(ws.p("pred_empty.csv")) == full);

    // dropping a feature changes the prediction
    REQUIRE(run_cli("predict --model " + model + " --seq " + seq_csv +
                    " --missing 0,2 --out " + ws.p("pred_miss.csv")) == 0);
    REQUIRE(read_lines(ws.p("pred_miss.csv")) != full);

    SECTION("ablate produces the expected subset counts") {
        REQUIRE(run_cli("ablate --model " + model + " --data " + data +
                        " --k-max 3 --out-prefix " + ws.p("abl")) == 0);
        auto detail = read_lines(ws.p("abl_detail.csv"));
        REQUIRE(detail[0] == "k,subset,metric,metric_kind");
        // 4 channels: C(4,0)+C(4,1)+C(4,2)+C(4,3) = 1+4+6+4 rows
        REQUIRE(detail.size() == 1 + 1 + 4 + 6 + 4);
        auto summary = read_lines(ws.p("abl_summary.csv"));
        REQUIRE(summary[0] == "k,mean,std,n_subsets");
        REQUIRE(summary.size() == 1 + 4);
        REQUIRE(summary[1].rfind("0,", 0) == 0);
        REQUIRE(summary[4].rfind("3,", 0) == 0);
    }

    SECTION("ablate with a restricted feature list") {
        REQUIRE(run_cli("ablate --model " + model + " --data " + data +
                        " --ablatable 1,3 --out-prefix " + ws.p("abl2")) == 0);
        auto summary = read_lines(ws.p("abl2_summary.csv"));
        REQUIRE(summary.size() == 1 + 3);  // k = 0, 1, 2
    }

    SECTION("DROPIN_CONFIG env fallback") {
        ::setenv("DROPIN_CONFIG", ws.p("config.json").c_str(), 1);
        REQUIRE(run_cli("train --out " + ws.p("model_env.json")) == 0);
        ::unsetenv("DROPIN_CONFIG");
        REQUIRE(fs::exists(ws.p("model_env.json")));
    }
}

TEST_CASE("cli error handling and exit codes") {
    Workspace ws;

    SECTION("missing subcommand or unknown flag is a CLI11 error") {
        REQUIRE(run_cli("") != 0);
        REQUIRE(run_cli("definitely-not-a-subcommand") != 0);
    }
    SECTION("train without any config exits with the config code") {
        ::unsetenv("DROPIN_CONFIG");
        REQUIRE(run_cli("train --out " + ws.p("m.json")) == 2);
    }
    SECTION("invalid hyperparameter in config exits 2") {
        const std::string data = ws.p("data");
        REQUIRE(run_cli("synth --out " + data + " --n-seq 8 --seq-len 10"
                        " --channels 3 --task per_step_regression") == 0);
        std::ofstream f(ws.p("bad.json"));
        f << "{\"dataset\": \"" << data
          << "\", \"model\": {\"leak\": 1.5}}";
        f.close();
        REQUIRE(run_cli("train --config " + ws.p("bad.json")) == 2);
    }
    SECTION("nonexistent dataset exits with the data code") {
        write_config(ws.p("config.json"), ws.p("no_such_dir"), 1.0);
        REQUIRE(run_cli("train --config " + ws.p("config.json")) == 3);
    }
    SECTION("evaluate with a missing model file exits 3") {
        REQUIRE(run_cli("evaluate --model " + ws.p("nope.json") + " --data " +
                        ws.p("also_nope")) == 3);
    }
}

TEST_CASE("cli gridsearch over a tiny grid") {
    Workspace ws;
    const std::string data = ws.p("data");
    REQUIRE(run_cli("synth --out " + data +
                    " --n-seq 10 --seq-len 12 --channels 3 --noise 0.3"
                    " --task last_step_classification --seed 9") == 0);

    std::ofstream f(ws.p("gs.json"));
    f << "{\n"
      << "  \"dataset\": \"" << data << "\",\n"
      << "  \"max_epochs\": 2, \"patience\": 1, \"cv_folds\": 2,\n"
      << "  \"n_topologies\": 1, \"connectivity\": 0.3,\n"
      << "  \"grid\": {\"n_reservoir\": [10, 15], \"leak\": [0.5],\n"
      << "             \"delta\": [0.1], \"retention_p\": [1.0]}\n"
      << "}\n";
    f.close();

    REQUIRE(run_cli("gridsearch --config " + ws.p("gs.json") + " --report " +
                    ws.p("report.csv") + " --best-model " + ws.p("best.json") +
                    " --jobs 1") == 0);
    auto report = read_lines(ws.p("report.csv"));
    REQUIRE(report[0].rfind("row_type,", 0) == 0);
    // 2 configs x 2 folds x 1 topology trials + 2 summary rows
    REQUIRE(report.size() == 1 + 4 + 2);
    REQUIRE(fs::exists(ws.p("best.json")));
    REQUIRE(run_cli("evaluate --model " + ws.p("best.json") + " --data " + data) == 0);
}
