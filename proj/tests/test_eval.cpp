#include <catch2/catch_amalgamated.hpp>

#include "dropin/dropin.hpp"
#include "dropin/eval.hpp"

using namespace dropin;

namespace {

// hand-built model: no training needed for masking-locality checks
TrainedModel toy_model(int n_inputs, int n_reservoir, std::uint64_t seed,
                       TaskMode mode = TaskMode::per_step_regression) {
    ReservoirConfig rc;
    rc.n_inputs = n_inputs;
    rc.n_reservoir = n_reservoir;
    rc.leak_rate = 0.4;
    rc.connectivity = 0.5;
    rc.seed = seed;
    TrainedModel m;
    m.config = rc;
    m.weights = init_weights(rc);
    Rng rng(seed + 100);
    m.readout.w_out.resize(1, n_reservoir);
    for (int j = 0; j < n_reservoir; ++j) m.readout.w_out(0, j) = rng.uniform(-1, 1);
    m.n_outputs = 1;
    m.task_mode = mode;
    return m;
}

long binom(int n, int k) {
    long r = 1;
    for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
}

}  // namespace

TEST_CASE("accuracy") {
    SECTION("all correct") {
        Vector p(3), t(3);
        p << 2.0, -0.1, 0.4;
        t << 1, -1, 1;
        REQUIRE(accuracy(p, t) == 1.0);
    }
    SECTION("sign thresholding by hand") {
        Vector p(3), t(3);
        p << 0.2, -0.4, 0.9;
        t << 1, 1, 1;
        REQUIRE(accuracy(p, t) == Catch::Approx(2.0 / 3.0));
    }
    SECTION("empty input") {
        REQUIRE_THROWS_AS(accuracy(Vector{}, Vector{}), EmptyInput);
    }
}

TEST_CASE("mae") {
    SECTION("perfect prediction") {
        Matrix p = Matrix::Random(4, 2);
        REQUIRE(mae(p, p) == 0.0);
    }
    SECTION("simple average") {
        Matrix p(2, 1), t(2, 1);
        p << 0, 1;
        t << 1, 1;
        REQUIRE(mae(p, t) == Catch::Approx(0.5));
    }
    SECTION("empty input") {
        REQUIRE_THROWS_AS(mae(Matrix{}, Matrix{}), EmptyInput);
    }
}

TEST_CASE("predict_with_missing") {
    TrainedModel m = toy_model(4, 15, 9);
    Rng rng(10);
    Matrix seq(12, 4);
    for (int t = 0; t < 12; ++t)
        for (int j = 0; j < 4; ++j) seq(t, j) = rng.uniform(-1, 1);

    SECTION("empty missing set equals plain prediction") {
        REQUIRE(predict_with_missing(m, seq, {}) == predict_sequence(m, seq));
    }
    SECTION("all features missing equals the zero-input trajectory") {
        const Matrix expected = predict_sequence(m, Matrix::Zero(12, 4));
        REQUIRE(predict_with_missing(m, seq, {0, 1, 2, 3}) == expected);
    }
    SECTION("masking an unused input is a no-op") {
        TrainedModel m2 = m;
        m2.weights.w_in.col(1).setZero();
        REQUIRE(predict_with_missing(m2, seq, {1}) == predict_with_missing(m2, seq, {}));
    }
    SECTION("masking locality: equals zeroing the W_in columns") {
        TrainedModel zeroed = m;
        zeroed.weights.w_in.col(0).setZero();
        zeroed.weights.w_in.col(2).setZero();
        REQUIRE(predict_with_missing(m, seq, {0, 2}) == predict_sequence(zeroed, seq));
    }
    SECTION("invalid feature index") {
        REQUIRE_THROWS_AS(predict_with_missing(m, seq, {4}), InvalidFeatureIndex);
        REQUIRE_THROWS_AS(predict_with_missing(m, seq, {-1}), InvalidFeatureIndex);
    }
}

TEST_CASE("ablate combinatorics") {
    TrainedModel m = toy_model(4, 10, 11);
    Dataset ds = gen_synthetic_redundant(5, 10, 4, 0.1,
                                         TaskMode::per_step_regression, 3);

    SECTION("C(4,1)=4 and C(4,2)=6 subsets") {
        REQUIRE(ablate(m, ds, 1, all_features(4)).per_subset.size() == 4);
        REQUIRE(ablate(m, ds, 2, all_features(4)).per_subset.size() == 6);
    }
    SECTION("restricted ablatable set: 5 features, k=4 gives 5 subsets") {
        TrainedModel m6 = toy_model(6, 10, 12);
        Dataset ds6 = gen_synthetic_redundant(4, 10, 6, 0.1,
                                              TaskMode::per_step_regression, 4);
        const std::vector<int> pir{0, 1, 2, 3, 4};
        REQUIRE(ablate(m6, ds6, 4, pir).per_subset.size() == 5);
    }
    SECTION("mean equals the mean of per-subset values to 1e-12") {
        AblationLevel level = ablate(m, ds, 2, all_features(4));
        double sum = 0.0;
        for (const auto& [_, v] : level.per_subset) sum += v;
        REQUIRE(std::abs(level.mean - sum / level.per_subset.size()) < 1e-12);
    }
    SECTION("k too large") {
        REQUIRE_THROWS_AS(ablate(m, ds, 5, all_features(4)), KTooLarge);
    }
    SECTION("subset counts equal binomials for every k up to 8 features") {
        TrainedModel m8 = toy_model(8, 8, 13);
        Dataset ds8 = gen_synthetic_redundant(2, 8, 8, 0.1,
                                              TaskMode::per_step_regression, 5);
        for (int k = 0; k <= 8; ++k)
            REQUIRE(static_cast<long>(ablate(m8, ds8, k, all_features(8)).per_subset.size()) ==
                    binom(8, k));
    }
}

TEST_CASE("ablation_curve") {
    TrainedModel m = toy_model(4, 10, 14);
    Dataset ds = gen_synthetic_redundant(5, 10, 4, 0.1,
                                         TaskMode::per_step_regression, 6);

    SECTION("k_max=0 is the single unmasked point") {
        AblationReport r = ablation_curve(m, ds, 0, all_features(4));
        REQUIRE(r.levels.size() == 1);
        REQUIRE(r.levels[0].per_subset.size() == 1);
        REQUIRE(r.levels[0].mean == dataset_metric(m, ds));
        REQUIRE(r.levels[0].stddev == 0.0);
    }
    SECTION("subset enumeration is order-independent: mean equals a direct sum") {
        AblationReport r = ablation_curve(m, ds, 2, all_features(4));
        for (const auto& level : r.levels) {
            double sum = 0.0;
            for (const auto& [subset, v] : level.per_subset)
                sum += dataset_metric(m, ds, subset);
            REQUIRE(level.mean == Catch::Approx(sum / level.per_subset.size()).margin(1e-12));
        }
    }
}

TEST_CASE("monotone information: full ablation no better than none") {
    // trained model on data with real signal
    Dataset ds = gen_synthetic_redundant(10, 20, 4, 0.2,
                                         TaskMode::per_step_regression, 8);
    ReservoirConfig rc;
    rc.n_inputs = 4;
    rc.n_reservoir = 20;
    rc.leak_rate = 0.5;
    rc.seed = 15;
    DropInConfig dc;
    dc.task_mode = ds.task_mode;
    dc.max_epochs = 5;
    TrainedModel m = train_standard(ds, Dataset{}, rc, dc, 0.1, 0.9999995);

    const double at_zero = ablate(m, ds, 0, all_features(4)).mean;
    const double at_full = ablate(m, ds, 4, all_features(4)).mean;
    REQUIRE(at_full >= at_zero);  // MAE: larger is worse
}

TEST_CASE("ablation CSV outputs") {
    TrainedModel m = toy_model(4, 8, 16);
    Dataset ds = gen_synthetic_redundant(3, 8, 4, 0.1,
                                         TaskMode::per_step_regression, 9);
    AblationReport r = ablation_curve(m, ds, 2, all_features(4));

    const fs::path dir = fs::temp_directory_path() / "dropin_eval_csv_test";
    fs::create_directories(dir);
    write_ablation_detail_csv(r, dir / "detail.csv");
    write_ablation_summary_csv(r, dir / "summary.csv");

    std::ifstream detail(dir / "detail.csv");
    std::string line;
    std::getline(detail, line);
    REQUIRE(line == "k,subset,metric,metric_kind");
    int rows = 0;
    while (std::getline(detail, line))
        if (!line.empty()) ++rows;
    REQUIRE(rows == 1 + 4 + 6);

    std::ifstream summary(dir / "summary.csv");
    std::getline(summary, line);
    REQUIRE(line == "k,mean,std,n_subsets");
    std::getline(summary, line);
    REQUIRE(line.rfind("0,", 0) == 0);
    fs::remove_all(dir);
}
