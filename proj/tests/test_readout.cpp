#include <catch2/catch_amalgamated.hpp>

#include "dropin/readout.hpp"
#include "dropin/rng.hpp"

using namespace dropin;

namespace {

Matrix random_matrix(int n, int m, Rng& rng) {
    Matrix a(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
    return a;
}

// closed-form solution of the forgetting-weighted problem that RLS with
// S^-1(0) = delta^-1 I solves exactly after N steps:
//   W = (sum lambda^(N-n) y_n x_n^T) (lambda^N delta I + sum lambda^(N-n) x_n x_n^T)^-1
Matrix weighted_ridge_oracle(const Matrix& states, const Matrix& targets,
                             double delta, double lambda) {
    const Eigen::Index n = states.rows();
    const Eigen::Index d = states.cols();
    Matrix s = std::pow(lambda, static_cast<double>(n)) * delta *
               Matrix::Identity(d, d);
    Matrix yx = Matrix::Zero(targets.cols(), d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = std::pow(lambda, static_cast<double>(n - 1 - i));
        s += w * states.row(i).transpose() * states.row(i);
        yx += w * targets.row(i).transpose() * states.row(i);
    }
    return yx * s.inverse();
}

}  // namespace

TEST_CASE("predict") {
    SECTION("zero readout gives zero output") {
        Readout r{Matrix::Zero(2, 3)};
        REQUIRE(predict(r, Vector::Random(3)).isZero(0.0));
    }
    SECTION("identity readout") {
        Readout r{Matrix::Identity(2, 2)};
        Vector x(2);
        x << 0.3, -0.2;
        REQUIRE(predict(r, x) == x);
    }
    SECTION("dot product by hand") {
        Readout r{Matrix(1, 3)};
        r.w_out << 1, 2, 3;
        REQUIRE(predict(r, Vector::Ones(3))(0) == Catch::Approx(6.0));
    }
    SECTION("linearity") {
        Rng rng(31);
        Readout r{random_matrix(3, 5, rng)};
        const Vector x1 = Vector::Random(5), x2 = Vector::Random(5);
        const double alpha = 1.7, beta = -0.4;
        const Vector lhs = predict(r, alpha * x1 + beta * x2);
        const Vector rhs = alpha * predict(r, x1) + beta * predict(r, x2);
        REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("dimension mismatch") {
        Readout r{Matrix::Zero(1, 3)};
        REQUIRE_THROWS_AS(predict(r, Vector::Zero(4)), DimensionMismatch);
    }
}

TEST_CASE("rls_init") {
    SECTION("delta=1 gives the identity") {
        RlsState s = rls_init(1.0, 3, 1.0);
        REQUIRE(s.s_inv == Matrix::Identity(3, 3));
        REQUIRE(s.n == 0);
    }
    SECTION("delta=0.01 gives diag(100)") {
        RlsState s = rls_init(0.01, 2, 1.0);
        REQUIRE(s.s_inv(0, 0) == Catch::Approx(100.0));
        REQUIRE(s.s_inv(1, 1) == Catch::Approx(100.0));
    }
    SECTION("delta=0 rejected") {
        REQUIRE_THROWS_AS(rls_init(0.0, 2, 1.0), InvalidHyperparameter);
    }
    SECTION("lambda out of range rejected") {
        REQUIRE_THROWS_AS(rls_init(1.0, 2, 0.0), InvalidHyperparameter);
        REQUIRE_THROWS_AS(rls_init(1.0, 2, 1.5), InvalidHyperparameter);
    }
}

TEST_CASE("rls_step") {
    SECTION("hand evaluation from S^-1(0)=I") {
        RlsState rls = rls_init(1.0, 2, 1.0);
        Readout r{Matrix::Zero(1, 2)};
        Vector x(2);
        x << 1, 0;
        Vector e = rls_step(rls, r, x, Vector::Ones(1));
        REQUIRE(e(0) == Catch::Approx(1.0));
        REQUIRE(r.w_out(0, 0) == Catch::Approx(0.5));
        REQUIRE(r.w_out(0, 1) == Catch::Approx(0.0));
        REQUIRE(rls.s_inv(0, 0) == Catch::Approx(0.5));
        REQUIRE(rls.s_inv(0, 1) == Catch::Approx(0.0));
        REQUIRE(rls.s_inv(1, 1) == Catch::Approx(1.0));
        REQUIRE(rls.n == 1);
    }
    SECTION("zero error leaves weights alone but still updates S^-1") {
        RlsState rls = rls_init(1.0, 2, 1.0);
        Readout r{Matrix(1, 2)};
        r.w_out << 2.0, 0.0;
        Vector x(2);
        x << 1, 0;
        const Matrix s_before = rls.s_inv;
        Vector e = rls_step(rls, r, x, Vector::Constant(1, 2.0));
        REQUIRE(e(0) == 0.0);
        REQUIRE(r.w_out(0, 0) == 2.0);
        REQUIRE(rls.s_inv != s_before);
    }
    SECTION("zero state: no weight change, S^-1 scaled by 1/lambda") {
        RlsState rls = rls_init(1.0, 2, 0.5);
        Readout r{Matrix::Zero(1, 2)};
        Vector e = rls_step(rls, r, Vector::Zero(2), Vector::Ones(1));
        REQUIRE(r.w_out.isZero(0.0));
        REQUIRE(rls.s_inv.isApprox(2.0 * Matrix::Identity(2, 2), 1e-14));
        REQUIRE(e(0) == 1.0);
    }
    SECTION("breakdown when the gain denominator is not positive") {
        RlsState rls = rls_init(1.0, 1, 0.5);
        rls.s_inv(0, 0) = -10.0;  // lost positive definiteness
        Readout r{Matrix::Zero(1, 1)};
        REQUIRE_THROWS_AS(rls_step(rls, r, Vector::Ones(1), Vector::Ones(1)),
                          NumericalBreakdown);
    }
}

TEST_CASE("ridge_fit") {
    SECTION("single sample with pseudo-inverse fallback interpolates") {
        Matrix x(1, 2);
        x << 1, 0;
        Matrix y(1, 1);
        y << 1;
        Readout r = ridge_fit(x, y, 0.0, /*pinv_fallback=*/true);
        REQUIRE(r.w_out(0, 0) == Catch::Approx(1.0).margin(1e-12));
        REQUIRE(r.w_out(0, 1) == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("rank-deficient design without fallback throws") {
        Matrix x(1, 2);
        x << 1, 0;
        REQUIRE_THROWS_AS(ridge_fit(x, Matrix::Ones(1, 1), 0.0), SingularSystem);
    }
    SECTION("zero targets give a zero readout") {
        Rng rng(3);
        Matrix x = random_matrix(10, 4, rng);
        Readout r = ridge_fit(x, Matrix::Zero(10, 2), 0.5);
        REQUIRE(r.w_out.cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("normal-equations optimality: gradient vanishes") {
        Rng rng(4);
        Matrix x = random_matrix(20, 3, rng);
        Matrix y = random_matrix(20, 1, rng);
        const double delta = 0.1;
        Readout r = ridge_fit(x, y, delta);
        const Matrix grad = 2.0 * (r.w_out * x.transpose() * x -
                                   y.transpose() * x + delta * r.w_out);
        REQUIRE(grad.cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("RLS equals ridge after one pass at lambda=1") {
    Rng rng(77);
    for (int rep = 0; rep < 3; ++rep) {
        const int n = 50 + rep * 40;
        const int d = 6 + rep * 4;
        const double delta = 0.05 * (rep + 1);
        Matrix x = random_matrix(n, d, rng);
        Matrix y = random_matrix(n, 2, rng);

        RlsState rls = rls_init(delta, d, 1.0);
        Readout r{Matrix::Zero(2, d)};
        for (int i = 0; i < n; ++i)
            rls_step(rls, r, x.row(i).transpose(), y.row(i).transpose());

        Readout ridge = ridge_fit(x, y, delta);
        REQUIRE((r.w_out - ridge.w_out).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("RLS with forgetting equals the lambda-weighted closed form") {
    Rng rng(78);
    const int n = 40, d = 5;
    const double delta = 0.2, lambda = 0.95;
    Matrix x = random_matrix(n, d, rng);
    Matrix y = random_matrix(n, 1, rng);

    RlsState rls = rls_init(delta, d, lambda);
    Readout r{Matrix::Zero(1, d)};
    for (int i = 0; i < n; ++i)
        rls_step(rls, r, x.row(i).transpose(), y.row(i).transpose());

    const Matrix oracle = weighted_ridge_oracle(x, y, delta, lambda);
    REQUIRE((r.w_out - oracle).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("S^-1 stays symmetric positive definite over many steps") {
    Rng rng(79);
    const int d = 8;
    RlsState rls = rls_init(0.1, d, 0.999);
    Readout r{Matrix::Zero(1, d)};
    for (int i = 0; i < 10000; ++i) {
        Vector x(d);
        for (int j = 0; j < d; ++j) x(j) = rng.uniform(-1.0, 1.0);
        rls_step(rls, r, x, Vector::Constant(1, rng.uniform(-1.0, 1.0)));
    }
    REQUIRE((rls.s_inv - rls.s_inv.transpose()).cwiseAbs().maxCoeff() < 1e-8);
    Eigen::SelfAdjointEigenSolver<Matrix> es(rls.s_inv);
    REQUIRE(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("discounted_error") {
    SECTION("perfect prediction is zero") {
        Matrix p = Matrix::Random(5, 2);
        REQUIRE(discounted_error(p, p, 0.5) == 0.0);
    }
    SECTION("T=1 ignores lambda") {
        Matrix p(1, 2), y(1, 2);
        p << 0, 0;
        y << 3, 4;
        REQUIRE(discounted_error(p, y, 0.3) == Catch::Approx(12.5));
        REQUIRE(discounted_error(p, y, 0.9) == Catch::Approx(12.5));
    }
    SECTION("T=2 direct evaluation") {
        Matrix p(2, 1), y(2, 1);
        p << 0, 0;
        y << 1, 2;
        REQUIRE(discounted_error(p, y, 0.5) == Catch::Approx(4.5));
    }
}
