#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <cstdint>
#include <utility>

#include "dropin/errors.hpp"
#include "dropin/rng.hpp"

namespace dropin {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { tanh };

struct ReservoirConfig {
    int n_inputs = 1;
    int n_reservoir = 100;
    double leak_rate = 1.0;            // a in [0, 1]
    double connectivity = 0.10;        // fraction of nonzero recurrent entries
    double input_scale = 0.4;          // w_in uniform in [-s_in, s_in]
    double recurrent_init_bound = 0.4; // w_h values uniform in [-b, b]
    double spectral_target = 0.99;     // rho of the leaky-integrated matrix
    Activation activation = Activation::tanh;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_inputs < 1 || n_reservoir < 1)
            throw InvalidHyperparameter("reservoir dimensions must be >= 1");
        if (leak_rate < 0.0 || leak_rate > 1.0)
            throw InvalidHyperparameter("leak_rate must be in [0, 1]");
        if (connectivity <= 0.0 || connectivity > 1.0)
            throw InvalidHyperparameter("connectivity must be in (0, 1]");
        if (input_scale <= 0.0)
            throw InvalidHyperparameter("input_scale must be positive");
        if (recurrent_init_bound <= 0.0)
            throw InvalidHyperparameter("recurrent_init_bound must be positive");
        if (spectral_target <= 0.0 || spectral_target >= 1.0)
            throw InvalidHyperparameter("spectral_target must be in (0, 1)");
    }
};

struct ReservoirWeights {
    Matrix w_in;               // N_R x N_U
    Matrix w_h;                // N_R x N_R after ESP rescaling
    double rescale_factor = 1.0;
    double achieved_rho = 0.0;
};

struct ReservoirState {
    Vector x;
    long t = 0;
};

// (1 - a) I + a W_h
inline Matrix leaky_matrix(const Matrix& w_h, double a) {
    if (w_h.rows() != w_h.cols())
        throw DimensionMismatch("leaky_matrix requires a square matrix");
    Matrix m = a * w_h;
    m.diagonal().array() += 1.0 - a;
    return m;
}

inline double spectral_radius_dense(const Matrix& m) {
    Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Power iteration on the norm-growth ratio. Converges for a strictly
// dominant eigenvalue; throws NoConvergence otherwise so the caller can
// fall back to a full eigendecomposition.
inline double spectral_radius_power(const Matrix& m, double tol = 1e-8,
                                    int max_iter = 10000) {
    if (m.rows() != m.cols())
        throw DimensionMismatch("spectral_radius requires a square matrix");
    const auto n = m.rows();
    Rng rng(0x5eedul);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform(-1.0, 1.0);
    v.normalize();
    double prev = -1.0, prev2 = -1.0;
    for (int it = 0; it < max_iter; ++it) {
        Vector w = m * v;
        const double r = w.norm();
        if (r == 0.0) return 0.0;
        v = w / r;
        if (it >= 2 && std::abs(r - prev) < tol && std::abs(r - prev2) < tol)
            return r;
        prev2 = prev;
        prev = r;
    }
    throw NoConvergence("power iteration did not converge");
}

// Largest absolute eigenvalue. Dense eigendecomposition up to 600x600,
// power iteration (with dense fallback) beyond that.
inline double spectral_radius(const Matrix& m) {
    if (m.rows() != m.cols())
        throw DimensionMismatch("spectral_radius requires a square matrix");
    if (m.rows() <= 600) return spectral_radius_dense(m);
    try {
        return spectral_radius_power(m);
    } catch (const NoConvergence&) {
        return spectral_radius_dense(m);
    }
}

// sigma_max(m) = sqrt(rho(m^T m)); diagnostic for the sufficient ESP condition.
inline double largest_singular_value(const Matrix& m) {
    if (m.rows() != m.cols())
        throw DimensionMismatch("largest_singular_value requires a square matrix");
    Matrix gram = m.transpose() * m;
    if (m.rows() <= 600) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(gram,  Eigen::EigenvaluesOnly);
        return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    }
    return std::sqrt(spectral_radius_power(gram));
}

// Finds c > 0 such that rho((1-a)I + a c w_h) = rho_target, returning the
// scaled matrix and c. g(c) = max_i |(1-a) + c a mu_i| over eigenvalues
// mu_i of w_h is convex with g(0) = 1-a, so the upper crossing is unique:
// grow a bracket geometrically, then bisect.
inline std::pair<Matrix, double> rescale_to_esp(const Matrix& w_h, double a,
                                                double rho_target) {
    if (w_h.rows() != w_h.cols())
        throw DimensionMismatch("rescale_to_esp requires a square matrix");
    if (a == 0.0)
        throw InvalidLeak("leak_rate a = 0 makes the leaky matrix the identity");
    if (1.0 - a >= rho_target)
        throw RescaleInfeasible("rho at c=0 is 1-a, already >= target");

    Eigen::EigenSolver<Matrix> es(w_h, /*computeEigenvectors=*/false);
    const Eigen::VectorXcd mu = es.eigenvalues();
    auto g = [&](double c) {
        double best = 0.0;
        for (Eigen::Index i = 0; i < mu.size(); ++i) {
            const double v = std::abs(std::complex<double>(1.0 - a, 0.0) + c * a * mu(i));
            best = std::max(best, v);
        }
        return best;
    };

    double c_hi = 1.0;
    int budget = 500;
    while (g(c_hi) <= rho_target) {
        c_hi *= 2.0;
        if (--budget == 0)
            throw RescaleInfeasible("no scaling reaches the target spectral radius "
                                    "(nilpotent or near-nilpotent recurrent matrix)");
    }
    double c_lo = 0.0;
    double c = c_hi;
    for (int it = 0; it < 200; ++it) {
        c = 0.5 * (c_lo + c_hi);
        const double v = g(c);
        if (std::abs(v - rho_target) < 1e-9) break;
        (v < rho_target ? c_lo : c_hi) = c;
    }
    return {c * w_h, c};
}

// Draw w_in and the sparse recurrent matrix, then rescale to the ESP target.
// Deterministic given rng state.
inline ReservoirWeights init_weights(const ReservoirConfig& config, Rng& rng) {
    config.validate();
    const int nr = config.n_reservoir;
    const int nu = config.n_inputs;

    ReservoirWeights w;
    w.w_in.resize(nr, nu);
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nu; ++j)
            w.w_in(i, j) = rng.uniform(-config.input_scale, config.input_scale);

    Matrix w_h = Matrix::Zero(nr, nr);
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nr; ++j)
            if (rng.bernoulli(config.connectivity))
                w_h(i, j) = rng.uniform(-config.recurrent_init_bound,
                                        config.recurrent_init_bound);

    auto [scaled, c] = rescale_to_esp(w_h, config.leak_rate, config.spectral_target);
    w.w_h = std::move(scaled);
    w.rescale_factor = c;
    w.achieved_rho = spectral_radius(leaky_matrix(w.w_h, config.leak_rate));
    if (std::abs(w.achieved_rho - config.spectral_target) > 1e-6)
        throw RescaleInfeasible("achieved spectral radius misses the target");
    return w;
}

inline ReservoirWeights init_weights(const ReservoirConfig& config) {
    Rng rng(config.seed);
    return init_weights(config, rng);
}

// x(t) = (1-a) x(t-1) + a f(W_in u(t) + W_h x(t-1))
inline ReservoirState update_state(const ReservoirState& state, const Vector& u,
                                   const ReservoirWeights& w, double a) {
    if (u.size() != w.w_in.cols())
        throw DimensionMismatch("input vector length does not match n_inputs");
    if (state.x.size() != w.w_h.rows())
        throw DimensionMismatch("state vector length does not match n_reservoir");
    ReservoirState next;
    next.x = (1.0 - a) * state.x +
             a * (w.w_in * u + w.w_h * state.x).array().tanh().matrix();
    next.t = state.t + 1;
    return next;
}

// Row t of the result is the state after t+1 update steps from x0.
inline Matrix run_sequence(const ReservoirWeights& w, double a,
                           const Matrix& seq, const ReservoirState& x0) {
    if (seq.rows() == 0) throw EmptySequence("input sequence has no timesteps");
    if (seq.cols() != w.w_in.cols())
        throw DimensionMismatch("sequence width does not match n_inputs");
    Matrix states(seq.rows(), w.w_h.rows());
    ReservoirState s = x0;
    for (Eigen::Index t = 0; t < seq.rows(); ++t) {
        s = update_state(s, seq.row(t).transpose(), w, a);
        states.row(t) = s.x.transpose();
    }
    return states;
}

inline ReservoirState zero_state(int n_reservoir) {
    return ReservoirState{Vector::Zero(n_reservoir), 0};
}

inline Matrix run_sequence(const ReservoirWeights& w, double a, const Matrix& seq) {
    return run_sequence(w, a, seq, zero_state(static_cast<int>(w.w_h.rows())));
}

}  // namespace dropin
