#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "dropin/errors.hpp"
#include "dropin/reservoir.hpp"

namespace dropin {

struct Readout {
    Matrix w_out;  // N_Y x N_R
};

struct RlsState {
    Matrix s_inv;   // inverse correlation estimate, N_R x N_R
    double lambda = 1.0;
    double delta = 1.0;
    long n = 0;
};

// y = W_out x
inline Vector predict(const Readout& r, const Vector& x) {
    if (x.size() != r.w_out.cols())
        throw DimensionMismatch("state vector length does not match readout");
    return r.w_out * x;
}

inline RlsState rls_init(double delta, int n_reservoir, double lambda) {
    if (delta <= 0.0)
        throw InvalidHyperparameter("RLS delta must be positive");
    if (lambda <= 0.0 || lambda > 1.0)
        throw InvalidHyperparameter("RLS lambda must be in (0, 1]");
    if (n_reservoir < 1)
        throw InvalidHyperparameter("n_reservoir must be >= 1");
    RlsState s;
    s.s_inv = Matrix::Identity(n_reservoir, n_reservoir) / delta;
    s.lambda = lambda;
    s.delta = delta;
    s.n = 0;
    return s;
}

// One RLS update. The S^-1 correction is the outer product K phi^T
// (the standard RLS recursion; K and phi are both length-N_R column
// vectors, so K * phi^T is N_R x N_R). S^-1 is re-symmetrized each step
// to suppress round-off drift.
inline Vector rls_step(RlsState& rls, Readout& r, const Vector& x,
                       const Vector& y_target) {
    if (x.size() != rls.s_inv.rows() || x.size() != r.w_out.cols())
        throw DimensionMismatch("state vector length inconsistent with RLS state");
    if (y_target.size() != r.w_out.rows())
        throw DimensionMismatch("target length does not match readout outputs");

    const Vector e = y_target - r.w_out * x;
    const Vector phi = rls.s_inv * x;
    const double denom = rls.lambda + phi.dot(x);
    if (denom <= 0.0)
        throw NumericalBreakdown("RLS gain denominator is not positive");
    const Vector k = phi / denom;
    rls.s_inv = (rls.s_inv - k * phi.transpose()) / rls.lambda;
    rls.s_inv = 0.5 * (rls.s_inv + rls.s_inv.transpose()).eval();
    r.w_out += e * k.transpose();
    ++rls.n;
    return e;
}

// Closed-form ridge readout: W = Y^T X (X^T X + delta I)^-1, the exact
// minimizer of sum ||y - W x||^2 + delta ||W||_F^2. With delta = 0 on a
// rank-deficient design, either throws or (with pinv_fallback) returns
// the minimum-norm least-squares solution.
inline Readout ridge_fit(const Matrix& states, const Matrix& targets,
                         double delta, bool pinv_fallback = false) {
    if (states.rows() != targets.rows())
        throw DimensionMismatch("states and targets row counts differ");
    if (states.rows() < 1) throw EmptyInput("ridge_fit needs at least one sample");
    if (delta < 0.0) throw InvalidHyperparameter("ridge delta must be >= 0");

    Readout r;
    if (delta > 0.0) {
        Matrix gram = states.transpose() * states;
        gram.diagonal().array() += delta;
        r.w_out = gram.llt().solve(states.transpose() * targets).transpose();
        return r;
    }
    auto cod = states.completeOrthogonalDecomposition();
    if (cod.rank() < states.cols() && !pinv_fallback)
        throw SingularSystem("X^T X is rank-deficient and delta = 0");
    r.w_out = cod.solve(targets).transpose();
    return r;
}

// E = (1/N_Y) sum_t lambda^(T-t) ||y*(t) - y(t)||^2; training diagnostic.
inline double discounted_error(const Matrix& preds, const Matrix& targets,
                               double lambda) {
    if (preds.rows() != targets.rows() || preds.cols() != targets.cols())
        throw DimensionMismatch("prediction and target shapes differ");
    const Eigen::Index T = preds.rows();
    double e = 0.0;
    for (Eigen::Index t = 0; t < T; ++t)
        e += std::pow(lambda, static_cast<double>(T - 1 - t)) *
             (targets.row(t) - preds.row(t)).squaredNorm();
    return e / static_cast<double>(preds.cols());
}

}  // namespace dropin
