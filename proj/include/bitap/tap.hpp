#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bitap/ensembles.hpp"
#include "bitap/errors.hpp"
#include "bitap/order_params.hpp"
#include "bitap/rng.hpp"

namespace bitap {

// The iteration matrix A = B^{-1} - I for the block matrix
//   B = [ psi1*I   -chi2*W ]
//       [ -chi1*W^T  psi2*I ],
// applied through the singular basis of W: rotating by the thin bases splits B
// into independent per-mode 2x2 blocks [[psi1, -chi2*s_i], [-chi1*s_i, psi2]]
// (inverted once here), while the n1-n2 left-over modes see the scalar psi1.
// One application costs two thin-basis rotations, O(n1*n2).
struct TapOperator {
    SpectralData spectral;
    double chi1 = 0.0, chi2 = 0.0, psi1 = 0.0, psi2 = 0.0;
    // per-mode inverse factors: [x1m; x2m] = ([[psi2, chi2*s],[chi1*s, psi1]] / det) [a; b]
    Eigen::ArrayXd inv_det; // 1 / (psi1*psi2 - chi1*chi2*s_i^2)

    void apply(const Eigen::VectorXd& v1, const Eigen::VectorXd& v2,
               Eigen::VectorXd& out1, Eigen::VectorXd& out2) const {
        const Eigen::MatrixXd& u = spectral.left_basis;
        const Eigen::MatrixXd& v = spectral.right_basis;
        const Eigen::ArrayXd s = spectral.sigmas.array();
        Eigen::ArrayXd a = (u.transpose() * v1).array();
        Eigen::ArrayXd b = (v.transpose() * v2).array();
        Eigen::ArrayXd x1m = (psi2 * a + chi2 * s * b) * inv_det;
        Eigen::ArrayXd x2m = (chi1 * s * a + psi1 * b) * inv_det;
        // B^{-1} v1-block = U*x1m + (v1 - U*a)/psi1; fold the U products together
        out1 = u * (x1m - a / psi1).matrix() + v1 / psi1 - v1;
        out2 = v * x2m.matrix() - v2;
    }
};

inline TapOperator build_operator(SpectralData spectral, const OrderParams& op) {
    double smax2 = spectral.eigvals_gram.size() ? spectral.eigvals_gram.maxCoeff() : 0.0;
    if (!(op.lambda > smax2))
        throw numerical_error("build_operator: lambda = " + std::to_string(op.lambda) +
                              " <= sigma_max^2 = " + std::to_string(smax2) +
                              " (gap " + std::to_string(op.lambda - smax2) +
                              "), block matrix not safely invertible");
    TapOperator a;
    a.spectral = std::move(spectral);
    a.chi1 = op.chi1;
    a.chi2 = op.chi2;
    a.psi1 = op.psi1;
    a.psi2 = op.psi2;
    a.inv_det = 1.0 / (op.psi1 * op.psi2 - op.chi * a.spectral.eigvals_gram.array());
    return a;
}

struct TapState {
    Eigen::VectorXd gamma1; // length n1
    Eigen::VectorXd gamma2; // length n2
    int t = 0;
    std::uint64_t seed = 0;
};

// gamma_k(0) entries are i.i.d. N(0, qhat_k), matching the effective-process
// initial condition the theory assumes.
inline TapState init_state(const OrderParams& op, int n1, int n2, std::uint64_t seed) {
    if (n1 < 1 || n2 < 1 || n2 > n1) throw usage_error("init_state: invalid dimensions");
    if (op.qhat1 < 0.0 || op.qhat2 < 0.0) throw usage_error("init_state: negative qhat");
    TapState st;
    st.seed = seed;
    auto eng = make_engine(seed, stream::dynamics);
    st.gamma1 = gaussian_vector(n1, std::sqrt(op.qhat1), eng);
    st.gamma2 = gaussian_vector(n2, std::sqrt(op.qhat2), eng);
    st.t = 0;
    return st;
}

// One step gamma(t) = A f(gamma(t-1)) with f_k(x) = tanh(h_k + x)/chi_k - x.
inline TapState step(const TapState& state, const TapOperator& a, const OrderParams& op) {
    if (state.gamma1.size() != a.spectral.left_basis.rows() ||
        state.gamma2.size() != a.spectral.right_basis.rows())
        throw usage_error("step: state/operator dimension mismatch");
    Eigen::VectorXd f1 =
        ((op.h1 + state.gamma1.array()).tanh() / op.chi1 - state.gamma1.array()).matrix();
    Eigen::VectorXd f2 =
        ((op.h2 + state.gamma2.array()).tanh() / op.chi2 - state.gamma2.array()).matrix();
    TapState next;
    next.seed = state.seed;
    next.t = state.t + 1;
    a.apply(f1, f2, next.gamma1, next.gamma2);
    if (!next.gamma1.allFinite() || !next.gamma2.allFinite())
        throw convergence_error("step: non-finite iterate at t=" + std::to_string(next.t) +
                                " — check the convergence rate mu_gamma");
    return next;
}

struct MagnetizationResult {
    Eigen::VectorXd m1; // entries strictly inside (-1, 1)
    Eigen::VectorXd m2;
    double residual = 0.0; // max-norm violation of the magnetization fixed point
    int iters = 0;
    bool converged = false;
};

// Per-step trajectory record (for theory/simulation comparisons):
// gamma1[t], gamma2[t] hold gamma_k(t) for t = 0..iters, and delta_k[t-1] is
// the normalized squared step |gamma_k(t) - gamma_k(t-1)|^2 / n_k.
struct Trajectory {
    std::vector<Eigen::VectorXd> gamma1, gamma2;
    std::vector<double> delta1, delta2;
};

// Reconstructs the auxiliary fields from the magnetization fixed-point
// equations,  gamma1 = W m2 - chi2 I'(chi) m1  (and the mirrored block),
// using chi2 I'(chi) = (psi1 - 1)/chi1 and chi1 I'(chi)/alpha = (psi2 - 1)/chi2,
// and returns the max-norm of m_k - tanh(h_k + gamma_k).
inline double tap_residual(const Eigen::VectorXd& m1, const Eigen::VectorXd& m2,
                           const CouplingMatrix& w, const OrderParams& op) {
    if (m1.cwiseAbs().maxCoeff() > 1.0 - 1e-12 || m2.cwiseAbs().maxCoeff() > 1.0 - 1e-12)
        throw numerical_error("tap_residual: |m| too close to 1 (arctanh overflow guard)");
    Eigen::ArrayXd g1 = (w.entries * m2).array() - (op.psi1 - 1.0) / op.chi1 * m1.array();
    Eigen::ArrayXd g2 =
        (w.entries.transpose() * m1).array() - (op.psi2 - 1.0) / op.chi2 * m2.array();
    double r1 = (m1.array() - (op.h1 + g1).tanh()).abs().maxCoeff();
    double r2 = (m2.array() - (op.h2 + g2).tanh()).abs().maxCoeff();
    return std::max(r1, r2);
}

// Iterate until the normalized squared step drops below tol in both blocks, or
// t = horizon. Magnetizations are m_k = chi_k (gamma_k + f_k(gamma_k)). The
// residual is evaluated against w when provided; a diverging iterate (norm
// beyond 1e10) raises a convergence error pointing at the mu_gamma diagnostic.
inline MagnetizationResult run(const TapOperator& a, const OrderParams& op, int horizon,
                               std::uint64_t seed, double tol,
                               const CouplingMatrix* w = nullptr, Trajectory* traj = nullptr) {
    if (horizon < 1) throw usage_error("run: horizon must be at least 1");
    const int n1 = int(a.spectral.left_basis.rows());
    const int n2 = int(a.spectral.right_basis.rows());
    TapState st = init_state(op, n1, n2, seed);
    if (traj) {
        traj->gamma1.push_back(st.gamma1);
        traj->gamma2.push_back(st.gamma2);
    }

    MagnetizationResult res;
    for (int t = 1; t <= horizon; ++t) {
        TapState next = step(st, a, op);
        double d1 = (next.gamma1 - st.gamma1).squaredNorm() / n1;
        double d2 = (next.gamma2 - st.gamma2).squaredNorm() / n2;
        if (traj) {
            traj->gamma1.push_back(next.gamma1);
            traj->gamma2.push_back(next.gamma2);
            traj->delta1.push_back(d1);
            traj->delta2.push_back(d2);
        }
        double growth = std::max(next.gamma1.cwiseAbs().maxCoeff(), next.gamma2.cwiseAbs().maxCoeff());
        if (growth > 1e10)
            throw convergence_error("run: iterate norm exceeded 1e10 at t=" + std::to_string(t) +
                                    " — the dynamics look unstable, check mu_gamma");
        st = std::move(next);
        res.iters = t;
        if (d1 < tol && d2 < tol) {
            res.converged = true;
            break;
        }
    }

    res.m1 = (op.h1 + st.gamma1.array()).tanh().matrix();
    res.m2 = (op.h2 + st.gamma2.array()).tanh().matrix();
    // keep magnetizations strictly inside (-1, 1): tanh rounds to +-1.0 in
    // double precision once |h + gamma| > 19
    const double cap = std::nextafter(1.0, 0.0);
    res.m1 = res.m1.cwiseMax(-cap).cwiseMin(cap);
    res.m2 = res.m2.cwiseMax(-cap).cwiseMin(cap);
    if (w) {
        try {
            res.residual = tap_residual(res.m1, res.m2, *w, op);
        } catch (const numerical_error&) {
            res.residual = std::numeric_limits<double>::infinity();
        }
    } else {
        res.residual = std::numeric_limits<double>::quiet_NaN();
    }
    return res;
}

} // namespace bitap
