#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bitap/ensembles.hpp"
#include "bitap/errors.hpp"
#include "bitap/generating.hpp"
#include "bitap/order_params.hpp"
#include "bitap/quadrature.hpp"

namespace bitap {

// Two-time covariance kernel of the effective field process:
//   g(x) = E[f(z) f(z')],  f(z) = tanh(h + z)/chi - z,
// where (z, z') are jointly Gaussian with variance qhat and covariance x.
// Realized as z = sqrt(qhat) u, z' = (x/sqrt(qhat)) u + sqrt(qhat - x^2/qhat) v
// with independent standard normals u, v, and integrated on the composite
// Gauss-Legendre x normal-density rule (order = nodes per unit-width panel).
inline double g_function(double x, double h, double chi, double qhat, int order = 60) {
    if (!(chi > 0.0)) throw usage_error("g_function: chi must be positive");
    if (qhat < 0.0) throw usage_error("g_function: qhat must be nonnegative");
    if (x < 0.0 || x > qhat)
        throw usage_error("g_function: covariance x = " + std::to_string(x) +
                          " outside [0, qhat = " + std::to_string(qhat) + "]");
    if (qhat == 0.0) {
        double f0 = std::tanh(h) / chi;
        return f0 * f0;
    }

    const double su = std::sqrt(qhat);
    const double b = x / su;
    const double sv = std::sqrt(std::max(qhat - x * x / qhat, 0.0));
    const GaussianRule& ru = gaussian_rule(su, order);
    Eigen::ArrayXd zu = su * ru.u;
    Eigen::ArrayXd fu = (h + zu).tanh() / chi - zu;

    if (sv == 0.0) {
        // x = qhat: z' = z and the integral collapses to a single dimension
        Eigen::ArrayXd fz = (h + b * ru.u).tanh() / chi - b * ru.u;
        return (ru.w * fu * fz).sum();
    }

    const GaussianRule& rv = gaussian_rule(sv, order);
    Eigen::ArrayXd zv = sv * rv.u;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < ru.u.size(); ++i) {
        Eigen::ArrayXd zp = b * ru.u(i) + zv;
        double inner = (rv.w * ((h + zp).tanh() / chi - zp)).sum();
        acc += ru.w(i) * fu(i) * inner;
    }
    return acc;
}

// Slope statistic of the same process: g'(qhat) = E[(f'(z))^2] at z ~ N(0, qhat),
// with f'(z) = tanh'(h + z)/chi - 1. At a self-consistent chi this equals
// E[(tanh')^2]/chi^2 - 1.
inline double g_prime(double h, double chi, double qhat, int order = 60) {
    if (!(chi > 0.0)) throw usage_error("g_prime: chi must be positive");
    return gauss_expect_f(
        [chi](double y) {
            double t = std::tanh(y);
            double d = (1.0 - t * t) / chi - 1.0;
            return d * d;
        },
        h, qhat, order);
}

struct TwoTimeCovariance {
    int horizon = 0;     // T
    Eigen::MatrixXd c1;  // T x T, entry (i, j) = C_1(t = i+1, s = j+1)
    Eigen::MatrixXd c2;
    Eigen::VectorXd seq1; // c_k(j), j = 0..T-1: the off-diagonal profile
    Eigen::VectorXd seq2;
    double qhat1 = 0.0, qhat2 = 0.0;
};

// Iterates the covariance map c(j+1) = Theta g(c(j)) from c(0) = 0 and fills
// the two-time matrices: diagonals are pinned at qhat_k, and C_k(t, s) for
// t != s depends only on min(t, s) because the recursion contracts along the
// other index. Arguments drifting outside [0, qhat_k] by more than 1e-12 are
// an error; smaller excursions are clamped.
inline TwoTimeCovariance covariance_recursion(const ThetaCoefficients& th, const OrderParams& op,
                                              int horizon, int order = 60) {
    if (horizon < 1) throw usage_error("covariance_recursion: horizon must be at least 1");
    if (!std::isfinite(th.a11) || !std::isfinite(th.a12) || !std::isfinite(th.a21) ||
        !std::isfinite(th.a22))
        throw numerical_error("covariance_recursion: non-finite theta coefficients");

    TwoTimeCovariance cov;
    cov.horizon = horizon;
    cov.qhat1 = op.qhat1;
    cov.qhat2 = op.qhat2;
    cov.seq1.setZero(horizon);
    cov.seq2.setZero(horizon);

    auto advance = [&](double& c1, double& c2) {
        double g1 = g_function(c1, op.h1, op.chi1, op.qhat1, order);
        double g2 = g_function(c2, op.h2, op.chi2, op.qhat2, order);
        double n1 = th.a11 * g1 + th.a12 * g2;
        double n2 = th.a21 * g1 + th.a22 * g2;
        auto admit = [](double c, double qhat, const char* block) {
            // near saturation the iterate may overshoot qhat by the tolerance
            // the order-parameter solve left in qhat itself; only a clearly
            // out-of-range value indicates broken inputs
            double slack = 1e-9 * std::max(1.0, qhat);
            if (c < -slack || c > qhat + slack)
                throw numerical_error(std::string("covariance_recursion: ") + block +
                                      "-block argument " + std::to_string(c) +
                                      " escaped [0, " + std::to_string(qhat) + "]");
            return std::min(std::max(c, 0.0), qhat);
        };
        c1 = admit(n1, op.qhat1, "1");
        c2 = admit(n2, op.qhat2, "2");
    };

    double c1 = 0.0, c2 = 0.0;
    for (int j = 1; j < horizon; ++j) {
        advance(c1, c2);
        cov.seq1(j) = c1;
        cov.seq2(j) = c2;
    }

    cov.c1.setConstant(horizon, horizon, 0.0);
    cov.c2.setConstant(horizon, horizon, 0.0);
    for (int i = 0; i < horizon; ++i) {
        for (int j = 0; j < horizon; ++j) {
            if (i == j) {
                cov.c1(i, j) = op.qhat1;
                cov.c2(i, j) = op.qhat2;
            } else {
                int m = std::min(i, j) + 1; // C_k(t, s) = c_k(min(t, s))
                cov.c1(i, j) = cov.seq1(std::min(m, horizon - 1));
                cov.c2(i, j) = cov.seq2(std::min(m, horizon - 1));
            }
        }
    }
    return cov;
}

struct ConvergenceReport {
    double mu = 0.0; // asymptotic step-to-step contraction factor of the dynamics
    double g1p = 0.0, g2p = 0.0;
    bool stable = false;
    // predicted_delta_k[t] = 2 (qhat_k - c_k(t)) = Delta_k(t+1, t); filled when
    // a covariance recursion is supplied
    std::vector<double> predicted_delta1, predicted_delta2;
};

// Largest eigenvalue of [[g1' a11, g2' a12], [g1' a21, g2' a22]], which governs
// the geometric decay of successive increments of the field iteration.
inline ConvergenceReport mu_gamma(const ThetaCoefficients& th, double g1p, double g2p,
                                  const TwoTimeCovariance* cov = nullptr) {
    if (g1p < 0.0 || g2p < 0.0) throw usage_error("mu_gamma: g' must be nonnegative");
    if (th.a12 * th.a21 < 0.0)
        throw usage_error("mu_gamma: a12*a21 < 0, closed-form eigenvalue not applicable");
    ConvergenceReport rep;
    rep.g1p = g1p;
    rep.g2p = g2p;
    double d1 = g1p * th.a11;
    double d2 = g2p * th.a22;
    rep.mu = 0.5 * (d1 + d2) +
             0.5 * std::sqrt((d1 - d2) * (d1 - d2) + 4.0 * g1p * g2p * th.a12 * th.a21);
    rep.stable = rep.mu < 1.0;
    if (cov) {
        rep.predicted_delta1.reserve(cov->horizon);
        rep.predicted_delta2.reserve(cov->horizon);
        for (int t = 0; t < cov->horizon; ++t) {
            rep.predicted_delta1.push_back(2.0 * (cov->qhat1 - cov->seq1(t)));
            rep.predicted_delta2.push_back(2.0 * (cov->qhat2 - cov->seq2(t)));
        }
    }
    return rep;
}

// mu_gamma evaluated at the RS fixed point of an analytic ensemble.
inline double mu_gamma_at(Model model, double alpha, double beta, double h1, double h2,
                          const SolverConfig& cfg) {
    GeneratingFunction gf;
    if (model == Model::IidGaussian)
        gf = GeneratingFunction::iid(alpha, beta);
    else if (model == Model::ColumnOrthogonal)
        gf = GeneratingFunction::column_orthogonal(alpha, beta);
    else
        throw usage_error("mu_gamma_at: needs an analytic ensemble (iid or column-orthogonal)");
    OrderParams op = solve_rs_fixed_point(gf, h1, h2, alpha, cfg);
    ThetaCoefficients th = theta_analytic(op, gf);
    double g1p = g_prime(h1, op.chi1, op.qhat1, cfg.quad_order);
    double g2p = g_prime(h2, op.chi2, op.qhat2, cfg.quad_order);
    return mu_gamma(th, g1p, g2p).mu;
}

// Locates the coupling strength beta* where mu_gamma crosses 1, by bisection
// on a bracket with mu(beta_lo) < 1 < mu(beta_hi). Stops once |mu - 1| < tol.
inline double instability_bisection(Model model, double alpha, double h1, double h2,
                                    double beta_lo, double beta_hi, double tol,
                                    SolverConfig cfg = SolverConfig{0.5, 1e-12, 200000, 60}) {
    if (!(beta_lo > 0.0) || !(beta_hi > beta_lo))
        throw usage_error("instability_bisection: need 0 < beta_lo < beta_hi");
    if (!(tol > 0.0)) throw usage_error("instability_bisection: tol must be positive");
    double mu_lo = mu_gamma_at(model, alpha, beta_lo, h1, h2, cfg);
    double mu_hi = mu_gamma_at(model, alpha, beta_hi, h1, h2, cfg);
    if (!(mu_lo < 1.0 && mu_hi > 1.0))
        throw usage_error("instability_bisection: bracket does not straddle mu = 1 "
                          "(mu(lo) = " + std::to_string(mu_lo) +
                          ", mu(hi) = " + std::to_string(mu_hi) + ")");
    double lo = beta_lo, hi = beta_hi, mid = 0.5 * (beta_lo + beta_hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        double mu_mid = mu_gamma_at(model, alpha, mid, h1, h2, cfg);
        if (std::abs(mu_mid - 1.0) < tol) return mid;
        (mu_mid < 1.0 ? lo : hi) = mid;
        if (hi - lo < 1e-13 * std::max(1.0, hi))
            throw convergence_error("instability_bisection: bracket collapsed before "
                                    "reaching the requested tolerance on mu");
    }
    throw convergence_error("instability_bisection: did not reach tolerance in 200 steps");
}

} // namespace bitap
