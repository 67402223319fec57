#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bitap/errors.hpp"
#include "bitap/generating.hpp"
#include "bitap/quadrature.hpp"

namespace bitap {

struct SolverConfig {
    double damping = 0.5;   // Picard damping: x <- x + damping*(F(x) - x)
    double tol = 1e-10;     // max-norm residual target
    int max_iter = 10000;
    int quad_order = 60;    // Gaussian-expectation quadrature order
    // Optional initialization overrides (defaults are the exact beta->0 solution).
    std::optional<double> init_chi1, init_chi2, init_qhat1, init_qhat2;
};

struct OrderParams {
    double chi1 = 0.0, chi2 = 0.0;   // chi_k = E[tanh'(h_k + sqrt(qhat_k) u)]
    double qhat1 = 0.0, qhat2 = 0.0; // effective-field variances
    double psi1 = 1.0, psi2 = 1.0;   // extremizers; psi1 = 1 + chi I'(chi), psi2 = 1 + chi I'(chi)/alpha
    double chi = 0.0;                // chi1*chi2
    double lambda = 0.0;             // psi1*psi2/chi
    double h1 = 0.0, h2 = 0.0;
    double alpha = 0.0;
    // solver diagnostics
    int iters = 0;
    double residual = 0.0;
    int clamp_events = 0;            // negative-qhat iterates clamped to 0
    int lambda_clamps = 0;           // lambda iterates pushed off the spectral edge (green route)
};

struct ThetaCoefficients {
    double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;
};

struct StabilityReport {
    double r1p = 0.0, r2p = 0.0;    // R'_1, R'_2
    double eta1 = 0.0, eta2 = 0.0;  // E[(tanh')^2]
    bool at_stable = false;         // r1p*eta1 < 1 and r2p*eta2 < 1
    double chi2_11 = 0.0, chi2_22 = 0.0, chi2_12 = 0.0; // spin-glass susceptibilities; +inf when unstable
    bool critical_psi_warning = false; // psi_k ~= chi*psi'_k makes chi2_12 ill-defined
};

// Replica-symmetric fixed point: damped Picard iteration of
//   chi_k  = E[tanh'(h_k + sqrt(qhat_k) u)]
//   qhat1  = chi2^2 (1-chi1) I''(chi) + (1-chi2)(I'(chi) + chi I''(chi))
//   qhat2  = [chi1^2 (1-chi2) I''(chi) + (1-chi1)(I'(chi) + chi I''(chi))] / alpha
// started from the exact beta->0 solution so continuation selects the
// physical branch. Negative qhat iterates (transients of the damping) are
// clamped to zero and counted.
inline OrderParams solve_rs_fixed_point(const GeneratingFunction& gf, double h1, double h2,
                                        double alpha, const SolverConfig& cfg = {}) {
    if (h1 == 0.0 || h2 == 0.0)
        throw usage_error("solve_rs_fixed_point: external fields must be nonzero");
    if (!(alpha > 0.0) || alpha > 1.0)
        throw usage_error("solve_rs_fixed_point: alpha must lie in (0, 1]");

    auto tanhp = [](double x) { double t = std::tanh(x); return 1.0 - t * t; };

    OrderParams op;
    op.h1 = h1;
    op.h2 = h2;
    op.alpha = alpha;
    double c1 = cfg.init_chi1.value_or(tanhp(h1));
    double c2 = cfg.init_chi2.value_or(tanhp(h2));
    double q1 = cfg.init_qhat1.value_or(0.0);
    double q2 = cfg.init_qhat2.value_or(0.0);

    double r = std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.max_iter; ++it) {
        double chi = c1 * c2;
        double ip = i_prime(gf, chi);
        double is = i_second(gf, chi);
        double p1p = ip + chi * is;
        double f1 = gauss_expect(Integrand::TanhPrime, h1, q1, cfg.quad_order);
        double f2 = gauss_expect(Integrand::TanhPrime, h2, q2, cfg.quad_order);
        double t1 = c2 * c2 * (1.0 - c1) * is + (1.0 - c2) * p1p;
        double t2 = (c1 * c1 * (1.0 - c2) * is + (1.0 - c1) * p1p) / alpha;
        if (t1 < 0.0) { t1 = 0.0; ++op.clamp_events; }
        if (t2 < 0.0) { t2 = 0.0; ++op.clamp_events; }
        r = std::max({std::abs(f1 - c1), std::abs(f2 - c2), std::abs(t1 - q1), std::abs(t2 - q2)});
        c1 += cfg.damping * (f1 - c1);
        c2 += cfg.damping * (f2 - c2);
        q1 += cfg.damping * (t1 - q1);
        q2 += cfg.damping * (t2 - q2);
        op.iters = it + 1;
        if (r < cfg.tol) break;
    }
    if (!(r < cfg.tol)) {
        std::ostringstream msg;
        msg << "solve_rs_fixed_point: no convergence after " << cfg.max_iter
            << " iterations (residual " << r << ")";
        throw convergence_error(msg.str());
    }

    op.chi1 = c1;
    op.chi2 = c2;
    op.qhat1 = q1;
    op.qhat2 = q2;
    op.chi = c1 * c2;
    op.residual = r;
    double ip = i_prime(gf, op.chi);
    op.psi1 = 1.0 + op.chi * ip;
    op.psi2 = 1.0 + op.chi * ip / alpha;
    op.lambda = op.psi1 * op.psi2 / op.chi;
    return op;
}

// Closed-form coefficient matrix in terms of I'(chi), I''(chi):
//   Theta = 1/(alpha + chi^2 D - (1+alpha) chi^2 I'')
//             [ chi^2 (alpha I'' - D)    alpha chi2^2 psi1' ]
//             [ chi1^2  psi1'            chi^2 (I'' - D)    ]
// with psi1' = I' + chi I'' and D = -I'(I' + 2 chi I'').
inline ThetaCoefficients theta_analytic(const OrderParams& op, const GeneratingFunction& gf) {
    double chi = op.chi;
    double ip = i_prime(gf, chi);
    double is = i_second(gf, chi);
    double p1p = ip + chi * is;
    double d = -ip * (ip + 2.0 * chi * is);
    double den = op.alpha + chi * chi * d - (1.0 + op.alpha) * chi * chi * is;
    if (den <= 0.0)
        throw numerical_error("theta_analytic: singular coefficient denominator (" +
                              std::to_string(den) + "), spectral-edge contact");
    ThetaCoefficients th;
    th.a11 = chi * chi * (op.alpha * is - d) / den;
    th.a12 = op.alpha * op.chi2 * op.chi2 * p1p / den;
    th.a21 = op.chi1 * op.chi1 * p1p / den;
    th.a22 = chi * chi * (is - d) / den;
    return th;
}

// Same coefficients expressed through the Green function at lambda:
//   Theta = -[ (psi2^2/chi^2) G'_w(lambda) + 1      (1/chi1^2)(lambda G'_w + G_w) ]
//           [ (1/(alpha chi2^2))(lambda G'_w + G_w) (psi1^2/chi^2) G'_wt(lambda) + 1 ]
inline ThetaCoefficients theta_green(const OrderParams& op, const GreenFunction& g) {
    double lam = op.lambda;
    double gw = green_w(g, lam);
    double gwp = green_w_prime(g, lam);
    double gwtp = green_wt_prime(g, lam);
    double chi2sq = op.chi * op.chi;
    double cross = lam * gwp + gw;
    ThetaCoefficients th;
    th.a11 = -(op.psi2 * op.psi2 / chi2sq * gwp + 1.0);
    th.a12 = -cross / (op.chi1 * op.chi1);
    th.a21 = -cross / (op.alpha * op.chi2 * op.chi2);
    th.a22 = -(op.psi1 * op.psi1 / chi2sq * gwtp + 1.0);
    return th;
}

// Green-function route for the order parameters. The empirical spectrum
// defines the generating-function derivatives implicitly (each evaluation
// inverts lambda * G_wt(lambda) * G_w(lambda) = x by monotone bisection), so
// the fixed point has exactly the same structure as the closed-form route and
// is solved by the same damped iteration.
inline OrderParams solve_green_fixed_point(const GreenFunction& g, double h1, double h2,
                                           double alpha, const SolverConfig& cfg = {}) {
    if (g.eigvals_gram.size() == 0)
        throw usage_error("solve_green_fixed_point: empty spectrum");
    return solve_rs_fixed_point(GeneratingFunction::spectrum(g), h1, h2, alpha, cfg);
}


// AT-style stability of the TAP equations. With
//   R'_1 = (chi2/chi1) [ (alpha + chi I')(I' + chi I'') / (alpha - chi^2 I'') - I' ]
//   R'_2 = (chi1/chi2) [ (1 + chi I')(I' + chi I'') / (alpha - alpha chi^2 I'') - I'/alpha ]
// the weak-dependency assumption holds iff R'_k eta_k < 1 (k = 1, 2), where
// eta_k = E[(tanh'(h_k + sqrt(qhat_k) u))^2]. The surviving spin-glass
// susceptibilities are chi2_kk = eta_k / (1 - eta_k R'_k) and
//   chi2_12 = psi1'[psi1 psi2 - chi(psi2 psi1' + psi1 psi2')]
//             / ([psi1 - chi psi1'][psi2 - chi psi2']) * chi2_11 * chi2_22
// with psi1' = I' + chi I'', psi2' = psi1'/alpha.
inline StabilityReport stability_report(const OrderParams& op, const GeneratingFunction& gf,
                                        int quad_order = 60) {
    double chi = op.chi;
    double ip = i_prime(gf, chi);
    double is = i_second(gf, chi);
    double p1p = ip + chi * is;
    double p2p = p1p / op.alpha;

    StabilityReport rep;
    rep.r1p = (op.chi2 / op.chi1) *
              ((op.alpha + chi * ip) * p1p / (op.alpha - chi * chi * is) - ip);
    rep.r2p = (op.chi1 / op.chi2) *
              ((1.0 + chi * ip) * p1p / (op.alpha - op.alpha * chi * chi * is) - ip / op.alpha);
    rep.eta1 = gauss_expect(Integrand::TanhPrimeSq, op.h1, op.qhat1, quad_order);
    rep.eta2 = gauss_expect(Integrand::TanhPrimeSq, op.h2, op.qhat2, quad_order);
    rep.at_stable = (rep.r1p * rep.eta1 < 1.0) && (rep.r2p * rep.eta2 < 1.0);

    const double inf = std::numeric_limits<double>::infinity();
    rep.chi2_11 = rep.r1p * rep.eta1 < 1.0 ? rep.eta1 / (1.0 - rep.eta1 * rep.r1p) : inf;
    rep.chi2_22 = rep.r2p * rep.eta2 < 1.0 ? rep.eta2 / (1.0 - rep.eta2 * rep.r2p) : inf;
    if (rep.at_stable) {
        double d1 = op.psi1 - chi * p1p;
        double d2 = op.psi2 - chi * p2p;
        if (std::abs(d1) < 1e-10 * op.psi1 || std::abs(d2) < 1e-10 * op.psi2) {
            rep.critical_psi_warning = true;
            rep.chi2_12 = inf;
        } else {
            rep.chi2_12 = p1p * (op.psi1 * op.psi2 - chi * (op.psi2 * p1p + op.psi1 * p2p)) /
                          (d1 * d2) * rep.chi2_11 * rep.chi2_22;
        }
    } else {
        rep.chi2_12 = inf;
    }
    return rep;
}

} // namespace bitap
