// End-to-end tour of the library: sample a coupling matrix, solve for the
// order parameters on both theory routes, predict the convergence rate, then
// iterate the magnetization dynamics and check the prediction.

#include <cstdio>

#include <bitap/bitap.hpp>

int main() {
    using namespace bitap;

    const int n1 = 2048, n2 = 1024;
    const double beta = 2.0, h1 = 2.0, h2 = 1.0, alpha = double(n2) / n1;
    const std::uint64_t seed = 7;

    // ensemble + closed-form theory
    GeneratingFunction gf = GeneratingFunction::iid(alpha, beta);
    OrderParams op = solve_rs_fixed_point(gf, h1, h2, alpha);
    std::printf("order parameters: chi1=%.6f chi2=%.6f qhat1=%.6f qhat2=%.6f (%d iters)\n",
                op.chi1, op.chi2, op.qhat1, op.qhat2, op.iters);

    ThetaCoefficients th = theta_analytic(op, gf);
    double g1p = g_prime(h1, op.chi1, op.qhat1);
    double g2p = g_prime(h2, op.chi2, op.qhat2);
    ConvergenceReport rep = mu_gamma(th, g1p, g2p);
    std::printf("predicted contraction rate mu_gamma = %.6f (%s)\n", rep.mu,
                rep.stable ? "stable" : "unstable");

    StabilityReport stab = stability_report(op, gf);
    std::printf("AT condition: %s (R'_1 eta_1 = %.4f, R'_2 eta_2 = %.4f)\n",
                stab.at_stable ? "satisfied" : "violated", stab.r1p * stab.eta1,
                stab.r2p * stab.eta2);

    // one sampled instance
    CouplingMatrix w = sample_iid_gaussian(n1, n2, beta, seed);
    SpectralData sd = compute_svd(w);

    // spectral route on the same instance (no closed form needed)
    GreenFunction green = green_from_spectral(sd, alpha);
    OrderParams op_g = solve_green_fixed_point(green, h1, h2, alpha);
    std::printf("spectral-route order parameters at n1=%d: chi1=%.6f (closed form %.6f)\n", n1,
                op_g.chi1, op.chi1);

    // dynamics
    TapOperator a = build_operator(std::move(sd), op);
    Trajectory traj;
    MagnetizationResult res = run(a, op, /*horizon=*/60, seed, /*tol=*/1e-10, &w, &traj);
    std::printf("dynamics: %s after %d steps, fixed-point residual %.3g\n",
                res.converged ? "converged" : "hit horizon", res.iters, res.residual);

    // measured contraction vs prediction: rerun without an early stop and fit
    // the step-size decay over the whole window down to the numerical floor
    Trajectory full;
    run(a, op, /*horizon=*/40, seed, /*tol=*/0.0, nullptr, &full);
    SlopeFit fit = fit_log_slope(full.delta1);
    std::printf("fitted step-size decay rate = %.4f over t in [%d, %d], predicted mu_gamma = "
                "%.4f\n",
                std::exp(fit.slope), fit.t_lo, fit.t_hi, rep.mu);
    std::printf("mean magnetizations: visible %.4f, hidden %.4f\n", res.m1.mean(), res.m2.mean());
    return 0;
}
