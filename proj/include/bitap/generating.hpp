#pragma once

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "bitap/errors.hpp"
#include "bitap/ensembles.hpp"

namespace bitap {

// Empirical Green function of the Gramian W^T W from its eigenvalues d_j:
//   G_wt(z) = (1/n2) sum_j 1/(z - d_j),
// together with the rectangular companion G_w(z) = alpha*G_wt(z) + (1-alpha)/z.
struct GreenFunction {
    Eigen::VectorXd eigvals_gram;
    double alpha = 0.0;
    int n1 = 0, n2 = 0;
    double pole_eps = 1e-9; // domain guard: z > max(d) * (1 + pole_eps)

    double max_eig() const { return eigvals_gram.size() ? eigvals_gram.maxCoeff() : 0.0; }
};

inline GreenFunction green_from_spectrum(const Eigen::VectorXd& eigvals_gram, double alpha,
                                         int n1 = 0, int n2 = 0) {
    if (eigvals_gram.size() == 0) throw usage_error("green_from_spectrum: empty spectrum");
    GreenFunction g;
    g.eigvals_gram = eigvals_gram;
    g.alpha = alpha;
    g.n2 = n2 > 0 ? n2 : int(eigvals_gram.size());
    g.n1 = n1 > 0 ? n1 : int(std::lround(g.n2 / alpha));
    return g;
}

inline GreenFunction green_from_spectral(const SpectralData& sd, double alpha) {
    return green_from_spectrum(sd.eigvals_gram, alpha, 0, int(sd.eigvals_gram.size()));
}

namespace detail {
inline void check_green_domain(const GreenFunction& g, double z) {
    double dmax = g.max_eig();
    double guard = dmax + g.pole_eps * std::max(dmax, 1.0);
    if (z <= guard)
        throw numerical_error("Green function argument z=" + std::to_string(z) +
                              " inside/near spectrum (max eigenvalue " + std::to_string(dmax) +
                              ", min gap " + std::to_string(z - dmax) + ")");
}
} // namespace detail

inline double green_wt(const GreenFunction& g, double z) {
    detail::check_green_domain(g, z);
    return (1.0 / (z - g.eigvals_gram.array())).mean();
}

inline double green_wt_prime(const GreenFunction& g, double z) {
    detail::check_green_domain(g, z);
    return -(1.0 / (z - g.eigvals_gram.array()).square()).mean();
}

inline double green_w(const GreenFunction& g, double z) {
    return g.alpha * green_wt(g, z) + (1.0 - g.alpha) / z;
}

inline double green_w_prime(const GreenFunction& g, double z) {
    return g.alpha * green_wt_prime(g, z) - (1.0 - g.alpha) / (z * z);
}

// Provider of the generating-function derivatives I'(x), I''(x).
//   AnalyticIid:              I(x) = alpha*beta*x
//   AnalyticColumnOrthogonal: I(x) = sqrt(1+4*alpha*beta*x) - ln(1+sqrt(1+4*alpha*beta*x)) + ln2 - 1
//   Spectrum:                 defined implicitly through the Green function (see i_prime)
// I(x) itself is never needed downstream, only the derivatives.
struct GeneratingFunction {
    enum class Kind { AnalyticIid, AnalyticColumnOrthogonal, Spectrum };
    Kind kind = Kind::AnalyticIid;
    double alpha = 0.0;
    double beta = 0.0;       // analytic kinds only
    GreenFunction green;     // Spectrum kind only

    static GeneratingFunction iid(double alpha, double beta) {
        GeneratingFunction gf;
        gf.kind = Kind::AnalyticIid;
        gf.alpha = alpha;
        gf.beta = beta;
        return gf;
    }
    static GeneratingFunction column_orthogonal(double alpha, double beta) {
        GeneratingFunction gf;
        gf.kind = Kind::AnalyticColumnOrthogonal;
        gf.alpha = alpha;
        gf.beta = beta;
        return gf;
    }
    static GeneratingFunction spectrum(const GreenFunction& g) {
        GeneratingFunction gf;
        gf.kind = Kind::Spectrum;
        gf.alpha = g.alpha;
        gf.green = g;
        return gf;
    }
};

namespace detail {

inline void check_x_domain(double x) {
    if (!(x > 0.0) || x > 1.0)
        throw usage_error("generating function derivative: x must lie in (0, 1], got " +
                          std::to_string(x));
}

// For a spectrum backend the pair (psi1, psi2) at argument x solves
//   psi1 = x / G_wt(lambda),  psi2 = x / G_w(lambda),  lambda = psi1*psi2/x,
// which inverts the analytic relations psi1 = 1 + x I'(x), psi2 = 1 + x I'(x)/alpha.
// Eliminating the psis leaves one scalar equation,
//   lambda * G_wt(lambda) * G_w(lambda) = x.
// The left side is a product of three positive strictly decreasing functions of
// lambda on (spectral edge, infinity) -- lambda*G_wt and lambda*G_w both fall
// from +infinity at the edge to 1 and to 1-alpha+alpha = 1 respectively, and
// 1/lambda falls to 0 -- so it crosses any x in (0, 1] exactly once and a
// bracketed bisection cannot miss.
inline double spectrum_lambda(const GreenFunction& g, double x) {
    double dmax = g.max_eig();
    double lo = dmax * (1.0 + 2e-6) + 1e-12;
    auto hval = [&](double lambda) { return lambda * green_wt(g, lambda) * green_w(g, lambda); };
    if (hval(lo) < x)
        throw numerical_error("spectrum backend: the discrete spectrum is too coarse near its "
                              "edge to invert the Green function at x=" + std::to_string(x));
    double hi = std::max(2.0 * lo, 4.0 / x);
    int guard = 0;
    while (hval(hi) > x) {
        hi *= 2.0;
        if (++guard > 200)
            throw numerical_error("spectrum backend: failed to bracket lambda at x=" +
                                  std::to_string(x));
    }
    for (int it = 0; it < 200 && (hi - lo) > 4e-16 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (hval(mid) > x ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline std::pair<double, double> spectrum_psi(const GreenFunction& g, double x) {
    double lambda = spectrum_lambda(g, x);
    return {x / green_wt(g, lambda), x / green_w(g, lambda)};
}

} // namespace detail

inline double i_prime(const GeneratingFunction& gf, double x) {
    detail::check_x_domain(x);
    switch (gf.kind) {
        case GeneratingFunction::Kind::AnalyticIid:
            return gf.alpha * gf.beta;
        case GeneratingFunction::Kind::AnalyticColumnOrthogonal: {
            double s = std::sqrt(1.0 + 4.0 * gf.alpha * gf.beta * x);
            return 2.0 * gf.alpha * gf.beta / (1.0 + s);
        }
        case GeneratingFunction::Kind::Spectrum: {
            auto [psi1, psi2] = detail::spectrum_psi(gf.green, x);
            (void)psi2;
            return (psi1 - 1.0) / x;
        }
    }
    throw usage_error("i_prime: unknown backend");
}

inline double i_second(const GeneratingFunction& gf, double x) {
    detail::check_x_domain(x);
    switch (gf.kind) {
        case GeneratingFunction::Kind::AnalyticIid:
            return 0.0;
        case GeneratingFunction::Kind::AnalyticColumnOrthogonal: {
            double ab = gf.alpha * gf.beta;
            double s = std::sqrt(1.0 + 4.0 * ab * x);
            return -4.0 * ab * ab / (s * (1.0 + s) * (1.0 + s));
        }
        case GeneratingFunction::Kind::Spectrum: {
            // Implicit-function derivative of I'(x) = 1/G_wt(lambda(x)) - 1/x
            // through H(lambda) = lambda G_wt G_w = x:
            //   I''(x) = 1/x^2 - G_wt'(lambda) / (G_wt(lambda)^2 H'(lambda)).
            const GreenFunction& g = gf.green;
            double lam = detail::spectrum_lambda(g, x);
            double gwt = green_wt(g, lam), gwtp = green_wt_prime(g, lam);
            double gw = green_w(g, lam), gwp = green_w_prime(g, lam);
            double hp = gwt * gw + lam * (gwtp * gw + gwt * gwp);
            return 1.0 / (x * x) - gwtp / (gwt * gwt * hp);
        }
    }
    throw usage_error("i_second: unknown backend");
}

} // namespace bitap
