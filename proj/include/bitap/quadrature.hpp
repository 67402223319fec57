#pragma once

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bitap/errors.hpp"

namespace bitap {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
inline void legendre_nodes(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double xi = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) * xi * p1 - j * p2) / (j + 1);
            }
            pp = n * (xi * p0 - p1) / (xi * xi - 1.0);
            double dx = p0 / pp;
            xi -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        x[i] = -xi;
        x[n - 1 - i] = xi;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - xi * xi) * pp * pp);
    }
}

// Nodes u_i and weights w_i such that E[phi(c + s*u)] ~= sum_i w_i phi(c + s*u_i)
// for u ~ N(0,1). The rule tiles [-14, 14] with Gauss-Legendre panels whose
// width shrinks like 1/s: phi built from tanh has O(1) feature scale, so
// phi(c + s*u) oscillates on the u-scale 1/s and a fixed-panel (or plain
// Gauss-Hermite) rule loses accuracy once s grows past ~2 — tanh' has poles at
// +-i*pi/2, so the integrand's analyticity strip narrows like 1/s. With unit
// feature scale per panel the rule stays at machine precision for any s.
// |u| > 14 contributes < 3e-43 of the Gaussian mass; tanh-based integrands
// grow at most linearly, so the truncation is far below double precision.
struct GaussianRule {
    Eigen::ArrayXd u;
    Eigen::ArrayXd w; // includes the standard normal density factor
};

inline const GaussianRule& gaussian_rule(double s, int nodes_per_panel = 24) {
    if (nodes_per_panel < 2) throw usage_error("gaussian_rule: need at least 2 nodes per panel");
    static thread_local std::map<std::pair<long long, int>, GaussianRule> cache;
    const double umax = 14.0;
    double width = std::min(1.0, 1.0 / std::max(s, 1e-300));
    int npanel = std::max(1, (int)std::ceil(2.0 * umax / width));
    auto key = std::make_pair((long long)npanel, nodes_per_panel);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    std::vector<double> gx, gw;
    legendre_nodes(nodes_per_panel, gx, gw);
    GaussianRule rule;
    rule.u.resize((Eigen::Index)npanel * nodes_per_panel);
    rule.w.resize(rule.u.size());
    const double inv_sqrt2pi = 0.3989422804014326779;
    Eigen::Index idx = 0;
    for (int p = 0; p < npanel; ++p) {
        double a = -umax + 2.0 * umax * p / npanel;
        double b = -umax + 2.0 * umax * (p + 1) / npanel;
        for (int j = 0; j < nodes_per_panel; ++j, ++idx) {
            double u = 0.5 * (b - a) * gx[j] + 0.5 * (a + b);
            rule.u(idx) = u;
            rule.w(idx) = 0.5 * (b - a) * gw[j] * std::exp(-0.5 * u * u) * inv_sqrt2pi;
        }
    }
    return cache.emplace(key, std::move(rule)).first->second;
}

// E[f(h + sqrt(qhat)*u)] for u ~ N(0,1) and an arbitrary scalar f.
template <class F>
double gauss_expect_f(F&& f, double h, double qhat, int order = 60) {
    if (qhat < 0.0) throw usage_error("gauss_expect: qhat must be nonnegative");
    if (order < 8) throw usage_error("gauss_expect: order must be at least 8");
    if (qhat == 0.0) return f(h);
    double s = std::sqrt(qhat);
    const GaussianRule& rule = gaussian_rule(s, order);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < rule.u.size(); ++i)
        acc += rule.w(i) * f(h + s * rule.u(i));
    return acc;
}

enum class Integrand { TanhPrime, TanhPrimeSq, Tanh, TanhSq };

inline double gauss_expect(Integrand f, double h, double qhat, int order = 60) {
    switch (f) {
        case Integrand::TanhPrime:
            return gauss_expect_f([](double x) { double t = std::tanh(x); return 1.0 - t * t; }, h, qhat, order);
        case Integrand::TanhPrimeSq:
            return gauss_expect_f([](double x) { double t = std::tanh(x); double p = 1.0 - t * t; return p * p; }, h, qhat, order);
        case Integrand::Tanh:
            return gauss_expect_f([](double x) { return std::tanh(x); }, h, qhat, order);
        case Integrand::TanhSq:
            return gauss_expect_f([](double x) { double t = std::tanh(x); return t * t; }, h, qhat, order);
    }
    throw usage_error("gauss_expect: unknown integrand tag");
}

} // namespace bitap
