#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bitap/errors.hpp"

namespace bitap {

struct ExactResult {
    Eigen::VectorXd m1;            // E[s1_i]
    Eigen::VectorXd m2;            // E[s2_j]
    Eigen::MatrixXd second_moment; // E[s1_i s2_j]

    Eigen::MatrixXd cov12() const { return second_moment - m1 * m2.transpose(); }
};

// Exact Gibbs averages for p(s1, s2) ~ exp(s1^T W s2 + h1^T s1 + h2^T s2) by
// enumerating the smaller layer only: conditioned on s2 the s1 spins decouple,
//   Z = sum_{s2} exp(h2 . s2) prod_i 2 cosh(h1 + (W s2)_i),
// so the cost is O(2^{n2} n1 n2) instead of O(2^{n1+n2}). Weights are combined
// in log space to keep large fields from overflowing.
inline ExactResult exact_enumeration(const Eigen::MatrixXd& w, double h1, double h2) {
    const int n1 = int(w.rows());
    const int n2 = int(w.cols());
    if (n1 < 1 || n2 < 1 || n2 > n1) throw usage_error("exact_enumeration: invalid dimensions");
    if (n1 + n2 > 22)
        throw usage_error("exact_enumeration: n1 + n2 = " + std::to_string(n1 + n2) +
                          " exceeds the enumeration cap of 22 spins");

    const std::uint64_t nconf = std::uint64_t(1) << n2;
    std::vector<double> logw(nconf);
    Eigen::VectorXd s2(n2);

    double logmax = -std::numeric_limits<double>::infinity();
    for (std::uint64_t mask = 0; mask < nconf; ++mask) {
        for (int j = 0; j < n2; ++j) s2[j] = (mask >> j) & 1 ? 1.0 : -1.0;
        Eigen::ArrayXd field = h1 + (w * s2).array();
        // log(2 cosh x) = |x| + log1p(exp(-2|x|)), stable for large |x|
        double lw = h2 * s2.sum();
        for (int i = 0; i < n1; ++i)
            lw += std::abs(field[i]) + std::log1p(std::exp(-2.0 * std::abs(field[i])));
        logw[mask] = lw;
        logmax = std::max(logmax, lw);
    }

    double z = 0.0;
    ExactResult res;
    res.m1 = Eigen::VectorXd::Zero(n1);
    res.m2 = Eigen::VectorXd::Zero(n2);
    res.second_moment = Eigen::MatrixXd::Zero(n1, n2);
    for (std::uint64_t mask = 0; mask < nconf; ++mask) {
        for (int j = 0; j < n2; ++j) s2[j] = (mask >> j) & 1 ? 1.0 : -1.0;
        double p = std::exp(logw[mask] - logmax); // unnormalized, overflow-safe
        z += p;
        Eigen::VectorXd cond_m1 = (h1 + (w * s2).array()).tanh().matrix(); // E[s1 | s2]
        res.m1 += p * cond_m1;
        res.m2 += p * s2;
        res.second_moment += p * cond_m1 * s2.transpose();
    }
    res.m1 /= z;
    res.m2 /= z;
    res.second_moment /= z;
    return res;
}

} // namespace bitap
