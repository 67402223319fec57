#pragma once

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "bitap/ensembles.hpp"
#include "bitap/errors.hpp"
#include "bitap/order_params.hpp"

namespace bitap {

// Susceptibility blocks of the linearized fixed point and the resulting
// cross moments. chi21 is chi12 transposed and is not stored.
struct CrossCorrelations {
    Eigen::MatrixXd chi11; // n1 x n1
    Eigen::MatrixXd chi12; // n1 x n2
    Eigen::MatrixXd chi22; // n2 x n2
    Eigen::MatrixXd cross; // E[s1_i s2_j] = chi12_ij + m1_i m2_j
};

// Dense linear response around a converged field configuration. The spin
// covariance is the inverse of the block matrix [[L1, -W], [-W^T, L2]] with
//   L1_ii = 1/tanh'(h1 + gamma1_i) + (psi1 - 1)/chi1,
//   L2_jj = 1/tanh'(h2 + gamma2_j) + (psi2 - 1)/chi2,
// computed through the n2 x n2 Schur complement S = L2 - W^T L1^{-1} W:
//   chi22 = S^{-1},  chi12 = L1^{-1} W S^{-1},
//   chi11 = L1^{-1} + L1^{-1} W S^{-1} W^T L1^{-1}.
// Everything here is dense O(n^3); dense_limit guards against calling it at
// sizes where that is no longer sensible.
inline CrossCorrelations cross_correlations(const Eigen::VectorXd& gamma1,
                                            const Eigen::VectorXd& gamma2,
                                            const CouplingMatrix& w, const OrderParams& op,
                                            int dense_limit = 4000) {
    const auto n1 = w.entries.rows();
    const auto n2 = w.entries.cols();
    if (gamma1.size() != n1 || gamma2.size() != n2)
        throw usage_error("cross_correlations: field/matrix dimension mismatch");
    if (n1 + n2 > dense_limit)
        throw usage_error("cross_correlations: n1 + n2 = " + std::to_string(n1 + n2) +
                          " exceeds dense_limit = " + std::to_string(dense_limit));

    Eigen::ArrayXd tp1 = 1.0 - (op.h1 + gamma1.array()).tanh().square();
    Eigen::ArrayXd tp2 = 1.0 - (op.h2 + gamma2.array()).tanh().square();
    if (tp1.minCoeff() < 1e-300 || tp2.minCoeff() < 1e-300)
        throw numerical_error("cross_correlations: saturated site, 1/tanh' overflows");
    Eigen::ArrayXd l1_inv = 1.0 / (1.0 / tp1 + (op.psi1 - 1.0) / op.chi1);
    Eigen::VectorXd l2 = (1.0 / tp2 + (op.psi2 - 1.0) / op.chi2).matrix();

    Eigen::MatrixXd l1inv_w = l1_inv.matrix().asDiagonal() * w.entries; // L1^{-1} W
    Eigen::MatrixXd s = Eigen::MatrixXd(l2.asDiagonal()) - w.entries.transpose() * l1inv_w;
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success)
        throw numerical_error("cross_correlations: Schur complement not positive definite "
                              "(operating point is at or past an instability)");

    CrossCorrelations cc;
    cc.chi22 = llt.solve(Eigen::MatrixXd::Identity(n2, n2));
    cc.chi12 = l1inv_w * cc.chi22;
    cc.chi11 = Eigen::MatrixXd(l1_inv.matrix().asDiagonal()) +
               cc.chi12 * l1inv_w.transpose();
    Eigen::VectorXd m1 = (op.h1 + gamma1.array()).tanh().matrix();
    Eigen::VectorXd m2 = (op.h2 + gamma2.array()).tanh().matrix();
    cc.cross = cc.chi12 + m1 * m2.transpose();
    return cc;
}

} // namespace bitap
