#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "bitap/errors.hpp"
#include "bitap/rng.hpp"

namespace bitap {

enum class Model { IidGaussian, ColumnOrthogonal, CustomSpectrum };

inline std::string model_name(Model m) {
    switch (m) {
        case Model::IidGaussian:      return "iid_gaussian";
        case Model::ColumnOrthogonal: return "column_orthogonal";
        case Model::CustomSpectrum:   return "custom_spectrum";
    }
    throw usage_error("model_name: unknown model");
}

inline Model model_from_name(const std::string& s) {
    if (s == "iid_gaussian" || s == "iid" || s == "i") return Model::IidGaussian;
    if (s == "column_orthogonal" || s == "co" || s == "ii") return Model::ColumnOrthogonal;
    if (s == "custom_spectrum" || s == "custom") return Model::CustomSpectrum;
    throw usage_error("unknown model '" + s + "' (expected iid_gaussian | column_orthogonal | custom_spectrum)");
}

struct CouplingMatrix {
    int n1 = 0;             // visible count
    int n2 = 0;             // hidden count, n2 <= n1
    double alpha = 0.0;     // n2/n1
    double beta = 0.0;      // inverse-temperature scale of the ensemble
    Model model = Model::IidGaussian;
    Eigen::MatrixXd entries; // n1 x n2
    std::uint64_t seed = 0;
};

struct SpectralData {
    Eigen::VectorXd sigmas;       // n2 singular values, descending
    Eigen::MatrixXd left_basis;   // n1 x n2, orthonormal columns
    Eigen::MatrixXd right_basis;  // n2 x n2, orthogonal
    Eigen::VectorXd eigvals_gram; // sigmas squared (eigenvalues of W^T W)
};

namespace detail {

inline void check_dims(int n1, int n2) {
    if (n1 < 1 || n2 < 1 || n2 > n1)
        throw usage_error("invalid dimensions: need n1 >= n2 >= 1, got n1=" +
                          std::to_string(n1) + " n2=" + std::to_string(n2));
}

// Haar-distributed orthonormal columns: QR of an i.i.d. standard Gaussian
// matrix with the signs fixed so every diagonal of the triangular factor is
// positive (otherwise Q is only Haar up to a column sign ambiguity).
inline Eigen::MatrixXd haar_frame(int rows, int cols, std::mt19937_64& eng) {
    Eigen::MatrixXd g = gaussian_matrix(rows, cols, 1.0, eng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
    Eigen::MatrixXd r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    for (int j = 0; j < cols; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

} // namespace detail

inline CouplingMatrix sample_iid_gaussian(int n1, int n2, double beta, std::uint64_t seed) {
    detail::check_dims(n1, n2);
    if (beta <= 0.0) throw usage_error("sample_iid_gaussian: beta must be positive");
    CouplingMatrix w;
    w.n1 = n1;
    w.n2 = n2;
    w.alpha = double(n2) / double(n1);
    w.beta = beta;
    w.model = Model::IidGaussian;
    w.seed = seed;
    auto eng = make_engine(seed, stream::matrix);
    w.entries = gaussian_matrix(n1, n2, std::sqrt(beta / n1), eng);
    return w;
}

inline CouplingMatrix sample_column_orthogonal(int n1, int n2, double beta, std::uint64_t seed) {
    detail::check_dims(n1, n2);
    if (beta <= 0.0) throw usage_error("sample_column_orthogonal: beta must be positive");
    CouplingMatrix w;
    w.n1 = n1;
    w.n2 = n2;
    w.alpha = double(n2) / double(n1);
    w.beta = beta;
    w.model = Model::ColumnOrthogonal;
    w.seed = seed;
    auto eng = make_engine(seed, stream::haar_left);
    w.entries = std::sqrt(beta) * detail::haar_frame(n1, n2, eng);
    return w;
}

// W = O Sigma V^T with independent Haar factors and prescribed singular values.
inline CouplingMatrix sample_from_singular_values(int n1, int n2, const Eigen::VectorXd& sigmas,
                                                  std::uint64_t seed) {
    detail::check_dims(n1, n2);
    if (sigmas.size() != n2)
        throw usage_error("sample_from_singular_values: need exactly n2 singular values");
    if ((sigmas.array() < 0.0).any())
        throw usage_error("sample_from_singular_values: singular values must be nonnegative");
    CouplingMatrix w;
    w.n1 = n1;
    w.n2 = n2;
    w.alpha = double(n2) / double(n1);
    // beta recorded as the mean Gramian eigenvalue, the scale the spectrum implies
    w.beta = sigmas.squaredNorm() / n2;
    w.model = Model::CustomSpectrum;
    w.seed = seed;
    auto eng_l = make_engine(seed, stream::haar_left);
    auto eng_r = make_engine(seed, stream::haar_right);
    Eigen::MatrixXd o = detail::haar_frame(n1, n2, eng_l);
    Eigen::MatrixXd v = detail::haar_frame(n2, n2, eng_r);
    w.entries = o * sigmas.asDiagonal() * v.transpose();
    return w;
}

// Thin SVD via the Gramian: eigendecompose W^T W (n2 x n2), then lift the left
// basis as U = W V Sigma^{-1}. This is cheaper than a direct SVD at the n1 >> 1
// sizes used here, and the Gramian eigenvalues d_j are exactly what the
// Green-function route consumes. Columns for vanishing singular values are
// completed deterministically from canonical basis vectors.
inline SpectralData compute_svd(const CouplingMatrix& w) {
    if (!w.entries.allFinite()) throw numerical_error("compute_svd: matrix has non-finite entries");
    const int n1 = w.n1, n2 = w.n2;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n2, n2);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(w.entries.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success)
        throw numerical_error("compute_svd: eigendecomposition failed (n2=" + std::to_string(n2) +
                              ", |W|_max=" + std::to_string(w.entries.cwiseAbs().maxCoeff()) + ")");

    SpectralData sd;
    sd.sigmas.resize(n2);
    sd.eigvals_gram.resize(n2);
    sd.right_basis.resize(n2, n2);
    sd.left_basis.resize(n1, n2);
    // Eigen returns ascending eigenvalues; emit descending.
    for (int j = 0; j < n2; ++j) {
        double d = std::max(es.eigenvalues()(n2 - 1 - j), 0.0);
        sd.eigvals_gram(j) = d;
        sd.sigmas(j) = std::sqrt(d);
        sd.right_basis.col(j) = es.eigenvectors().col(n2 - 1 - j);
    }
    // Eigenvalues of the Gramian carry absolute noise ~ eps * lambda_max, so
    // singular values below sigma_max * sqrt(n * eps) are not resolvable here
    // and are treated as null directions.
    const double rank_tol =
        sd.sigmas(0) * std::sqrt(double(n2) * std::numeric_limits<double>::epsilon());
    for (int j = 0; j < n2; ++j) {
        if (sd.sigmas(j) <= rank_tol) { // flush sub-noise modes to exact nulls
            sd.sigmas(j) = 0.0;
            sd.eigvals_gram(j) = 0.0;
        }
    }
    int completed = 0;
    for (int j = 0; j < n2; ++j) {
        if (sd.sigmas(j) > 0.0) {
            sd.left_basis.col(j) = w.entries * sd.right_basis.col(j) / sd.sigmas(j);
        } else {
            // Gram-Schmidt a canonical vector against everything placed so far.
            Eigen::VectorXd cand;
            for (int e = completed; e < n1; ++e) {
                cand = Eigen::VectorXd::Unit(n1, e);
                cand -= sd.left_basis.leftCols(j) * (sd.left_basis.leftCols(j).transpose() * cand);
                double nrm = cand.norm();
                if (nrm > 0.5) { cand /= nrm; break; }
            }
            sd.left_basis.col(j) = cand;
            ++completed;
        }
    }
    return sd;
}

} // namespace bitap
