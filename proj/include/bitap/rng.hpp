#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace bitap {

// splitmix64 step; used only to whiten (seed, stream) pairs into engine seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Independent substreams per purpose, so e.g. the matrix draw and the dynamics
// initialisation decorrelate even when the user passes the same seed to both.
namespace stream {
inline constexpr std::uint64_t matrix     = 1;
inline constexpr std::uint64_t haar_left  = 2;
inline constexpr std::uint64_t haar_right = 3;
inline constexpr std::uint64_t dynamics   = 4;
inline constexpr std::uint64_t oracle     = 5;
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t substream) {
    std::uint64_t s = seed ^ (substream * 0x9e3779b97f4a7c15ull);
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return std::mt19937_64(a ^ (b << 1));
}

// Fill order is fixed (row index fastest within a column loop) so results do
// not depend on Eigen's storage order. Determinism holds within one build;
// cross-platform bit-exactness is not promised.
inline Eigen::MatrixXd gaussian_matrix(int rows, int cols, double stddev, std::mt19937_64& eng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            m(i, j) = dist(eng);
    return m;
}

inline Eigen::VectorXd gaussian_vector(int n, double stddev, std::mt19937_64& eng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = dist(eng);
    return v;
}

} // namespace bitap
