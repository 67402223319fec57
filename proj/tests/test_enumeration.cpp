#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <bitap/ensembles.hpp>
#include <bitap/enumeration.hpp>

#include "oracles.hpp"

using namespace bitap;

TEST_CASE("conditioned enumeration agrees with the full configuration sum", "[enumeration]") {
    CouplingMatrix w = sample_iid_gaussian(5, 3, 1.0, 8);
    ExactResult fast = exact_enumeration(w.entries, 0.8, -0.4);
    oracle::BruteResult slow = oracle::brute_force_gibbs(w.entries, 0.8, -0.4);
    REQUIRE((fast.m1 - slow.m1).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE((fast.m2 - slow.m2).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE((fast.second_moment - slow.second_moment).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("single-pair closed form", "[enumeration]") {
    // n1 = n2 = 1: p(s1, s2) ~ exp(w s1 s2 + h1 s1 + h2 s2)
    Eigen::MatrixXd w(1, 1);
    w << 0.6;
    const double h1 = 0.9, h2 = -0.2;
    double z = 0.0, m1 = 0.0, m2 = 0.0, mm = 0.0;
    for (int s1 : {-1, 1})
        for (int s2 : {-1, 1}) {
            double p = std::exp(0.6 * s1 * s2 + h1 * s1 + h2 * s2);
            z += p;
            m1 += p * s1;
            m2 += p * s2;
            mm += p * s1 * s2;
        }
    ExactResult r = exact_enumeration(w, h1, h2);
    REQUIRE(r.m1(0) == Catch::Approx(m1 / z).margin(1e-14));
    REQUIRE(r.m2(0) == Catch::Approx(m2 / z).margin(1e-14));
    REQUIRE(r.second_moment(0, 0) == Catch::Approx(mm / z).margin(1e-14));
}

TEST_CASE("zero field means vanish by symmetry", "[enumeration]") {
    CouplingMatrix w = sample_iid_gaussian(6, 3, 1.5, 12);
    ExactResult r = exact_enumeration(w.entries, 0.0, 0.0);
    REQUIRE(r.m1.cwiseAbs().maxCoeff() < 1e-13);
    REQUIRE(r.m2.cwiseAbs().maxCoeff() < 1e-13);
    REQUIRE(r.second_moment.cwiseAbs().maxCoeff() > 1e-3); // correlations survive
}

TEST_CASE("extreme fields saturate without overflow", "[enumeration]") {
    CouplingMatrix w = sample_iid_gaussian(4, 2, 1.0, 5);
    ExactResult r = exact_enumeration(w.entries, 200.0, 150.0);
    REQUIRE(r.m1.allFinite());
    REQUIRE((r.m1.array() - 1.0).abs().maxCoeff() < 1e-12);
    REQUIRE((r.m2.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("enumeration caps and dimension checks", "[enumeration]") {
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(12, 11);
    REQUIRE_THROWS_AS(exact_enumeration(big, 1.0, 1.0), usage_error);
    Eigen::MatrixXd wide = Eigen::MatrixXd::Zero(2, 4);
    REQUIRE_THROWS_AS(exact_enumeration(wide, 1.0, 1.0), usage_error);
}

TEST_CASE("covariance block subtracts the means", "[enumeration]") {
    CouplingMatrix w = sample_iid_gaussian(4, 2, 0.7, 6);
    ExactResult r = exact_enumeration(w.entries, 1.0, 0.5);
    Eigen::MatrixXd cov = r.cov12();
    REQUIRE(cov(1, 1) == Catch::Approx(r.second_moment(1, 1) - r.m1(1) * r.m2(1)).margin(1e-15));
}
