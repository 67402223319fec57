#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <bitap/ensembles.hpp>
#include <bitap/generating.hpp>

#include "oracles.hpp"

using namespace bitap;

TEST_CASE("iid backend has constant slope", "[generating]") {
    GeneratingFunction gf = GeneratingFunction::iid(0.5, 2.0);
    for (double x : {0.05, 0.3, 0.9}) {
        REQUIRE(i_prime(gf, x) == Catch::Approx(0.5 * 2.0));
        REQUIRE(i_second(gf, x) == Catch::Approx(0.0).margin(1e-15));
    }
}

TEST_CASE("column-orthogonal backend satisfies its defining identity", "[generating]") {
    // the closed form obeys I'(x) (1 + x I'(x)) = alpha beta for every x
    const double alpha = 0.5, beta = 3.0;
    GeneratingFunction gf = GeneratingFunction::column_orthogonal(alpha, beta);
    for (double x : {0.02, 0.17, 0.55, 1.0}) {
        double ip = i_prime(gf, x);
        REQUIRE(ip * (1.0 + x * ip) == Catch::Approx(alpha * beta).epsilon(1e-12));
        if (x < 1.0) { // a central difference at the right edge would leave the domain
            double fd = oracle::fd_derivative([&](double y) { return i_prime(gf, y); }, x, 1e-6);
            REQUIRE(i_second(gf, x) == Catch::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("sampled iid spectrum matches the Marchenko-Pastur transform", "[generating]") {
    const double alpha = 0.5, beta = 2.0;
    CouplingMatrix w = sample_iid_gaussian(2000, 1000, beta, 21);
    GreenFunction g = green_from_spectral(compute_svd(w), alpha);
    double edge = oracle::mp_upper_edge(alpha, beta);
    for (double z : {edge * 1.3, edge * 2.0, edge * 5.0}) {
        REQUIRE(green_wt(g, z) == Catch::Approx(oracle::mp_green(z, alpha, beta)).epsilon(0.02));
        // G' against a finite difference of the closed form
        double gp_ref = oracle::fd_derivative(
            [&](double y) { return oracle::mp_green(y, alpha, beta); }, z, 1e-5 * z);
        REQUIRE(green_wt_prime(g, z) == Catch::Approx(gp_ref).epsilon(0.05));
    }
    // the two-sided transform identity G_W = alpha G_WT + (1 - alpha)/z
    double z = edge * 1.7;
    REQUIRE(green_w(g, z) ==
            Catch::Approx(alpha * green_wt(g, z) + (1.0 - alpha) / z).epsilon(1e-13));
}

TEST_CASE("spectrum backend reproduces the column-orthogonal closed form", "[generating]") {
    // the column-orthogonal Gramian spectrum is exactly flat at beta
    const double alpha = 0.5, beta = 3.0;
    const int n2 = 64;
    GreenFunction g = green_from_spectrum(Eigen::VectorXd::Constant(n2, beta), alpha,
                                          int(n2 / alpha), n2);
    GeneratingFunction num = GeneratingFunction::spectrum(g);
    GeneratingFunction ana = GeneratingFunction::column_orthogonal(alpha, beta);
    for (double x : {0.05, 0.3, 0.8}) {
        REQUIRE(i_prime(num, x) == Catch::Approx(i_prime(ana, x)).epsilon(1e-8));
        REQUIRE(i_second(num, x) == Catch::Approx(i_second(ana, x)).epsilon(1e-4));
    }
}

TEST_CASE("spectrum backend approaches the iid closed form at large n", "[generating]") {
    const double alpha = 0.5, beta = 2.0;
    CouplingMatrix w = sample_iid_gaussian(2000, 1000, beta, 33);
    GeneratingFunction num = GeneratingFunction::spectrum(green_from_spectral(compute_svd(w), alpha));
    for (double x : {0.06, 0.3}) {
        REQUIRE(i_prime(num, x) == Catch::Approx(alpha * beta).epsilon(0.05));
    }
}

TEST_CASE("domain validation", "[generating]") {
    GeneratingFunction gf = GeneratingFunction::column_orthogonal(0.5, 2.0);
    REQUIRE_THROWS_AS(i_prime(gf, 0.0), usage_error);
    REQUIRE_THROWS_AS(i_prime(gf, 1.5), usage_error);
    GreenFunction g = green_from_spectrum(Eigen::VectorXd::Constant(8, 2.0), 0.5, 16, 8);
    REQUIRE_THROWS_AS(green_wt(g, 1.9), numerical_error);
    REQUIRE_THROWS_AS(green_from_spectrum(Eigen::VectorXd(), 0.5, 0, 0), usage_error);
}
