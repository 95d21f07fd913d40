#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "gl_reference.hpp"
#include "scasml/quadrature.hpp"

using namespace scasml;

TEST_CASE("one-point rule is the midpoint with weight 2") {
    const auto rule = gauss_legendre(1);
    REQUIRE(rule.nodes.size() == 1);
    REQUIRE(rule.nodes[0] == 0.0);
    REQUIRE(rule.weights[0] == Catch::Approx(2.0).margin(1e-15));
}

TEST_CASE("two-point rule has nodes +-1/sqrt(3) and unit weights") {
    const auto rule = gauss_legendre(2);
    REQUIRE(rule.nodes[0] == Catch::Approx(-0.57735026919).margin(1e-11));
    REQUIRE(rule.nodes[1] == Catch::Approx(0.57735026919).margin(1e-11));
    REQUIRE(rule.weights[0] == Catch::Approx(1.0).margin(1e-13));
    REQUIRE(rule.weights[1] == Catch::Approx(1.0).margin(1e-13));
}

TEST_CASE("five-point rule recovers the analytic middle weight 128/225") {
    const auto rule = gauss_legendre(5);
    REQUIRE(rule.nodes[2] == 0.0);
    REQUIRE(rule.weights[2] == Catch::Approx(128.0 / 225.0).margin(1e-14));
}

TEST_CASE("orders 1..20 match the high-precision reference to 1e-12") {
    std::map<int, std::vector<GlReferenceEntry>> by_order;
    for (const auto& entry : kGlReference) by_order[entry.order].push_back(entry);
    for (const auto& [order, entries] : by_order) {
        const auto rule = gauss_legendre(order);
        REQUIRE(rule.nodes.size() == entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) {
            REQUIRE(std::abs(rule.nodes[i] - entries[i].node) < 1e-12);
            REQUIRE(std::abs(rule.weights[i] - entries[i].weight) < 1e-12);
        }
    }
}

TEST_CASE("weights sum to 2 and nodes stay inside (-1, 1)") {
    for (int n = 1; n <= 64; ++n) {
        const auto rule = gauss_legendre(n);
        double total = 0.0;
        for (std::size_t i = 0; i < rule.weights.size(); ++i) {
            total += rule.weights[i];
            REQUIRE(rule.nodes[i] > -1.0);
            REQUIRE(rule.nodes[i] < 1.0);
            REQUIRE(rule.weights[i] > 0.0);
        }
        REQUIRE(std::abs(total - 2.0) < 1e-13);
    }
}

TEST_CASE("rescaled rule integrates polynomials on [a, b]") {
    const auto rule = rescale(gauss_legendre(6), 0.25, 0.75);
    double integral_x3 = 0.0, total = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        REQUIRE(rule.nodes[i] > 0.25);
        REQUIRE(rule.nodes[i] < 0.75);
        integral_x3 += rule.weights[i] * std::pow(rule.nodes[i], 3);
        total += rule.weights[i];
    }
    REQUIRE(total == Catch::Approx(0.5).margin(1e-14));
    REQUIRE(integral_x3 == Catch::Approx((std::pow(0.75, 4) - std::pow(0.25, 4)) / 4.0).margin(1e-14));
}

TEST_CASE("order bounds are enforced") {
    REQUIRE_THROWS_AS(gauss_legendre(0), std::invalid_argument);
    REQUIRE_THROWS_AS(gauss_legendre(65), std::invalid_argument);
}

TEST_CASE("gauss-hermite integrates Gaussian moments") {
    // int x^2 e^{-x^2} dx = sqrt(pi)/2 and int e^{-x^2} = sqrt(pi).
    const auto rule = gauss_hermite(12);
    double m0 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        m0 += rule.weights[i];
        m2 += rule.weights[i] * rule.nodes[i] * rule.nodes[i];
    }
    const double sqrt_pi = std::sqrt(std::acos(-1.0));
    REQUIRE(m0 == Catch::Approx(sqrt_pi).margin(1e-12));
    REQUIRE(m2 == Catch::Approx(sqrt_pi / 2.0).margin(1e-12));
}
