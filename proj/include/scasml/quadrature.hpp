#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace scasml {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Roots of P_n found by Newton iteration on the three-term recurrence,
/// starting from the Chebyshev-based guesses cos(pi (i - 1/4) / (n + 1/2)),
/// to absolute tolerance 1e-14. Weights are 2 / ((1 - x^2) P_n'(x)^2).
inline QuadratureRule gauss_legendre(int n) {
    if (n < 1 || n > 64) {
        throw std::invalid_argument("gauss_legendre: order must be in [1, 64]");
    }
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));

    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        bool converged = false;
        for (int step = 0; step < 100; ++step) {
            // Evaluate P_n(z) and P_{n-1}(z) by the recurrence.
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = -p1 / pp;
            z += dz;
            if (std::abs(dz) <= 1e-14) {
                converged = true;
                break;
            }
        }
        if (!converged) throw std::runtime_error("gauss_legendre: Newton iteration stalled");
        // Recurrence at the converged node for an accurate derivative.
        double p1 = 1.0, p2 = 0.0;
        for (int j = 0; j < n; ++j) {
            const double p3 = p2;
            p2 = p1;
            p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
        }
        pp = n * (z * p1 - p2) / (z * z - 1.0);

        const double w = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.nodes[static_cast<std::size_t>(i)] = -z;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = z;
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return rule;
}

/// Affine map of a [-1, 1] rule onto [a, b]; weights scale by (b - a) / 2.
inline QuadratureRule rescale(const QuadratureRule& rule, double a, double b) {
    QuadratureRule out = rule;
    const double mid = 0.5 * (a + b);
    const double halfwidth = 0.5 * (b - a);
    for (std::size_t i = 0; i < out.nodes.size(); ++i) {
        out.nodes[i] = mid + halfwidth * rule.nodes[i];
        out.weights[i] = rule.weights[i] * halfwidth;
    }
    return out;
}

/// Gauss-Hermite nodes and weights for weight function exp(-x^2) on R
/// (physicists' convention). Newton on the recurrence, as for Legendre.
inline QuadratureRule gauss_hermite(int n) {
    if (n < 1 || n > 128) {
        throw std::invalid_argument("gauss_hermite: order must be in [1, 128]");
    }
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));

    const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
    const int half = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < half; ++i) {
        // Standard initial guesses for the largest roots, then step inward.
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * rule.nodes[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * rule.nodes[1];
        } else {
            z = 2.0 * z - rule.nodes[static_cast<std::size_t>(i - 2)];
        }
        double pp = 0.0;
        bool converged = false;
        for (int step = 0; step < 200; ++step) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dz = -p1 / pp;
            z += dz;
            if (std::abs(dz) <= 1e-14) {
                converged = true;
                break;
            }
        }
        if (!converged) throw std::runtime_error("gauss_hermite: Newton iteration stalled");
        rule.nodes[static_cast<std::size_t>(i)] = z;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = -z;
        rule.weights[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = rule.weights[static_cast<std::size_t>(i)];
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return rule;
}

}  // namespace scasml
