#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "scasml/rng.hpp"
#include "scasml/space_time.hpp"

namespace scasml {

/// Value and derivatives of a scalar field at one (t, x) — everything the
/// PDE residual needs.
struct FieldDerivatives {
    double value = 0.0;
    double time_deriv = 0.0;
    std::vector<double> gradient;
    double laplacian = 0.0;
};

/// Full analytic derivative bundle of a reference solution, including the
/// per-coordinate second derivatives used by coordinate-sampled Laplacians.
struct ReferenceBundle {
    std::function<FieldDerivatives(double t, std::span<const double> x)> derivatives;
    std::function<double(double t, std::span<const double> x, int axis)> coord_second_deriv;
};

/// Nonlinearity F(v, z, t, x) with v the solution value and z = sigma^T grad u.
/// The trailing noise handle feeds stochastic residual estimators; every
/// closed-form benchmark ignores it.
using Nonlinearity = std::function<double(
    double v, std::span<const double> z, double t, std::span<const double> x, UniformSource noise)>;

using TerminalMap = std::function<double(std::span<const double> x)>;
using ReferenceMap = std::function<double(double t, std::span<const double> x)>;
using ReferenceGradient =
    std::function<std::vector<double>(double t, std::span<const double> x)>;

/// Terminal-value problem
///   du/dt + <mu, grad u> + (c^2/2) Lap u + F(u, c grad u, t, x) = 0,
///   u(T, .) = g,
/// with constant drift and scalar diffusion sigma = c I. Immutable after
/// construction; all maps must be pure, so instances are safe to share
/// across worker threads.
struct SemilinearPde {
    int d = 0;
    double horizon = 0.0;           // T
    std::vector<double> drift;      // mu, length d
    double diffusion = 1.0;         // c > 0
    Nonlinearity nonlinearity;      // F
    TerminalMap terminal;           // g
    Domain domain;
    ReferenceMap reference;             // null when no closed form is known
    ReferenceGradient reference_gradient;
    ReferenceBundle reference_bundle;   // populated for analytic benchmarks

    [[nodiscard]] bool has_reference() const { return static_cast<bool>(reference); }

    void validate() const {
        if (d < 1) throw std::invalid_argument("SemilinearPde: dimension must be positive");
        if (!(horizon > 0.0)) throw std::invalid_argument("SemilinearPde: horizon must be positive");
        if (!(diffusion > 0.0)) throw std::invalid_argument("SemilinearPde: diffusion must be positive");
        if (static_cast<int>(drift.size()) != d) {
            throw std::invalid_argument("SemilinearPde: drift length differs from dimension");
        }
        if (!nonlinearity || !terminal) {
            throw std::invalid_argument("SemilinearPde: nonlinearity and terminal map are required");
        }
    }
};

}  // namespace scasml
