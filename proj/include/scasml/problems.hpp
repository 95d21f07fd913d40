#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "scasml/pde.hpp"
#include "scasml/rng.hpp"
#include "scasml/space_time.hpp"

namespace scasml {

inline double sigmoid(double a) {
    if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
    const double e = std::exp(a);
    return e / (1.0 + e);
}

/// Linear convection-diffusion:
///   du/dt + <-(1/d) 1, grad u> + Lap u = 0,  u(T, y) = sum(y) + T,
/// with exact solution u(r, y) = sum(y) + r. Diffusion c = sqrt(2) so that
/// (c^2/2) Lap = Lap.
inline SemilinearPde make_lcd(int d) {
    if (d < 1) throw std::invalid_argument("make_lcd: dimension must be positive");
    SemilinearPde pde;
    pde.d = d;
    pde.horizon = 0.5;
    pde.drift.assign(static_cast<std::size_t>(d), -1.0 / d);
    pde.diffusion = std::sqrt(2.0);
    pde.domain = Domain::cube(d, 0.0, 0.5);
    pde.nonlinearity = [](double, std::span<const double>, double, std::span<const double>,
                          UniformSource) { return 0.0; };
    auto ref = [](double t, std::span<const double> x) { return sum(x) + t; };
    pde.reference = ref;
    const double horizon = pde.horizon;
    pde.terminal = [ref, horizon](std::span<const double> x) { return ref(horizon, x); };
    pde.reference_gradient = [d](double, std::span<const double>) {
        return std::vector<double>(static_cast<std::size_t>(d), 1.0);
    };
    pde.reference_bundle.derivatives = [d, ref](double t, std::span<const double> x) {
        FieldDerivatives out;
        out.value = ref(t, x);
        out.time_deriv = 1.0;
        out.gradient.assign(static_cast<std::size_t>(d), 1.0);
        out.laplacian = 0.0;
        return out;
    };
    pde.reference_bundle.coord_second_deriv = [](double, std::span<const double>, int) {
        return 0.0;
    };
    return pde;
}

/// Viscous Burgers:
///   du/dt + <-(1/d + s0^2/2) 1, grad u> + (s0^2/2) Lap u
///     + s0 u sum_i (s0 grad u)_i = 0,
/// terminal g(y) = sigmoid(T + sum(y)), exact solution sigmoid(r + sum(y)).
inline SemilinearPde make_viscous_burgers(int d, double sigma0 = std::sqrt(2.0)) {
    if (d < 1) throw std::invalid_argument("make_viscous_burgers: dimension must be positive");
    if (!(sigma0 > 0.0)) throw std::invalid_argument("make_viscous_burgers: sigma0 must be positive");
    SemilinearPde pde;
    pde.d = d;
    pde.horizon = 0.5;
    pde.drift.assign(static_cast<std::size_t>(d), -(1.0 / d + sigma0 * sigma0 / 2.0));
    pde.diffusion = sigma0;
    pde.domain = Domain::cube(d, -0.5, 0.5);
    pde.nonlinearity = [sigma0](double v, std::span<const double> z, double,
                                std::span<const double>, UniformSource) {
        return sigma0 * v * sum(z);
    };
    auto ref = [](double t, std::span<const double> x) { return sigmoid(t + sum(x)); };
    pde.reference = ref;
    const double horizon = pde.horizon;
    pde.terminal = [ref, horizon](std::span<const double> x) { return ref(horizon, x); };
    pde.reference_gradient = [d, ref](double t, std::span<const double> x) {
        const double u = ref(t, x);
        return std::vector<double>(static_cast<std::size_t>(d), u * (1.0 - u));
    };
    pde.reference_bundle.derivatives = [d, ref](double t, std::span<const double> x) {
        FieldDerivatives out;
        const double u = ref(t, x);
        const double du = u * (1.0 - u);
        out.value = u;
        out.time_deriv = du;
        out.gradient.assign(static_cast<std::size_t>(d), du);
        out.laplacian = d * du * (1.0 - 2.0 * u);
        return out;
    };
    pde.reference_bundle.coord_second_deriv = [ref](double t, std::span<const double> x, int) {
        const double u = ref(t, x);
        return u * (1.0 - u) * (1.0 - 2.0 * u);
    };
    return pde;
}

/// LQG Hamilton-Jacobi-Bellman:
///   du/dt + Lap u - |grad u|^2 = 0,
///   g(y) = log((1 + sum_{i<d} [c1_i (y_i - y_{i+1})^2 + c2_i y_{i+1}^2]) / 2),
/// with c = sqrt(2), so z = sqrt(2) grad u and -|grad u|^2 = -|z|^2 / 2.
/// Coefficients are drawn from U[0.5, 1.5] with a reproducible seed; there is
/// no closed-form solution (see lqg_reference).
inline SemilinearPde make_lqg_hjb(int d, std::uint64_t coeff_seed) {
    if (d < 2) throw std::invalid_argument("make_lqg_hjb: dimension must be at least 2");
    SemilinearPde pde;
    pde.d = d;
    pde.horizon = 0.5;
    pde.drift.assign(static_cast<std::size_t>(d), 0.0);
    pde.diffusion = std::sqrt(2.0);
    pde.domain = Domain::unit_ball(d);
    pde.nonlinearity = [](double, std::span<const double> z, double, std::span<const double>,
                          UniformSource) { return -squared_norm(z) / 2.0; };

    auto coeffs = std::make_shared<std::vector<double>>();
    coeffs->reserve(2 * static_cast<std::size_t>(d - 1));
    RngStream stream(coeff_seed);
    for (int i = 0; i < d - 1; ++i) {
        coeffs->push_back(0.5 + stream.uniform01());  // c1_i
        coeffs->push_back(0.5 + stream.uniform01());  // c2_i
    }
    pde.terminal = [coeffs, d](std::span<const double> y) {
        double q = 0.0;
        for (int i = 0; i + 1 < d; ++i) {
            const double c1 = (*coeffs)[2 * static_cast<std::size_t>(i)];
            const double c2 = (*coeffs)[2 * static_cast<std::size_t>(i) + 1];
            const double diff = y[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(i) + 1];
            q += c1 * diff * diff + c2 * y[static_cast<std::size_t>(i) + 1] * y[static_cast<std::size_t>(i) + 1];
        }
        return std::log((1.0 + q) / 2.0);
    };
    return pde;
}

/// Monte-Carlo reference for the LQG problem:
///   u(r, y) = -log E exp(-g(y + sqrt(2) W_{T-r}))
/// evaluated with n_samples Gaussian draws in a shifted log-mean-exp form.
inline double lqg_reference(const SemilinearPde& pde, const SpaceTimePoint& p,
                            std::int64_t n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("lqg_reference: need at least one sample");
    const double tau = pde.horizon - p.t;
    if (tau == 0.0) return pde.terminal(p.x);

    RngStream stream = RngStream(seed).child(
        {0, StreamLabel::Branch::reference, 0});
    const double scale = std::sqrt(2.0 * tau);
    const std::size_t d = p.x.size();
    std::vector<double> y(d);
    std::vector<double> exponents(static_cast<std::size_t>(n_samples));
    double max_exponent = -std::numeric_limits<double>::infinity();
    for (std::int64_t k = 0; k < n_samples; ++k) {
        for (std::size_t i = 0; i < d; ++i) y[i] = p.x[i] + scale * stream.normal();
        const double g = pde.terminal(y);
        if (!std::isfinite(g)) throw std::runtime_error("lqg_reference: non-finite terminal value");
        exponents[static_cast<std::size_t>(k)] = -g;
        max_exponent = std::max(max_exponent, -g);
    }
    double acc = 0.0;
    for (double e : exponents) acc += std::exp(e - max_exponent);
    return -(max_exponent + std::log(acc / static_cast<double>(n_samples)));
}

/// Diffusion-reaction with oscillatory exact solution
///   u*(t, x) = 1.6 + sin(0.1 sum(x)) exp(0.01 d (t - 1) / 2):
///   du/dt + (1/2) Lap u + min{1, (u - u*)^2} = 0,  g = u*(T, .).
inline SemilinearPde make_diffusion_reaction(int d) {
    if (d < 1) throw std::invalid_argument("make_diffusion_reaction: dimension must be positive");
    SemilinearPde pde;
    pde.d = d;
    pde.horizon = 1.0;
    pde.drift.assign(static_cast<std::size_t>(d), 0.0);
    pde.diffusion = 1.0;
    pde.domain = Domain::unit_ball(d);
    auto ref = [d](double t, std::span<const double> x) {
        return 1.6 + std::sin(0.1 * sum(x)) * std::exp(0.01 * d * (t - 1.0) / 2.0);
    };
    pde.reference = ref;
    pde.nonlinearity = [ref](double v, std::span<const double>, double t,
                             std::span<const double> x, UniformSource) {
        const double dev = v - ref(t, x);
        return std::min(1.0, dev * dev);
    };
    const double horizon = pde.horizon;
    pde.terminal = [ref, horizon](std::span<const double> x) { return ref(horizon, x); };
    pde.reference_gradient = [d](double t, std::span<const double> x) {
        const double slope = 0.1 * std::cos(0.1 * sum(x)) * std::exp(0.01 * d * (t - 1.0) / 2.0);
        return std::vector<double>(static_cast<std::size_t>(d), slope);
    };
    pde.reference_bundle.derivatives = [d](double t, std::span<const double> x) {
        FieldDerivatives out;
        const double envelope = std::exp(0.01 * d * (t - 1.0) / 2.0);
        const double s = std::sin(0.1 * sum(x));
        const double c = std::cos(0.1 * sum(x));
        out.value = 1.6 + s * envelope;
        out.time_deriv = 0.005 * d * s * envelope;
        out.gradient.assign(static_cast<std::size_t>(d), 0.1 * c * envelope);
        out.laplacian = -0.01 * d * s * envelope;
        return out;
    };
    pde.reference_bundle.coord_second_deriv = [d](double t, std::span<const double> x, int) {
        return -0.01 * std::sin(0.1 * sum(x)) * std::exp(0.01 * d * (t - 1.0) / 2.0);
    };
    return pde;
}

/// Uniform test points over [0, T] x domain. Hyper-rectangles use independent
/// per-axis uniforms; balls use a normalized Gaussian direction scaled by
/// U^(1/d), which is exactly uniform in any dimension.
inline std::vector<SpaceTimePoint> sample_test_points(const SemilinearPde& pde, std::size_t count,
                                                      std::uint64_t seed) {
    std::vector<SpaceTimePoint> points;
    points.reserve(count);
    const RngStream root(seed);
    const std::size_t d = static_cast<std::size_t>(pde.d);
    for (std::size_t k = 0; k < count; ++k) {
        RngStream stream = root.child({0, StreamLabel::Branch::sample, k});
        SpaceTimePoint p;
        p.t = pde.horizon * stream.uniform01();
        p.x.resize(d);
        if (pde.domain.is_ball()) {
            double norm2 = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                p.x[i] = stream.normal();
                norm2 += p.x[i] * p.x[i];
            }
            const double radius = std::pow(stream.uniform01(), 1.0 / static_cast<double>(d));
            const double factor = radius / std::sqrt(norm2);
            for (double& v : p.x) v *= factor;
        } else {
            const auto& rect = pde.domain.rect();
            for (std::size_t i = 0; i < d; ++i) {
                p.x[i] = rect.lower[i] + (rect.upper[i] - rect.lower[i]) * stream.uniform01();
            }
        }
        points.push_back(std::move(p));
    }
    return points;
}

}  // namespace scasml
