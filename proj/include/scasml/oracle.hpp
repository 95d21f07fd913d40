#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "scasml/mlp.hpp"
#include "scasml/pde.hpp"
#include "scasml/quadrature.hpp"
#include "scasml/rng.hpp"

namespace scasml {

/// Deterministic Picard fixed-point solution of a d=1 problem on a grid.
/// Test-support reference for the Monte-Carlo engine.
struct GridSolution {
    std::vector<double> times;   // uniform on [0, T]
    std::vector<double> xs;      // uniform on the padded spatial interval
    std::vector<double> values;  // times.size() x xs.size(), row-major
    int iterations = 0;
    double final_change = 0.0;

    [[nodiscard]] double value_at(double t, double x) const;
    [[nodiscard]] double space_deriv_at(double t, double x) const;
};

namespace detail {

/// Cubic Lagrange interpolation on a uniform grid (4-point stencil, clamped
/// at the edges).
inline double cubic_interp(const std::vector<double>& grid, double lo, double h,
                           const double* row, double q) {
    const auto n = grid.size();
    double pos = (q - lo) / h;
    pos = std::clamp(pos, 0.0, static_cast<double>(n - 1));
    auto i0 = static_cast<std::ptrdiff_t>(std::floor(pos)) - 1;
    i0 = std::clamp<std::ptrdiff_t>(i0, 0, static_cast<std::ptrdiff_t>(n) - 4);
    const double u = pos - static_cast<double>(i0);
    // Lagrange basis at offsets 0..3.
    const double b0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    const double b1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    const double b2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    const double b3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    return b0 * row[i0] + b1 * row[i0 + 1] + b2 * row[i0 + 2] + b3 * row[i0 + 3];
}

/// Interpolate a time-space table at (t, x): cubic in space per time row,
/// then cubic across the four bracketing rows.
inline double interp_table(const std::vector<double>& times, const std::vector<double>& xs,
                           const std::vector<double>& table, double t, double x) {
    const auto nt = times.size();
    const auto nx = xs.size();
    const double ht = times[1] - times[0];
    const double hx = xs[1] - xs[0];
    double pos = (t - times[0]) / ht;
    pos = std::clamp(pos, 0.0, static_cast<double>(nt - 1));
    auto j0 = static_cast<std::ptrdiff_t>(std::floor(pos)) - 1;
    j0 = std::clamp<std::ptrdiff_t>(j0, 0, static_cast<std::ptrdiff_t>(nt) - 4);
    const double u = pos - static_cast<double>(j0);
    const double b0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    const double b1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    const double b2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    const double b3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    double acc = 0.0;
    const double basis[4] = {b0, b1, b2, b3};
    for (int k = 0; k < 4; ++k) {
        acc += basis[k] *
               cubic_interp(xs, xs[0], hx, table.data() + (j0 + k) * static_cast<std::ptrdiff_t>(nx), x);
    }
    return acc;
}

}  // namespace detail

inline double GridSolution::value_at(double t, double x) const {
    return detail::interp_table(times, xs, values, t, x);
}

inline double GridSolution::space_deriv_at(double t, double x) const {
    // Centered differences on the value grid, one-sided at the edges.
    const auto nt = times.size();
    const auto nx = xs.size();
    const double hx = xs[1] - xs[0];
    std::vector<double> deriv(nt * nx);
    for (std::size_t j = 0; j < nt; ++j) {
        const double* row = values.data() + j * nx;
        double* out = deriv.data() + j * nx;
        out[0] = (row[1] - row[0]) / hx;
        for (std::size_t i = 1; i + 1 < nx; ++i) out[i] = (row[i + 1] - row[i - 1]) / (2.0 * hx);
        out[nx - 1] = (row[nx - 1] - row[nx - 2]) / hx;
    }
    return detail::interp_table(times, xs, deriv, t, x);
}

/// Picard iteration u_{k+1} = Phi(u_k) for a one-dimensional problem:
///   Phi(u)(s, x) = E[g(X_T)] + int_s^T E[F(u(t, X_t), c du/dx(t, X_t), t, X_t)] dt
/// with Gaussian expectations by Gauss-Hermite quadrature processes and the
/// time integral by Gauss-Legendre on [s, T]. The spatial grid is padded by
/// 4 c sqrt(T) so transition mass stays on-grid.
inline GridSolution picard_oracle(const SemilinearPde& pde, int n_t, int n_x, int n_hermite,
                                  int n_legendre, int max_iters, double tol) {
    pde.validate();
    if (pde.d != 1) throw std::invalid_argument("picard_oracle: only d = 1 is supported");
    if (n_t < 4 || n_x < 4) throw std::invalid_argument("picard_oracle: grid too small");
    if (max_iters < 1) throw std::invalid_argument("picard_oracle: need at least one iteration");

    const double horizon = pde.horizon;
    const double c = pde.diffusion;
    const double mu = pde.drift[0];
    double lo = 0.0, hi = 0.0;
    if (pde.domain.is_ball()) {
        lo = -1.0;
        hi = 1.0;
    } else {
        lo = pde.domain.rect().lower[0];
        hi = pde.domain.rect().upper[0];
    }
    // Drift shifts the transition mean; pad for it along with 4 sigma of noise.
    const double pad = 4.0 * c * std::sqrt(horizon) + std::abs(mu) * horizon;
    lo -= pad;
    hi += pad;

    GridSolution grid;
    grid.times.resize(static_cast<std::size_t>(n_t));
    grid.xs.resize(static_cast<std::size_t>(n_x));
    for (int j = 0; j < n_t; ++j) grid.times[static_cast<std::size_t>(j)] = horizon * j / (n_t - 1);
    for (int i = 0; i < n_x; ++i) {
        grid.xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n_x - 1);
    }
    const auto nt = static_cast<std::size_t>(n_t);
    const auto nx = static_cast<std::size_t>(n_x);

    const QuadratureRule hermite = gauss_hermite(n_hermite);
    const QuadratureRule legendre_unit = gauss_legendre(n_legendre);
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);

    std::vector<double> terminal_row(nx);
    for (std::size_t i = 0; i < nx; ++i) {
        const double xv = grid.xs[i];
        terminal_row[i] = pde.terminal(std::span<const double>(&xv, 1));
    }

    // E[g(X_T)] per grid node is iteration-independent; precompute it.
    std::vector<double> terminal_expectation(nt * nx);
    for (std::size_t j = 0; j < nt; ++j) {
        const double s = grid.times[j];
        const double tau = horizon - s;
        for (std::size_t i = 0; i < nx; ++i) {
            const double x = grid.xs[i];
            if (tau == 0.0) {
                terminal_expectation[j * nx + i] = terminal_row[i];
                continue;
            }
            const double mean = x + mu * tau;
            const double sigma = c * std::sqrt(tau);
            double acc = 0.0;
            for (std::size_t h = 0; h < hermite.nodes.size(); ++h) {
                const double y = mean + sigma * std::numbers::sqrt2 * hermite.nodes[h];
                acc += hermite.weights[h] * pde.terminal(std::span<const double>(&y, 1));
            }
            terminal_expectation[j * nx + i] = acc * inv_sqrt_pi;
        }
    }

    std::vector<double> current(nt * nx, 0.0);
    for (std::size_t i = 0; i < nx; ++i) current[(nt - 1) * nx + i] = terminal_row[i];

    std::vector<double> next(nt * nx, 0.0);
    std::vector<double> deriv(nt * nx, 0.0);
    RngStream dummy(0);  // closed-form nonlinearities ignore the noise handle

    double previous_change = std::numeric_limits<double>::infinity();
    int growth_streak = 0;
    grid.final_change = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < max_iters; ++iter) {
        // Spatial derivative of the current iterate, row by row.
        const double hx = grid.xs[1] - grid.xs[0];
        for (std::size_t j = 0; j < nt; ++j) {
            const double* row = current.data() + j * nx;
            double* out = deriv.data() + j * nx;
            out[0] = (row[1] - row[0]) / hx;
            for (std::size_t i = 1; i + 1 < nx; ++i) {
                out[i] = (row[i + 1] - row[i - 1]) / (2.0 * hx);
            }
            out[nx - 1] = (row[nx - 1] - row[nx - 2]) / hx;
        }

        double change = 0.0;
        for (std::size_t j = 0; j < nt; ++j) {
            const double s = grid.times[j];
            const double tau = horizon - s;
            for (std::size_t i = 0; i < nx; ++i) {
                double v = terminal_expectation[j * nx + i];
                if (tau > 0.0) {
                    const QuadratureRule leg = rescale(legendre_unit, s, horizon);
                    const double x = grid.xs[i];
                    for (std::size_t q = 0; q < leg.nodes.size(); ++q) {
                        const double t = leg.nodes[q];
                        const double mean = x + mu * (t - s);
                        const double sigma = c * std::sqrt(t - s);
                        double expectation = 0.0;
                        for (std::size_t h = 0; h < hermite.nodes.size(); ++h) {
                            const double y =
                                mean + sigma * std::numbers::sqrt2 * hermite.nodes[h];
                            const double uval = detail::interp_table(grid.times, grid.xs, current, t, y);
                            const double ux =
                                detail::interp_table(grid.times, grid.xs, deriv, t, y);
                            const double z = c * ux;
                            expectation += hermite.weights[h] *
                                           pde.nonlinearity(uval, std::span<const double>(&z, 1),
                                                            t, std::span<const double>(&y, 1),
                                                            UniformSource(dummy));
                        }
                        v += leg.weights[q] * expectation * inv_sqrt_pi;
                    }
                } else {
                    v = terminal_row[i];
                }
                next[j * nx + i] = v;
                change = std::max(change, std::abs(v - current[j * nx + i]));
            }
        }
        std::swap(current, next);
        grid.iterations = iter + 1;
        grid.final_change = change;
        if (change < tol) break;
        if (change > previous_change) {
            if (++growth_streak >= 3) {
                throw std::runtime_error("picard_oracle: iteration diverging");
            }
        } else {
            growth_streak = 0;
        }
        previous_change = change;
    }
    grid.values = std::move(current);
    return grid;
}

/// Sample mean and standard error of the MLP value component over n_reps
/// independent replicates.
struct Confidence {
    double mean = 0.0;
    double stderr_mean = 0.0;
};

inline Confidence mc_confidence(const SemilinearPde& pde, const MlpConfig& cfg,
                                const SpaceTimePoint& p, int n_reps, std::uint64_t seed) {
    if (n_reps < 2) throw std::invalid_argument("mc_confidence: need at least two replicates");
    std::vector<double> values(static_cast<std::size_t>(n_reps));
    for (int k = 0; k < n_reps; ++k) {
        const RngStream stream = RngStream(seed).child(
            {0, StreamLabel::Branch::replicate, static_cast<std::uint64_t>(k)});
        values[static_cast<std::size_t>(k)] =
            mlp_estimate(pde, cfg, p.t, p.x, stream).components[0];
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n_reps);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n_reps - 1);
    return {mean, std::sqrt(var / static_cast<double>(n_reps))};
}

}  // namespace scasml
