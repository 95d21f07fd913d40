#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "scasml/pde.hpp"
#include "scasml/rng.hpp"
#include "scasml/surrogate.hpp"

namespace scasml {

/// The Structural-preserving Law of Defect: the error u - u-hat of a
/// surrogate solves a semi-linear PDE of the same form as the base problem,
/// with nonlinearity
///   F-breve(v, z, t, x) = F(u-hat + v, c grad u-hat + z, t, x)
///                         - F(u-hat, c grad u-hat, t, x) + eps(t, x)
/// and terminal g-breve(x) = g(x) - u-hat(T, x). By construction
/// F-breve(0, 0, t, x) reproduces the residual eps bit for bit.
struct DefectProblem {
    SemilinearPde base;
    SurrogatePtr surrogate;
    LaplacianMode lap_mode;
    SemilinearPde derived;
};

inline DefectProblem make_defect_problem(const SemilinearPde& pde, SurrogatePtr surrogate,
                                         LaplacianMode lap_mode = LaplacianMode::exact()) {
    pde.validate();
    if (!surrogate) throw std::invalid_argument("make_defect_problem: null surrogate");
    if (surrogate->dim() != pde.d) {
        throw std::invalid_argument("make_defect_problem: surrogate dimension mismatch");
    }
    if (lap_mode.kind == LaplacianMode::Kind::hutchinson &&
        (lap_mode.subset < 1 || lap_mode.subset > pde.d)) {
        throw std::invalid_argument("make_defect_problem: Hutchinson subset must be in [1, d]");
    }

    DefectProblem dp;
    dp.base = pde;
    dp.surrogate = surrogate;
    dp.lap_mode = lap_mode;

    SemilinearPde derived;
    derived.d = pde.d;
    derived.horizon = pde.horizon;
    derived.drift = pde.drift;
    derived.diffusion = pde.diffusion;
    derived.domain = pde.domain;

    const double c = pde.diffusion;
    const Nonlinearity base_f = pde.nonlinearity;
    derived.nonlinearity = [base = pde, base_f, surrogate, lap_mode, c](
                               double v, std::span<const double> z, double t,
                               std::span<const double> x, UniformSource noise) {
        const SurrogateDerivatives sd = surrogate->derivatives(t, x);
        std::vector<double> z_hat(sd.gradient.size());
        std::vector<double> z_shifted(sd.gradient.size());
        for (std::size_t i = 0; i < z_hat.size(); ++i) {
            z_hat[i] = c * sd.gradient[i];
            z_shifted[i] = z_hat[i] + z[i];
        }
        const double eps = residual_from_derivatives(base, *surrogate, sd, t, x, lap_mode, noise);
        return base_f(sd.value + v, z_shifted, t, x, noise) - base_f(sd.value, z_hat, t, x, noise) +
               eps;
    };

    const TerminalMap base_g = pde.terminal;
    const double horizon = pde.horizon;
    derived.terminal = [base_g, surrogate, horizon](std::span<const double> x) {
        return base_g(x) - surrogate->derivatives(horizon, x).value;
    };
    // The defect problem carries no reference solution.
    dp.derived = std::move(derived);
    return dp;
}

/// Empirical Lipschitz diagnostic: max over random pairs (w1, w2) at random
/// (t, x) of |F(w1) - F(w2)| / |w1 - w2|_1, components drawn uniform on
/// [-1, 1]. Purely informational.
inline double lipschitz_probe(const SemilinearPde& pde, std::size_t n_pairs, std::uint64_t seed) {
    if (n_pairs < 1) throw std::invalid_argument("lipschitz_probe: need at least one pair");
    const std::size_t d = static_cast<std::size_t>(pde.d);
    const RngStream root(seed);
    double worst = 0.0;
    std::vector<double> x(d), z1(d), z2(d);
    for (std::size_t k = 0; k < n_pairs; ++k) {
        RngStream stream = root.child({0, StreamLabel::Branch::sample, k});
        const double t = pde.horizon * stream.uniform01();
        for (auto& v : x) v = 2.0 * stream.uniform01() - 1.0;
        const double v1 = 2.0 * stream.uniform01() - 1.0;
        const double v2 = 2.0 * stream.uniform01() - 1.0;
        for (auto& v : z1) v = 2.0 * stream.uniform01() - 1.0;
        for (auto& v : z2) v = 2.0 * stream.uniform01() - 1.0;

        RngStream noise1 = stream.child({0, StreamLabel::Branch::noise_main, k});
        RngStream noise2 = stream.child({0, StreamLabel::Branch::noise_prev, k});
        const double f1 = pde.nonlinearity(v1, z1, t, x, UniformSource(noise1));
        const double f2 = pde.nonlinearity(v2, z2, t, x, UniformSource(noise2));

        double denom = std::abs(v1 - v2);
        for (std::size_t i = 0; i < d; ++i) denom += std::abs(z1[i] - z2[i]);
        if (denom > 0.0) worst = std::max(worst, std::abs(f1 - f2) / denom);
    }
    return worst;
}

inline double lipschitz_probe(const DefectProblem& dp, std::size_t n_pairs, std::uint64_t seed) {
    return lipschitz_probe(dp.derived, n_pairs, seed);
}

}  // namespace scasml
