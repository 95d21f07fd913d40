#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "scasml/pde.hpp"
#include "scasml/rng.hpp"
#include "scasml/space_time.hpp"

namespace scasml {

using SurrogateDerivatives = FieldDerivatives;

/// Approximate solution u-hat exposing the derivatives the residual needs.
/// Implementations must be pure, deterministic and defined on the whole
/// problem domain including t = T.
class Surrogate {
public:
    virtual ~Surrogate() = default;

    [[nodiscard]] virtual int dim() const = 0;

    [[nodiscard]] virtual SurrogateDerivatives derivatives(double t,
                                                           std::span<const double> x) const = 0;

    /// Pure second derivative along one coordinate axis, for
    /// coordinate-sampled Laplacian estimates.
    [[nodiscard]] virtual double coord_second_deriv(double t, std::span<const double> x,
                                                    int axis) const = 0;
};

using SurrogatePtr = std::shared_ptr<const Surrogate>;

/// The trivial surrogate u-hat = 0. Correcting it reduces the pipeline to a
/// naive MLP solve of the original PDE.
class ZeroSurrogate final : public Surrogate {
public:
    explicit ZeroSurrogate(int d) : d_(d) {
        if (d < 1) throw std::invalid_argument("ZeroSurrogate: dimension must be positive");
    }

    [[nodiscard]] int dim() const override { return d_; }

    [[nodiscard]] SurrogateDerivatives derivatives(double, std::span<const double>) const override {
        SurrogateDerivatives out;
        out.gradient.assign(static_cast<std::size_t>(d_), 0.0);
        return out;
    }

    [[nodiscard]] double coord_second_deriv(double, std::span<const double>, int) const override {
        return 0.0;
    }

private:
    int d_;
};

inline SurrogatePtr zero_surrogate(int d) { return std::make_shared<ZeroSurrogate>(d); }

/// Reference solution plus a controlled perturbation:
///   u-hat(t, x) = u_ref(t, x) + e * sin(sum(x) + t),
/// so the surrogate error is exactly |e|-bounded and all derivatives are
/// analytic. Requires a problem with a full reference bundle.
class SyntheticSurrogate final : public Surrogate {
public:
    SyntheticSurrogate(const SemilinearPde& pde, double amplitude)
        : d_(pde.d), amplitude_(amplitude), bundle_(pde.reference_bundle) {
        if (!bundle_.derivatives || !bundle_.coord_second_deriv) {
            throw std::invalid_argument(
                "SyntheticSurrogate: problem has no analytic reference derivatives");
        }
    }

    [[nodiscard]] int dim() const override { return d_; }

    [[nodiscard]] SurrogateDerivatives derivatives(double t, std::span<const double> x) const override {
        SurrogateDerivatives out = bundle_.derivatives(t, x);
        const double phase = sum(x) + t;
        const double s = std::sin(phase);
        const double c = std::cos(phase);
        out.value += amplitude_ * s;
        out.time_deriv += amplitude_ * c;
        for (double& g : out.gradient) g += amplitude_ * c;
        out.laplacian += amplitude_ * (-static_cast<double>(d_) * s);
        return out;
    }

    [[nodiscard]] double coord_second_deriv(double t, std::span<const double> x,
                                            int axis) const override {
        return bundle_.coord_second_deriv(t, x, axis) + amplitude_ * (-std::sin(sum(x) + t));
    }

private:
    int d_;
    double amplitude_;
    ReferenceBundle bundle_;
};

inline SurrogatePtr synthetic_surrogate(const SemilinearPde& pde, double amplitude) {
    return std::make_shared<SyntheticSurrogate>(pde, amplitude);
}

/// Laplacian handling inside the residual: exact, or Hutchinson-style
/// coordinate subsampling with K distinct axes per evaluation.
struct LaplacianMode {
    enum class Kind { exact, hutchinson };
    Kind kind = Kind::exact;
    int subset = 0;  // K, only for hutchinson

    static LaplacianMode exact() { return {}; }
    static LaplacianMode hutchinson(int k) {
        LaplacianMode m;
        m.kind = Kind::hutchinson;
        m.subset = k;
        return m;
    }
};

/// Coordinate-sampled Laplacian estimate (d/K) sum_k d2f/dx_{j_k}^2 with K
/// distinct indices drawn uniformly without replacement from the source.
inline double hutchinson_laplacian(const Surrogate& surrogate, double t,
                                   std::span<const double> x, int k, UniformSource noise) {
    const int d = surrogate.dim();
    if (k < 1 || k > d) {
        throw std::invalid_argument("hutchinson_laplacian: subset size must be in [1, d]");
    }
    // Partial Fisher-Yates over the index pool gives K distinct draws.
    std::vector<int> pool(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) pool[static_cast<std::size_t>(i)] = i;
    double acc = 0.0;
    for (int step = 0; step < k; ++step) {
        const int remaining = d - step;
        int pick = step + static_cast<int>(noise() * remaining);
        if (pick >= d) pick = d - 1;  // cannot happen with open-interval draws; belt and braces
        std::swap(pool[static_cast<std::size_t>(step)], pool[static_cast<std::size_t>(pick)]);
        acc += surrogate.coord_second_deriv(t, x, pool[static_cast<std::size_t>(step)]);
    }
    return (static_cast<double>(d) / static_cast<double>(k)) * acc;
}

/// Residual of the surrogate against the PDE dynamics at (t, x), reusing an
/// already-computed derivative bundle. This is the exact floating-point
/// expression that the defect nonlinearity evaluates at the origin.
inline double residual_from_derivatives(const SemilinearPde& pde, const Surrogate& surrogate,
                                        const SurrogateDerivatives& sd, double t,
                                        std::span<const double> x, LaplacianMode mode,
                                        UniformSource noise) {
    double lap = sd.laplacian;
    if (mode.kind == LaplacianMode::Kind::hutchinson) {
        lap = hutchinson_laplacian(surrogate, t, x, mode.subset, noise);
    }
    std::vector<double> z(sd.gradient.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = pde.diffusion * sd.gradient[i];
    return sd.time_deriv + dot(pde.drift, sd.gradient) +
           (pde.diffusion * pde.diffusion / 2.0) * lap +
           pde.nonlinearity(sd.value, z, t, x, noise);
}

/// Residual eps(t, x) = du-hat/dt + <mu, grad u-hat> + (c^2/2) Lap-hat
///                      + F(u-hat, c grad u-hat, t, x).
inline double surrogate_residual(const SemilinearPde& pde, const Surrogate& surrogate, double t,
                                 std::span<const double> x, LaplacianMode mode,
                                 UniformSource noise) {
    const SurrogateDerivatives sd = surrogate.derivatives(t, x);
    return residual_from_derivatives(pde, surrogate, sd, t, x, mode, noise);
}

/// Convenience form with self-contained randomness for the Hutchinson draw.
inline double surrogate_residual(const SemilinearPde& pde, const Surrogate& surrogate,
                                 const SpaceTimePoint& p, LaplacianMode mode = LaplacianMode::exact(),
                                 std::uint64_t seed = 0) {
    RngStream stream(seed);
    return surrogate_residual(pde, surrogate, p.t, p.x, mode, UniformSource(stream));
}

}  // namespace scasml
