#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "scasml/pde.hpp"
#include "scasml/quadrature.hpp"
#include "scasml/rng.hpp"
#include "scasml/space_time.hpp"

namespace scasml {

/// Time integrals estimated by importance-sampled Monte Carlo with density
/// rho(r) = (1 - alpha) r^(-alpha) on (0, 1), rescaled onto (s, T).
struct FullHistory {
    double alpha = 0.5;
};

/// Time integrals estimated by a fixed Gauss-Legendre rule on [s, T].
struct Quadrature {
    int order = 8;
};

using MlpVariant = std::variant<FullHistory, Quadrature>;

struct MlpConfig {
    int levels = 2;                // n: total Picard depth
    std::int64_t base = 10;        // M: level l uses M^(n-l) samples
    MlpVariant variant = FullHistory{};
    std::optional<double> clip;    // componentwise clamp, applied at every return
    std::uint64_t seed = 0;

    void validate() const {
        if (levels < 0 || levels > 10) {
            throw std::invalid_argument("MlpConfig: levels must be in [0, 10]");
        }
        if (base < 1) throw std::invalid_argument("MlpConfig: base must be at least 1");
        if (clip && !(*clip > 0.0)) throw std::invalid_argument("MlpConfig: clip must be positive");
        if (const auto* fh = std::get_if<FullHistory>(&variant)) {
            if (!(fh->alpha > 0.0) || !(fh->alpha < 1.0)) {
                throw std::invalid_argument("MlpConfig: alpha must lie in (0, 1)");
            }
        } else {
            const int order = std::get<Quadrature>(variant).order;
            if (order < 1 || order > 64) {
                throw std::invalid_argument("MlpConfig: quadrature order must be in [1, 64]");
            }
        }
    }
};

/// (d+1)-component estimate: index 0 is the value, 1..d the sigma^T grad part.
struct Estimate {
    std::vector<double> components;

    static Estimate zeros(int d) {
        Estimate e;
        e.components.assign(static_cast<std::size_t>(d) + 1, 0.0);
        return e;
    }
};

/// Componentwise clamp into [-threshold, threshold].
inline Estimate clip(Estimate est, double threshold) {
    for (double& c : est.components) {
        if (c > threshold) c = threshold;
        if (c < -threshold) c = -threshold;
    }
    return est;
}

/// Importance sample of a time point on (s, T): r = u^(1/(1-alpha)) has
/// density (1-alpha) r^(-alpha) on (0,1); the returned weight is the
/// reciprocal rescaled density, (T-s) r^alpha / (1-alpha).
struct TimeSample {
    double time;
    double weight;
};

inline TimeSample sample_time(double s, double horizon, double alpha, double u) {
    if (!(s < horizon)) throw std::invalid_argument("sample_time: need s < T");
    if (!(u > 0.0) || !(u < 1.0)) throw std::invalid_argument("sample_time: u must lie in (0, 1)");
    const double r = std::pow(u, 1.0 / (1.0 - alpha));
    return {s + (horizon - s) * r, (horizon - s) * std::pow(r, alpha) / (1.0 - alpha)};
}

/// Exact constant-coefficient path over (s, t).
struct PathSample {
    std::vector<double> X;   // endpoint
    std::vector<double> dW;  // Brownian increment
    double dt = 0.0;         // t - s
};

struct WeightedPath {
    PathSample path;
    std::vector<double> weight;  // (1, dW / dt), length d+1
};

/// Assemble endpoint X = x + mu dt + c dW and the Feynman-Kac weight vector
/// (1, dW/dt) from a given increment. The weight is the constant-coefficient
/// reduction of (1, sigma^T/(t-s) int [sigma^{-1} D]^T dW).
inline WeightedPath path_from_increment(std::span<const double> x, double s, double t,
                                        std::span<const double> mu, double c,
                                        std::vector<double> dW) {
    const double dt = t - s;
    if (!(dt > 0.0)) throw std::invalid_argument("path_from_increment: need s < t");
    const std::size_t d = x.size();
    WeightedPath out;
    out.path.dt = dt;
    out.path.X.resize(d);
    out.weight.resize(d + 1);
    out.weight[0] = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
        out.path.X[i] = x[i] + mu[i] * dt + c * dW[i];
        out.weight[i + 1] = dW[i] / dt;
    }
    out.path.dW = std::move(dW);
    return out;
}

template <RandomStream S>
WeightedPath sample_path(std::span<const double> x, double s, double t, std::span<const double> mu,
                         double c, S& stream) {
    const double dt = t - s;
    if (!(dt > 0.0)) throw std::invalid_argument("sample_path: need s < t");
    std::vector<double> dW(x.size());
    const double root_dt = std::sqrt(dt);
    for (double& w : dW) w = root_dt * stream.normal();
    return path_from_increment(x, s, t, mu, c, std::move(dW));
}

/// Raised when an estimate turns non-finite before clipping; carries the
/// derivation path of the offending recursion.
class NonFiniteError : public std::runtime_error {
public:
    explicit NonFiniteError(std::string path)
        : std::runtime_error("mlp_estimate: non-finite intermediate at " + path),
          path_(std::move(path)) {}

    [[nodiscard]] const std::string& recursion_path() const { return path_; }

private:
    std::string path_;
};

namespace detail {

struct RecursionFrame {
    const RecursionFrame* parent = nullptr;
    int level = 0;
    std::uint64_t index = 0;
    char tag = 'r';  // 'r' root, 'm' main, 'p' prev
};

inline std::string format_path(const RecursionFrame* frame) {
    std::string out;
    while (frame != nullptr) {
        std::string piece;
        if (frame->tag == 'r') {
            piece = "root";
        } else {
            piece = (frame->tag == 'm' ? "main(" : "prev(");
            piece += "l=" + std::to_string(frame->level) + ",i=" + std::to_string(frame->index) + ")";
        }
        out = out.empty() ? piece : piece + "/" + out;
        frame = frame->parent;
    }
    return out;
}

inline std::uint64_t pow_u64(std::int64_t base, int exponent) {
    std::uint64_t result = 1;
    for (int k = 0; k < exponent; ++k) {
        const auto b = static_cast<std::uint64_t>(base);
        if (result > UINT64_MAX / b) throw std::overflow_error("mlp_estimate: M^n overflows");
        result *= b;
    }
    return result;
}

template <RandomStream S>
Estimate mlp_recurse(const SemilinearPde& pde, const MlpConfig& cfg, int levels, double s,
                     std::span<const double> x, const S& stream, const QuadratureRule* unit_rule,
                     const RecursionFrame* frame) {
    const int d = pde.d;
    if (levels == 0) return Estimate::zeros(d);

    using Branch = StreamLabel::Branch;
    Estimate acc = Estimate::zeros(d);
    const double gx = pde.terminal(x);
    acc.components[0] = gx;

    // Terminal block: (g(x), 0) + mean over M^n paths of (g(X_T) - g(x)) * I.
    const std::uint64_t m_terminal = pow_u64(cfg.base, levels);
    const double inv_terminal = 1.0 / static_cast<double>(m_terminal);
    for (std::uint64_t i = 1; i <= m_terminal; ++i) {
        S path_stream = stream.child({0, Branch::terminal, i});
        const WeightedPath wp =
            sample_path(x, s, pde.horizon, pde.drift, pde.diffusion, path_stream);
        const double diff = pde.terminal(wp.path.X) - gx;
        for (std::size_t j = 0; j < acc.components.size(); ++j) {
            acc.components[j] += inv_terminal * diff * wp.weight[j];
        }
    }

    // Level sums: telescoped Picard differences F(U_l) - F(U_{l-1}), both
    // sub-estimates evaluated at the same sampled (t, X_t).
    auto accumulate_term = [&](int level, std::uint64_t index, double t_eval,
                               const WeightedPath& wp, double coeff) {
        RecursionFrame main_frame{frame, level, index, 'm'};
        const Estimate upper = mlp_recurse(pde, cfg, level, t_eval, wp.path.X,
                                           stream.child({level, Branch::main, index}), unit_rule,
                                           &main_frame);
        S noise_main = stream.child({level, Branch::noise_main, index});
        const std::span<const double> upper_z(upper.components.data() + 1,
                                              static_cast<std::size_t>(d));
        double delta = pde.nonlinearity(upper.components[0], upper_z, t_eval, wp.path.X,
                                        UniformSource(noise_main));
        if (level >= 1) {
            RecursionFrame prev_frame{frame, level, index, 'p'};
            const Estimate lower = mlp_recurse(pde, cfg, level - 1, t_eval, wp.path.X,
                                               stream.child({level, Branch::prev, index}),
                                               unit_rule, &prev_frame);
            S noise_prev = stream.child({level, Branch::noise_prev, index});
            const std::span<const double> lower_z(lower.components.data() + 1,
                                                  static_cast<std::size_t>(d));
            delta -= pde.nonlinearity(lower.components[0], lower_z, t_eval, wp.path.X,
                                      UniformSource(noise_prev));
        }
        for (std::size_t j = 0; j < acc.components.size(); ++j) {
            acc.components[j] += coeff * delta * wp.weight[j];
        }
    };

    for (int level = 0; level < levels; ++level) {
        const std::uint64_t m_level = pow_u64(cfg.base, levels - level);
        const double inv_level = 1.0 / static_cast<double>(m_level);
        if (const auto* fh = std::get_if<FullHistory>(&cfg.variant)) {
            for (std::uint64_t i = 1; i <= m_level; ++i) {
                S time_stream = stream.child({level, Branch::time, i});
                const TimeSample ts = sample_time(s, pde.horizon, fh->alpha,
                                                  time_stream.uniform01());
                S path_stream = stream.child({level, Branch::path, i});
                const WeightedPath wp =
                    sample_path(x, s, ts.time, pde.drift, pde.diffusion, path_stream);
                accumulate_term(level, i, ts.time, wp, ts.weight * inv_level);
            }
        } else {
            const QuadratureRule rule = rescale(*unit_rule, s, pde.horizon);
            const std::uint64_t order = rule.nodes.size();
            for (std::uint64_t i = 1; i <= m_level; ++i) {
                for (std::uint64_t q = 0; q < order; ++q) {
                    const std::uint64_t index = (i - 1) * order + q + 1;
                    S path_stream = stream.child({level, Branch::path, index});
                    const WeightedPath wp = sample_path(x, s, rule.nodes[q], pde.drift,
                                                        pde.diffusion, path_stream);
                    accumulate_term(level, index, rule.nodes[q], wp,
                                    rule.weights[q] * inv_level);
                }
            }
        }
    }

    for (double component : acc.components) {
        if (!std::isfinite(component)) throw NonFiniteError(format_path(frame));
    }
    if (cfg.clip) acc = clip(std::move(acc), *cfg.clip);
    return acc;
}

}  // namespace detail

/// Multilevel Picard estimate of (u, sigma^T grad u) at (s, x).
///
/// Implements the full-history and quadrature recursions: a control-variate
/// terminal block with M^n paths plus telescoped level sums with M^(n-l)
/// samples at level l. Deterministic: identical (pde, cfg, s, x, stream)
/// give bit-identical output for any worker count.
template <RandomStream S>
Estimate mlp_estimate(const SemilinearPde& pde, const MlpConfig& cfg, double s,
                      std::span<const double> x, const S& stream) {
    pde.validate();
    cfg.validate();
    if (static_cast<int>(x.size()) != pde.d) {
        throw std::invalid_argument("mlp_estimate: point dimension mismatch");
    }
    if (s < 0.0 || s > pde.horizon) {
        throw std::invalid_argument("mlp_estimate: time outside [0, T]");
    }
    if (s == pde.horizon) {
        Estimate e = Estimate::zeros(pde.d);
        e.components[0] = pde.terminal(x);
        return e;
    }
    std::optional<QuadratureRule> unit_rule;
    if (const auto* quad = std::get_if<Quadrature>(&cfg.variant)) {
        unit_rule = gauss_legendre(quad->order);
    }
    detail::RecursionFrame root;
    return detail::mlp_recurse(pde, cfg, cfg.levels, s, x, stream,
                               unit_rule ? &*unit_rule : nullptr, &root);
}

inline Estimate mlp_estimate(const SemilinearPde& pde, const MlpConfig& cfg,
                             const SpaceTimePoint& p, const RngStream& stream) {
    return mlp_estimate(pde, cfg, p.t, p.x, stream);
}

}  // namespace scasml
