#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <numbers>

namespace scasml {

/// Derivation label for splitting a random stream into independent children.
///
/// `level` and `index` identify the recursion slot (Picard level, sample
/// index), `branch` the role of the child inside that slot. Children with
/// distinct labels behave as independent generators; derivation is a pure
/// function of (parent key, label), so a stream can be re-derived at any
/// time regardless of how many values the parent has produced.
struct StreamLabel {
    enum class Branch : std::uint8_t {
        terminal,    // terminal-condition paths g(X_T)
        time,        // importance-sampled time points
        path,        // Brownian path for a level-sum term
        main,        // recursive estimate at level l
        prev,        // recursive estimate at level l-1
        noise_main,  // nonlinearity noise for the level-l evaluation
        noise_prev,  // nonlinearity noise for the level-(l-1) evaluation
        point,       // per-point stream in a batch
        replicate,   // independent repetitions (confidence intervals)
        reference,   // Monte-Carlo reference solutions
        sample,      // generic sampling (test points, probes, fitting)
    };

    int level = 0;
    Branch branch = Branch::main;
    std::uint64_t index = 0;
};

namespace detail {

// SplitMix64 finalizer (Steele, Lea & Flood; Vigna's fixed-increment form).
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

}  // namespace detail

/// Deterministic splittable random stream.
///
/// State is a 64-bit key plus a draw counter; the n-th output is
/// mix64(key + n * golden), i.e. a counter-based SplitMix64 sequence.
/// The key never changes after construction, so `child` depends only on
/// the stream identity and the label, never on draw position.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) noexcept
        : key_(detail::mix64(seed + detail::kGolden)) {}

    [[nodiscard]] RngStream child(StreamLabel label) const noexcept {
        std::uint64_t h = key_;
        h = detail::mix64(h ^ (detail::kGolden * (static_cast<std::uint64_t>(label.branch) + 0x51ULL)));
        h = detail::mix64(h ^ (detail::kGolden * (static_cast<std::uint64_t>(static_cast<std::int64_t>(label.level)) + 0x9D2BULL)));
        h = detail::mix64(h ^ (detail::kGolden * (label.index + 0x1FB7ULL)));
        return RngStream(h, 0);
    }

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return detail::mix64(key_ + detail::kGolden * counter_);
    }

    /// Uniform draw on the open interval (0, 1).
    double uniform01() noexcept {
        // 53-bit mantissa shifted by half an ulp keeps both endpoints excluded.
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard Gaussian via Box-Muller. Two uniforms per draw, no caching,
    /// so the draw count stays independent of call parity.
    double normal() noexcept {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    [[nodiscard]] std::uint64_t key() const noexcept { return key_; }

private:
    RngStream(std::uint64_t key, std::uint64_t counter) noexcept
        : key_(key), counter_(counter) {}

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Anything that can stand in for RngStream inside the Monte-Carlo engine.
/// Tests use this to inject degenerate generators (e.g. zero increments).
template <typename S>
concept RandomStream = requires(const S cs, S s, StreamLabel label) {
    { cs.child(label) } -> std::same_as<S>;
    { s.uniform01() } -> std::same_as<double>;
    { s.normal() } -> std::same_as<double>;
};

static_assert(RandomStream<RngStream>);

/// Non-owning handle to a uniform(0,1) source. Lets stochastic nonlinearities
/// (Hutchinson-mode residuals) draw from whatever stream the enclosing
/// estimator derived, without templating every problem definition.
class UniformSource {
public:
    template <RandomStream S>
    explicit UniformSource(S& stream) noexcept
        : state_(&stream),
          draw_([](void* p) { return static_cast<S*>(p)->uniform01(); }) {}

    double operator()() const { return draw_(state_); }

private:
    void* state_;
    double (*draw_)(void*);
};

}  // namespace scasml
