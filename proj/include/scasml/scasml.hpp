#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "scasml/defect.hpp"
#include "scasml/mlp.hpp"
#include "scasml/problems.hpp"
#include "scasml/surrogate.hpp"

namespace scasml {

/// Corrected solution at one point: value = u-hat + correction[0] and
/// gradient_scaled = c grad u-hat + correction[1..d], both exactly.
struct SolveResult {
    double value = 0.0;
    std::vector<double> gradient_scaled;
    Estimate correction;
    double surrogate_value = 0.0;
    double wall_time = 0.0;
};

/// One entry of a batch solve; failed points carry their diagnostic instead.
struct BatchEntry {
    std::optional<SolveResult> result;
    std::string error;

    [[nodiscard]] bool ok() const { return result.has_value(); }
};

inline SolveResult solve_point(const DefectProblem& dp, const MlpConfig& cfg,
                               const SpaceTimePoint& p, std::uint64_t point_index = 0) {
    const auto start = std::chrono::steady_clock::now();
    const RngStream stream =
        RngStream(cfg.seed).child({0, StreamLabel::Branch::point, point_index});
    SolveResult out;
    out.correction = mlp_estimate(dp.derived, cfg, p.t, p.x, stream);
    const SurrogateDerivatives sd = dp.surrogate->derivatives(p.t, p.x);
    out.surrogate_value = sd.value;
    out.value = sd.value + out.correction.components[0];
    out.gradient_scaled.resize(static_cast<std::size_t>(dp.derived.d));
    for (std::size_t i = 0; i < out.gradient_scaled.size(); ++i) {
        out.gradient_scaled[i] =
            dp.derived.diffusion * sd.gradient[i] + out.correction.components[i + 1];
    }
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

/// Full SCaSML pipeline at one point: build the law-of-defect problem, run
/// MLP on it with a stream derived from (cfg.seed, point index), and return
/// u-hat plus the estimated defect.
inline SolveResult solve_point(const SemilinearPde& pde, SurrogatePtr surrogate,
                               const MlpConfig& cfg, const SpaceTimePoint& p,
                               LaplacianMode lap_mode = LaplacianMode::exact(),
                               std::uint64_t point_index = 0) {
    const DefectProblem dp = make_defect_problem(pde, std::move(surrogate), lap_mode);
    return solve_point(dp, cfg, p, point_index);
}

/// Naive MLP baseline: SCaSML with the zero surrogate (same code path).
inline SolveResult naive_mlp_point(const SemilinearPde& pde, const MlpConfig& cfg,
                                   const SpaceTimePoint& p, std::uint64_t point_index = 0) {
    return solve_point(pde, zero_surrogate(pde.d), cfg, p, LaplacianMode::exact(), point_index);
}

/// Order-preserving batch solve. Per-point streams derive from the point's
/// batch index, so results are independent of the worker count and of which
/// other points share the batch. Per-point failures are collected, not
/// propagated.
inline std::vector<BatchEntry> solve_batch(const DefectProblem& dp, const MlpConfig& cfg,
                                           std::span<const SpaceTimePoint> points, int workers) {
    if (workers < 1) throw std::invalid_argument("solve_batch: need at least one worker");
    std::vector<BatchEntry> entries(points.size());
    if (points.empty()) return entries;

    std::atomic<std::size_t> cursor{0};
    auto run = [&]() {
        while (true) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= points.size()) break;
            try {
                entries[i].result = solve_point(dp, cfg, points[i], i);
            } catch (const std::exception& e) {
                entries[i].error = "point " + std::to_string(i) + ": " + e.what();
            }
        }
    };

    if (workers == 1 || points.size() == 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        const int n_threads = std::min<int>(workers, static_cast<int>(points.size()));
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int w = 0; w < n_threads; ++w) pool.emplace_back(run);
        for (auto& th : pool) th.join();
    }
    return entries;
}

inline std::vector<BatchEntry> solve_batch(const SemilinearPde& pde, SurrogatePtr surrogate,
                                           const MlpConfig& cfg,
                                           std::span<const SpaceTimePoint> points, int workers,
                                           LaplacianMode lap_mode = LaplacianMode::exact()) {
    const DefectProblem dp = make_defect_problem(pde, std::move(surrogate), lap_mode);
    return solve_batch(dp, cfg, points, workers);
}

}  // namespace scasml
