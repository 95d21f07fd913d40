#pragma once

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "scasml/metrics.hpp"
#include "scasml/problems.hpp"
#include "scasml/rbf_surrogate.hpp"
#include "scasml/scasml.hpp"

namespace scasml {

enum class ProblemKind { lcd, vb, lqg, dr };

inline const char* problem_name(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::lcd: return "lcd";
        case ProblemKind::vb: return "vb";
        case ProblemKind::lqg: return "lqg";
        case ProblemKind::dr: return "dr";
    }
    return "?";
}

enum class SurrogateChoice { zero, synthetic, rbf_file, fit };

struct RbfFitOptions {
    std::size_t n_train = 1000;
    std::size_t centers = 200;
    double lengthscale = 1.0;
    double ridge = 1e-8;
    std::uint64_t seed = 7121;
};

/// Clip selection: benchmark presets, a fixed threshold, or no clipping.
struct ClipRule {
    enum class Mode { automatic, fixed, none };
    Mode mode = Mode::automatic;
    double value = 0.0;

    static ClipRule automatic() { return {}; }
    static ClipRule fixed(double v) { return {Mode::fixed, v}; }
    static ClipRule none() { return {Mode::none, 0.0}; }
};

/// Benchmark clip presets. The naive solver and the defect solver run at
/// different scales, so they carry different thresholds everywhere except
/// the linear problem.
inline double preset_clip(ProblemKind kind, int dim, bool scasml) {
    switch (kind) {
        case ProblemKind::lcd: return 0.5 * (dim + 1);
        case ProblemKind::vb: return scasml ? 0.01 : 1.0;
        case ProblemKind::lqg: return scasml ? 0.1 : 10.0;
        case ProblemKind::dr: return scasml ? 0.01 : 10.0;
    }
    return 0.0;
}

inline std::optional<double> resolve_clip(const ClipRule& rule, ProblemKind kind, int dim,
                                          bool scasml) {
    switch (rule.mode) {
        case ClipRule::Mode::automatic: return preset_clip(kind, dim, scasml);
        case ClipRule::Mode::fixed: return rule.value;
        case ClipRule::Mode::none: return std::nullopt;
    }
    return std::nullopt;
}

/// Everything a run needs; fully echoed into report rows for provenance.
struct RunSpec {
    ProblemKind problem = ProblemKind::lcd;
    int dim = 10;
    double sigma0 = std::sqrt(2.0);      // vb only
    std::uint64_t coeff_seed = 2024;     // lqg only

    SurrogateChoice surrogate = SurrogateChoice::zero;
    double synthetic_amplitude = 0.1;
    std::string surrogate_path;
    RbfFitOptions fit;

    MlpConfig mlp;                        // mlp.seed is the inference seed
    ClipRule clip = ClipRule::automatic();
    std::optional<LaplacianMode> lap_override;

    std::size_t points = 1200;
    std::uint64_t point_seed = 424243;
    int ref_samples_per_dim = 100;        // lqg reference budget per dimension
    std::uint64_t ref_seed = 515151;
    int workers = 1;
    bool record_time = true;              // false writes time_s = 0 for byte-stable reports

    void validate() const {
        if (dim < 1) throw std::invalid_argument("RunSpec: dim must be positive");
        if (points < 1) throw std::invalid_argument("RunSpec: need at least one test point");
        if (workers < 1) throw std::invalid_argument("RunSpec: need at least one worker");
        if (ref_samples_per_dim < 1) throw std::invalid_argument("RunSpec: reference budget must be positive");
        mlp.validate();
        if (clip.mode == ClipRule::Mode::fixed && !(clip.value > 0.0)) {
            throw std::invalid_argument("RunSpec: fixed clip must be positive");
        }
    }
};

inline SemilinearPde build_problem(const RunSpec& spec) {
    switch (spec.problem) {
        case ProblemKind::lcd: return make_lcd(spec.dim);
        case ProblemKind::vb: return make_viscous_burgers(spec.dim, spec.sigma0);
        case ProblemKind::lqg: return make_lqg_hjb(spec.dim, spec.coeff_seed);
        case ProblemKind::dr: return make_diffusion_reaction(spec.dim);
    }
    throw std::invalid_argument("build_problem: unknown problem");
}

/// Ensure the problem carries a reference map. LQG gets the Monte-Carlo
/// reference with budget ref_samples_per_dim * d per query, seeded from
/// ref_seed and the query coordinates — independent of inference randomness.
inline SemilinearPde with_reference(const RunSpec& spec, SemilinearPde pde) {
    if (pde.has_reference()) return pde;
    const auto base = std::make_shared<SemilinearPde>(pde);
    const std::int64_t budget = static_cast<std::int64_t>(spec.ref_samples_per_dim) * pde.d;
    const std::uint64_t ref_seed = spec.ref_seed;
    pde.reference = [base, budget, ref_seed](double t, std::span<const double> x) {
        std::uint64_t h = detail::mix64(ref_seed ^ std::bit_cast<std::uint64_t>(t));
        for (double v : x) h = detail::mix64(h ^ std::bit_cast<std::uint64_t>(v));
        SpaceTimePoint p;
        p.t = t;
        p.x.assign(x.begin(), x.end());
        return lqg_reference(*base, p, budget, h);
    };
    return pde;
}

inline SurrogatePtr make_surrogate(const RunSpec& spec, const SemilinearPde& pde) {
    switch (spec.surrogate) {
        case SurrogateChoice::zero: return zero_surrogate(pde.d);
        case SurrogateChoice::synthetic:
            return synthetic_surrogate(pde, spec.synthetic_amplitude);
        case SurrogateChoice::rbf_file: {
            auto loaded = load_surrogate(spec.surrogate_path);
            if (loaded->dim() != pde.d) {
                throw std::invalid_argument("make_surrogate: surrogate file has dimension " +
                                            std::to_string(loaded->dim()) + " but the run uses " +
                                            std::to_string(pde.d));
            }
            return loaded;
        }
        case SurrogateChoice::fit:
            return fit_rbf(pde, spec.fit.n_train, spec.fit.centers, spec.fit.lengthscale,
                           spec.fit.ridge, spec.fit.seed);
    }
    throw std::invalid_argument("make_surrogate: unknown surrogate choice");
}

inline const char* surrogate_name(SurrogateChoice choice) {
    switch (choice) {
        case SurrogateChoice::zero: return "zero";
        case SurrogateChoice::synthetic: return "synthetic";
        case SurrogateChoice::rbf_file: return "rbf";
        case SurrogateChoice::fit: return "fit";
    }
    return "?";
}

/// Laplacian policy: coordinate subsampling with K = d/4 only where the
/// paper uses it (LQG residuals); exact everywhere else. The zero surrogate
/// has a zero Laplacian, so the naive solver never needs sampling.
inline LaplacianMode lap_policy(const RunSpec& spec, bool scasml_phase) {
    if (spec.lap_override) return *spec.lap_override;
    if (scasml_phase && spec.problem == ProblemKind::lqg &&
        spec.surrogate != SurrogateChoice::zero) {
        return LaplacianMode::hutchinson(std::max(1, spec.dim / 4));
    }
    return LaplacianMode::exact();
}

namespace detail {

inline std::string describe_lap(LaplacianMode mode) {
    if (mode.kind == LaplacianMode::Kind::hutchinson) {
        return "hutchinson:" + std::to_string(mode.subset);
    }
    return "exact";
}

inline std::string describe_config(const RunSpec& spec, std::optional<double> clip,
                                   LaplacianMode lap, const std::string& surrogate_desc) {
    std::string out;
    if (const auto* fh = std::get_if<FullHistory>(&spec.mlp.variant)) {
        out += "variant=fullhist;alpha=" + format_double(fh->alpha);
    } else {
        out += "variant=quad;order=" + std::to_string(std::get<Quadrature>(spec.mlp.variant).order);
    }
    out += ";levels=" + std::to_string(spec.mlp.levels);
    out += ";base=" + std::to_string(spec.mlp.base);
    out += ";clip=" + (clip ? format_double(*clip) : std::string("none"));
    out += ";lap=" + describe_lap(lap);
    out += ";surrogate=" + surrogate_desc;
    out += ";points=" + std::to_string(spec.points);
    out += ";point_seed=" + std::to_string(spec.point_seed);
    return out;
}

}  // namespace detail

struct BenchmarkResult {
    std::vector<MetricsRow> rows;          // rows that met the success budget
    double sr_fail_fraction = 0.0;
    double mlp_fail_fraction = 0.0;
    double scasml_fail_fraction = 0.0;
    std::vector<std::string> failures;     // per-point diagnostics
    bool budget_met = true;                // every method emitted its row
};

namespace detail {

struct PhaseMetrics {
    std::optional<Metrics> metrics;
    double fail_fraction = 0.0;
    double elapsed = 0.0;
};

inline PhaseMetrics batch_phase(const SemilinearPde& pde, SurrogatePtr surrogate,
                                const MlpConfig& cfg, std::span<const SpaceTimePoint> points,
                                std::span<const double> refs, int workers, LaplacianMode lap,
                                std::vector<std::string>& failures) {
    const auto start = std::chrono::steady_clock::now();
    const auto entries = solve_batch(pde, std::move(surrogate), cfg, points, workers, lap);
    PhaseMetrics out;
    out.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::vector<double> preds, kept_refs;
    preds.reserve(entries.size());
    kept_refs.reserve(entries.size());
    std::size_t failed = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].ok()) {
            preds.push_back(entries[i].result->value);
            kept_refs.push_back(refs[i]);
        } else {
            ++failed;
            failures.push_back(entries[i].error);
        }
    }
    out.fail_fraction = static_cast<double>(failed) / static_cast<double>(entries.size());
    if (out.fail_fraction <= 0.05) out.metrics = evaluate_metrics(preds, kept_refs);
    return out;
}

}  // namespace detail

/// Three-row Table-style benchmark over one shared test set: SR (surrogate
/// alone), MLP (naive solver on the original PDE) and SCaSML (corrected).
/// A method's row is emitted only when at least 95% of its points succeed.
inline BenchmarkResult run_benchmark(const RunSpec& spec) {
    spec.validate();
    const SemilinearPde pde = with_reference(spec, build_problem(spec));
    if (!pde.has_reference()) {
        throw std::invalid_argument("run_benchmark: problem has no usable reference");
    }
    const auto points = sample_test_points(pde, spec.points, spec.point_seed);
    std::vector<double> refs(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) refs[i] = pde.reference(points[i].t, points[i].x);

    const SurrogatePtr surrogate = make_surrogate(spec, pde);

    BenchmarkResult result;
    const std::string name = problem_name(spec.problem);
    auto push_row = [&](const char* method, const detail::PhaseMetrics& phase,
                        std::optional<double> clip, LaplacianMode lap,
                        const std::string& surrogate_desc) {
        if (!phase.metrics) {
            result.budget_met = false;
            return;
        }
        MetricsRow row;
        row.problem = name;
        row.dim = spec.dim;
        row.method = method;
        row.time_s = spec.record_time ? phase.elapsed : 0.0;
        row.rel_l2 = phase.metrics->rel_l2;
        row.l_inf = phase.metrics->l_inf;
        row.l1 = phase.metrics->l1;
        row.seed = spec.mlp.seed;
        row.config = detail::describe_config(spec, clip, lap, surrogate_desc);
        result.rows.push_back(std::move(row));
    };

    // SR: the surrogate alone. Independent of the MLP configuration.
    {
        const auto start = std::chrono::steady_clock::now();
        std::vector<double> preds(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            preds[i] = surrogate->derivatives(points[i].t, points[i].x).value;
        }
        detail::PhaseMetrics phase;
        phase.elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        phase.metrics = evaluate_metrics(preds, refs);
        push_row("SR", phase, std::nullopt, LaplacianMode::exact(),
                 surrogate_name(spec.surrogate));
        result.sr_fail_fraction = 0.0;
    }

    // MLP: naive solver, independent of the surrogate selector.
    {
        MlpConfig cfg = spec.mlp;
        cfg.clip = resolve_clip(spec.clip, spec.problem, spec.dim, /*scasml=*/false);
        const auto phase = detail::batch_phase(pde, zero_surrogate(pde.d), cfg, points, refs,
                                               spec.workers, LaplacianMode::exact(),
                                               result.failures);
        result.mlp_fail_fraction = phase.fail_fraction;
        push_row("MLP", phase, cfg.clip, LaplacianMode::exact(), "zero");
    }

    // SCaSML: correct the chosen surrogate through the law of defect.
    {
        MlpConfig cfg = spec.mlp;
        cfg.clip = resolve_clip(spec.clip, spec.problem, spec.dim, /*scasml=*/true);
        const LaplacianMode lap = lap_policy(spec, /*scasml_phase=*/true);
        const auto phase = detail::batch_phase(pde, surrogate, cfg, points, refs, spec.workers,
                                               lap, result.failures);
        result.scasml_fail_fraction = phase.fail_fraction;
        push_row("SCaSML", phase, cfg.clip, lap, surrogate_name(spec.surrogate));
    }
    return result;
}

/// Inference-time scaling sweep: one SCaSML row per sample base M, same test
/// set and same (fitted once) surrogate across the sweep.
inline std::vector<MetricsRow> run_scaling(const RunSpec& spec,
                                           std::span<const std::int64_t> m_values) {
    spec.validate();
    std::vector<MetricsRow> rows;
    if (m_values.empty()) return rows;
    const SemilinearPde pde = with_reference(spec, build_problem(spec));
    const auto points = sample_test_points(pde, spec.points, spec.point_seed);
    std::vector<double> refs(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) refs[i] = pde.reference(points[i].t, points[i].x);
    const SurrogatePtr surrogate = make_surrogate(spec, pde);
    const LaplacianMode lap = lap_policy(spec, /*scasml_phase=*/true);

    for (const std::int64_t m : m_values) {
        RunSpec sub = spec;
        sub.mlp.base = m;
        sub.mlp.clip = resolve_clip(spec.clip, spec.problem, spec.dim, /*scasml=*/true);
        std::vector<std::string> failures;
        const auto phase = detail::batch_phase(pde, surrogate, sub.mlp, points, refs,
                                               spec.workers, lap, failures);
        if (!phase.metrics) {
            throw std::runtime_error("run_scaling: point-failure budget exceeded at base " +
                                     std::to_string(m));
        }
        MetricsRow row;
        row.problem = problem_name(spec.problem);
        row.dim = spec.dim;
        row.method = "SCaSML";
        row.time_s = spec.record_time ? phase.elapsed : 0.0;
        row.rel_l2 = phase.metrics->rel_l2;
        row.l_inf = phase.metrics->l_inf;
        row.l1 = phase.metrics->l1;
        row.seed = spec.mlp.seed;
        row.config = detail::describe_config(sub, sub.mlp.clip, lap,
                                             surrogate_name(spec.surrogate));
        rows.push_back(std::move(row));
    }
    return rows;
}

struct ConvergenceResult {
    double sr_slope = 0.0;
    double scasml_slope = 0.0;
    std::vector<MetricsRow> rows;  // SR and SCaSML row per training size
};

/// Convergence-rate study: fit the RBF surrogate at each training size,
/// evaluate SR and SCaSML errors, and fit log-log slopes per method.
inline ConvergenceResult run_convergence(const RunSpec& spec,
                                         std::span<const std::size_t> train_sizes) {
    spec.validate();
    if (train_sizes.size() < 3) {
        throw std::invalid_argument("run_convergence: need at least three training sizes");
    }
    const SemilinearPde pde = with_reference(spec, build_problem(spec));
    const auto points = sample_test_points(pde, spec.points, spec.point_seed);
    std::vector<double> refs(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) refs[i] = pde.reference(points[i].t, points[i].x);
    const LaplacianMode lap = lap_policy(spec, /*scasml_phase=*/true);
    const auto clip_scasml = resolve_clip(spec.clip, spec.problem, spec.dim, /*scasml=*/true);

    ConvergenceResult out;
    std::vector<double> sizes, sr_errors, scasml_errors;
    for (const std::size_t m : train_sizes) {
        RbfFitOptions opts = spec.fit;
        opts.n_train = m;
        opts.centers = std::min(opts.centers, m);
        const SurrogatePtr surrogate =
            fit_rbf(pde, opts.n_train, opts.centers, opts.lengthscale, opts.ridge, opts.seed);

        std::vector<double> sr_preds(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            sr_preds[i] = surrogate->derivatives(points[i].t, points[i].x).value;
        }
        const Metrics sr = evaluate_metrics(sr_preds, refs);

        MlpConfig cfg = spec.mlp;
        cfg.clip = clip_scasml;
        std::vector<std::string> failures;
        const auto phase =
            detail::batch_phase(pde, surrogate, cfg, points, refs, spec.workers, lap, failures);
        if (!phase.metrics) {
            throw std::runtime_error("run_convergence: point-failure budget exceeded at size " +
                                     std::to_string(m));
        }

        const std::string suffix = ";train=" + std::to_string(m);
        MetricsRow sr_row{problem_name(spec.problem), spec.dim, "SR", 0.0, sr.rel_l2,
                          sr.l_inf, sr.l1, spec.mlp.seed,
                          detail::describe_config(spec, std::nullopt, LaplacianMode::exact(),
                                                  "fit") + suffix};
        MetricsRow sc_row{problem_name(spec.problem), spec.dim, "SCaSML",
                          spec.record_time ? phase.elapsed : 0.0, phase.metrics->rel_l2,
                          phase.metrics->l_inf, phase.metrics->l1, spec.mlp.seed,
                          detail::describe_config(spec, clip_scasml, lap, "fit") + suffix};
        out.rows.push_back(std::move(sr_row));
        out.rows.push_back(std::move(sc_row));

        sizes.push_back(static_cast<double>(m));
        sr_errors.push_back(sr.rel_l2);
        scasml_errors.push_back(phase.metrics->rel_l2);
    }
    out.sr_slope = fit_log_slope(sizes, sr_errors);
    out.scasml_slope = fit_log_slope(sizes, scasml_errors);
    return out;
}

}  // namespace scasml
