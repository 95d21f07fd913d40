#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <vector>

#include "scasml/problems.hpp"
#include "scasml/rbf_surrogate.hpp"
#include "scasml/surrogate.hpp"

using namespace scasml;

namespace {

// Central finite differences of a surrogate's value map, the independent
// check for every analytic derivative bundle.
struct FdBundle {
    double time_deriv;
    std::vector<double> gradient;
    double laplacian;
};

FdBundle fd_bundle(const Surrogate& s, double t, std::vector<double> x, double h) {
    FdBundle out;
    const double value = s.derivatives(t, x).value;
    out.time_deriv = (s.derivatives(t + h, x).value - s.derivatives(t - h, x).value) / (2.0 * h);
    out.gradient.resize(x.size());
    out.laplacian = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        x[i] = xi + h;
        const double up = s.derivatives(t, x).value;
        x[i] = xi - h;
        const double down = s.derivatives(t, x).value;
        x[i] = xi;
        out.gradient[i] = (up - down) / (2.0 * h);
        out.laplacian += (up - 2.0 * value + down) / (h * h);
    }
    return out;
}

void check_analytic_vs_fd(const Surrogate& s, const std::vector<SpaceTimePoint>& pts,
                          double rel_tol) {
    for (const auto& p : pts) {
        const auto sd = s.derivatives(p.t, p.x);
        const auto fd = fd_bundle(s, p.t, p.x, 1e-4);
        auto close = [rel_tol](double a, double b) {
            return std::abs(a - b) <= rel_tol * std::max({1.0, std::abs(a), std::abs(b)});
        };
        REQUIRE(close(sd.time_deriv, fd.time_deriv));
        for (std::size_t i = 0; i < sd.gradient.size(); ++i) {
            REQUIRE(close(sd.gradient[i], fd.gradient[i]));
        }
        REQUIRE(close(sd.laplacian, fd.laplacian));
        // Per-coordinate second derivatives must sum to the Laplacian.
        double lap = 0.0;
        for (int axis = 0; axis < s.dim(); ++axis) lap += s.coord_second_deriv(p.t, p.x, axis);
        REQUIRE(close(lap, sd.laplacian));
    }
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("zero surrogate is identically zero") {
    const auto s = zero_surrogate(5);
    const auto pde = make_lcd(5);
    for (const auto& p : sample_test_points(pde, 20, 1)) {
        const auto sd = s->derivatives(p.t, p.x);
        REQUIRE(sd.value == 0.0);
        REQUIRE(sd.time_deriv == 0.0);
        REQUIRE(sd.laplacian == 0.0);
        for (double g : sd.gradient) REQUIRE(g == 0.0);
    }
}

TEST_CASE("synthetic surrogate with zero amplitude reproduces the reference") {
    const auto pde = make_viscous_burgers(6);
    const auto s = synthetic_surrogate(pde, 0.0);
    for (const auto& p : sample_test_points(pde, 30, 2)) {
        REQUIRE(s->derivatives(p.t, p.x).value == pde.reference(p.t, p.x));
    }
}

TEST_CASE("synthetic surrogate evaluates the stated closed form") {
    // e = 0.1 on LCD d=2 at (t=0, x=0): value = 0, gradient = (1.1, 1.1).
    const auto pde = make_lcd(2);
    const auto s = synthetic_surrogate(pde, 0.1);
    std::vector<double> zero(2, 0.0);
    const auto sd = s->derivatives(0.0, zero);
    REQUIRE(sd.value == Catch::Approx(0.0).margin(1e-16));
    REQUIRE(sd.gradient[0] == Catch::Approx(1.1).margin(1e-15));
    REQUIRE(sd.gradient[1] == Catch::Approx(1.1).margin(1e-15));
}

TEST_CASE("synthetic surrogate error is bounded by the amplitude") {
    const auto pde = make_lcd(4);
    const double e = 0.05;
    const auto s = synthetic_surrogate(pde, e);
    double sup = 0.0;
    for (const auto& p : sample_test_points(pde, 10000, 3)) {
        sup = std::max(sup, std::abs(s->derivatives(p.t, p.x).value - pde.reference(p.t, p.x)));
    }
    REQUIRE(sup <= e + 1e-15);
}

TEST_CASE("synthetic surrogate rejects problems without analytic derivatives") {
    const auto pde = make_lqg_hjb(4, 1);
    REQUIRE_THROWS_AS(synthetic_surrogate(pde, 0.1), std::invalid_argument);
}

TEST_CASE("analytic derivative bundles agree with finite differences") {
    const auto lcd = make_lcd(3);
    const auto vb = make_viscous_burgers(3);
    const auto dr = make_diffusion_reaction(3);
    const auto pts_cube = sample_test_points(vb, 100, 5);
    check_analytic_vs_fd(*synthetic_surrogate(lcd, 0.2), sample_test_points(lcd, 100, 4), 1e-4);
    check_analytic_vs_fd(*synthetic_surrogate(vb, 0.2), pts_cube, 1e-4);
    check_analytic_vs_fd(*synthetic_surrogate(dr, 0.2), sample_test_points(dr, 100, 6), 1e-4);
}

TEST_CASE("hutchinson estimate on a quadratic returns exactly 2d for every draw") {
    // u(x) = sum x_i^2 has constant per-coordinate second derivative 2.
    struct Quadratic final : Surrogate {
        int d;
        explicit Quadratic(int dim) : d(dim) {}
        int dim() const override { return d; }
        SurrogateDerivatives derivatives(double, std::span<const double> x) const override {
            SurrogateDerivatives out;
            out.value = squared_norm(x);
            out.gradient.assign(x.size(), 0.0);
            for (std::size_t i = 0; i < x.size(); ++i) out.gradient[i] = 2.0 * x[i];
            out.laplacian = 2.0 * d;
            return out;
        }
        double coord_second_deriv(double, std::span<const double>, int) const override {
            return 2.0;
        }
    };
    const int d = 12;
    const Quadratic s(d);
    std::vector<double> x(static_cast<std::size_t>(d), 0.3);
    RngStream stream(404);
    for (int rep = 0; rep < 200; ++rep) {
        for (int k = 1; k <= d; ++k) {
            REQUIRE(hutchinson_laplacian(s, 0.1, x, k, UniformSource(stream)) ==
                    static_cast<double>(2 * d));
        }
    }
    REQUIRE_THROWS_AS(hutchinson_laplacian(s, 0.1, x, d + 1, UniformSource(stream)),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(hutchinson_laplacian(s, 0.1, x, 0, UniformSource(stream)),
                      std::invalid_argument);
}

TEST_CASE("hutchinson subset average over all index sets is the exact laplacian") {
    // d = 5, per-coordinate second derivatives a_i: averaging (d/K) sum_{j in S} a_j
    // over all C(d, K) subsets S gives sum a_i exactly.
    struct Anisotropic final : Surrogate {
        int dim() const override { return 5; }
        SurrogateDerivatives derivatives(double, std::span<const double> x) const override {
            SurrogateDerivatives out;
            out.gradient.assign(x.size(), 0.0);
            out.laplacian = 1 + 2 + 3 + 4 + 5;
            return out;
        }
        double coord_second_deriv(double, std::span<const double>, int axis) const override {
            return static_cast<double>(axis + 1);
        }
    };
    const Anisotropic s;
    std::vector<double> x(5, 0.0);
    const int d = 5;
    for (int k = 1; k <= d; ++k) {
        // Enumerate subsets of size k by bitmask.
        double total = 0.0;
        int count = 0;
        for (int mask = 0; mask < (1 << d); ++mask) {
            if (__builtin_popcount(static_cast<unsigned>(mask)) != k) continue;
            double subset_sum = 0.0;
            for (int axis = 0; axis < d; ++axis) {
                if (mask & (1 << axis)) subset_sum += s.coord_second_deriv(0.0, x, axis);
            }
            total += (static_cast<double>(d) / k) * subset_sum;
            ++count;
        }
        REQUIRE(total / count == Catch::Approx(15.0).margin(1e-12));
    }
}

TEST_CASE("residual of the zero surrogate reduces to F(0, 0)") {
    const auto vb = make_viscous_burgers(4);
    const auto s = zero_surrogate(4);
    for (const auto& p : sample_test_points(vb, 25, 7)) {
        REQUIRE(surrogate_residual(vb, *s, p) == 0.0);  // F(0, 0) = 0 for Burgers
    }
    // Diffusion-reaction at t = 1, sum x = 0: eps = min(1, 1.6^2) = 1.
    const auto dr = make_diffusion_reaction(6);
    SpaceTimePoint p{1.0, std::vector<double>(6, 0.0)};
    REQUIRE(surrogate_residual(dr, *zero_surrogate(6), p) == 1.0);
}

TEST_CASE("residual of the perfect synthetic surrogate is machine zero") {
    const auto pde = make_lcd(6);
    const auto s = synthetic_surrogate(pde, 0.0);
    for (const auto& p : sample_test_points(pde, 50, 8)) {
        REQUIRE(std::abs(surrogate_residual(pde, *s, p)) < 1e-13);
    }
}

TEST_CASE("hutchinson residual mode rejects oversized subsets") {
    const auto pde = make_lcd(4);
    const auto s = synthetic_surrogate(pde, 0.1);
    SpaceTimePoint p{0.2, std::vector<double>(4, 0.1)};
    REQUIRE_THROWS_AS(surrogate_residual(pde, *s, p, LaplacianMode::hutchinson(5), 1),
                      std::invalid_argument);
}

TEST_CASE("rbf fit recovers a single-kernel target") {
    // Target equal to one kernel centered at a training point: with tiny
    // ridge the fitted weight is 1 and training values interpolate. A short
    // lengthscale keeps the kernel columns near-orthogonal so the weight is
    // identifiable.
    const auto pde_base = make_lcd(2);
    const double lengthscale = 0.07;
    const auto probe_points = sample_test_points(pde_base, 30, 11);
    const auto& center_point = probe_points[0];
    std::vector<double> center(3);
    center[0] = center_point.t;
    center[1] = center_point.x[0];
    center[2] = center_point.x[1];
    const RbfSurrogate target(2, lengthscale, {center}, {1.0});

    SemilinearPde pde = pde_base;
    pde.reference = [&target](double t, std::span<const double> x) {
        return target.derivatives(t, x).value;
    };

    // Training set includes the center because both use the same sampler seed.
    const auto fitted = fit_rbf(pde, 30, 30, lengthscale, 1e-10, 11);
    const auto* rbf = dynamic_cast<const RbfSurrogate*>(fitted.get());
    REQUIRE(rbf != nullptr);
    double recovered = 0.0;
    for (std::size_t j = 0; j < rbf->centers().size(); ++j) {
        if (std::abs(rbf->centers()[j][0] - center[0]) < 1e-14 &&
            std::abs(rbf->centers()[j][1] - center[1]) < 1e-14) {
            recovered = rbf->weights()[j];
        }
    }
    REQUIRE(recovered == Catch::Approx(1.0).margin(1e-4));
    for (const auto& p : probe_points) {
        REQUIRE(fitted->derivatives(p.t, p.x).value ==
                Catch::Approx(target.derivatives(p.t, p.x).value).margin(1e-4));
    }
}

TEST_CASE("rbf fit of all-zero targets gives the zero expansion") {
    SemilinearPde pde = make_lcd(3);
    pde.reference = [](double, std::span<const double>) { return 0.0; };
    const auto fitted = fit_rbf(pde, 50, 20, 1.0, 1e-6, 3);
    const auto* rbf = dynamic_cast<const RbfSurrogate*>(fitted.get());
    REQUIRE(rbf != nullptr);
    for (double w : rbf->weights()) REQUIRE(std::abs(w) < 1e-12);
    for (const auto& p : sample_test_points(pde, 10, 4)) {
        REQUIRE(std::abs(fitted->derivatives(p.t, p.x).value) < 1e-12);
    }
}

TEST_CASE("rbf held-out error improves as the training set doubles") {
    const auto pde = make_lcd(10);
    const auto held_out = sample_test_points(pde, 400, 909);
    std::vector<double> refs(held_out.size());
    for (std::size_t i = 0; i < held_out.size(); ++i) {
        refs[i] = pde.reference(held_out[i].t, held_out[i].x);
    }
    double ref_norm = std::sqrt(squared_norm(refs));

    std::vector<std::size_t> sizes{125, 250, 500, 1000};
    std::vector<double> medians;
    for (std::size_t n_train : sizes) {
        std::vector<double> errs;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto s = fit_rbf(pde, n_train, std::min<std::size_t>(n_train, 150), 1.0, 1e-8, seed);
            double err2 = 0.0;
            for (std::size_t i = 0; i < held_out.size(); ++i) {
                const double e = s->derivatives(held_out[i].t, held_out[i].x).value - refs[i];
                err2 += e * e;
            }
            errs.push_back(std::sqrt(err2) / ref_norm);
        }
        std::sort(errs.begin(), errs.end());
        medians.push_back(errs[2]);
    }
    for (std::size_t i = 1; i < medians.size(); ++i) REQUIRE(medians[i] <= medians[i - 1]);
}

TEST_CASE("rbf fit is deterministic and finite-difference consistent") {
    const auto pde = make_viscous_burgers(3);
    const auto a = fit_rbf(pde, 200, 60, 1.0, 1e-8, 21);
    const auto b = fit_rbf(pde, 200, 60, 1.0, 1e-8, 21);
    const auto pts = sample_test_points(pde, 50, 22);
    for (const auto& p : pts) {
        REQUIRE(a->derivatives(p.t, p.x).value == b->derivatives(p.t, p.x).value);
    }
    check_analytic_vs_fd(*a, pts, 1e-4);
}

TEST_CASE("rbf save/load round-trips bit-exactly") {
    const auto pde = make_viscous_burgers(4);
    const auto fitted = fit_rbf(pde, 150, 50, 0.8, 1e-8, 5);
    const auto* rbf = dynamic_cast<const RbfSurrogate*>(fitted.get());
    const auto path = temp_path("scasml_rbf_roundtrip.json");
    save_surrogate(*rbf, path);
    const auto loaded = load_surrogate(path);
    REQUIRE(loaded->dim() == 4);
    for (const auto& p : sample_test_points(pde, 100, 6)) {
        const auto x = rbf->derivatives(p.t, p.x);
        const auto y = loaded->derivatives(p.t, p.x);
        REQUIRE(x.value == y.value);
        REQUIRE(x.time_deriv == y.time_deriv);
        REQUIRE(x.laplacian == y.laplacian);
        REQUIRE(x.gradient == y.gradient);
    }
    std::filesystem::remove(path);
}

TEST_CASE("loading malformed or empty surrogate files") {
    const auto bad = temp_path("scasml_rbf_bad.json");
    {
        std::ofstream out(bad);
        out << "{ not json";
    }
    REQUIRE_THROWS_AS(load_surrogate(bad), std::runtime_error);
    std::filesystem::remove(bad);
    REQUIRE_THROWS_AS(load_surrogate(temp_path("scasml_missing_file.json")), std::runtime_error);

    // Empty center list loads as the zero surrogate.
    const auto empty = temp_path("scasml_rbf_empty.json");
    {
        std::ofstream out(empty);
        out << R"({"format_version":1,"d":3,"lengthscale":1.0,"centers":[],"weights":[]})";
    }
    const auto zero = load_surrogate(empty);
    std::vector<double> x{0.1, 0.2, 0.3};
    const auto sd = zero->derivatives(0.2, x);
    REQUIRE(sd.value == 0.0);
    REQUIRE(sd.laplacian == 0.0);
    std::filesystem::remove(empty);
}

TEST_CASE("singular normal system without ridge is reported") {
    // Duplicate training points with zero ridge make the Gram system singular.
    SemilinearPde pde = make_lcd(2);
    pde.reference = [](double t, std::span<const double> x) { return sum(x) + t; };
    // Tiny lengthscale relative to duplicated centers: kernel columns collide.
    REQUIRE_THROWS_AS(fit_rbf(pde, 60, 60, 100.0, 0.0, 13), std::runtime_error);
}
