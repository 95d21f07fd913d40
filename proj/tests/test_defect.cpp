#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "scasml/defect.hpp"
#include "scasml/problems.hpp"

using namespace scasml;

namespace {

// Surrogate with prescribed constant derivatives, for hand-checking the
// defect nonlinearity formula.
struct InjectedSurrogate final : Surrogate {
    int d;
    double value, time_deriv, grad, lap;
    InjectedSurrogate(int dim, double v, double dt, double g, double l)
        : d(dim), value(v), time_deriv(dt), grad(g), lap(l) {}
    int dim() const override { return d; }
    SurrogateDerivatives derivatives(double, std::span<const double>) const override {
        SurrogateDerivatives out;
        out.value = value;
        out.time_deriv = time_deriv;
        out.gradient.assign(static_cast<std::size_t>(d), grad);
        out.laplacian = lap;
        return out;
    }
    double coord_second_deriv(double, std::span<const double>, int) const override {
        return lap / d;
    }
};

double eval_f(const SemilinearPde& pde, double v, std::vector<double> z, double t,
              std::vector<double> x, std::uint64_t noise_seed = 5) {
    RngStream s(noise_seed);
    return pde.nonlinearity(v, z, t, x, UniformSource(s));
}

}  // namespace

TEST_CASE("derived problem copies the base structure") {
    const auto pde = make_viscous_burgers(6);
    const auto dp = make_defect_problem(pde, zero_surrogate(6));
    REQUIRE(dp.derived.d == pde.d);
    REQUIRE(dp.derived.horizon == pde.horizon);
    REQUIRE(dp.derived.drift == pde.drift);
    REQUIRE(dp.derived.diffusion == pde.diffusion);
    REQUIRE_FALSE(dp.derived.has_reference());
}

TEST_CASE("dimension mismatch is rejected") {
    REQUIRE_THROWS_AS(make_defect_problem(make_lcd(4), zero_surrogate(5)), std::invalid_argument);
}

TEST_CASE("zero surrogate leaves nonlinearity and terminal unchanged") {
    for (const SemilinearPde& pde :
         {make_lcd(3), make_viscous_burgers(3), make_lqg_hjb(3, 7), make_diffusion_reaction(3)}) {
        const auto dp = make_defect_problem(pde, zero_surrogate(3));
        RngStream stream(31);
        for (int k = 0; k < 100; ++k) {
            std::vector<double> x(3), z(3);
            for (auto& v : x) v = stream.uniform01() - 0.5;
            for (auto& v : z) v = 2.0 * stream.uniform01() - 1.0;
            const double v = 2.0 * stream.uniform01() - 1.0;
            const double t = pde.horizon * stream.uniform01();
            const double base = eval_f(pde, v, z, t, x);
            const double derived = eval_f(dp.derived, v, z, t, x);
            REQUIRE(derived == Catch::Approx(base).margin(1e-15));
            REQUIRE(dp.derived.terminal(x) == Catch::Approx(pde.terminal(x)).margin(1e-15));
        }
    }
}

TEST_CASE("zero surrogate coincidence is bit-exact when F(0,0) = 0") {
    // For Burgers F(0, 0) = 0 exactly, so the cancellation is bitwise.
    const auto pde = make_viscous_burgers(4);
    const auto dp = make_defect_problem(pde, zero_surrogate(4));
    RngStream stream(33);
    for (int k = 0; k < 100; ++k) {
        std::vector<double> x(4), z(4);
        for (auto& v : x) v = stream.uniform01() - 0.5;
        for (auto& v : z) v = 2.0 * stream.uniform01() - 1.0;
        const double v = 2.0 * stream.uniform01() - 1.0;
        const double t = pde.horizon * stream.uniform01();
        REQUIRE(eval_f(dp.derived, v, z, t, x) == eval_f(pde, v, z, t, x));
        REQUIRE(dp.derived.terminal(x) == pde.terminal(x));
    }
}

TEST_CASE("perfect surrogate yields zero terminal and machine-zero residual") {
    const auto pde = make_lcd(10);
    const auto dp = make_defect_problem(pde, synthetic_surrogate(pde, 0.0));
    for (const auto& p : sample_test_points(pde, 100, 9)) {
        REQUIRE(dp.derived.terminal(p.x) == 0.0);
        std::vector<double> z0(10, 0.0);
        REQUIRE(std::abs(eval_f(dp.derived, 0.0, z0, p.t, p.x)) < 1e-13);
    }
}

TEST_CASE("power-of-two dimension makes the perfect-surrogate residual exactly zero") {
    // 1/16 is dyadic and the partial sums of sixteen copies stay representable,
    // so the drift term cancels the unit time derivative without rounding.
    const auto pde = make_lcd(16);
    const auto dp = make_defect_problem(pde, synthetic_surrogate(pde, 0.0));
    for (const auto& p : sample_test_points(pde, 100, 10)) {
        std::vector<double> z0(16, 0.0);
        REQUIRE(eval_f(dp.derived, 0.0, z0, p.t, p.x) == 0.0);
        REQUIRE(dp.derived.terminal(p.x) == 0.0);
    }
}

TEST_CASE("defect nonlinearity at the origin equals the residual bit for bit") {
    const auto pde = make_viscous_burgers(5);
    const auto surrogate = synthetic_surrogate(pde, 0.3);
    const auto dp = make_defect_problem(pde, surrogate);
    for (const auto& p : sample_test_points(pde, 50, 12)) {
        std::vector<double> z0(5, 0.0);
        const double lhs = eval_f(dp.derived, 0.0, z0, p.t, p.x);
        const double rhs = surrogate_residual(pde, *surrogate, p);
        REQUIRE(lhs == rhs);
    }
}

TEST_CASE("defect nonlinearity matches the displayed formula on burgers") {
    // VB d=1, sigma0 = sqrt(2), u-hat = 0.5, c dx u-hat = 0.2:
    // F(0.6, 0.5) - F(0.5, 0.2) = sqrt(2)(0.6*0.5 - 0.5*0.2) = 0.2 sqrt(2).
    const double sigma0 = std::sqrt(2.0);
    const auto pde = make_viscous_burgers(1, sigma0);
    const double grad = 0.2 / sigma0;  // so c * grad = 0.2
    const auto surrogate = std::make_shared<InjectedSurrogate>(1, 0.5, 0.0, grad, 0.0);
    const auto dp = make_defect_problem(pde, surrogate);

    SpaceTimePoint p{0.2, {0.1}};
    const double eps = surrogate_residual(pde, *surrogate, p);
    const double got = eval_f(dp.derived, 0.1, {0.3}, p.t, p.x);
    REQUIRE(got == Catch::Approx(0.2 * std::sqrt(2.0) + eps).margin(1e-12));
    REQUIRE(got - eps == Catch::Approx(0.282843).margin(1e-6));
}

TEST_CASE("lipschitz differences of the defect equal shifted base differences") {
    // |F-breve(w1) - F-breve(w2)| = |F(U+w1) - F(U+w2)|: epsilon cancels.
    const auto pde = make_viscous_burgers(3);
    const auto surrogate = synthetic_surrogate(pde, 0.2);
    const auto dp = make_defect_problem(pde, surrogate);
    RngStream stream(52);
    for (int k = 0; k < 50; ++k) {
        std::vector<double> x(3), z1(3), z2(3);
        for (auto& v : x) v = stream.uniform01() - 0.5;
        for (auto& v : z1) v = 2.0 * stream.uniform01() - 1.0;
        for (auto& v : z2) v = 2.0 * stream.uniform01() - 1.0;
        const double v1 = 2.0 * stream.uniform01() - 1.0;
        const double v2 = 2.0 * stream.uniform01() - 1.0;
        const double t = pde.horizon * stream.uniform01();

        const double defect_diff =
            eval_f(dp.derived, v1, z1, t, x) - eval_f(dp.derived, v2, z2, t, x);

        const auto sd = surrogate->derivatives(t, x);
        std::vector<double> shifted1(3), shifted2(3);
        for (int i = 0; i < 3; ++i) {
            shifted1[static_cast<std::size_t>(i)] =
                pde.diffusion * sd.gradient[static_cast<std::size_t>(i)] + z1[static_cast<std::size_t>(i)];
            shifted2[static_cast<std::size_t>(i)] =
                pde.diffusion * sd.gradient[static_cast<std::size_t>(i)] + z2[static_cast<std::size_t>(i)];
        }
        const double base_diff = eval_f(pde, sd.value + v1, shifted1, t, x) -
                                 eval_f(pde, sd.value + v2, shifted2, t, x);
        // The shift F(U-hat) and the residual cancel algebraically; floating
        // point leaves a few ulps from the two extra additions.
        REQUIRE(defect_diff ==
                Catch::Approx(base_diff).margin(1e-13 * std::max(1.0, std::abs(base_diff))));
    }
}

TEST_CASE("lipschitz probe vanishes for linear problems") {
    const auto pde = make_lcd(4);
    REQUIRE(lipschitz_probe(make_defect_problem(pde, zero_surrogate(4)), 200, 3) == 0.0);
    REQUIRE(lipschitz_probe(make_defect_problem(pde, synthetic_surrogate(pde, 0.5)), 200, 3) ==
            0.0);
}

TEST_CASE("lipschitz probe of the zero-surrogate defect equals the base probe") {
    const auto pde = make_viscous_burgers(4);
    const auto dp = make_defect_problem(pde, zero_surrogate(4));
    REQUIRE(lipschitz_probe(dp, 300, 17) == lipschitz_probe(pde, 300, 17));
}

TEST_CASE("lipschitz probe respects the analytic bound on bounded boxes") {
    // F(v, z) = sigma0 v sum(z) on |v|, |z_i| <= 1 + surrogate shift bounds:
    // |F(w1) - F(w2)| <= sigma0 max(|sum z|, |v|, ...) |w1 - w2|_1 with all
    // arguments inside the probed box, so the ratio stays under
    // sigma0 * max(|v|_max, sum|z|_max).
    const int d = 3;
    const double sigma0 = std::sqrt(2.0);
    const auto pde = make_viscous_burgers(d, sigma0);
    const auto probe = lipschitz_probe(pde, 500, 23);
    const double bound = sigma0 * std::max(1.0, static_cast<double>(d));
    REQUIRE(probe > 0.0);
    REQUIRE(probe <= bound);
}
