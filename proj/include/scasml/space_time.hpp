#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

namespace scasml {

/// One query location (t, x) with t in [0, T] of the owning problem.
struct SpaceTimePoint {
    double t = 0.0;
    std::vector<double> x;
};

/// Axis-aligned box with per-axis bounds.
struct HyperRect {
    std::vector<double> lower;
    std::vector<double> upper;
};

/// Centered ball of radius 1.
struct UnitBall {
    int dim = 0;
};

/// Spatial sampling region of a problem. The time interval [0, T] lives on
/// the problem itself.
class Domain {
public:
    Domain() = default;

    static Domain hyper_rect(std::vector<double> lower, std::vector<double> upper) {
        if (lower.size() != upper.size()) {
            throw std::invalid_argument("Domain: bound vectors differ in length");
        }
        for (std::size_t i = 0; i < lower.size(); ++i) {
            if (!(lower[i] <= upper[i])) {
                throw std::invalid_argument("Domain: lower bound exceeds upper bound");
            }
        }
        Domain d;
        d.shape_ = HyperRect{std::move(lower), std::move(upper)};
        return d;
    }

    static Domain cube(int dim, double lo, double hi) {
        return hyper_rect(std::vector<double>(static_cast<std::size_t>(dim), lo),
                          std::vector<double>(static_cast<std::size_t>(dim), hi));
    }

    static Domain unit_ball(int dim) {
        Domain d;
        d.shape_ = UnitBall{dim};
        return d;
    }

    [[nodiscard]] int dim() const {
        if (const auto* r = std::get_if<HyperRect>(&shape_)) {
            return static_cast<int>(r->lower.size());
        }
        return std::get<UnitBall>(shape_).dim;
    }

    [[nodiscard]] bool contains(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != dim()) return false;
        if (const auto* r = std::get_if<HyperRect>(&shape_)) {
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (x[i] < r->lower[i] || x[i] > r->upper[i]) return false;
            }
            return true;
        }
        double norm2 = 0.0;
        for (double v : x) norm2 += v * v;
        return norm2 <= 1.0;
    }

    [[nodiscard]] bool is_ball() const { return std::holds_alternative<UnitBall>(shape_); }

    [[nodiscard]] const HyperRect& rect() const { return std::get<HyperRect>(shape_); }

private:
    std::variant<HyperRect, UnitBall> shape_{UnitBall{0}};
};

inline double squared_norm(std::span<const double> v) {
    double s = 0.0;
    for (double a : v) s += a * a;
    return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double sum(std::span<const double> v) {
    double s = 0.0;
    for (double a : v) s += a;
    return s;
}

}  // namespace scasml
