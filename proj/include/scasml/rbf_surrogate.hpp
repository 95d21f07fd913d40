#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "scasml/problems.hpp"
#include "scasml/rng.hpp"
#include "scasml/surrogate.hpp"

namespace scasml {

namespace detail {

/// Solve A w = b for symmetric positive definite A via in-place Cholesky.
/// Throws when a pivot fails, which for a Gaussian Gram system means the
/// normal equations are numerically singular.
inline std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b,
                                          std::size_t n, const char* context) {
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
        if (!(diag > 0.0) || !std::isfinite(diag)) {
            throw std::runtime_error(std::string(context) +
                                     ": normal system is numerically singular (try ridge > 0)");
        }
        const double root = std::sqrt(diag);
        a[j * n + j] = root;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = v / root;
        }
    }
    // Forward then backward substitution.
    for (std::size_t i = 0; i < n; ++i) {
        double v = b[i];
        for (std::size_t k = 0; k < i; ++k) v -= a[i * n + k] * b[k];
        b[i] = v / a[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double v = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) v -= a[k * n + ii] * b[k];
        b[ii] = v / a[ii * n + ii];
    }
    return b;
}

}  // namespace detail

/// Gaussian radial-basis expansion over space-time centers (t, x):
///   u-hat(t, x) = sum_j w_j exp(-(|x - xc_j|^2 + (t - tc_j)^2) / (2 l^2 d)).
/// Time enters as an extra coordinate; the d factor in the exponent keeps a
/// single lengthscale usable across dimensions.
class RbfSurrogate final : public Surrogate {
public:
    RbfSurrogate(int d, double lengthscale, std::vector<std::vector<double>> centers,
                 std::vector<double> weights)
        : d_(d), lengthscale_(lengthscale), centers_(std::move(centers)),
          weights_(std::move(weights)) {
        if (d_ < 1) throw std::invalid_argument("RbfSurrogate: dimension must be positive");
        if (!(lengthscale_ > 0.0)) {
            throw std::invalid_argument("RbfSurrogate: lengthscale must be positive");
        }
        if (centers_.size() != weights_.size()) {
            throw std::invalid_argument("RbfSurrogate: centers and weights differ in length");
        }
        for (const auto& c : centers_) {
            if (static_cast<int>(c.size()) != d_ + 1) {
                throw std::invalid_argument("RbfSurrogate: center has wrong length");
            }
        }
    }

    [[nodiscard]] int dim() const override { return d_; }

    [[nodiscard]] double scale() const { return 2.0 * lengthscale_ * lengthscale_ * d_; }
    [[nodiscard]] double lengthscale() const { return lengthscale_; }
    [[nodiscard]] const std::vector<std::vector<double>>& centers() const { return centers_; }
    [[nodiscard]] const std::vector<double>& weights() const { return weights_; }

    [[nodiscard]] double kernel(double t, std::span<const double> x,
                                std::span<const double> center) const {
        double r2 = (t - center[0]) * (t - center[0]);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double dx = x[i] - center[i + 1];
            r2 += dx * dx;
        }
        return std::exp(-r2 / scale());
    }

    [[nodiscard]] SurrogateDerivatives derivatives(double t, std::span<const double> x) const override {
        SurrogateDerivatives out;
        out.gradient.assign(static_cast<std::size_t>(d_), 0.0);
        const double s = scale();
        for (std::size_t j = 0; j < centers_.size(); ++j) {
            const auto& c = centers_[j];
            const double phi = weights_[j] * kernel(t, x, c);
            double r2x = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double dx = x[i] - c[i + 1];
                r2x += dx * dx;
                out.gradient[i] += phi * (-2.0 * dx / s);
            }
            out.value += phi;
            out.time_deriv += phi * (-2.0 * (t - c[0]) / s);
            out.laplacian += phi * (4.0 * r2x / (s * s) - 2.0 * d_ / s);
        }
        return out;
    }

    [[nodiscard]] double coord_second_deriv(double t, std::span<const double> x,
                                            int axis) const override {
        const double s = scale();
        double acc = 0.0;
        for (std::size_t j = 0; j < centers_.size(); ++j) {
            const auto& c = centers_[j];
            const double dx = x[static_cast<std::size_t>(axis)] - c[static_cast<std::size_t>(axis) + 1];
            acc += weights_[j] * kernel(t, x, c) * (4.0 * dx * dx / (s * s) - 2.0 / s);
        }
        return acc;
    }

private:
    int d_;
    double lengthscale_;
    std::vector<std::vector<double>> centers_;  // each [t, x_1 .. x_d]
    std::vector<double> weights_;
};

/// Fit a Gaussian RBF surrogate to the problem's reference solution.
///
/// Samples n_train points, takes reference values as targets, picks centers
/// by greedy farthest-point selection (seeded start), and solves the
/// ridge-regularized normal equations (K^T K + ridge I) w = K^T y.
inline SurrogatePtr fit_rbf(const SemilinearPde& pde, std::size_t n_train, std::size_t n_centers,
                            double lengthscale, double ridge, std::uint64_t seed) {
    if (n_train < 1) throw std::invalid_argument("fit_rbf: need at least one training point");
    if (n_centers < 1) throw std::invalid_argument("fit_rbf: need at least one center");
    if (!(lengthscale > 0.0)) throw std::invalid_argument("fit_rbf: lengthscale must be positive");
    if (ridge < 0.0) throw std::invalid_argument("fit_rbf: ridge must be nonnegative");
    if (!pde.has_reference()) {
        throw std::invalid_argument("fit_rbf: problem has no reference solution to fit");
    }

    const auto points = sample_test_points(pde, n_train, seed);
    std::vector<double> targets(n_train);
    for (std::size_t i = 0; i < n_train; ++i) targets[i] = pde.reference(points[i].t, points[i].x);

    // Flatten to (t, x) rows in the kernel metric.
    const std::size_t cols = static_cast<std::size_t>(pde.d) + 1;
    std::vector<std::vector<double>> rows(n_train, std::vector<double>(cols));
    for (std::size_t i = 0; i < n_train; ++i) {
        rows[i][0] = points[i].t;
        for (int k = 0; k < pde.d; ++k) rows[i][static_cast<std::size_t>(k) + 1] = points[i].x[static_cast<std::size_t>(k)];
    }

    auto dist2 = [cols](const std::vector<double>& a, const std::vector<double>& b) {
        double r2 = 0.0;
        for (std::size_t k = 0; k < cols; ++k) {
            const double dk = a[k] - b[k];
            r2 += dk * dk;
        }
        return r2;
    };

    // Greedy farthest-point center selection, seeded start.
    const std::size_t m = std::min(n_centers, n_train);
    RngStream pick_stream = RngStream(seed).child({1, StreamLabel::Branch::sample, 0});
    std::vector<std::size_t> chosen;
    chosen.reserve(m);
    std::size_t first = static_cast<std::size_t>(pick_stream.uniform01() * static_cast<double>(n_train));
    if (first >= n_train) first = n_train - 1;
    chosen.push_back(first);
    std::vector<double> min_dist(n_train);
    for (std::size_t i = 0; i < n_train; ++i) min_dist[i] = dist2(rows[i], rows[first]);
    while (chosen.size() < m) {
        std::size_t best = 0;
        double best_dist = -1.0;
        for (std::size_t i = 0; i < n_train; ++i) {
            if (min_dist[i] > best_dist) {
                best_dist = min_dist[i];
                best = i;
            }
        }
        chosen.push_back(best);
        for (std::size_t i = 0; i < n_train; ++i) {
            min_dist[i] = std::min(min_dist[i], dist2(rows[i], rows[best]));
        }
    }

    std::vector<std::vector<double>> centers(m);
    for (std::size_t j = 0; j < m; ++j) centers[j] = rows[chosen[j]];

    // Design matrix K (n_train x m) against the selected centers.
    RbfSurrogate probe(pde.d, lengthscale, centers, std::vector<double>(m, 0.0));
    std::vector<double> design(n_train * m);
    for (std::size_t i = 0; i < n_train; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            design[i * m + j] = probe.kernel(rows[i][0],
                                             std::span<const double>(rows[i]).subspan(1), centers[j]);
        }
    }

    // Normal equations with ridge.
    std::vector<double> gram(m * m, 0.0);
    std::vector<double> rhs(m, 0.0);
    for (std::size_t i = 0; i < n_train; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double kij = design[i * m + j];
            rhs[j] += kij * targets[i];
            for (std::size_t k = 0; k <= j; ++k) gram[j * m + k] += kij * design[i * m + k];
        }
    }
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = j + 1; k < m; ++k) gram[j * m + k] = gram[k * m + j];
        gram[j * m + j] += ridge;
    }

    auto weights = detail::cholesky_solve(std::move(gram), std::move(rhs), m, "fit_rbf");
    return std::make_shared<RbfSurrogate>(pde.d, lengthscale, std::move(centers),
                                          std::move(weights));
}

/// On-disk format: a JSON map with format_version, d, lengthscale, centers
/// (arrays [t, x_1..x_d]) and weights. Reals keep round-trip precision.
inline void save_surrogate(const RbfSurrogate& surrogate, const std::string& path) {
    nlohmann::json doc;
    doc["format_version"] = 1;
    doc["d"] = surrogate.dim();
    doc["lengthscale"] = surrogate.lengthscale();
    doc["centers"] = surrogate.centers();
    doc["weights"] = surrogate.weights();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_surrogate: cannot open " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("save_surrogate: write failed for " + path);
}

inline std::shared_ptr<const RbfSurrogate> load_surrogate(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_surrogate: cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_surrogate: malformed file " + path + ": " + e.what());
    }
    try {
        if (doc.at("format_version").get<int>() != 1) {
            throw std::runtime_error("load_surrogate: unsupported format_version in " + path);
        }
        const int d = doc.at("d").get<int>();
        const double lengthscale = doc.at("lengthscale").get<double>();
        auto centers = doc.at("centers").get<std::vector<std::vector<double>>>();
        auto weights = doc.at("weights").get<std::vector<double>>();
        return std::make_shared<RbfSurrogate>(d, lengthscale, std::move(centers),
                                              std::move(weights));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_surrogate: malformed file " + path + ": " + e.what());
    }
}

}  // namespace scasml
