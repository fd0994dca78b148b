#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "pulled/error.hpp"
#include "pulled/fd.hpp"

namespace pulled {

/// C¹ blend σ: 0 for x ≤ −1, (x+1)²/4 on [−1,1], x for x ≥ 1.
[[nodiscard]] inline double blend_sigma(double x) noexcept {
    if (x <= -1.0) return 0.0;
    if (x >= 1.0) return x;
    return 0.25 * (x + 1.0) * (x + 1.0);
}

[[nodiscard]] inline double blend_sigma_prime(double x) noexcept {
    if (x <= -1.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return 0.5 * (x + 1.0);
}

/// C¹ ramp from 0 (x ≤ −1) to 1 (x ≥ 1), built from two quadratic pieces.
[[nodiscard]] inline double blend_ramp(double x) noexcept {
    if (x <= -1.0) return 0.0;
    if (x >= 1.0) return 1.0;
    if (x <= 0.0) return 0.5 * (x + 1.0) * (x + 1.0);
    return 1.0 - 0.5 * (1.0 - x) * (1.0 - x);
}

[[nodiscard]] inline double japanese(double x) noexcept { return std::sqrt(1.0 + x * x); }

/// ω_η = exp(η σ). Only ratios or logs should be formed on large domains.
struct ExponentialWeight {
    double eta = 0.0;

    [[nodiscard]] double value(double x) const noexcept { return std::exp(eta * blend_sigma(x)); }
    [[nodiscard]] double log_value(double x) const noexcept { return eta * blend_sigma(x); }
    /// ω(x)/ω(y) without overflow.
    [[nodiscard]] double ratio(double x, double y) const noexcept {
        return std::exp(eta * (blend_sigma(x) - blend_sigma(y)));
    }
};

/// ρ = ⟨x⟩^{r(x)}, r(x) = r− + (r+ − r−) s(x).
struct AlgebraicWeight {
    double r_minus = 0.0;
    double r_plus = 0.0;

    [[nodiscard]] static AlgebraicWeight uniform(double r) noexcept { return {r, r}; }

    [[nodiscard]] double exponent(double x) const noexcept {
        return r_minus + (r_plus - r_minus) * blend_ramp(x);
    }
    [[nodiscard]] double value(double x) const noexcept { return std::pow(japanese(x), exponent(x)); }
};

[[nodiscard]] inline double eval_exp_weight(const ExponentialWeight& w, double x) noexcept { return w.value(x); }
[[nodiscard]] inline double eval_alg_weight(const AlgebraicWeight& w, double x) noexcept { return w.value(x); }

/// Discrete ‖ρ g‖_{H^k}: trapezoid of Σ_{j ≤ k} |ρ g^{(j)}|², weight outside the derivative.
/// k = 1 uses the second-order centered difference for g'; larger k use the
/// fourth-order stencil tables (diagnostic only).
struct WeightedNorm {
    AlgebraicWeight weight;
    int sobolev_order = 1;

    template <class T>
    [[nodiscard]] double squared(const Grid& g, std::span<const T> u) const {
        if (g.n < 8 || u.size() < 8) throw Error(ErrorCode::GridTooCoarse, "weighted norm needs >= 8 points");
        if (u.size() != g.n) throw Error(ErrorCode::GridMismatch, "grid function size differs from grid");
        std::vector<double> rho2(g.n);
        for (std::size_t i = 0; i < g.n; ++i) {
            const double r = weight.value(g.x(i));
            rho2[i] = r * r;
        }
        auto trapz = [&](auto&& term) {
            double s = 0.5 * (rho2.front() * term(0) + rho2.back() * term(g.n - 1));
            for (std::size_t i = 1; i + 1 < g.n; ++i) s += rho2[i] * term(i);
            return s * g.h;
        };
        double total = trapz([&](std::size_t i) { return std::norm(u[i]); });
        if (sobolev_order >= 1) {
            const auto d = centered_first_derivative(g, u);
            total += trapz([&](std::size_t i) { return std::norm(d[i]); });
        }
        for (int k = 2; k <= sobolev_order; ++k) {
            const auto d = differentiate(g, u, k);
            total += trapz([&](std::size_t i) { return std::norm(d[i]); });
        }
        return total;
    }

    template <class T>
    [[nodiscard]] double operator()(const Grid& g, std::span<const T> u) const {
        return std::sqrt(squared(g, u));
    }

    template <class T>
    [[nodiscard]] double operator()(const Grid& g, const std::vector<T>& u) const {
        return (*this)(g, std::span<const T>(u));
    }

    /// Real part of the associated inner product.
    template <class T>
    [[nodiscard]] double inner(const Grid& g, std::span<const T> u, std::span<const T> v) const {
        std::vector<double> rho2(g.n);
        for (std::size_t i = 0; i < g.n; ++i) {
            const double r = weight.value(g.x(i));
            rho2[i] = r * r;
        }
        auto trapz = [&](auto&& term) {
            double s = 0.5 * (rho2.front() * term(0) + rho2.back() * term(g.n - 1));
            for (std::size_t i = 1; i + 1 < g.n; ++i) s += rho2[i] * term(i);
            return s * g.h;
        };
        double total = trapz([&](std::size_t i) { return std::real(u[i] * std::conj(v[i])); });
        if (sobolev_order >= 1) {
            const auto du = centered_first_derivative(g, u);
            const auto dv = centered_first_derivative(g, v);
            total += trapz([&](std::size_t i) { return std::real(du[i] * std::conj(dv[i])); });
        }
        return total;
    }

    template <class T>
    [[nodiscard]] static std::vector<T> centered_first_derivative(const Grid& g, std::span<const T> u) {
        std::vector<T> d(g.n);
        const double ih = 1.0 / g.h;
        for (std::size_t i = 1; i + 1 < g.n; ++i) d[i] = 0.5 * ih * (u[i + 1] - u[i - 1]);
        d[0] = ih * (-1.5 * u[0] + 2.0 * u[1] - 0.5 * u[2]);
        d[g.n - 1] = ih * (1.5 * u[g.n - 1] - 2.0 * u[g.n - 2] + 0.5 * u[g.n - 3]);
        return d;
    }
};

template <class T>
[[nodiscard]] double weighted_h1_norm(const Grid& g, std::span<const T> u, const AlgebraicWeight& w) {
    return WeightedNorm{w, 1}(g, u);
}

}  // namespace pulled
