#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "pulled/error.hpp"
#include "pulled/poly.hpp"

namespace pulled {

namespace detail {

inline void horner_with_derivative(std::span<const cplx> c, cplx z, cplx& p, cplx& dp) {
    p = 0.0;
    dp = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) {
        dp = dp * z + p;
        p = p * z + c[i];
    }
}

}  // namespace detail

/// All roots of a complex polynomial (ascending coefficients) by Aberth-Ehrlich
/// simultaneous iteration followed by one Newton polish per root.
/// Exact zero trailing coefficients are deflated first so zero roots come out exact.
[[nodiscard]] inline std::vector<cplx> polynomial_roots(std::span<const cplx> coeffs,
                                                        int max_iter = 500) {
    std::vector<cplx> c(coeffs.begin(), coeffs.end());
    while (!c.empty() && c.back() == cplx(0.0)) c.pop_back();
    if (c.size() <= 1) return {};

    std::vector<cplx> roots;
    std::size_t lead_zeros = 0;
    while (lead_zeros < c.size() && c[lead_zeros] == cplx(0.0)) ++lead_zeros;
    roots.assign(lead_zeros, cplx(0.0));
    c.erase(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(lead_zeros));

    const std::size_t n = c.size() - 1;
    if (n == 0) return roots;
    const cplx lead = c.back();
    for (auto& v : c) v /= lead;

    // Fujiwara-type radius bound for the initial circle.
    double radius = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        radius = std::max(radius, std::pow(std::abs(c[k]), 1.0 / double(n - k)));
    radius = std::max(radius, 1e-3);

    std::vector<cplx> z(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double th = 2.0 * std::numbers::pi * double(k) / double(n) + 0.4;
        z[k] = radius * cplx(std::cos(th), std::sin(th));
    }

    for (int it = 0; it < max_iter; ++it) {
        double worst = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            cplx p, dp;
            detail::horner_with_derivative(c, z[k], p, dp);
            if (p == cplx(0.0)) continue;
            const cplx ratio = p / dp;
            cplx sum = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != k) sum += 1.0 / (z[k] - z[j]);
            const cplx step = ratio / (1.0 - ratio * sum);
            if (std::isfinite(step.real()) && std::isfinite(step.imag())) {
                z[k] -= step;
                worst = std::max(worst, std::abs(step) / std::max(std::abs(z[k]), 1e-300));
            }
        }
        if (worst < 1e-15) break;
    }

    for (auto& r : z) {
        cplx p, dp;
        detail::horner_with_derivative(c, r, p, dp);
        if (std::abs(dp) > 0.0) {
            const cplx cand = r - p / dp;
            cplx pc, dpc;
            detail::horner_with_derivative(c, cand, pc, dpc);
            if (std::abs(pc) <= std::abs(p)) r = cand;
        }
    }
    roots.insert(roots.end(), z.begin(), z.end());
    return roots;
}

[[nodiscard]] inline std::vector<cplx> polynomial_roots(std::span<const double> coeffs) {
    std::vector<cplx> c(coeffs.begin(), coeffs.end());
    return polynomial_roots(std::span<const cplx>(c));
}

}  // namespace pulled
