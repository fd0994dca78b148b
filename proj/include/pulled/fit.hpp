#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/special_functions/legendre.hpp>

#include "pulled/error.hpp"

namespace pulled {

struct LineFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    double slope_stderr = std::numeric_limits<double>::quiet_NaN();
    std::size_t samples = 0;
};

/// Ordinary least squares y = a + b x.
[[nodiscard]] inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    LineFit f;
    const std::size_t n = std::min(x.size(), y.size());
    f.samples = n;
    if (n < 2) return f;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (n > 2) {
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            ss += r * r;
        }
        f.slope_stderr = std::sqrt(ss / double(n - 2) / sxx);
    } else {
        f.slope_stderr = 0.0;
    }
    return f;
}

/// Log-log slope of positive samples; non-positive values are skipped.
[[nodiscard]] inline LineFit fit_loglog(std::span<const double> x, std::span<const double> y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i)
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    return fit_line(lx, ly);
}

/// n log-uniform samples in [a, b].
[[nodiscard]] inline std::vector<double> logspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = a;
        return v;
    }
    const double la = std::log(a), lb = std::log(b);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::exp(la + (lb - la) * double(i) / double(n - 1));
    v.front() = a;
    v.back() = b;
    return v;
}

struct QuadratureRule {
    std::vector<double> nodes;    ///< on [-1, 1]
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
[[nodiscard]] inline QuadratureRule gauss_legendre(unsigned n) {
    QuadratureRule q;
    const auto pos = boost::math::legendre_p_zeros<double>(int(n));  // nonnegative zeros, ascending
    auto weight = [n](double x) {
        const double dp = boost::math::legendre_p_prime(int(n), x);
        return 2.0 / ((1.0 - x * x) * dp * dp);
    };
    for (auto it = pos.rbegin(); it != pos.rend(); ++it) {
        if (*it == 0.0) continue;
        q.nodes.push_back(-*it);
        q.weights.push_back(weight(*it));
    }
    for (double x : pos) {
        q.nodes.push_back(x);
        q.weights.push_back(weight(x));
    }
    return q;
}

}  // namespace pulled
