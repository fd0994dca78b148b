#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace pulled {

using cplx = std::complex<double>;

/// Polynomials are stored with ascending coefficients: c[0] + c[1] x + ...

template <class C, class T>
[[nodiscard]] T horner(std::span<const C> c, T x) {
    T acc{};
    for (std::size_t i = c.size(); i-- > 0;) acc = acc * x + T(c[i]);
    return acc;
}

template <class C>
[[nodiscard]] std::vector<C> derivative(std::span<const C> c, int order = 1) {
    std::vector<C> d(c.begin(), c.end());
    for (int o = 0; o < order; ++o) {
        if (d.size() <= 1) return {C{}};
        std::vector<C> next(d.size() - 1);
        for (std::size_t k = 1; k < d.size(); ++k) next[k - 1] = C(double(k)) * d[k];
        d = std::move(next);
    }
    return d;
}

/// Coefficients of p(x + s). Exact Taylor shift via repeated synthetic division.
template <class C>
[[nodiscard]] std::vector<C> taylor_shift(std::span<const C> c, C s) {
    std::vector<C> a(c.begin(), c.end());
    const std::size_t n = a.size();
    for (std::size_t k = 0; k + 1 < n; ++k)
        for (std::size_t j = n - 1; j > k; --j) a[j - 1] += s * a[j];
    return a;
}

/// Product of two polynomials.
template <class C>
[[nodiscard]] std::vector<C> poly_mul(std::span<const C> a, std::span<const C> b) {
    if (a.empty() || b.empty()) return {};
    std::vector<C> r(a.size() + b.size() - 1, C{});
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

}  // namespace pulled
