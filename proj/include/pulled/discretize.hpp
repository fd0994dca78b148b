#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "pulled/banded.hpp"
#include "pulled/fd.hpp"
#include "pulled/poly.hpp"

namespace pulled {

/// Row layout shared by every boundary-value discretization of an order-2m operator:
/// rows 0..m−1 hold left boundary conditions at node 0, rows n−m..n−1 hold right
/// boundary conditions at node n−1, and row i in between imposes the equation at node i.
struct RowLayout {
    int order = 2;  ///< 2m

    [[nodiscard]] int m() const noexcept { return order / 2; }
    /// Band half-width that covers interior stencils and one-sided boundary rows.
    [[nodiscard]] int bandwidth() const noexcept { return order + 3; }
    [[nodiscard]] bool is_equation_row(std::size_t i, std::size_t n) const noexcept {
        return i >= std::size_t(m()) && i + std::size_t(m()) < n;
    }
};

/// A boundary condition Σ_j coeffs[j] u^{(j)}(x_b) = rhs at an end node.
template <class T>
struct BoundaryRow {
    std::vector<T> coeffs;
    T rhs{};
};

/// Coefficients (in powers of ∂) of ∂^j Π_s (∂ − ν_s): the m rows j = 0..m−1 force the
/// boundary jet into the span of the modes e^{ν_s x}, which is the exact far-field
/// condition for a constant-coefficient tail.
[[nodiscard]] inline std::vector<BoundaryRow<cplx>> farfield_rows(std::span<const cplx> kept_roots) {
    std::vector<cplx> S{1.0};
    for (cplx r : kept_roots) {
        const cplx lin[] = {-r, 1.0};
        S = poly_mul(std::span<const cplx>(S), std::span<const cplx>(lin));
    }
    std::vector<BoundaryRow<cplx>> rows;
    for (std::size_t j = 0; j < kept_roots.size(); ++j) {
        BoundaryRow<cplx> row;
        row.coeffs.assign(j, 0.0);
        row.coeffs.insert(row.coeffs.end(), S.begin(), S.end());
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Writes one boundary row into the matrix using one-sided fourth-order stencils at
/// the end node; the row is normalized to unit max coefficient, rhs scaled alike.
template <class T>
T put_boundary_row(BandMatrix<T>& A, std::size_t row, const Grid& g, bool left, const BoundaryRow<T>& bc) {
    A.zero_row(row);
    std::size_t first = 0;
    std::vector<T> w;
    for (std::size_t j = 0; j < bc.coeffs.size(); ++j) {
        if (bc.coeffs[j] == T{}) continue;
        const auto st = boundary_stencil(g, int(j), left);
        if (w.empty()) {
            first = left ? 0 : g.n - (bc.coeffs.size() + 5);
            w.assign(bc.coeffs.size() + 5, T{});
        }
        for (std::size_t q = 0; q < st.w.size(); ++q) w[st.first + q - first] += bc.coeffs[j] * T(st.w[q]);
    }
    double big = 0.0;
    for (const auto& v : w) big = std::max(big, std::abs(v));
    const T scale = big > 0.0 ? T(1.0 / big) : T(1.0);
    for (std::size_t q = 0; q < w.size(); ++q)
        if (w[q] != T{}) A(row, first + q) = w[q] * scale;
    return bc.rhs * scale;
}

/// Equation rows Σ_k a_k(x_i) u^{(k)}(x_i) with optional per-entry factor
/// ratio(i, j) multiplying the stencil weight (used for conjugated derivatives).
template <class T, class CoeffFn, class RatioFn>
void put_equation_rows(BandMatrix<T>& A, const Grid& g, const RowLayout& lay, int max_deriv, CoeffFn&& coeff,
                       RatioFn&& ratio) {
    std::vector<StencilTable> tabs;
    for (int k = 0; k <= max_deriv; ++k) tabs.emplace_back(g, std::max(k, 1));
    for (std::size_t i = 0; i < g.n; ++i) {
        if (!lay.is_equation_row(i, g.n)) continue;
        A.zero_row(i);
        for (int k = 0; k <= max_deriv; ++k) {
            const T a = coeff(i, k);
            if (a == T{}) continue;
            if (k == 0) {
                A(i, i) += a;
                continue;
            }
            const auto st = tabs[std::size_t(k)].at(i);
            for (std::size_t q = 0; q < st.w.size(); ++q) {
                const std::size_t j = st.first + q;
                A(i, j) += a * T(st.w[q]) * T(ratio(i, j));
            }
        }
    }
}

}  // namespace pulled
