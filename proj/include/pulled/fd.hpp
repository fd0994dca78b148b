#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "pulled/error.hpp"

namespace pulled {

/// Uniform grid on [x0, x0 + (n-1) h].
struct Grid {
    double x0 = 0.0;
    double h = 1.0;
    std::size_t n = 0;

    [[nodiscard]] static Grid symmetric(double L, std::size_t n) {
        if (n < 2) throw Error(ErrorCode::GridTooCoarse, "grid needs at least 2 nodes");
        return Grid{-L, 2.0 * L / double(n - 1), n};
    }

    [[nodiscard]] double x(std::size_t i) const noexcept { return x0 + h * double(i); }
    [[nodiscard]] double x_max() const noexcept { return x(n - 1); }
    [[nodiscard]] std::vector<double> nodes() const {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = x(i);
        return v;
    }
    /// Index of the node nearest to xq, clamped to the grid.
    [[nodiscard]] std::size_t nearest(double xq) const noexcept {
        const double t = std::round((xq - x0) / h);
        if (t <= 0.0) return 0;
        return std::min(n - 1, static_cast<std::size_t>(t));
    }
    [[nodiscard]] bool same_as(const Grid& o) const noexcept {
        return n == o.n && std::abs(x0 - o.x0) <= 1e-12 * (1.0 + std::abs(x0)) &&
               std::abs(h - o.h) <= 1e-12 * h;
    }
};

/// Finite-difference weights for derivatives 0..max_order at z from arbitrary nodes
/// (Fornberg's recursion). Returns w[k][j] for derivative k, node j.
[[nodiscard]] inline std::vector<std::vector<double>> fornberg_weights(double z, std::span<const double> x,
                                                                     int max_order) {
    const std::size_t n = x.size();
    const std::size_t M = std::size_t(max_order);
    std::vector<std::vector<double>> c(M + 1, std::vector<double>(n, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - z;
    c[0][0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const std::size_t mn = std::min(i, M);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - z;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (std::size_t k = mn; k >= 1; --k)
                    c[k][i] = c1 * (double(k) * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (std::size_t k = mn; k >= 1; --k)
                c[k][j] = (c4 * c[k][j] - double(k) * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

/// Stencil on a uniform grid: weights already scaled by h^{-order}, applied at
/// nodes first, first+1, ....
struct Stencil {
    std::size_t first = 0;
    std::vector<double> w;
};

/// Stencils for the k-th derivative with fourth-order accuracy. Interior rows are
/// centered; rows too close to an end use a shifted stencil one point wider so the
/// order is kept.
class StencilTable {
public:
    static constexpr int accuracy = 4;

    [[nodiscard]] static int centered_points(int k) { return 2 * ((k + 1) / 2) - 1 + accuracy; }
    [[nodiscard]] static int half_width(int k) { return (centered_points(k) - 1) / 2; }

    StencilTable(const Grid& g, int k) : grid_(g), k_(k) {
        const int np = centered_points(k);
        const int s = half_width(k);
        std::vector<double> off(np);
        for (int j = 0; j < np; ++j) off[j] = double(j - s);
        centered_ = scaled(fornberg_weights(0.0, off, k)[k]);
        const int wide = np + 1;
        if (std::size_t(wide) > g.n)
            throw Error(ErrorCode::GridTooCoarse, "grid too small for derivative stencil");
        std::vector<double> offw(wide);
        for (int j = 0; j < wide; ++j) offw[j] = double(j);
        for (int r = 0; r < wide; ++r) one_sided_.push_back(scaled(fornberg_weights(double(r), offw, k)[k]));
    }

    [[nodiscard]] int order() const noexcept { return k_; }

    [[nodiscard]] Stencil at(std::size_t i) const {
        const std::size_t n = grid_.n;
        const std::size_t s = std::size_t(half_width(k_));
        if (i >= s && i + s < n) return Stencil{i - s, centered_};
        const std::size_t wide = one_sided_.size();
        if (i < s) return Stencil{0, one_sided_[i]};
        // mirror of the left-end stencils; odd derivatives flip sign
        const std::size_t r = n - 1 - i;
        std::vector<double> w(one_sided_[r].rbegin(), one_sided_[r].rend());
        if (k_ % 2 == 1)
            for (auto& v : w) v = -v;
        return Stencil{n - wide, std::move(w)};
    }

private:
    [[nodiscard]] std::vector<double> scaled(std::vector<double> w) const {
        const double f = std::pow(grid_.h, -k_);
        for (auto& v : w) v *= f;
        return w;
    }

    Grid grid_;
    int k_;
    std::vector<double> centered_;
    std::vector<std::vector<double>> one_sided_;
};

/// One-sided stencil for the k-th derivative at the left end (node 0) or the right end.
[[nodiscard]] inline Stencil boundary_stencil(const Grid& g, int k, bool left) {
    const int np = k + StencilTable::accuracy;
    if (std::size_t(np) > g.n) throw Error(ErrorCode::GridTooCoarse, "grid too small for boundary stencil");
    std::vector<double> off(np);
    for (int j = 0; j < np; ++j) off[j] = double(j);
    auto w = fornberg_weights(0.0, off, k)[k];
    const double f = std::pow(g.h, -k);
    for (auto& v : w) v *= f;
    if (left) return Stencil{0, std::move(w)};
    std::vector<double> r(w.rbegin(), w.rend());
    if (k % 2 == 1)
        for (auto& v : r) v = -v;
    return Stencil{g.n - std::size_t(np), std::move(r)};
}

/// Apply the k-th derivative to grid data.
template <class V>
[[nodiscard]] std::vector<V> differentiate(const Grid& g, std::span<const V> u, int k) {
    if (k == 0) return std::vector<V>(u.begin(), u.end());
    StencilTable tab(g, k);
    std::vector<V> d(g.n, V{});
    for (std::size_t i = 0; i < g.n; ++i) {
        const auto st = tab.at(i);
        V acc{};
        for (std::size_t j = 0; j < st.w.size(); ++j) acc += st.w[j] * u[st.first + j];
        d[i] = acc;
    }
    return d;
}

}  // namespace pulled
