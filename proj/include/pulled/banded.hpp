#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pulled/error.hpp"

namespace pulled {

/// Square band matrix with kl sub- and ku super-diagonals.
/// Row i stores columns [i-kl, i+kl+ku]; the extra kl columns hold fill-in
/// created by row interchanges during factorization.
template <class T>
class BandMatrix {
public:
    BandMatrix() = default;
    BandMatrix(std::size_t n, int kl, int ku)
        : n_(n), kl_(kl), ku_(ku), width_(2 * kl + ku + 1), data_(n * width_, T{}) {}

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] int lower() const noexcept { return kl_; }
    [[nodiscard]] int upper() const noexcept { return ku_; }

    [[nodiscard]] bool in_band(std::size_t i, std::size_t j) const noexcept {
        const auto d = static_cast<long>(j) - static_cast<long>(i);
        return d >= -kl_ && d <= ku_;
    }

    T& operator()(std::size_t i, std::size_t j) { return data_[offset(i, j)]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[offset(i, j)]; }

    [[nodiscard]] T get(std::size_t i, std::size_t j) const {
        return in_band(i, j) ? data_[offset(i, j)] : T{};
    }

    void add(std::size_t i, std::size_t j, T v) {
        if (!in_band(i, j))
            throw Error(ErrorCode::GridMismatch, "band entry (" + std::to_string(i) + "," +
                                                     std::to_string(j) + ") outside band");
        data_[offset(i, j)] += v;
    }

    void zero_row(std::size_t i) {
        std::fill_n(data_.begin() + static_cast<std::ptrdiff_t>(i * width_), width_, T{});
    }

    /// y = A x
    template <class V>
    [[nodiscard]] std::vector<V> apply(std::span<const V> x) const {
        std::vector<V> y(n_, V{});
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t j0 = i >= std::size_t(kl_) ? i - kl_ : 0;
            const std::size_t j1 = std::min(n_ - 1, i + std::size_t(ku_));
            V acc{};
            for (std::size_t j = j0; j <= j1; ++j) acc += V(data_[offset(i, j)]) * x[j];
            y[i] = acc;
        }
        return y;
    }

    /// Convert element type (real operator to complex shifted system).
    template <class U>
    [[nodiscard]] BandMatrix<U> cast() const {
        BandMatrix<U> out(n_, kl_, ku_);
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t j0 = i >= std::size_t(kl_) ? i - kl_ : 0;
            const std::size_t j1 = std::min(n_ - 1, i + std::size_t(ku_));
            for (std::size_t j = j0; j <= j1; ++j) out(i, j) = U((*this)(i, j));
        }
        return out;
    }

private:
    template <class U>
    friend class BandLU;

    [[nodiscard]] std::size_t offset(std::size_t i, std::size_t j) const noexcept {
        return i * width_ + static_cast<std::size_t>(static_cast<long>(j) - static_cast<long>(i) + kl_);
    }

    std::size_t n_ = 0;
    int kl_ = 0;
    int ku_ = 0;
    std::size_t width_ = 1;
    std::vector<T> data_;
};

/// LU factorization with partial pivoting of a band matrix (gbtrf-style, unblocked).
template <class T>
class BandLU {
public:
    BandLU() = default;

    explicit BandLU(BandMatrix<T> a) : a_(std::move(a)), piv_(a_.n_) {
        const std::size_t n = a_.n_;
        const std::size_t kl = std::size_t(a_.kl_);
        const std::size_t kv = std::size_t(a_.kl_ + a_.ku_);
        double scale = 0.0;
        for (const auto& v : a_.data_) scale = std::max(scale, std::abs(v));
        const double tiny = 1e-300 + scale * 1e-15 * 1e-15;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t last = std::min(n - 1, k + kl);
            std::size_t p = k;
            double best = std::abs(a_(k, k));
            for (std::size_t i = k + 1; i <= last; ++i) {
                const double v = std::abs(a_(i, k));
                if (v > best) {
                    best = v;
                    p = i;
                }
            }
            piv_[k] = p;
            if (!(best > tiny))
                throw Error(ErrorCode::SingularSystem, "zero pivot at row " + std::to_string(k));
            const std::size_t cend = std::min(n - 1, k + kv);
            if (p != k)
                for (std::size_t c = k; c <= cend; ++c) std::swap(a_(k, c), a_(p, c));
            const T inv = T(1.0) / a_(k, k);
            for (std::size_t i = k + 1; i <= last; ++i) {
                const T l = a_(i, k) * inv;
                a_(i, k) = l;
                if (l == T{}) continue;
                for (std::size_t c = k + 1; c <= cend; ++c) a_(i, c) -= l * a_(k, c);
            }
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return a_.n_; }

    /// Solve in place; V may be T or a wider type (complex rhs with real factors).
    template <class V>
    void solve_in_place(std::span<V> b) const {
        const std::size_t n = a_.n_;
        const std::size_t kl = std::size_t(a_.kl_);
        const std::size_t kv = std::size_t(a_.kl_ + a_.ku_);
        for (std::size_t k = 0; k < n; ++k) {
            if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
            const std::size_t last = std::min(n - 1, k + kl);
            for (std::size_t i = k + 1; i <= last; ++i) b[i] -= V(a_(i, k)) * b[k];
        }
        for (std::size_t k = n; k-- > 0;) {
            const std::size_t cend = std::min(n - 1, k + kv);
            V acc = b[k];
            for (std::size_t c = k + 1; c <= cend; ++c) acc -= V(a_(k, c)) * b[c];
            b[k] = acc / V(a_(k, k));
        }
    }

    template <class V>
    [[nodiscard]] std::vector<V> solve(std::span<const V> b) const {
        std::vector<V> x(b.begin(), b.end());
        solve_in_place(std::span<V>(x));
        return x;
    }

private:
    BandMatrix<T> a_;
    std::vector<std::size_t> piv_;
};

}  // namespace pulled
