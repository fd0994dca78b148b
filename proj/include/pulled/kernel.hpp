#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pulled/banded.hpp"
#include "pulled/discretize.hpp"
#include "pulled/error.hpp"
#include "pulled/fd.hpp"
#include "pulled/fit.hpp"
#include "pulled/model.hpp"
#include "pulled/poly.hpp"
#include "pulled/roots.hpp"
#include "pulled/weights.hpp"

namespace pulled {

using CMatrix = Eigen::MatrixXcd;

/// d^+(0, ν − η*) = Σ_{k=2}^{2m} c_k ν^k. c[0], c[1] are zeroed after the residual check.
struct ConjugatedSymbol {
    std::vector<double> c;
    double cancellation_residual = 0.0;  ///< |c_0| + |c_1| before zeroing

    [[nodiscard]] int order() const noexcept { return int(c.size()) - 1; }
    [[nodiscard]] int m() const noexcept { return order() / 2; }
    [[nodiscard]] double alpha() const noexcept { return c[2]; }
    [[nodiscard]] double lead() const noexcept { return c.back(); }
    [[nodiscard]] double nu0() const noexcept { return 1.0 / std::sqrt(alpha()); }

    /// Σ c_k ν^k (without −γ²).
    [[nodiscard]] cplx eval(cplx nu) const { return horner(std::span<const double>(c), nu); }
};

[[nodiscard]] inline ConjugatedSymbol shift_symbol(const ScalarModel& model, const SpreadingSpeed& ss) {
    ConjugatedSymbol s;
    s.c = shifted_symbol_coeffs(model, ss.c_star, ss.eta_star);
    s.cancellation_residual = std::abs(s.c[0]) + std::abs(s.c[1]);
    if (s.cancellation_residual > 1e-8)
        throw Error(ErrorCode::DoubleRootResidual,
                    "|c0|+|c1| = " + std::to_string(s.cancellation_residual) + " at the supplied (c*, eta*)");
    s.c[0] = 0.0;
    s.c[1] = 0.0;
    return s;
}

/// First-order system U' = M(γ)U for (∂^j u)_{j<2m}: superdiagonal ones, bottom row
/// [γ²/c_{2m}, −c_1/c_{2m}, −c_2/c_{2m}, …, −c_{2m−1}/c_{2m}].
[[nodiscard]] inline CMatrix build_companion(const ConjugatedSymbol& s, cplx gamma) {
    const int n = s.order();
    CMatrix M = CMatrix::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) M(i, i + 1) = 1.0;
    const double lead = s.lead();
    M(n - 1, 0) = gamma * gamma / lead;
    for (int k = 1; k < n; ++k) M(n - 1, k) = -s.c[std::size_t(k)] / lead;
    return M;
}

/// Roots of Σ c_k ν^k = γ², labelled [ν^+, ν^−, strong...].
struct SpatialRoots {
    cplx gamma = 0.0;
    cplx nu_plus = 0.0;
    cplx nu_minus = 0.0;
    std::vector<cplx> strong_stable;
    std::vector<cplx> strong_unstable;
    double separation = std::numeric_limits<double>::infinity();

    [[nodiscard]] std::vector<cplx> ordered() const {
        std::vector<cplx> r{nu_plus, nu_minus};
        r.insert(r.end(), strong_stable.begin(), strong_stable.end());
        r.insert(r.end(), strong_unstable.begin(), strong_unstable.end());
        return r;
    }
};

namespace detail {

/// Newton in z = ν/γ on Σ_{k≥2} c_k γ^{k−2} z^k = 1, well conditioned as γ → 0.
inline cplx polish_central(const ConjugatedSymbol& s, cplx gamma, cplx nu) {
    std::vector<cplx> a(s.c.size(), 0.0);
    cplx gp = 1.0;
    for (std::size_t k = 2; k < s.c.size(); ++k) {
        a[k] = s.c[k] * gp;
        gp *= gamma;
    }
    a[0] = -1.0;
    const auto da = derivative(std::span<const cplx>(a));
    cplx z = nu / gamma;
    for (int it = 0; it < 30; ++it) {
        const cplx f = horner(std::span<const cplx>(a), z);
        const cplx df = horner(std::span<const cplx>(da), z);
        if (df == cplx(0.0)) break;
        const cplx step = f / df;
        z -= step;
        if (std::abs(step) <= 4e-16 * std::abs(z)) break;
    }
    return z * gamma;
}

inline std::vector<cplx> strong_roots_at_zero(const ConjugatedSymbol& s) {
    std::vector<double> red(s.c.begin() + 2, s.c.end());
    return polynomial_roots(std::span<const double>(red));
}

}  // namespace detail

[[nodiscard]] inline SpatialRoots spatial_roots(const ConjugatedSymbol& s, cplx gamma) {
    SpatialRoots out;
    out.gamma = gamma;
    std::vector<cplx> strong;
    if (gamma == cplx(0.0)) {
        strong = detail::strong_roots_at_zero(s);
    } else {
        std::vector<cplx> q(s.c.begin(), s.c.end());
        q[0] = -gamma * gamma;
        auto all = polynomial_roots(std::span<const cplx>(q));
        std::sort(all.begin(), all.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
        if (all.size() > 2) {
            out.separation = std::abs(all[2]) / std::max(std::abs(all[1]), 1e-300);
            if (out.separation < 5.0)
                throw Error(ErrorCode::CentralRootAmbiguous,
                            "central roots not separated (factor " + std::to_string(out.separation) + ")");
        }
        const cplx ref = gamma * s.nu0();
        cplx a = detail::polish_central(s, gamma, all[0]);
        cplx b = detail::polish_central(s, gamma, all[1]);
        const double da = std::abs(a - ref) - std::abs(a + ref);
        const double db = std::abs(b - ref) - std::abs(b + ref);
        bool a_is_plus = da < db;
        if (da == db) a_is_plus = (a / gamma).real() > (b / gamma).real();
        out.nu_plus = a_is_plus ? a : b;
        out.nu_minus = a_is_plus ? b : a;
        strong.assign(all.begin() + 2, all.end());
    }
    for (cplx r : strong) (r.real() < 0.0 ? out.strong_stable : out.strong_unstable).push_back(r);
    auto by_re = [](cplx a, cplx b) { return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag()); };
    std::sort(out.strong_stable.begin(), out.strong_stable.end(), by_re);
    std::sort(out.strong_unstable.begin(), out.strong_unstable.end(), by_re);
    return out;
}

/// Frobenius covariants of M(γ) grouped by root class, together with pole data.
struct ProjectionSplit {
    cplx gamma = 0.0;
    SpatialRoots roots;
    CMatrix M;
    CMatrix P_cs, P_cu, P_ss, P_uu;
    std::vector<CMatrix> strong_stable_cov;    ///< one covariant per strong-stable root
    std::vector<CMatrix> strong_unstable_cov;  ///< one covariant per strong-unstable root
    CMatrix P_minus1;
    cplx beta = 0.0;              ///< top-right entry of P_minus1 (Richardson)
    double beta_closed_form = 0.0;
    double nu0 = 0.0;
};

namespace detail {

inline CMatrix covariant(const CMatrix& M, const std::vector<cplx>& roots, std::size_t j) {
    const auto n = M.rows();
    CMatrix P = CMatrix::Identity(n, n);
    const CMatrix I = CMatrix::Identity(n, n);
    for (std::size_t k = 0; k < roots.size(); ++k) {
        if (k == j) continue;
        const cplx d = roots[j] - roots[k];
        P = P * (M - roots[k] * I) / d;
    }
    return P;
}

inline void require_distinct(const std::vector<cplx>& roots) {
    double scale = 0.0;
    for (cplx r : roots) scale = std::max(scale, std::abs(r));
    for (std::size_t i = 0; i < roots.size(); ++i)
        for (std::size_t j = i + 1; j < roots.size(); ++j)
            if (std::abs(roots[i] - roots[j]) <= 1e-10 * std::max(scale, 1e-300))
                throw Error(ErrorCode::JordanCollision, "spatial roots coincide; shrink or enlarge gamma");
}

}  // namespace detail

/// Closed form −(√α/2) Π_{k≥3} (−1/ν_k(0)).
[[nodiscard]] inline double beta_closed_form(const ConjugatedSymbol& s) {
    cplx prod = 1.0;
    for (cplx r : detail::strong_roots_at_zero(s)) prod *= -1.0 / r;
    return -0.5 * std::sqrt(s.alpha()) * prod.real();
}

/// γ P_cs(γ) at a real positive γ.
[[nodiscard]] inline CMatrix scaled_center_stable(const ConjugatedSymbol& s, double gamma) {
    const auto r = spatial_roots(s, gamma);
    const auto ord = r.ordered();
    detail::require_distinct(ord);
    return gamma * detail::covariant(build_companion(s, gamma), ord, 1);
}

/// P_{−1} = lim γ P_cs(γ) by two-level Richardson extrapolation from γ₀, γ₀/2, γ₀/4.
[[nodiscard]] inline CMatrix pole_matrix(const ConjugatedSymbol& s, double gamma0 = 1e-3) {
    const CMatrix f0 = scaled_center_stable(s, gamma0);
    const CMatrix f1 = scaled_center_stable(s, gamma0 / 2);
    const CMatrix f2 = scaled_center_stable(s, gamma0 / 4);
    const CMatrix r1a = 2.0 * f1 - f0;
    const CMatrix r1b = 2.0 * f2 - f1;
    return (4.0 * r1b - r1a) / 3.0;
}

[[nodiscard]] inline ProjectionSplit frobenius_projections(const ConjugatedSymbol& s, cplx gamma,
                                                           const CMatrix& P_minus1) {
    ProjectionSplit out;
    out.gamma = gamma;
    out.roots = spatial_roots(s, gamma);
    out.M = build_companion(s, gamma);
    const auto ord = out.roots.ordered();
    detail::require_distinct(ord);
    const int n = s.order();
    out.P_cu = detail::covariant(out.M, ord, 0);
    out.P_cs = detail::covariant(out.M, ord, 1);
    out.P_ss = CMatrix::Zero(n, n);
    out.P_uu = CMatrix::Zero(n, n);
    const std::size_t nss = out.roots.strong_stable.size();
    for (std::size_t j = 2; j < ord.size(); ++j) {
        CMatrix P = detail::covariant(out.M, ord, j);
        if (j < 2 + nss) {
            out.P_ss += P;
            out.strong_stable_cov.push_back(std::move(P));
        } else {
            out.P_uu += P;
            out.strong_unstable_cov.push_back(std::move(P));
        }
    }
    out.P_minus1 = P_minus1;
    out.beta = P_minus1(0, n - 1);
    out.beta_closed_form = beta_closed_form(s);
    out.nu0 = s.nu0();
    if (std::abs(out.beta) < 1e-12) throw Error(ErrorCode::BetaZero, "top-right entry of P_-1 vanishes");
    return out;
}

[[nodiscard]] inline ProjectionSplit frobenius_projections(const ConjugatedSymbol& s, cplx gamma) {
    return frobenius_projections(s, gamma, pole_matrix(s));
}

/// Samples of the four kernel pieces (and their sum) for one derivative order.
struct KernelDecomposition {
    cplx gamma = 0.0;
    int derivative = 0;
    std::vector<double> x;
    std::vector<cplx> heat, c_minus_heat, tilde_c, h;

    [[nodiscard]] std::vector<cplx> total() const {
        std::vector<cplx> t(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) t[i] = heat[i] + c_minus_heat[i] + tilde_c[i] + h[i];
        return t;
    }
};

namespace detail {

inline cplx decaying_exp(cplx nu, double x, bool should_decay) {
    const double e = (nu * x).real();
    if (should_decay && e > 700.0)
        throw Error(ErrorCode::OverflowGuard, "growing exponent in a decaying kernel term (mislabelled root)");
    return std::exp(nu * x);
}

}  // namespace detail

[[nodiscard]] inline KernelDecomposition eval_kernel_pieces(const ProjectionSplit& sp, const ConjugatedSymbol& s,
                                                            cplx gamma, std::span<const double> x, int k = 0) {
    KernelDecomposition out;
    out.gamma = gamma;
    out.derivative = k;
    out.x.assign(x.begin(), x.end());
    const std::size_t N = x.size();
    out.heat.resize(N);
    out.c_minus_heat.resize(N);
    out.tilde_c.resize(N);
    out.h.resize(N);
    const int n = s.order();
    const double cinv = 1.0 / s.lead();
    const cplx bg = sp.beta / gamma;
    const cplx nu0g = sp.nu0 * gamma;
    const cplx tcs = sp.P_cs(0, n - 1) - bg;  // (P̃^cs)_{1,2m}
    const cplx tcu = sp.P_cu(0, n - 1) + bg;  // (P̃^cu)_{1,2m}
    const cplx nm = sp.roots.nu_minus, np = sp.roots.nu_plus;
    auto pw = [k](cplx v) { return std::pow(v, k); };
    for (std::size_t i = 0; i < N; ++i) {
        const double xi = x[i];
        if (xi >= 0.0) {
            const cplx heat = -cinv * bg * pw(-nu0g) * detail::decaying_exp(-nu0g, xi, true);
            const cplx gc = -cinv * bg * pw(nm) * detail::decaying_exp(nm, xi, true);
            out.heat[i] = heat;
            out.c_minus_heat[i] = gc - heat;
            out.tilde_c[i] = -cinv * tcs * pw(nm) * detail::decaying_exp(nm, xi, true);
            cplx hsum = 0.0;
            for (std::size_t j = 0; j < sp.roots.strong_stable.size(); ++j) {
                const cplx nu = sp.roots.strong_stable[j];
                hsum += pw(nu) * detail::decaying_exp(nu, xi, true) * sp.strong_stable_cov[j](0, n - 1);
            }
            out.h[i] = -cinv * hsum;
        } else {
            const cplx heat = -cinv * bg * pw(nu0g) * detail::decaying_exp(nu0g, xi, true);
            const cplx gc = -cinv * bg * pw(np) * detail::decaying_exp(np, xi, true);
            out.heat[i] = heat;
            out.c_minus_heat[i] = gc - heat;
            out.tilde_c[i] = cinv * tcu * pw(np) * detail::decaying_exp(np, xi, true);
            cplx hsum = 0.0;
            for (std::size_t j = 0; j < sp.roots.strong_unstable.size(); ++j) {
                const cplx nu = sp.roots.strong_unstable[j];
                hsum += pw(nu) * detail::decaying_exp(nu, xi, true) * sp.strong_unstable_cov[j](0, n - 1);
            }
            out.h[i] = cinv * hsum;
        }
    }
    return out;
}

/// Odd heat kernel (1/γ)(e^{−ν₀γ|x−y|} − e^{−ν₀γ(x+y)}), with its γ → 0 limit 2ν₀ min(x, y).
[[nodiscard]] inline cplx eval_G_odd(cplx gamma, double nu0, double x, double y) {
    if (gamma == cplx(0.0)) return 2.0 * nu0 * std::min(x, y);
    const cplx a = -nu0 * gamma * std::abs(x - y);
    const cplx b = -nu0 * gamma * (x + y);
    // e^a − e^b = e^a (1 − e^{b−a}); expm1 keeps small-γ accuracy
    const cplx d = b - a;
    cplx em1;
    if (std::abs(d) < 1e-5)
        em1 = d * (1.0 + d * (0.5 + d / 6.0));
    else
        em1 = std::exp(d) - 1.0;
    return -std::exp(a) * em1 / gamma;
}

/// ν₂^± from a least-squares fit of (ν^±(γ) ∓ ν₀γ)/γ² = ν₂ + ν₃γ + ν₄γ² at γ = j·10⁻³, j = 1..8.
struct SecondOrderRoots {
    double nu2_plus = 0.0;
    double nu2_minus = 0.0;
};

[[nodiscard]] inline SecondOrderRoots fit_second_order_roots(const ConjugatedSymbol& s) {
    Eigen::MatrixXd A(8, 3);
    Eigen::VectorXd bp(8), bm(8);
    for (int j = 0; j < 8; ++j) {
        const double g = 1e-3 * double(j + 1);
        const auto r = spatial_roots(s, g);
        A(j, 0) = 1.0;
        A(j, 1) = g;
        A(j, 2) = g * g;
        bp(j) = (r.nu_plus.real() - s.nu0() * g) / (g * g);
        bm(j) = (r.nu_minus.real() + s.nu0() * g) / (g * g);
    }
    const auto qr = A.colPivHouseholderQr();
    return {qr.solve(bp)(0), qr.solve(bm)(0)};
}

struct BoundCheck {
    std::string name;
    std::vector<double> gammas;
    std::vector<double> ratios;  ///< sup over the grid of |LHS| / bound shape
    double max_growth = 0.0;     ///< max ratio_{j+1}/ratio_j
    bool bounded = true;
};

struct BoundReport {
    std::vector<BoundCheck> checks;
    SecondOrderRoots nu2;
    [[nodiscard]] bool all_bounded() const {
        return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.bounded; });
    }
};

namespace detail {

/// Ratios below `floor` are rounding noise of a quantity that vanishes identically (the
/// regular part for second-order models); they cannot witness growth.
inline void finish_check(BoundCheck& c, double tol_growth, double floor = 1e-9) {
    c.max_growth = 0.0;
    for (std::size_t j = 1; j < c.ratios.size(); ++j) {
        const double prev = c.ratios[j - 1];
        if (c.ratios[j] <= floor) continue;
        const double g = prev > floor ? c.ratios[j] / prev : INFINITY;
        c.max_growth = std::max(c.max_growth, g);
    }
    c.bounded = c.max_growth <= 1.0 + tol_growth;
}

}  // namespace detail

/// Sup-ratios of the kernel estimates along a decreasing real γ sequence.
/// The center-minus-heat check combines derivative orders 0..2m−1; the others use k = 0.
[[nodiscard]] inline BoundReport kernel_bound_report(const ConjugatedSymbol& s, std::span<const double> gammas,
                                                     std::span<const double> x, double tol_growth = 0.2) {
    BoundReport rep;
    rep.nu2 = fit_second_order_roots(s);
    const CMatrix Pm1 = pole_matrix(s);
    const double cinv = 1.0 / s.lead();
    auto named = [](const char* name) {
        BoundCheck c;
        c.name = name;
        return c;
    };
    BoundCheck l23 = named("center_minus_heat_linear"), l24 = named("center_second_order"),
               l25 = named("regular_part_halving"), l26a = named("odd_heat_limit"), l26b = named("odd_heat_second_order");
    std::vector<double> yv;
    for (double xi : x)
        if (xi >= 0.0) yv.push_back(xi);
    for (double g : gammas) {
        const auto sp = frobenius_projections(s, g, Pm1);
        double r23 = 0.0;
        for (int k = 0; k < s.order(); ++k) {
            const auto kd = eval_kernel_pieces(sp, s, g, x, k);
            for (std::size_t i = 0; i < x.size(); ++i)
                r23 = std::max(r23, std::abs(kd.c_minus_heat[i]) / (g * japanese(x[i])));
        }
        const auto kd = eval_kernel_pieces(sp, s, g, x, 0);
        double r24 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double hx = (x[i] >= 0.0 ? rep.nu2.nu2_minus : rep.nu2.nu2_plus) * x[i];
            const cplx lhs = kd.c_minus_heat[i] + cinv * sp.beta * g * hx;
            r24 = std::max(r24, std::abs(lhs) / (g * g * japanese(x[i]) * japanese(x[i])));
        }
        // deflated difference between γ and γ/2 of the regular remainder G̃^c + G^h
        const auto sp2 = frobenius_projections(s, g / 2, Pm1);
        const auto kd2 = eval_kernel_pieces(sp2, s, g / 2, x, 0);
        double r25 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const cplx d = (kd.tilde_c[i] + kd.h[i]) - (kd2.tilde_c[i] + kd2.h[i]);
            r25 = std::max(r25, std::abs(d) / (g * japanese(x[i])));
        }
        double r26a = 0.0, r26b = 0.0;
        const double nu0 = s.nu0();
        for (double xx : yv)
            for (double yy : yv) {
                const cplx godd = eval_G_odd(g, nu0, xx, yy);
                const double lim = 2.0 * nu0 * std::min(xx, yy);
                const double jx = japanese(xx), jy = japanese(yy);
                r26a = std::max(r26a, std::abs(godd - lim) / (g * jx * jy));
                r26b = std::max(r26b, std::abs(godd - lim + 2.0 * g * nu0 * nu0 * xx * yy) / (g * g * jx * jx * jy * jy));
            }
        for (auto* c : {&l23, &l24, &l25, &l26a, &l26b}) c->gammas.push_back(g);
        l23.ratios.push_back(r23);
        l24.ratios.push_back(r24);
        l25.ratios.push_back(r25);
        l26a.ratios.push_back(r26a);
        l26b.ratios.push_back(r26b);
    }
    for (auto* c : {&l23, &l24, &l25, &l26a, &l26b}) {
        detail::finish_check(*c, tol_growth);
        rep.checks.push_back(*c);
    }
    return rep;
}

inline BoundReport check_kernel_bounds(const ScalarModel& m, const SpreadingSpeed& ss, std::span<const double> gammas,
                                       std::span<const double> x) {
    const auto s = shift_symbol(m, ss);
    auto rep = kernel_bound_report(s, gammas, x);
    for (const auto& c : rep.checks)
        if (!c.bounded)
            throw Error(ErrorCode::BoundViolated, "kernel bound " + c.name + ": ratio grows by " + std::to_string(c.max_growth));
    return rep;
}

/// Independent route to the kernel: banded finite-difference solve of
/// (Σ c_k ∂^k − γ²) G = −δ₀ with δ₀ = 1/h at the node nearest 0 and exact far-field
/// rows at both ends.
struct DeltaSolve {
    Grid grid;
    std::vector<cplx> G;
    std::size_t source = 0;
};

[[nodiscard]] inline DeltaSolve frozen_delta_solve(const ConjugatedSymbol& s, cplx gamma, double L, std::size_t n) {
    DeltaSolve out;
    out.grid = Grid::symmetric(L, n);
    const Grid& g = out.grid;
    const RowLayout lay{s.order()};
    BandMatrix<cplx> A(n, lay.bandwidth(), lay.bandwidth());
    const cplx g2 = gamma * gamma;
    put_equation_rows(
        A, g, lay, s.order(),
        [&](std::size_t, int k) { return cplx(s.c[std::size_t(k)]) - (k == 0 ? g2 : cplx(0.0)); },
        [](std::size_t, std::size_t) { return 1.0; });
    // right end keeps the decaying (Re ν < 0) modes, the left end the growing ones
    const auto r = spatial_roots(s, gamma);
    std::vector<cplx> stable{r.nu_minus}, unstable{r.nu_plus};
    stable.insert(stable.end(), r.strong_stable.begin(), r.strong_stable.end());
    unstable.insert(unstable.end(), r.strong_unstable.begin(), r.strong_unstable.end());
    const auto left_rows = farfield_rows(unstable);
    const auto right_rows = farfield_rows(stable);
    const std::size_t m = std::size_t(lay.m());
    for (std::size_t j = 0; j < m; ++j) {
        (void)put_boundary_row(A, j, g, true, left_rows[j]);
        (void)put_boundary_row(A, n - m + j, g, false, right_rows[j]);
    }
    std::vector<cplx> rhs(n, 0.0);
    out.source = g.nearest(0.0);
    rhs[out.source] = -1.0 / g.h;
    BandLU<cplx> lu(std::move(A));
    out.G = lu.solve(std::span<const cplx>(rhs));
    return out;
}

}  // namespace pulled
