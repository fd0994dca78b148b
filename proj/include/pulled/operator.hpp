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
#include "pulled/front.hpp"
#include "pulled/kernel.hpp"
#include "pulled/model.hpp"
#include "pulled/roots.hpp"
#include "pulled/weights.hpp"

namespace pulled {

using CVector = std::vector<cplx>;

/// Discretized weighted linearization L = ω A ω^{-1}, A = P(∂) + c*∂ + f'(q*).
/// Only equation rows are stored; boundary rows depend on the spectral parameter and
/// are installed per solve.
struct WeightedOperator {
    ScalarModel model;
    SpreadingSpeed ss;
    Grid grid;
    RowLayout layout;
    BandMatrix<double> A;
    std::vector<double> fprime;  ///< f'(q*) at the nodes

    [[nodiscard]] int m() const noexcept { return layout.m(); }
    [[nodiscard]] std::size_t n() const noexcept { return grid.n; }
};

/// The k-th conjugated derivative ω ∂^k ω^{-1} is discretized entrywise:
/// D̃^k_{ij} = D^k_{ij} · exp(η(σ(x_i) − σ(x_j))). Ratios only involve nodes inside one
/// stencil, so no exponential of size e^{ηL} is ever formed. The weight uses the
/// grid-consistent η from grid_spreading_speed, which solve_front also uses.
[[nodiscard]] inline WeightedOperator build_operator(const ScalarModel& model, const SpreadingSpeed& ss,
                                                     const FrontProfile& front, const Grid& grid) {
    if (!front.grid.same_as(grid)) throw Error(ErrorCode::GridMismatch, "front and operator grids differ");
    WeightedOperator op;
    op.model = model;
    op.ss = grid_spreading_speed(model, ss, grid.h);  // same pair the front was solved with
    op.grid = grid;
    op.layout = RowLayout{model.order};
    op.A = BandMatrix<double>(grid.n, op.layout.bandwidth(), op.layout.bandwidth());
    op.fprime.resize(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) op.fprime[i] = model.f_derivative(front.q[i], 1);
    const ExponentialWeight w{op.ss.eta_star};
    std::vector<double> sig(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) sig[i] = w.log_value(grid.x(i));
    put_equation_rows(
        op.A, grid, op.layout, model.order,
        [&](std::size_t i, int k) {
            if (k == 0) return op.fprime[i];
            return model.p[std::size_t(k)] + (k == 1 ? op.ss.c_star : 0.0);
        },
        [&](std::size_t i, std::size_t j) { return std::exp(sig[i] - sig[j]); });
    return op;
}

/// L u on equation rows, zero on boundary rows.
template <class V>
[[nodiscard]] std::vector<V> apply_operator(const WeightedOperator& op, std::span<const V> u) {
    auto y = op.A.apply(u);
    const std::size_t m = std::size_t(op.m());
    for (std::size_t j = 0; j < m; ++j) {
        y[j] = V{};
        y[op.n() - 1 - j] = V{};
    }
    return y;
}

/// Spatial roots that decay into the far field at λ: on the right the m roots of
/// Σ c_k ν^k = λ with smallest real part, on the left the m roots of d^−(λ, ν) = 0 with
/// largest real part.
struct FarFieldRoots {
    std::vector<cplx> right;
    std::vector<cplx> left;
};

[[nodiscard]] inline FarFieldRoots farfield_roots(const ScalarModel& model, const SpreadingSpeed& ss, cplx lambda) {
    const std::size_t m = std::size_t(model.half_order());
    auto by_re = [](cplx a, cplx b) { return a.real() < b.real(); };
    FarFieldRoots out;
    const auto c = shifted_symbol_coeffs(model, ss.c_star, ss.eta_star);
    std::vector<cplx> pr(c.begin(), c.end());
    pr[0] = -lambda;  // the double-root cancellation makes c_0, c_1 vanish up to rounding
    pr[1] = 0.0;
    auto rr = polynomial_roots(std::span<const cplx>(pr));
    std::sort(rr.begin(), rr.end(), by_re);
    out.right.assign(rr.begin(), rr.begin() + std::ptrdiff_t(m));
    std::vector<cplx> pl(model.p.begin(), model.p.end());
    pl[0] += model.fp1() - lambda;
    pl[1] += ss.c_star;
    auto rl = polynomial_roots(std::span<const cplx>(pl));
    std::sort(rl.begin(), rl.end(), by_re);
    out.left.assign(rl.end() - std::ptrdiff_t(m), rl.end());
    return out;
}

/// Number of roots with Re ν < −tol, |Re ν| ≤ tol, Re ν > tol.
struct RootCount {
    int stable = 0;
    int central = 0;
    int unstable = 0;
};

[[nodiscard]] inline RootCount count_roots(std::span<const cplx> roots, double tol) {
    RootCount c;
    for (cplx r : roots) {
        if (r.real() < -tol) ++c.stable;
        else if (r.real() > tol) ++c.unstable;
        else ++c.central;
    }
    return c;
}

/// Root counts (right weighted symbol, left symbol) at λ; λ lies in the Fredholm-index-0
/// region connected to +∞ iff both counts are (m, 0, m).
[[nodiscard]] inline bool right_of_borders(const ScalarModel& model, const SpreadingSpeed& ss, cplx lambda,
                                           double tol = 0.0) {
    const int m = model.half_order();
    const auto c = shifted_symbol_coeffs(model, ss.c_star, ss.eta_star);
    std::vector<cplx> pr(c.begin(), c.end());
    pr[0] = -lambda;
    pr[1] = 0.0;
    const auto rr = polynomial_roots(std::span<const cplx>(pr));
    std::vector<cplx> pl(model.p.begin(), model.p.end());
    pl[0] += model.fp1() - lambda;
    pl[1] += ss.c_star;
    const auto rl = polynomial_roots(std::span<const cplx>(pl));
    const auto a = count_roots(rr, tol), b = count_roots(rl, tol);
    return a.stable == m && a.unstable == m && a.central == 0 && b.stable == m && b.unstable == m && b.central == 0;
}

/// Factorized (L − λ) with exact far-field boundary rows on both ends.
class ShiftedSolver {
public:
    ShiftedSolver(const WeightedOperator& op, cplx lambda) : ShiftedSolver(op, lambda, lambda) {}

    /// Equation rows at λ, far-field rows taken from the roots at bc_lambda.
    ShiftedSolver(const WeightedOperator& op, cplx lambda, cplx bc_lambda) : op_(&op), lambda_(lambda) {
        auto M = assemble(op, lambda, bc_lambda);
        lu_ = BandLU<cplx>(std::move(M));
    }

    [[nodiscard]] cplx lambda() const noexcept { return lambda_; }

    /// Solves (L − λ)u = g with g taken on equation rows only.
    [[nodiscard]] CVector solve(std::span<const cplx> g) const {
        CVector b(g.begin(), g.end());
        const std::size_t m = std::size_t(op_->m()), n = op_->n();
        for (std::size_t j = 0; j < m; ++j) {
            b[j] = 0.0;
            b[n - 1 - j] = 0.0;
        }
        lu_.solve_in_place(std::span<cplx>(b));
        return b;
    }

    [[nodiscard]] static BandMatrix<cplx> assemble(const WeightedOperator& op, cplx lambda) {
        return assemble(op, lambda, lambda);
    }

    [[nodiscard]] static BandMatrix<cplx> assemble(const WeightedOperator& op, cplx lambda, cplx bc_lambda) {
        BandMatrix<cplx> M = op.A.cast<cplx>();
        const std::size_t n = op.n(), m = std::size_t(op.m());
        for (std::size_t i = m; i + m < n; ++i) M(i, i) -= lambda;
        const auto roots = farfield_roots(op.model, op.ss, bc_lambda);
        const auto lrows = farfield_rows(roots.left);
        const auto rrows = farfield_rows(roots.right);
        for (std::size_t j = 0; j < m; ++j) {
            (void)put_boundary_row(M, j, op.grid, true, lrows[j]);
            (void)put_boundary_row(M, n - m + j, op.grid, false, rrows[j]);
        }
        return M;
    }

private:
    const WeightedOperator* op_;
    cplx lambda_;
    BandLU<cplx> lu_;
};

[[nodiscard]] inline CVector to_complex(std::span<const double> v) { return CVector(v.begin(), v.end()); }

[[nodiscard]] inline std::vector<double> real_part(std::span<const cplx> v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i].real();
    return r;
}

/// Weighted H^1 norm with ρ = ⟨x⟩^{r} on both sides; complex data uses |·|².
[[nodiscard]] inline double h1_norm(const Grid& g, std::span<const cplx> u, double r) {
    return WeightedNorm{AlgebraicWeight::uniform(r), 1}(g, u);
}
[[nodiscard]] inline double l2_norm(const Grid& g, std::span<const cplx> u, double r) {
    return WeightedNorm{AlgebraicWeight::uniform(r), 0}(g, u);
}

struct ResolventSample {
    cplx gamma = 0.0;
    CVector g;
    CVector u;
    double residual = 0.0;  ///< ‖(L − γ²)u − g‖_∞ / ‖g‖_∞ on equation rows
};

namespace detail {

inline double relative_residual(const WeightedOperator& op, cplx lambda, std::span<const cplx> u,
                                std::span<const cplx> g) {
    const auto Lu = op.A.apply(u);
    const std::size_t m = std::size_t(op.m()), n = op.n();
    double r = 0.0, gn = 0.0;
    for (std::size_t i = m; i + m < n; ++i) {
        r = std::max(r, std::abs(Lu[i] - lambda * u[i] - g[i]));
        gn = std::max(gn, std::abs(g[i]));
    }
    return gn > 0.0 ? r / gn : r;
}

}  // namespace detail

/// Solves (L − γ²)u = g; the residual is checked against 1e−9‖g‖.
[[nodiscard]] inline ResolventSample resolve(const WeightedOperator& op, cplx gamma, std::span<const cplx> g,
                                             double residual_tol = 1e-9) {
    if (g.size() != op.n()) throw Error(ErrorCode::GridMismatch, "data size differs from operator grid");
    ShiftedSolver S(op, gamma * gamma);
    ResolventSample out;
    out.gamma = gamma;
    out.g.assign(g.begin(), g.end());
    out.u = S.solve(g);
    out.residual = detail::relative_residual(op, gamma * gamma, out.u, g);
    if (!(out.residual <= residual_tol))
        throw Error(ErrorCode::ResidualLarge, "resolvent residual " + std::to_string(out.residual));
    return out;
}

struct LipschitzReport {
    std::vector<double> gammas;
    std::vector<double> differences;  ///< ‖u(γ) − u(0)‖_{H¹_{−r}}
    LineFit fit;                      ///< log-log fit; slope is the Lipschitz exponent
};

[[nodiscard]] inline LipschitzReport verify_R0_lipschitz(const WeightedOperator& op, std::span<const cplx> g, double r,
                                                         std::span<const double> gammas) {
    LipschitzReport rep;
    const auto u0 = resolve(op, 0.0, g).u;
    for (double gm : gammas) {
        const auto u = resolve(op, gm, g).u;
        CVector d(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) d[i] = u[i] - u0[i];
        rep.gammas.push_back(gm);
        rep.differences.push_back(h1_norm(op.grid, d, -r));
    }
    rep.fit = fit_loglog(rep.gammas, rep.differences);
    return rep;
}

/// γ-derivative of the resolvent at γ = 0 and its projection onto ψ.
struct R1Extraction {
    double coefficient = 0.0;        ///< ⟨v, ψ⟩ / ⟨ψ, ψ⟩ in H¹_{−r}
    double nonproportionality = 0.0; ///< ‖v − coefficient·ψ‖ / ‖v‖
    std::vector<double> level_coefficients;  ///< raw (unextrapolated) coefficient per γ₀ 2^{−j}
    std::vector<double> v;           ///< extrapolated difference quotient
};

[[nodiscard]] inline R1Extraction extract_R1(const WeightedOperator& op, std::span<const double> psi,
                                             std::span<const cplx> g, double r, double gamma0 = 0.02, int levels = 3) {
    if (psi.size() != op.n()) throw Error(ErrorCode::GridMismatch, "psi grid differs from operator grid");
    const auto u0 = resolve(op, 0.0, g).u;
    const WeightedNorm N{AlgebraicWeight::uniform(-r), 1};
    const double pp = N.inner(op.grid, psi, psi);
    std::vector<std::vector<double>> vs;
    R1Extraction out;
    for (int j = 0; j < levels; ++j) {
        const double gm = gamma0 * std::ldexp(1.0, -j);
        const auto u = resolve(op, gm, g).u;
        std::vector<double> v(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) v[i] = (u[i].real() - u0[i].real()) / gm;
        out.level_coefficients.push_back(N.inner(op.grid, std::span<const double>(v), psi) / pp);
        vs.push_back(std::move(v));
    }
    // Richardson on an error expansion in powers of γ: repeated 2v(γ/2) − v(γ) style elimination
    for (int lev = 1; lev < levels; ++lev) {
        const double f = std::ldexp(1.0, lev);
        for (std::size_t j = 0; j + 1 < vs.size(); ++j)
            for (std::size_t i = 0; i < vs[j].size(); ++i) vs[j][i] = (f * vs[j + 1][i] - vs[j][i]) / (f - 1.0);
        vs.pop_back();
    }
    out.v = std::move(vs.front());
    out.coefficient = N.inner(op.grid, std::span<const double>(out.v), psi) / pp;
    std::vector<double> rem(out.v.size());
    for (std::size_t i = 0; i < rem.size(); ++i) rem[i] = out.v[i] - out.coefficient * psi[i];
    const double vn = N(op.grid, out.v);
    out.nonproportionality = vn > 0.0 ? N(op.grid, rem) / vn : 0.0;
    return out;
}

/// Solution of Lu = 0 that decays on the left, normalized by u(L) = 1 with
/// u^{(j)}(L) = 0 for j = 2..m, and its linear far-field fit μ₀ + μ₁x.
struct KernelElement {
    std::vector<double> u;
    double mu0 = 0.0;
    double mu1 = 0.0;
    double linear_fraction = 0.0;  ///< |μ₁|x₁/(|μ₀| + |μ₁|x₁) on the fit window; ≈ 0 at a resonance
};

[[nodiscard]] inline KernelElement solve_kernel_element(const WeightedOperator& op, double x_lo, double x_hi) {
    BandMatrix<cplx> M = ShiftedSolver::assemble(op, 0.0);
    const std::size_t n = op.n(), m = std::size_t(op.m());
    CVector b(n, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        BoundaryRow<cplx> row;
        row.coeffs.assign(j == 0 ? 1 : j + 2, 0.0);
        row.coeffs.back() = 1.0;
        row.rhs = j == 0 ? 1.0 : 0.0;
        b[n - m + j] = put_boundary_row(M, n - m + j, op.grid, false, row);
    }
    BandLU<cplx> lu(std::move(M));
    lu.solve_in_place(std::span<cplx>(b));
    KernelElement out;
    out.u = real_part(b);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = op.grid.x(i);
        if (x >= x_lo && x <= x_hi) {
            xs.push_back(x);
            ys.push_back(out.u[i]);
        }
    }
    const auto lf = fit_line(xs, ys);
    out.mu0 = lf.intercept;
    out.mu1 = lf.slope;
    out.linear_fraction = std::abs(lf.slope) * x_hi / (std::abs(lf.intercept) + std::abs(lf.slope) * x_hi);
    return out;
}

struct EigenCandidate {
    cplx lambda;
    double border_distance = 0.0;
};

struct EigenReport {
    std::vector<cplx> eigenvalues;       ///< full discrete spectrum (Dirichlet truncation)
    std::vector<EigenCandidate> candidates;  ///< outside the border tube and right of both borders
    std::vector<EigenCandidate> flagged;     ///< candidates with Re λ ≥ −1e−3
    double tube_radius = 0.0;
    KernelElement kernel_element;
    bool resonance = false;
    bool unstable_eigenvalue = false;
};

namespace detail {

/// Fourier multiplier of the centered k-th derivative stencil at wavenumber ξ.
inline cplx stencil_multiplier(double h, int order, double xi) {
    StencilTable t(Grid{0.0, h, 64}, order);
    const auto st = t.at(32);
    cplx s = 0.0;
    for (std::size_t q = 0; q < st.w.size(); ++q)
        s += st.w[q] * std::exp(cplx(0.0, xi * h * (double(st.first + q) - 32.0)));
    return s;
}

/// |discrete − continuous| symbol of the right (weighted) and left far fields at ν = ik.
inline double symbol_error(const WeightedOperator& op, double k) {
    const auto c = shifted_symbol_coeffs(op.model, op.ss.c_star, op.ss.eta_star);
    cplx dr = 0.0, er = 0.0, dl = 0.0, el = 0.0;
    for (int p = 1; p <= op.model.order; ++p) {
        const cplx mult = stencil_multiplier(op.grid.h, p, k);
        const cplx ex = std::pow(cplx(0.0, k), p);
        const double cl = op.model.p[std::size_t(p)] + (p == 1 ? op.ss.c_star : 0.0);
        dr += c[std::size_t(p)] * mult;
        er += c[std::size_t(p)] * ex;
        dl += cl * mult;
        el += cl * ex;
    }
    return std::max(std::abs(dr - er), std::abs(dl - el));
}

}  // namespace detail

/// Dense eigenvalue sweep of the Dirichlet-truncated discretization. Eigenvalues within
/// a k-dependent tube (10× the discrete symbol error at that k) around the sampled
/// borders, or outside the index-0 region, are treated as essential-spectrum artifacts.
/// Intended for grids up to a few thousand nodes.
[[nodiscard]] inline EigenReport eigen_scan(const WeightedOperator& op, double k_max = 4.0, int border_samples = 2001) {
    const std::size_t n = op.n(), m = std::size_t(op.m());
    const std::size_t N = n - 2 * m;
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(Eigen::Index(N), Eigen::Index(N));
    for (std::size_t i = m; i + m < n; ++i)
        for (std::size_t j = m; j + m < n; ++j)
            if (op.A.in_band(i, j)) D(Eigen::Index(i - m), Eigen::Index(j - m)) = op.A(i, j);
    Eigen::EigenSolver<Eigen::MatrixXd> es(D, false);
    EigenReport rep;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) rep.eigenvalues.push_back(es.eigenvalues()(i));

    std::vector<double> ks(static_cast<std::size_t>(border_samples)), tube(ks.size());
    for (std::size_t j = 0; j < ks.size(); ++j) {
        ks[j] = -k_max + 2.0 * k_max * double(j) / double(ks.size() - 1);
        tube[j] = 1e-6 + 10.0 * detail::symbol_error(op, ks[j]);
        rep.tube_radius = std::max(rep.tube_radius, tube[j]);
    }
    const auto br = fredholm_border(op.model, op.ss.c_star, op.ss.eta_star, BorderSide::right, ks);
    const auto bl = fredholm_border(op.model, op.ss.c_star, op.ss.eta_star, BorderSide::left, ks);
    for (cplx lam : rep.eigenvalues) {
        double d = std::numeric_limits<double>::infinity();
        bool in_tube = false;
        for (std::size_t j = 0; j < ks.size(); ++j) {
            const double dj = std::min(std::abs(lam - br[j]), std::abs(lam - bl[j]));
            d = std::min(d, dj);
            in_tube = in_tube || dj <= tube[j];
        }
        if (in_tube) continue;
        if (!right_of_borders(op.model, op.ss, lam, 1e-8)) continue;
        rep.candidates.push_back({lam, d});
        if (lam.real() >= -1e-3) rep.flagged.push_back({lam, d});
    }
    rep.unstable_eigenvalue = !rep.flagged.empty();
    const double L = op.grid.x_max();
    const double eta = op.ss.eta_star;
    const double hi = std::min(35.0 / eta, 0.5 * L), lo = std::min(20.0 / eta, 0.5 * hi);
    rep.kernel_element = solve_kernel_element(op, lo, hi);
    rep.resonance = rep.kernel_element.linear_fraction < 1e-2;
    return rep;
}

struct BlowupReport {
    std::vector<double> gammas;
    std::vector<double> ratios;  ///< ‖u(γ)‖_{H¹_s} / ‖g‖_{L²_r}
    double exponent = std::numeric_limits<double>::quiet_NaN();  ///< β in ratio ~ γ^{−β}
    double window_lo = 0.0;
    double window_hi = 0.0;
    bool in_window = false;
    bool undefined = false;  ///< g = 0
};

[[nodiscard]] inline BlowupReport verify_resolvent_blowup(const WeightedOperator& op, std::span<const cplx> g, double r,
                                                          double s, std::span<const double> gammas, double margin = 0.1) {
    BlowupReport rep;
    rep.window_lo = std::max(0.0, 0.5 - r) - margin;
    rep.window_hi = -s - 1.5 + margin;
    const double gn = l2_norm(op.grid, g, r);
    if (gn == 0.0) {
        rep.undefined = true;
        return rep;
    }
    for (double gm : gammas) {
        const auto u = resolve(op, gm, g).u;
        rep.gammas.push_back(gm);
        rep.ratios.push_back(h1_norm(op.grid, u, s) / gn);
    }
    rep.exponent = -fit_loglog(rep.gammas, rep.ratios).slope;
    rep.in_window = rep.exponent > rep.window_lo && rep.exponent < rep.window_hi;
    return rep;
}

}  // namespace pulled
