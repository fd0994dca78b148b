#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "pulled/operator.hpp"

using namespace pulled;

namespace {

struct Setup {
    ScalarModel m;
    SpreadingSpeed ss;
    FrontProfile front;
    WeightedOperator op;
};

Setup make(const ScalarModel& m, double c0, double eta0, double L, std::size_t n) {
    Setup s{m, find_spreading_speed(m, c0, eta0), {}, {}};
    s.front = solve_front(m, s.ss, L, n);
    s.op = build_operator(m, s.ss, s.front, s.front.grid);
    return s;
}

// FKPP on [−200, 200], shared across tests
Setup& fkpp() {
    static Setup s = make(fisher_kpp(), 1.5, 0.8, 200.0, 4001);
    return s;
}

CVector gaussian(const Grid& g, double x0, double w) {
    CVector v(g.n);
    for (std::size_t i = 0; i < g.n; ++i) v[i] = std::exp(-std::pow((g.x(i) - x0) / w, 2));
    return v;
}

double trapz(const Grid& g, const std::vector<double>& f) {
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * g.h;
}

}  // namespace

TEST(Operator, FarRightIsHeatOperator) {
    // for x ≫ 1 the weighted FKPP linearization is ∂² + f'(q*) − 1 → ∂². The discrete symbol
    // has an exact double root at the grid pair, so on smooth data the stencils act as
    // ∂² up to O(h⁴) higher-derivative terms (about 1e−5 here)
    auto& s = fkpp();
    const auto& g = s.op.grid;
    const auto u = gaussian(g, 100.0, 4.0);
    const auto Lu = apply_operator(s.op, std::span<const cplx>(u));
    for (double x : {92.0, 98.0, 100.0, 107.0}) {
        const auto i = g.nearest(x);
        const double z = (g.x(i) - 100.0) / 4.0;
        const double exact = std::exp(-z * z) * (4.0 * z * z - 2.0) / 16.0;
        EXPECT_NEAR(Lu[i].real(), exact, 1e-5) << x;
    }
}

TEST(Operator, FarLeftIsUnweightedLinearization) {
    // for x < −1 the weight is trivial and f'(1) = −1: L = ∂² + 2∂ − 1
    auto& s = fkpp();
    const auto& g = s.op.grid;
    const auto u = gaussian(g, -100.0, 2.0);
    const auto Lu = apply_operator(s.op, std::span<const cplx>(u));
    for (double x : {-102.0, -100.0, -98.5}) {
        const auto i = g.nearest(x);
        const double z = (g.x(i) + 100.0) / 2.0, e = std::exp(-z * z);
        const double exact = e * (4.0 * z * z - 2.0) / 4.0 + 2.0 * (-z * e) - e;
        EXPECT_NEAR(Lu[i].real(), exact, 1e-5) << x;
    }
}

TEST(Operator, PsiIsInTheKernel) {
    auto& s = fkpp();
    const auto psi = compute_psi(s.front, s.ss, s.m);
    const auto Lp = apply_operator(s.op, std::span<const double>(psi.psi));
    double worst = 0.0;
    for (std::size_t i = 0; i < s.op.n(); ++i) {
        const double x = s.op.grid.x(i);
        if (x > -30.0 && x < psi.window_lo) worst = std::max(worst, std::abs(Lp[i]) / (1.0 + std::abs(x)));
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(Operator, GridMismatchRejected) {
    auto& s = fkpp();
    EXPECT_THROW((void)build_operator(s.m, s.ss, s.front, Grid::symmetric(200.0, 4003)), Error);
}

TEST(Resolvent, FarRightMatchesHeatGreenFunction) {
    // (∂² − γ²)u = g  ⇒  u(x) = −∫ e^{−γ|x−y|}/(2γ) g(y) dy, up to the O(h⁴) stencil terms
    auto& s = fkpp();
    const auto& g = s.op.grid;
    const double gm = 0.5;
    const auto u = resolve(s.op, gm, gaussian(g, 100.0, 4.0)).u;
    for (double x : {90.0, 100.0, 108.0}) {
        const auto i = g.nearest(x);
        const double xi = g.x(i);
        auto f = [&](double y) { return -std::exp(-gm * std::abs(xi - y)) / (2.0 * gm) * std::exp(-std::pow((y - 100.0) / 4.0, 2)); };
        using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
        const double ref = GK::integrate(f, 50.0, xi, 10, 1e-13) + GK::integrate(f, xi, 150.0, 10, 1e-13);
        EXPECT_NEAR(u[i].real(), ref, 1e-4 * std::abs(ref)) << x;
        EXPECT_NEAR(u[i].imag(), 0.0, 1e-12);
    }
}

TEST(Resolvent, ComplexShiftResidualAndConjugateSymmetry) {
    auto& s = fkpp();
    const auto g = gaussian(s.op.grid, 1.0, 1.0);
    const cplx gm = std::polar(0.1, 0.4);
    const auto a = resolve(s.op, gm, g);
    const auto b = resolve(s.op, std::conj(gm), g);
    EXPECT_LT(a.residual, 1e-11);
    double d = 0.0, nrm = 0.0;
    for (std::size_t i = 0; i < a.u.size(); ++i) {
        d = std::max(d, std::abs(a.u[i] - std::conj(b.u[i])));
        nrm = std::max(nrm, std::abs(a.u[i]));
    }
    EXPECT_LT(d, 1e-10 * nrm);  // real operator: R(λ̄) = conj R(λ)
}

TEST(Resolvent, BordersAndFarFieldRootCounts) {
    auto& s = fkpp();
    EXPECT_TRUE(right_of_borders(s.m, s.ss, 1.0));
    EXPECT_TRUE(right_of_borders(s.m, s.ss, cplx(-0.5, 2.0)));
    EXPECT_FALSE(right_of_borders(s.m, s.ss, cplx(-3.0, 0.1)));  // left of the u = 1 border
    const auto r = farfield_roots(s.m, s.ss, 0.25);
    ASSERT_EQ(r.right.size(), 1u);
    ASSERT_EQ(r.left.size(), 1u);
    EXPECT_NEAR(std::abs(r.right[0] - cplx(-0.5, 0.0)), 0.0, 1e-12);            // ν² = 1/4
    EXPECT_NEAR(std::abs(r.left[0] - cplx(-1.0 + std::sqrt(2.25), 0.0)), 0.0, 1e-12);  // ν² + 2ν − 1.25 = 0
}

TEST(Resolvent, LipschitzAtOrigin) {
    auto& s = fkpp();
    const std::vector<double> gs{0.1, 0.05, 0.025, 0.0125};
    const auto rep = verify_R0_lipschitz(s.op, gaussian(s.op.grid, 4.0, 1.5), 2.0, gs);
    EXPECT_NEAR(rep.fit.slope, 1.0, 0.1);
    EXPECT_TRUE(std::is_sorted(rep.differences.rbegin(), rep.differences.rend()));
}

TEST(Resolvent, RankOneCoefficientMatchesAdjointPairing) {
    // L* has kernel ω⁻¹ e^{c x} q*', i.e. ψ e^{c x − 2ησ(x)} with ψ = ω q*'/μ₁ up to scale,
    // so R₁g = κψ with κ ∝ ∫ e^{cx − 2ησ} ψ g. Right-located data fix the scale to 1.
    auto& s = fkpp();
    const auto& g = s.op.grid;
    const auto psi = compute_psi(s.front, s.ss, s.m);
    const double c = s.op.ss.c_star, eta = s.op.ss.eta_star;
    const std::pair<double, double> data[] = {{4.0, 1.5}, {0.0, 1.0}, {-2.0, 1.0}, {2.0, 3.0}};
    for (auto [x0, w] : data) {
        const auto gv = gaussian(g, x0, w);
        std::vector<double> f(g.n);
        for (std::size_t i = 0; i < g.n; ++i) {
            const double x = g.x(i);
            f[i] = std::exp(c * x - 2.0 * eta * blend_sigma(x)) * psi.psi[i] * gv[i].real();
        }
        const double kappa = trapz(g, f);
        const auto e = extract_R1(s.op, psi.psi, gv, 3.0);
        EXPECT_NEAR(e.coefficient / kappa, 1.0, 5e-3) << x0;
        EXPECT_LT(e.nonproportionality, 5e-2) << x0;
    }
}

TEST(Resolvent, BlowupReportHandlesZeroData) {
    auto& s = fkpp();
    const CVector z(s.op.n(), 0.0);
    const std::vector<double> gs{0.1, 0.05};
    const auto rep = verify_resolvent_blowup(s.op, z, 0.0, -2.0, gs);
    EXPECT_TRUE(rep.undefined);
    EXPECT_TRUE(std::isnan(rep.exponent));
}

TEST(EigenScan, BistableClassification) {
    const auto clear = make(bistable(0.4), 1.0, 0.5, 60.0, 801);
    const auto rc = eigen_scan(clear.op);
    EXPECT_FALSE(rc.unstable_eigenvalue);
    EXPECT_FALSE(rc.resonance);
    EXPECT_GT(rc.kernel_element.linear_fraction, 0.5);

    const auto unst = make(bistable(0.2), 1.0, 0.5, 60.0, 801);
    const auto ru = eigen_scan(unst.op);
    EXPECT_TRUE(ru.unstable_eigenvalue);
    ASSERT_FALSE(ru.flagged.empty());
    for (const auto& cnd : ru.flagged) EXPECT_GE(cnd.lambda.real(), -1e-3);
}
