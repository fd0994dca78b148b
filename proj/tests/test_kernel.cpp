#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "pulled/kernel.hpp"

using namespace pulled;

namespace {

ConjugatedSymbol symbol_of(const ScalarModel& m, double c0, double eta0) {
    return shift_symbol(m, find_spreading_speed(m, c0, eta0));
}

ConjugatedSymbol efkpp_symbol() { return symbol_of(extended_fkpp(0.1), 2.0, 1.0); }

// Residue oracle for (Σ c_k ∂^k − γ²) G = −δ: with Q(ν) = Σ c_k ν^k − γ²,
// ∂^k G(x) = −Σ_{Re ν<0} ν^k e^{νx}/Q'(ν) for x > 0 and +Σ_{Re ν>0} ν^k e^{νx}/Q'(ν) for x < 0.
// Roots come from Eigen's eigensolver on a companion matrix built here.
std::vector<cplx> residue_kernel(const ConjugatedSymbol& s, cplx gamma, std::span<const double> x, int k) {
    const int n = s.order();
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(n, n);
    std::vector<cplx> q(s.c.begin(), s.c.end());
    q[0] -= gamma * gamma;
    for (int i = 1; i < n; ++i) C(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) C(i, n - 1) = -q[std::size_t(i)] / q.back();
    const Eigen::VectorXcd roots = Eigen::ComplexEigenSolver<Eigen::MatrixXcd>(C).eigenvalues();
    std::vector<cplx> G(x.size(), 0.0);
    for (Eigen::Index j = 0; j < roots.size(); ++j) {
        const cplx nu = roots(j);
        cplx dq = 0.0;
        for (int p = n; p >= 1; --p) dq = dq * nu + double(p) * q[std::size_t(p)];
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] > 0.0 && nu.real() < 0.0) G[i] -= std::pow(nu, k) * std::exp(nu * x[i]) / dq;
            if (x[i] < 0.0 && nu.real() > 0.0) G[i] += std::pow(nu, k) * std::exp(nu * x[i]) / dq;
        }
    }
    return G;
}

std::vector<double> sample_x() {
    std::vector<double> x;
    for (int i = -160; i <= 160; ++i)
        if (i != 0) x.push_back(0.125 * i + 0.01);
    return x;
}

}  // namespace

TEST(ShiftedSymbol, DoubleRootCancels) {
    const auto m = extended_fkpp(0.1);
    const auto ss = find_spreading_speed(m, 2.0, 1.0);
    const auto s = shift_symbol(m, ss);
    EXPECT_LT(s.cancellation_residual, 1e-10);
    EXPECT_NEAR(s.alpha(), ss.alpha, 1e-10);
    EXPECT_EQ(s.order(), 4);
    const auto f = symbol_of(fisher_kpp(), 1.5, 0.8);
    EXPECT_NEAR(f.c[2], 1.0, 1e-12);
    auto wrong = ss;
    wrong.c_star += 1e-3;
    try {
        (void)shift_symbol(m, wrong);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DoubleRootResidual);
    }
}

TEST(SpatialRootsTest, RootsSolveSymbolAndLabelCentralPair) {
    const auto s = efkpp_symbol();
    for (cplx g : {cplx(0.05, 0.0), cplx(0.2, 0.0), std::polar(0.1, 0.5)}) {
        const auto r = spatial_roots(s, g);
        for (cplx nu : r.ordered()) EXPECT_LT(std::abs(s.eval(nu) - g * g), 1e-12);
        EXPECT_LT(std::abs(r.nu_plus - g * s.nu0()), 0.1 * std::abs(g));
        EXPECT_LT(std::abs(r.nu_minus + g * s.nu0()), 0.1 * std::abs(g));
        for (cplx nu : r.strong_stable) EXPECT_LT(nu.real(), 0.0);
        for (cplx nu : r.strong_unstable) EXPECT_GT(nu.real(), 0.0);
        EXPECT_EQ(r.strong_stable.size(), r.strong_unstable.size());
    }
}

TEST(SpatialRootsTest, CompanionEigenvaluesAreRoots) {
    const auto s = efkpp_symbol();
    const cplx g(0.1, 0.02);
    const auto M = build_companion(s, g);
    const Eigen::VectorXcd ev = Eigen::ComplexEigenSolver<CMatrix>(M).eigenvalues();
    const auto r = spatial_roots(s, g).ordered();
    for (cplx nu : r) {
        double best = 1e300;
        for (Eigen::Index j = 0; j < ev.size(); ++j) best = std::min(best, std::abs(ev(j) - nu));
        EXPECT_LT(best, 1e-10);
    }
}

TEST(Projections, ResolveIdentityAndAreIdempotent) {
    const auto s = efkpp_symbol();
    for (cplx g : {cplx(0.2, 0.0), std::polar(0.05, -0.7)}) {
        const auto sp = frobenius_projections(s, g);
        const auto n = sp.M.rows();
        const CMatrix sum = sp.P_cs + sp.P_cu + sp.P_ss + sp.P_uu;
        EXPECT_LT((sum - CMatrix::Identity(n, n)).norm(), 1e-9);
        EXPECT_LT((sp.P_cs * sp.P_cs - sp.P_cs).norm(), 1e-9 * sp.P_cs.norm());
        EXPECT_LT((sp.P_cs * sp.P_cu).norm(), 1e-9 * sp.P_cs.norm());
        EXPECT_LT((sp.M * sp.P_cs - sp.P_cs * sp.M).norm(), 1e-9 * sp.P_cs.norm());
    }
}

TEST(Projections, FisherKppHandComputation) {
    const auto s = symbol_of(fisher_kpp(), 1.5, 0.8);
    const double g = 0.3;
    const auto sp = frobenius_projections(s, g);
    CMatrix want(2, 2);
    want << 0.5, -1.0 / (2.0 * g), -g / 2.0, 0.5;
    EXPECT_LT((sp.P_cs - want).norm(), 1e-12);
    CMatrix pole(2, 2);
    pole << 0.0, -0.5, 0.0, 0.0;
    EXPECT_LT((sp.P_minus1 - pole).norm(), 1e-9);
    EXPECT_NEAR(sp.beta.real(), -0.5, 1e-9);
    EXPECT_NEAR(beta_closed_form(s), -0.5, 1e-14);
}

TEST(Projections, BetaRichardsonMatchesClosedForm) {
    for (const auto& s : {efkpp_symbol(), symbol_of(eighth_order_amplitude(0.1, 3.0, 4.0), 0.2, 0.1)}) {
        const auto P = pole_matrix(s);
        const auto n = P.rows();
        EXPECT_NEAR(P(0, n - 1).real(), beta_closed_form(s), 1e-8);
        EXPECT_NEAR(P(0, n - 1).imag(), 0.0, 1e-8);
    }
}

TEST(KernelPieces, MatchResidueOracle) {
    const auto x = sample_x();
    for (const auto& s : {symbol_of(fisher_kpp(), 1.5, 0.8), efkpp_symbol()}) {
        for (cplx g : {cplx(0.3, 0.0), cplx(0.05, 0.0), std::polar(0.1, 0.6)}) {
            const auto sp = frobenius_projections(s, g);
            for (int k = 0; k < s.order(); ++k) {
                const auto got = eval_kernel_pieces(sp, s, g, x, k).total();
                const auto ref = residue_kernel(s, g, x, k);
                double scale = 0.0, err = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    scale = std::max(scale, std::abs(ref[i]));
                    err = std::max(err, std::abs(got[i] - ref[i]));
                }
                EXPECT_LT(err, 1e-9 * scale) << "order " << s.order() << " k " << k << " g " << g;
            }
        }
    }
}

TEST(KernelPieces, FisherKppDerivativeClosedForm) {
    const auto s = symbol_of(fisher_kpp(), 1.5, 0.8);
    const auto x = sample_x();
    const double g = 0.2;
    const auto d = eval_kernel_pieces(frobenius_projections(s, g), s, g, x, 1).total();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double exact = -0.5 * std::copysign(1.0, x[i]) * std::exp(-g * std::abs(x[i]));
        EXPECT_NEAR(d[i].real(), exact, 1e-12);
        EXPECT_NEAR(d[i].imag(), 0.0, 1e-12);
    }
}

TEST(KernelPieces, PoleResidueIsBetaOverLead) {
    // γ G(x; γ) → −β/c_{2m} uniformly on bounded x as γ → 0
    for (const auto& s : {symbol_of(fisher_kpp(), 1.5, 0.8), efkpp_symbol()}) {
        const std::vector<double> x{-2.0, 0.5, 3.0};
        const double limit = -beta_closed_form(s) / s.lead();
        double prev = INFINITY;
        for (double g : {0.02, 0.01, 0.005}) {
            const auto tot = eval_kernel_pieces(frobenius_projections(s, g), s, g, x, 0).total();
            double err = 0.0;
            for (const auto& v : tot) err = std::max(err, std::abs(g * v - limit));
            EXPECT_LT(err, prev);
            prev = err;
        }
        EXPECT_LT(prev, 0.02 * std::abs(limit));
    }
}

TEST(OddHeatKernel, LimitAndDirectFormula) {
    const double nu0 = 1.0 / std::sqrt(0.938);
    for (double x : {0.3, 2.0, 7.0})
        for (double y : {0.1, 4.0}) {
            EXPECT_DOUBLE_EQ(eval_G_odd(0.0, nu0, x, y).real(), 2.0 * nu0 * std::min(x, y));
            const cplx g(0.2, 0.1);
            const cplx direct = (std::exp(-nu0 * g * std::abs(x - y)) - std::exp(-nu0 * g * (x + y))) / g;
            EXPECT_LT(std::abs(eval_G_odd(g, nu0, x, y) - direct), 1e-12);
            EXPECT_NEAR(eval_G_odd(1e-9, nu0, x, y).real(), 2.0 * nu0 * std::min(x, y), 1e-7);
        }
}

TEST(SecondOrderRootsTest, FisherKppHasNoCurvature) {
    const auto r = fit_second_order_roots(symbol_of(fisher_kpp(), 1.5, 0.8));
    EXPECT_NEAR(r.nu2_plus, 0.0, 1e-8);
    EXPECT_NEAR(r.nu2_minus, 0.0, 1e-8);
}

TEST(SecondOrderRootsTest, MatchesPerturbationSeries) {
    // c2ν² + c3ν³ + c4ν⁴ = γ² with ν = ν₀γ + ν₂γ²: ν₂ = −c3ν₀⁴/(2c2ν₀) = −c3ν₀³/(2c2)
    const auto s = efkpp_symbol();
    const double nu0 = s.nu0();
    const double expect = -s.c[3] * nu0 * nu0 / (2.0 * s.c[2]);
    const auto r = fit_second_order_roots(s);
    EXPECT_NEAR(r.nu2_plus, expect, 1e-6);
    EXPECT_NEAR(r.nu2_minus, expect, 1e-6);
}

TEST(KernelBounds, RatiosStayBounded) {
    const std::vector<double> gs{0.2, 0.1, 0.05, 0.025};
    std::vector<double> x;
    for (int i = -200; i <= 200; ++i) x.push_back(0.25 * i);
    for (const auto& s : {symbol_of(fisher_kpp(), 1.5, 0.8), efkpp_symbol()}) {
        const auto rep = kernel_bound_report(s, gs, x);
        EXPECT_TRUE(rep.all_bounded());
        for (const auto& c : rep.checks) EXPECT_EQ(c.ratios.size(), gs.size()) << c.name;
    }
}

TEST(DeltaSolve, FisherKppMatchesClosedForm) {
    const auto s = symbol_of(fisher_kpp(), 1.5, 0.8);
    const double g = 0.25;
    for (std::size_t n : {801u, 1601u}) {
        const auto ds = frozen_delta_solve(s, g, 40.0, n);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double xi = ds.grid.x(i) - ds.grid.x(ds.source);
            if (std::abs(xi) < 1.0) continue;
            const double exact = std::exp(-g * std::abs(xi)) / (2.0 * g);
            err = std::max(err, std::abs(ds.G[i] - exact) / exact);
        }
        EXPECT_LT(err, 1e-5);
    }
}
