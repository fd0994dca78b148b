#include <gtest/gtest.h>

#include <cmath>

#include "pulled/model.hpp"

using namespace pulled;

namespace {

// Double root of ν ↦ ν² − ε²ν⁴ + cν + 1 at ν = −η, solved by hand:
// η² = (1 − √(1 − 12ε²)) / (6ε²), c = 2η − 4ε²η³, α = 1 − 6ε²η² = √(1 − 12ε²).
struct EfkppOracle {
    double c, eta, alpha;
};

EfkppOracle efkpp_oracle(double eps) {
    const double e2 = eps * eps;
    const double root = std::sqrt(1.0 - 12.0 * e2);
    const double eta = std::sqrt((1.0 - root) / (6.0 * e2));
    return {2.0 * eta - 4.0 * e2 * eta * eta * eta, eta, root};
}

}  // namespace

TEST(SpreadingSpeed, FisherKppIsExact) {
    const auto ss = find_spreading_speed(fisher_kpp(), 1.5, 0.8);
    EXPECT_NEAR(ss.c_star, 2.0, 1e-12);
    EXPECT_NEAR(ss.eta_star, 1.0, 1e-12);
    EXPECT_NEAR(ss.alpha, 1.0, 1e-12);
    EXPECT_FALSE(ss.used_continuation);
}

TEST(SpreadingSpeed, ExtendedFkppMatchesClosedForm) {
    for (double eps : {0.05, 0.1, 0.2}) {
        const auto o = efkpp_oracle(eps);
        const auto ss = find_spreading_speed(extended_fkpp(eps), 2.0, 1.0);
        EXPECT_NEAR(ss.c_star, o.c, 1e-11) << eps;
        EXPECT_NEAR(ss.eta_star, o.eta, 1e-11) << eps;
        EXPECT_NEAR(ss.alpha, o.alpha, 1e-11) << eps;
    }
}

TEST(SpreadingSpeed, ExtendedFkppFrozenValues) {
    // frozen from the closed form above at ε = 0.1
    const auto ss = find_spreading_speed(extended_fkpp(0.1), 2.0, 1.0);
    EXPECT_NEAR(ss.c_star, 1.989764226254, 1e-11);
    EXPECT_NEAR(ss.eta_star, 1.015848151672, 1e-11);
    EXPECT_NEAR(ss.alpha, 0.938083151965, 1e-11);
}

TEST(SpreadingSpeed, BistableLinearSpeed) {
    for (double mu : {0.2, 1.0 / 3.0, 0.4}) {
        const auto ss = find_spreading_speed(bistable(mu), 1.0, 0.5);
        EXPECT_NEAR(ss.c_star, 2.0 * std::sqrt(mu * (1.0 - mu)), 1e-10) << mu;
    }
}

TEST(SpreadingSpeed, ContinuationRecoversFromPoorGuess) {
    // this start converges to the second double root, where α = −√(1 − 12ε²) < 0;
    // the solver must reject it and continue from the second-order truncation
    const auto o = efkpp_oracle(0.2);
    const auto ss = find_spreading_speed(extended_fkpp(0.2), -5.0, 7.0);
    EXPECT_NEAR(ss.c_star, o.c, 1e-10);
    EXPECT_NEAR(ss.eta_star, o.eta, 1e-10);
    EXPECT_GT(ss.alpha, 0.0);
    EXPECT_TRUE(ss.used_continuation);
}

TEST(SpreadingSpeed, DoubleRootConditionsHold) {
    for (const auto& m : {fisher_kpp(), extended_fkpp(0.1), eighth_order_amplitude(0.1, 3.0, 4.0)}) {
        const double p2 = m.p[2];
        const auto ss = find_spreading_speed(m, 2.0 * std::sqrt(p2 * m.fp0()) - m.p[1], std::sqrt(m.fp0() / p2));
        const cplx nu(-ss.eta_star, 0.0);
        EXPECT_LT(std::abs(eval_dispersion_plus(m, ss.c_star, 0.0, nu)), 1e-12) << m.name;
        EXPECT_LT(std::abs(m.P_derivative(nu, 1) + ss.c_star), 1e-12) << m.name;
        EXPECT_GT(ss.eta_star, 0.0);
    }
}

TEST(Model, EighthOrderSymbolConstraints) {
    const double eps = 0.1, b1 = 3.0, d = 4.0;
    const auto m = eighth_order_amplitude(eps, b1, d);
    const cplx i(0.0, 1.0);
    // P carries no constant term; f'(0) = ε² supplies it, so the full symbol is P + ε²
    EXPECT_NEAR(m.P_derivative(0.0, 2), 2.0, 1e-14);
    EXPECT_NEAR(m.fp0(), eps * eps, 1e-15);
    EXPECT_NEAR(std::abs(m.P(i) + m.fp0() - (-b1 * eps * eps)), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(m.P_derivative(i, 1)), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(m.P_derivative(i, 2) - 2.0 * d), 0.0, 1e-12);
}

TEST(Model, ValidationRejectsBrokenModels) {
    const double p_bad[] = {0.0, -1.0};  // anti-diffusion
    const double f[] = {0.0, 1.0, -1.0};
    EXPECT_THROW((void)ScalarModel::create(2, p_bad, f, "x"), Error);
    const double p[] = {0.0, 1.0};
    const double f_bad[] = {0.1, 1.0, -1.0};  // f(0) != 0
    try {
        (void)ScalarModel::create(2, p, f_bad, "x");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidModel);
    }
    const double p_odd[] = {0.0, 1.0, 0.0};
    EXPECT_THROW((void)ScalarModel::create(3, p_odd, f, "x"), Error);
}

TEST(Model, ShiftedSymbolIsTaylorShift) {
    const auto m = extended_fkpp(0.1);
    const auto q = shifted_symbol_coeffs(m, 1.7, 0.9);
    for (double nu : {-1.3, 0.0, 0.4, 2.2}) {
        const double direct = m.P(nu - 0.9) + 1.7 * (nu - 0.9) + m.fp0();
        EXPECT_NEAR(horner(std::span<const double>(q), nu), direct, 1e-12);
    }
}

TEST(Pinching, CentralBranchesSeparate) {
    for (const auto& m : {fisher_kpp(), extended_fkpp(0.1)}) {
        const auto ss = find_spreading_speed(m, 2.0, 1.0);
        const auto rep = verify_pinching(m, ss, default_lambda_max(m));
        EXPECT_TRUE(rep.pinched) << m.name;
        EXPECT_LT(rep.max_path_residual, 1e-9);
        // ν± ≈ ±√(λ/α) for small λ
        EXPECT_NEAR(rep.nu_plus.front().real(), std::sqrt(rep.lambda.front() / ss.alpha), 1e-4);
    }
}

TEST(Pinching, RejectsTinyRange) {
    const auto m = fisher_kpp();
    const auto ss = find_spreading_speed(m, 2.0, 1.0);
    EXPECT_THROW((void)verify_pinching(m, ss, 1e-4), Error);
}

TEST(SpectrumReport, CriticalWeightPassesAndDetuningFails) {
    for (const auto& m : {fisher_kpp(), extended_fkpp(0.1)}) {
        auto ss = find_spreading_speed(m, 2.0, 1.0);
        const auto rep = verify_spectrum_hypotheses(m, ss, 10.0, 2001);
        EXPECT_TRUE(rep.passed()) << m.name;
        EXPECT_LT(rep.max_re_plus, 0.0);
        EXPECT_LT(rep.max_re_minus, 0.0);
        EXPECT_DOUBLE_EQ(ss.border_margin, rep.max_re_plus);
        const auto det = spectrum_hypothesis_report(m, ss, 10.0, 2001, ss.eta_star + 0.2);
        EXPECT_FALSE(det.critical_ok);
        EXPECT_GT(det.max_re_plus, 0.0);
    }
}

TEST(SpectrumReport, FisherKppBorderIsParabola) {
    // weighted right border at η* = 1: λ = −k² exactly
    const auto m = fisher_kpp();
    const auto ss = find_spreading_speed(m, 2.0, 1.0);
    const double ks[] = {-2.0, -0.5, 0.0, 0.3, 1.7};
    const auto b = fredholm_border(m, ss.c_star, ss.eta_star, BorderSide::right, ks);
    for (std::size_t j = 0; j < b.size(); ++j) EXPECT_NEAR(std::abs(b[j] - cplx(-ks[j] * ks[j], 0.0)), 0.0, 1e-12);
}
