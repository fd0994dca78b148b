#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pulled/error.hpp"
#include "pulled/fit.hpp"
#include "pulled/poly.hpp"
#include "pulled/roots.hpp"

namespace pulled {

/// u_t = P(∂_x)u + f(u) with P(ν) = Σ_{k=1}^{2m} p_k ν^k and polynomial f.
struct ScalarModel {
    int order = 2;               ///< 2m
    std::vector<double> p;       ///< p[0..2m], p[0] == 0
    std::vector<double> f;       ///< ascending coefficients of f
    std::string name;

    /// Builds from p_1..p_{2m} and validates every invariant.
    [[nodiscard]] static ScalarModel create(int order, std::span<const double> p1_to_2m,
                                            std::span<const double> f_coeffs, std::string name) {
        ScalarModel m;
        m.order = order;
        m.p.assign(1, 0.0);
        m.p.insert(m.p.end(), p1_to_2m.begin(), p1_to_2m.end());
        m.f.assign(f_coeffs.begin(), f_coeffs.end());
        m.name = std::move(name);
        m.validate();
        return m;
    }

    [[nodiscard]] int half_order() const noexcept { return order / 2; }

    void validate() const {
        auto bad = [](const std::string& s) { throw Error(ErrorCode::InvalidModel, s); };
        if (order < 2 || order % 2 != 0) bad("order must be an even integer >= 2");
        if (p.size() != std::size_t(order) + 1) bad("expected " + std::to_string(order) + " coefficients p_1..p_2m");
        if (p[0] != 0.0) bad("p_0 must vanish");
        const int m = half_order();
        const double sign = (m % 2 == 0) ? 1.0 : -1.0;
        if (!(sign * p.back() < 0.0)) bad("ellipticity (-1)^m p_2m < 0 violated");
        if (f.size() < 2) bad("nonlinearity must have degree >= 1");
        if (std::abs(f_value(0.0)) > 1e-12) bad("f(0) != 0");
        if (std::abs(f_value(1.0)) > 1e-12) bad("f(1) != 0");
        if (!(f_derivative(0.0, 1) > 0.0)) bad("f'(0) must be positive");
        if (!(f_derivative(1.0, 1) < 0.0)) bad("f'(1) must be negative");
    }

    template <class T>
    [[nodiscard]] T P(T nu) const { return horner(std::span<const double>(p), nu); }

    template <class T>
    [[nodiscard]] T P_derivative(T nu, int k) const {
        const auto d = derivative(std::span<const double>(p), k);
        return horner(std::span<const double>(d), nu);
    }

    [[nodiscard]] double f_value(double u) const { return horner(std::span<const double>(f), u); }

    [[nodiscard]] double f_derivative(double u, int j) const {
        const auto d = derivative(std::span<const double>(f), j);
        return horner(std::span<const double>(d), u);
    }

    [[nodiscard]] int f_degree() const noexcept { return int(f.size()) - 1; }
    [[nodiscard]] double fp0() const { return f_derivative(0.0, 1); }
    [[nodiscard]] double fp1() const { return f_derivative(1.0, 1); }
};

/// P = ν², f = u − u².
[[nodiscard]] inline ScalarModel fisher_kpp() {
    const double p[] = {0.0, 1.0};
    const double f[] = {0.0, 1.0, -1.0};
    return ScalarModel::create(2, p, f, "fisher-kpp");
}

/// P = −ε²ν⁴ + ν², f = u − u².
[[nodiscard]] inline ScalarModel extended_fkpp(double eps) {
    const double p[] = {0.0, 1.0, 0.0, -eps * eps};
    const double f[] = {0.0, 1.0, -1.0};
    return ScalarModel::create(4, p, f, "extended-fkpp");
}

/// Cubic bistable family u(u+μ)(1−μ−u), with u rescaled by (1−μ)^{-1} so the
/// invaded-to state sits at 1: f(w) = (1−μ) w ((1−μ)w + μ)(1 − w).
[[nodiscard]] inline ScalarModel bistable(double mu) {
    const double a = 1.0 - mu;
    // a w (a w + mu)(1 - w) = a [ mu w + (a - mu) w² - a w³ ]
    const double p[] = {0.0, 1.0};
    const double f[] = {0.0, a * mu, a * (a - mu), -a * a};
    return ScalarModel::create(2, p, f, "bistable");
}

/// Even eighth-order symbol with P(0) = ε² (carried by f'(0)), P''(0) = 2, and at the
/// Turing wavenumber ν = i: P(i) = −b₁ε², P'(i) = 0, P''(i) = 2d. f = ε²(u − u³).
[[nodiscard]] inline ScalarModel eighth_order_amplitude(double eps, double b1, double d) {
    const double R = 1.0 - eps * eps * (1.0 + b1);
    const double a4 = 3.0 * R - 2.0 - d / 4.0;
    const double a3 = 2.0 * R - 1.0 + 2.0 * a4;
    const double a2 = R + a3 - a4;
    const double p[] = {0.0, 1.0, 0.0, a2, 0.0, a3, 0.0, a4};
    const double e2 = eps * eps;
    const double f[] = {0.0, e2, 0.0, -e2};
    return ScalarModel::create(8, p, f, "eighth-order");
}

/// d^+_c(λ, ν) = P(ν) + cν + f'(0) − λ
[[nodiscard]] inline cplx eval_dispersion_plus(const ScalarModel& m, double c, cplx lambda, cplx nu) {
    return m.P(nu) + c * nu + m.fp0() - lambda;
}

/// d^−_c(λ, ν) = P(ν) + cν + f'(1) − λ
[[nodiscard]] inline cplx eval_dispersion_minus(const ScalarModel& m, double c, cplx lambda, cplx nu) {
    return m.P(nu) + c * nu + m.fp1() - lambda;
}

/// Ascending coefficients of ν ↦ P(ν − η) + c(ν − η) + f'(0).
[[nodiscard]] inline std::vector<double> shifted_symbol_coeffs(const ScalarModel& m, double c, double eta) {
    std::vector<double> q = m.p;
    q[0] += m.fp0();
    q[1] += c;
    return taylor_shift(std::span<const double>(q), -eta);
}

struct SpreadingSpeed {
    double c_star = 0.0;
    double eta_star = 0.0;
    double alpha = 0.0;
    double newton_residual = std::numeric_limits<double>::infinity();
    bool pinched = false;
    double border_margin = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    bool used_continuation = false;
};

namespace detail {

struct SpeedNewton {
    double c, eta, residual;
    int iterations;
    bool converged;
};

inline double speed_residual(const ScalarModel& m, double c, double eta, double& F1, double& F2) {
    F1 = m.P(-eta) - c * eta + m.fp0();
    F2 = m.P_derivative(-eta, 1) + c;
    return std::max(std::abs(F1), std::abs(F2));
}

inline SpeedNewton speed_newton(const ScalarModel& m, double c, double eta, int max_iter, double tol) {
    double F1, F2;
    double res = speed_residual(m, c, eta, F1, F2);
    int it = 0;
    for (; it < max_iter && res > 1e-15; ++it) {
        const double j11 = -eta, j12 = -m.P_derivative(-eta, 1) - c;
        const double j21 = 1.0, j22 = -m.P_derivative(-eta, 2);
        const double det = j11 * j22 - j12 * j21;
        if (!(std::abs(det) > 1e-300)) break;
        const double dc = (-F1 * j22 + F2 * j12) / det;
        const double de = (-F2 * j11 + F1 * j21) / det;
        double step = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= 20; ++halving) {
            double G1, G2;
            const double trial = speed_residual(m, c + step * dc, eta + step * de, G1, G2);
            if (std::isfinite(trial) && trial < res) {
                c += step * dc;
                eta += step * de;
                res = trial;
                F1 = G1;
                F2 = G2;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    return {c, eta, res, it, res <= tol && std::isfinite(c) && std::isfinite(eta)};
}

}  // namespace detail

/// Newton on {d^+_c(0,−η) = 0, ∂_ν d^+_c(0,−η) = 0}. If Newton stalls, continues in a
/// homotopy parameter s that scales the coefficients p_k, k ≥ 3, from the second-order
/// truncation (closed form) to the full symbol.
[[nodiscard]] inline SpreadingSpeed find_spreading_speed(const ScalarModel& m, double init_c, double init_eta,
                                                         int max_iter = 100, double tol = 1e-10) {
    auto finish = [&](const detail::SpeedNewton& s, bool cont) {
        SpreadingSpeed out;
        out.c_star = s.c;
        out.eta_star = s.eta;
        out.alpha = 0.5 * m.P_derivative(-s.eta, 2);
        out.newton_residual = s.residual;
        out.iterations = s.iterations;
        out.used_continuation = cont;
        if (std::abs(out.alpha) < 1e-8)
            throw Error(ErrorCode::DegenerateDoubleRoot, "|alpha| < 1e-8 at the double root");
        if (out.alpha < 0.0)
            throw Error(ErrorCode::DegenerateDoubleRoot, "alpha < 0: double root is not a spreading saddle");
        return out;
    };

    // a double root with α < 0 is a spurious branch (e.g. the large-η root of the
    // extended FKPP symbol); fall through to continuation from the second-order truncation
    const auto direct = detail::speed_newton(m, init_c, init_eta, max_iter, tol);
    if (direct.converged && direct.eta > 0.0 && m.P_derivative(-direct.eta, 2) > 2e-8) return finish(direct, false);

    const double p1 = m.p[1], p2 = m.p[2];
    if (!(p2 > 0.0))
        throw Error(ErrorCode::NoConvergence, "Newton failed and no second-order homotopy start (p_2 <= 0)");
    double eta = std::sqrt(m.fp0() / p2);
    double c = 2.0 * std::sqrt(p2 * m.fp0()) - p1;
    double s = 0.0, ds = 0.1;
    int total = 0;
    while (s < 1.0) {
        const double s_next = std::min(1.0, s + ds);
        ScalarModel ms = m;
        for (std::size_t k = 3; k < ms.p.size(); ++k) ms.p[k] *= s_next;
        const auto r = detail::speed_newton(ms, c, eta, max_iter, tol);
        total += r.iterations;
        if (r.converged) {
            c = r.c;
            eta = r.eta;
            s = s_next;
            ds = std::min(0.25, ds * 1.5);
        } else {
            ds *= 0.5;
            if (ds < 1e-6) throw Error(ErrorCode::NoConvergence, "homotopy continuation stalled");
        }
    }
    auto last = detail::speed_newton(m, c, eta, max_iter, tol);
    last.iterations += total;
    if (!last.converged)
        throw Error(ErrorCode::NoConvergence, "residual " + std::to_string(last.residual) + " after continuation");
    return finish(last, true);
}

/// Root paths of the two central branches of d^+(λ, ν − η*) = 0, in the shifted
/// variable ν (so the double root sits at ν = 0).
struct PinchingReport {
    bool pinched = false;
    std::vector<double> lambda;
    std::vector<cplx> nu_plus;
    std::vector<cplx> nu_minus;
    double max_path_residual = 0.0;
    std::string note;
};

[[nodiscard]] inline double default_lambda_max(const ScalarModel& m) {
    return 10.0 * std::pow(std::abs(m.p.back()), -1.0 / double(m.half_order()));
}

[[nodiscard]] inline PinchingReport verify_pinching(const ScalarModel& m, const SpreadingSpeed& ss,
                                                    double lambda_max, int steps = 400) {
    if (!(lambda_max > 1e-3) || steps < 2)
        throw Error(ErrorCode::NotPinched, "lambda_max too small to certify pinching");
    const auto sym = shifted_symbol_coeffs(m, ss.c_star, ss.eta_star);
    std::vector<double> c(sym.begin(), sym.end());
    c[0] = 0.0;
    c[1] = 0.0;

    PinchingReport rep;
    rep.lambda = logspace(1e-3, lambda_max, std::size_t(steps));
    auto roots_at = [&](double lam) {
        std::vector<double> q = c;
        q[0] = -lam;
        return polynomial_roots(std::span<const double>(q));
    };
    auto nearest = [](const std::vector<cplx>& rs, cplx z, double& d1, double& d2) {
        std::size_t best = 0;
        d1 = d2 = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < rs.size(); ++j) {
            const double d = std::abs(rs[j] - z);
            if (d < d1) {
                d2 = d1;
                d1 = d;
                best = j;
            } else if (d < d2) {
                d2 = d;
            }
        }
        return best;
    };

    const double s0 = std::sqrt(rep.lambda[0] / ss.alpha);
    cplx np = s0, nm = -s0;
    double lam_prev = 0.0;
    for (std::size_t i = 0; i < rep.lambda.size(); ++i) {
        // sub-step until each tracked root has an unambiguous successor
        const double target = rep.lambda[i];
        double lam0 = (i == 0) ? target : lam_prev;
        int sub = 1;
        for (int refine = 0;; ++refine) {
            cplx tp = np, tm = nm;
            bool clean = true;
            for (int s = 1; s <= sub; ++s) {
                const double lam = lam0 * std::pow(target / lam0, double(s) / double(sub));
                const auto rs = roots_at(lam);
                double dp1, dp2, dm1, dm2;
                const auto ip = nearest(rs, tp, dp1, dp2);
                const auto im = nearest(rs, tm, dm1, dm2);
                if (ip == im)
                    throw Error(ErrorCode::RootCollision,
                                "central branches merge at lambda=" + std::to_string(lam));
                clean = clean && dp2 > 3.0 * dp1 && dm2 > 3.0 * dm1;
                tp = rs[ip];
                tm = rs[im];
            }
            if (clean || refine == 6) {
                if (!clean) rep.note += "passed a collision with a strong root near lambda=" + std::to_string(target) + "; ";
                np = tp;
                nm = tm;
                break;
            }
            sub *= 2;
        }
        lam_prev = target;
        rep.nu_plus.push_back(np);
        rep.nu_minus.push_back(nm);
        rep.max_path_residual = std::max({rep.max_path_residual,
                                          std::abs(horner(std::span<const double>(sym), np) - target),
                                          std::abs(horner(std::span<const double>(sym), nm) - target)});
    }

    bool sides = true;
    for (std::size_t i = 0; i < rep.lambda.size(); ++i)
        sides = sides && rep.nu_plus[i].real() > 0.0 && rep.nu_minus[i].real() < 0.0;
    const std::size_t n = rep.lambda.size();
    const bool growing = std::abs(rep.nu_plus[n - 1] - rep.nu_minus[n - 1]) >
                         std::abs(rep.nu_plus[n - 2] - rep.nu_minus[n - 2]);
    rep.pinched = sides && growing;
    rep.note += "numerical continuation certificate on lambda in [1e-3, lambda_max], log-uniform";
    if (!rep.pinched) throw Error(ErrorCode::NotPinched, "central root branches do not separate across Re nu = -eta*");
    return rep;
}

enum class BorderSide { left, right };

/// λ(k) with ν = ik − η (right) or ν = ik (left), i.e. the border of the
/// Fredholm region in the weighted space.
[[nodiscard]] inline std::vector<cplx> fredholm_border(const ScalarModel& m, double c, double eta, BorderSide side,
                                                       std::span<const double> k) {
    std::vector<cplx> out;
    out.reserve(k.size());
    for (double kk : k) {
        if (side == BorderSide::right)
            out.push_back(eval_dispersion_plus(m, c, 0.0, cplx(-eta, kk)));
        else
            out.push_back(eval_dispersion_minus(m, c, 0.0, cplx(0.0, kk)));
    }
    return out;
}

struct HypothesisReport {
    double eta = 0.0;
    double k_max = 0.0;
    double k_min = 0.0;
    double max_re_plus = 0.0;     ///< over |k| >= k_min; must be < 0
    double k_at_max_plus = 0.0;
    cplx lambda_plus_zero = 0.0;  ///< must vanish
    double max_re_minus = 0.0;    ///< must be < 0
    double k_at_max_minus = 0.0;
    bool critical_ok = false;     ///< right border strictly stable off k = 0
    bool touches_origin = false;  ///< λ^+(0) = 0
    bool left_ok = false;         ///< left border strictly stable
    [[nodiscard]] bool passed() const noexcept { return critical_ok && touches_origin && left_ok; }
    [[nodiscard]] std::string failed_clause() const {
        if (!critical_ok) return "critical (max Re lambda+ = " + std::to_string(max_re_plus) + ")";
        if (!touches_origin) return "origin (|lambda+(0)| = " + std::to_string(std::abs(lambda_plus_zero)) + ")";
        if (!left_ok) return "left (max Re lambda- = " + std::to_string(max_re_minus) + ")";
        return "none";
    }
};

/// Sampled borders with margins; never throws on a failed clause.
[[nodiscard]] inline HypothesisReport spectrum_hypothesis_report(const ScalarModel& m, const SpreadingSpeed& ss,
                                                                 double k_max, int samples, double eta) {
    HypothesisReport r;
    r.eta = eta;
    r.k_max = k_max;
    r.k_min = 1e-3 * k_max;
    r.max_re_plus = -std::numeric_limits<double>::infinity();
    r.max_re_minus = -std::numeric_limits<double>::infinity();
    const int n = std::max(samples, 3);
    for (int i = 0; i < n; ++i) {
        const double k = -k_max + 2.0 * k_max * double(i) / double(n - 1);
        const cplx lp = eval_dispersion_plus(m, ss.c_star, 0.0, cplx(-eta, k));
        const cplx lm = eval_dispersion_minus(m, ss.c_star, 0.0, cplx(0.0, k));
        if (std::abs(k) >= r.k_min && lp.real() > r.max_re_plus) {
            r.max_re_plus = lp.real();
            r.k_at_max_plus = k;
        }
        if (lm.real() > r.max_re_minus) {
            r.max_re_minus = lm.real();
            r.k_at_max_minus = k;
        }
    }
    // the grid need not contain ±k_min exactly; include them
    for (double k : {r.k_min, -r.k_min}) {
        const cplx lp = eval_dispersion_plus(m, ss.c_star, 0.0, cplx(-eta, k));
        if (lp.real() > r.max_re_plus) {
            r.max_re_plus = lp.real();
            r.k_at_max_plus = k;
        }
    }
    r.lambda_plus_zero = eval_dispersion_plus(m, ss.c_star, 0.0, cplx(-eta, 0.0));
    r.critical_ok = r.max_re_plus < 0.0;
    r.touches_origin = std::abs(r.lambda_plus_zero) <= 1e-8;
    r.left_ok = r.max_re_minus < 0.0;
    return r;
}

/// Same sampling at the critical weight; throws HypothesisViolated naming the clause.
inline HypothesisReport verify_spectrum_hypotheses(const ScalarModel& m, SpreadingSpeed& ss, double k_max,
                                                   int samples) {
    auto r = spectrum_hypothesis_report(m, ss, k_max, samples, ss.eta_star);
    ss.border_margin = r.max_re_plus;
    if (!r.passed()) throw Error(ErrorCode::HypothesisViolated, r.failed_clause());
    return r;
}

}  // namespace pulled
