#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "pulled/error.hpp"
#include "pulled/fit.hpp"
#include "pulled/front.hpp"
#include "pulled/operator.hpp"
#include "pulled/semigroup.hpp"
#include "pulled/weights.hpp"

namespace pulled {

enum class DataRecipe { gaussian, algebraic_tail, shifted_front };

struct PerturbationConfig {
    DataRecipe recipe = DataRecipe::gaussian;
    double amplitude = 1e-2;
    double center = 4.0;      ///< gaussian
    double width = 1.5;       ///< gaussian: exp(−(x − center)²/width²)
    double shift = 0.5;       ///< shifted_front: δ, rounded to a multiple of h
    double r = 2.0;           ///< localization class; also the tail is ⟨x⟩^{−r−0.6}
    double s = -2.0;          ///< measurement weight: norms are ‖p‖_{H¹_s}
    double horizon = 300.0;
    double t_fit_min = 10.0;
    double fit_end_fraction = 0.8;  ///< fit window [t_fit_min, fraction·horizon]
    std::size_t samples = 16;       ///< log-uniform output times in the fit window
    bool nonlinear = true;
    std::string regime = "localized";
    double window_lo = 1.35;  ///< predicted exponent window
    double window_hi = 1.7;
};

/// Smooth cutoff that removes everything beyond 0.85 L, so data are compatible with the
/// far-field rows of the time stepper.
[[nodiscard]] inline double right_taper(double x, double L) { return 1.0 - blend_ramp((x - 0.8 * L) / (0.05 * L)); }

/// χ₊: 0 for x ≤ 0, 1 for x ≥ 4.
[[nodiscard]] inline double right_indicator(double x) { return blend_ramp((x - 2.0) / 2.0); }

/// Initial perturbation p₀ = ωv₀. The shifted-front recipe integrates ωq*' = μ₁ψ over
/// [x − δ, x] with the weight ratio inside the integral, so no e^{ηx} is ever formed.
[[nodiscard]] inline std::vector<double> make_initial_data(const WeightedOperator& op, const PerturbationConfig& cfg,
                                                           const PsiProfile* psi = nullptr) {
    const Grid& g = op.grid;
    const double L = g.x_max();
    std::vector<double> p(g.n, 0.0);
    switch (cfg.recipe) {
        case DataRecipe::gaussian:
            for (std::size_t i = 0; i < g.n; ++i) {
                const double z = (g.x(i) - cfg.center) / cfg.width;
                p[i] = cfg.amplitude * std::exp(-z * z);
            }
            break;
        case DataRecipe::algebraic_tail:
            for (std::size_t i = 0; i < g.n; ++i) {
                const double x = g.x(i);
                p[i] = cfg.amplitude * right_indicator(x) * std::pow(japanese(x), -cfg.r - 0.6);
            }
            break;
        case DataRecipe::shifted_front: {
            if (psi == nullptr || psi->psi.size() != g.n)
                throw Error(ErrorCode::PsiUnavailable, "shifted-front data needs psi on the operator grid");
            const auto k = std::size_t(std::max(1.0, std::round(std::abs(cfg.shift) / g.h)));
            const double sgn = cfg.shift < 0.0 ? -1.0 : 1.0;
            const ExponentialWeight w{op.ss.eta_star};
            for (std::size_t i = 0; i < g.n; ++i) {
                // trapezoid over the k cells between x − δ and x (or x and x + δ for δ < 0)
                double acc = 0.0;
                for (std::size_t j = 0; j <= k; ++j) {
                    const std::ptrdiff_t idx = std::ptrdiff_t(i) - std::ptrdiff_t(sgn > 0 ? j : 0) +
                                               std::ptrdiff_t(sgn > 0 ? 0 : j);
                    if (idx < 0 || idx >= std::ptrdiff_t(g.n)) continue;
                    const double wt = (j == 0 || j == k) ? 0.5 : 1.0;
                    acc += wt * std::exp(w.log_value(g.x(i)) - w.log_value(g.x(std::size_t(idx)))) *
                           psi->psi[std::size_t(idx)];
                }
                p[i] = -sgn * cfg.amplitude * psi->mu1 * acc * g.h;
            }
            break;
        }
    }
    for (std::size_t i = 0; i < g.n; ++i) p[i] *= right_taper(g.x(i), L);
    return p;
}

/// ωN(q*, ω^{-1}p) = Σ_{j≥2} f^{(j)}(q*)/j! · ω^{−(j−1)} p^j; every factor decays on the right.
class WeightedNonlinearity {
public:
    WeightedNonlinearity(const WeightedOperator& op, const FrontProfile& front) {
        if (!front.grid.same_as(op.grid)) throw Error(ErrorCode::GridMismatch, "front and operator grids differ");
        const ExponentialWeight w{op.ss.eta_star};
        const int deg = op.model.f_degree();
        double fact = 1.0;
        for (int j = 2; j <= deg; ++j) {
            fact *= double(j);
            std::vector<double> a(op.n());
            for (std::size_t i = 0; i < a.size(); ++i)
                a[i] = op.model.f_derivative(front.q[i], j) / fact *
                       std::exp(-double(j - 1) * w.log_value(op.grid.x(i)));
            coeff_.push_back(std::move(a));
        }
    }

    [[nodiscard]] std::vector<double> operator()(std::span<const double> p) const {
        std::vector<double> out(p.size(), 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) {
            double pj = p[i] * p[i], acc = 0.0;
            for (const auto& a : coeff_) {
                acc += a[i] * pj;
                pj *= p[i];
            }
            out[i] = acc;
        }
        return out;
    }

private:
    std::vector<std::vector<double>> coeff_;  ///< j = 2..deg f
};

struct DecayExperiment {
    PerturbationConfig config;
    std::vector<double> p0;
    double p0_norm_r = 0.0;                 ///< ‖p₀‖_{H¹_r}
    std::vector<double> times;
    std::vector<double> norms;              ///< ‖p(t)‖_{H¹_s}
    std::vector<std::vector<double>> states;
    std::vector<double> theta;              ///< running sup of (1+t)^{3/2}‖p‖_{H¹_s} at the output times
    double k_ratio_max = 0.0;               ///< max ‖ωN‖_{H¹_r} / ‖p‖²_{H¹_{−r}} at output times
    std::vector<double> integral_N;         ///< ∫₀^T ωN ds (trapezoid over accepted steps)
    double integral_tail_bound = 0.0;       ///< ‖ωN(T)‖_∞ T/2, assuming t^{−3} decay beyond T
    LineFit fit;
    double exponent = std::numeric_limits<double>::quiet_NaN();
    double exponent_stderr = std::numeric_limits<double>::quiet_NaN();
    bool theta_bounded = false;
    bool pass = false;
    std::size_t steps = 0;
};

/// Output times: a few early samples, then `samples` log-uniform points in the fit window,
/// then the horizon.
[[nodiscard]] inline std::vector<double> experiment_times(const PerturbationConfig& cfg) {
    std::vector<double> ts;
    for (double t : {0.5, 1.0, 2.0, 5.0})
        if (t < cfg.t_fit_min) ts.push_back(t);
    const double t1 = cfg.fit_end_fraction * cfg.horizon;
    for (double t : logspace(cfg.t_fit_min, t1, cfg.samples)) ts.push_back(t);
    if (cfg.horizon > t1) ts.push_back(cfg.horizon);
    return ts;
}

[[nodiscard]] inline DecayExperiment run_perturbation(const WeightedOperator& op, const FrontProfile& front,
                                                      const PerturbationConfig& cfg, const PsiProfile* psi = nullptr,
                                                      StepControl ctl = {}) {
    if (!front.grid.same_as(op.grid)) throw Error(ErrorCode::GridMismatch, "front and operator grids differ");
    if (cfg.samples < 12) throw Error(ErrorCode::ConfigInvalid, "decay fits need at least 12 samples");
    DecayExperiment ex;
    ex.config = cfg;
    ex.p0 = make_initial_data(op, cfg, psi);
    const WeightedNorm Nr{AlgebraicWeight::uniform(cfg.r), 1}, Nmr{AlgebraicWeight::uniform(-cfg.r), 1},
        Ns{AlgebraicWeight::uniform(cfg.s), 1};
    ex.p0_norm_r = Nr(op.grid, ex.p0);

    const WeightedNonlinearity wn(op, front);
    Nonlinearity N;
    if (cfg.nonlinear) N = [&wn](std::span<const double> p) { return wn(p); };
    double p0_sup = 0.0;
    for (double v : ex.p0) p0_sup = std::max(p0_sup, std::abs(v));

    ex.integral_N.assign(op.n(), 0.0);
    std::vector<double> N_prev = cfg.nonlinear ? wn(ex.p0) : std::vector<double>(op.n(), 0.0);
    double t_prev = 0.0;
    auto observe = [&](double t, std::span<const double> u, std::span<const double> Nu) {
        double sup = 0.0;
        for (double v : u) sup = std::max(sup, std::abs(v));
        if (sup > 1e3 * std::max(p0_sup, std::numeric_limits<double>::min()))
            throw Error(ErrorCode::BlowupDetected, "perturbation exceeded 1e3 times its initial size at t = " +
                                                       std::to_string(t));
        if (!Nu.empty()) {
            const double dt = t - t_prev;
            for (std::size_t i = 0; i < Nu.size(); ++i) {
                ex.integral_N[i] += 0.5 * dt * (N_prev[i] + Nu[i]);
                N_prev[i] = Nu[i];
            }
        }
        t_prev = t;
    };

    Bdf2Integrator I(op, ctl, N);
    const auto ts = experiment_times(cfg);
    const auto tr = I.run(ex.p0, ts, observe);
    ex.steps = tr.steps;
    double th = 0.0;
    std::vector<double> fx, fy;
    for (std::size_t j = 0; j < tr.times.size(); ++j) {
        const double t = tr.times[j];
        const auto& p = tr.states[j];
        const double nrm = Ns(op.grid, p);
        ex.times.push_back(t);
        ex.norms.push_back(nrm);
        th = std::max(th, std::pow(1.0 + t, 1.5) * nrm);
        ex.theta.push_back(th);
        if (cfg.nonlinear) {
            const double pn = Nmr(op.grid, p);
            if (pn > 0.0) ex.k_ratio_max = std::max(ex.k_ratio_max, Nr(op.grid, wn(p)) / (pn * pn));
        }
        if (t >= cfg.t_fit_min * (1.0 - 1e-12) && t <= cfg.fit_end_fraction * cfg.horizon * (1.0 + 1e-12)) {
            fx.push_back(t);
            fy.push_back(nrm);
        }
    }
    ex.states = tr.states;
    if (cfg.nonlinear) {
        double s = 0.0;
        for (double v : N_prev) s = std::max(s, std::abs(v));
        ex.integral_tail_bound = 0.5 * s * cfg.horizon;
    }
    ex.fit = fit_loglog(fx, fy);
    ex.exponent = -ex.fit.slope;
    ex.exponent_stderr = ex.fit.slope_stderr;
    // bounded: the running sup grows by < 10% over the second half of the run
    std::size_t half = 0;
    while (half + 1 < ex.times.size() && ex.times[half] < 0.5 * cfg.horizon) ++half;
    ex.theta_bounded = ex.theta.back() <= 1.1 * ex.theta[half];
    ex.pass = ex.exponent >= cfg.window_lo && ex.exponent <= cfg.window_hi;
    return ex;
}

/// α* from p(t) ≈ α* t^{−3/2} ψ: per-time projections c(t) = t^{3/2}⟨p, ψ⟩/⟨ψ, ψ⟩ in H¹_{−r}
/// are fitted as c(t) = α* + B/t over the late samples (t ≥ t_late). Only odd powers of
/// √λ enter the small-λ resolvent, so the first correction is relatively O(1/t). The linear prediction applies the R₁ coefficient to
/// p̃ = p₀ + ∫ωN: α*_lin = κ(p̃)/(2√π).
struct AlphaStarEstimate {
    double alpha_star = 0.0;
    double alpha_star_one_term = 0.0;      ///< c(t) at the last sample
    LineFit two_term_fit;                  ///< c(t) against 1/t
    LineFit remainder_fit;                 ///< log-log of ‖p − α* t^{−3/2}ψ‖_{H¹_{−r}}
    double remainder_slope = std::numeric_limits<double>::quiet_NaN();
    double alpha_linear = 0.0;             ///< α* predicted from R₁ applied to p̃
    std::vector<double> alpha_linear_levels;  ///< the prediction for γ₀, γ₀/2, γ₀/4
    double relative_mismatch = 0.0;        ///< |α* − α*_lin| / |α*_lin|
};

[[nodiscard]] inline AlphaStarEstimate estimate_alpha_star(const WeightedOperator& op, const DecayExperiment& ex,
                                                           const PsiProfile& psi, double r = 2.6, double t_late = 20.0,
                                                           double gamma0 = 0.02) {
    if (psi.psi.size() != op.n()) throw Error(ErrorCode::PsiUnavailable, "psi missing or on another grid");
    AlphaStarEstimate est;
    const WeightedNorm N{AlgebraicWeight::uniform(-r), 1};
    const std::span<const double> ps(psi.psi);
    const double pp = N.inner(op.grid, ps, ps);
    std::vector<double> xs, cs, ts;
    for (std::size_t j = 0; j < ex.times.size(); ++j) {
        const double t = ex.times[j];
        if (t < t_late) continue;
        const double c = std::pow(t, 1.5) * N.inner(op.grid, std::span<const double>(ex.states[j]), ps) / pp;
        ts.push_back(t);
        xs.push_back(1.0 / t);
        cs.push_back(c);
    }
    if (cs.size() < 3) throw Error(ErrorCode::WindowUnderflow, "fewer than 3 samples after t_late");
    est.alpha_star_one_term = cs.back();
    est.two_term_fit = fit_line(xs, cs);
    est.alpha_star = est.two_term_fit.intercept;
    std::vector<double> rem(op.n()), rn;
    for (std::size_t j = 0, k = 0; j < ex.times.size(); ++j) {
        if (ex.times[j] < t_late) continue;
        const double amp = est.alpha_star * std::pow(ts[k++], -1.5);
        for (std::size_t i = 0; i < rem.size(); ++i) rem[i] = ex.states[j][i] - amp * psi.psi[i];
        rn.push_back(N(op.grid, rem));
    }
    est.remainder_fit = fit_loglog(ts, rn);
    est.remainder_slope = est.remainder_fit.slope;

    std::vector<double> pt(op.n());
    for (std::size_t i = 0; i < pt.size(); ++i)
        pt[i] = ex.p0[i] + (ex.integral_N.empty() ? 0.0 : ex.integral_N[i]);
    const auto ptc = to_complex(pt);
    const double k = 1.0 / (2.0 * std::sqrt(std::numbers::pi));
    for (int j = 0; j < 3; ++j)
        est.alpha_linear_levels.push_back(k * extract_R1(op, ps, ptc, r, gamma0 * std::ldexp(1.0, -j)).coefficient);
    est.alpha_linear = est.alpha_linear_levels.front();
    est.relative_mismatch = std::abs(est.alpha_star - est.alpha_linear) / std::abs(est.alpha_linear);
    return est;
}

/// Decay regime for a (r, s) pair, the best rate it allows and the verdict window.
struct RegimeWindow {
    std::string regime;
    double best_rate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// r ≥ 2 with s ≤ −r: localized (t^{−3/2}). 1/2 < r < 2: Hölder regime, best rate
/// 1 + (r − 3/2 + min(1, −1/2 − s))/2. r ≤ 1/2: blowup regime, best rate 1 − (1/2 − r)/2.
/// Bounds are one-sided, so the Hölder and blowup windows accept anything ≥ best − 0.15
/// (capped at 1 for the blowup regime).
[[nodiscard]] inline RegimeWindow regime_window(double r, double s) {
    if (r >= 2.0 && s <= -r + 1e-12) return {"localized", 1.5, 1.35, 1.7};
    if (r > 0.5) {
        const double best = 1.0 + 0.5 * (r - 1.5 + std::min(1.0, -0.5 - s));
        return {"holder", best, best - 0.15, std::numeric_limits<double>::infinity()};
    }
    const double best = 1.0 - 0.5 * (0.5 - r);
    return {"blowup", best, best - 0.15, 1.0};
}

struct SweepEntry {
    double r = 0.0;
    double s = 0.0;
    RegimeWindow window;
    double exponent = std::numeric_limits<double>::quiet_NaN();
    double exponent_stderr = std::numeric_limits<double>::quiet_NaN();
    bool consistent = false;
};

/// Decay exponents against localization: algebraic tails ⟨x⟩^{−r−0.6} (Gaussian data for
/// the localized regime), measured in H¹_s.
[[nodiscard]] inline std::vector<SweepEntry> localization_sweep(const WeightedOperator& op, const FrontProfile& front,
                                                                std::span<const std::pair<double, double>> rs,
                                                                PerturbationConfig base = {}) {
    std::vector<SweepEntry> out;
    for (const auto& [r, s] : rs) {
        PerturbationConfig cfg = base;
        cfg.r = r;
        cfg.s = s;
        const auto w = regime_window(r, s);
        cfg.recipe = w.regime == "localized" ? DataRecipe::gaussian : DataRecipe::algebraic_tail;
        cfg.regime = w.regime;
        cfg.window_lo = w.lo;
        cfg.window_hi = w.hi;
        const auto ex = run_perturbation(op, front, cfg);
        SweepEntry e;
        e.r = r;
        e.s = s;
        e.window = w;
        e.exponent = ex.exponent;
        e.exponent_stderr = ex.exponent_stderr;
        e.consistent = ex.pass;
        out.push_back(e);
    }
    return out;
}

}  // namespace pulled
