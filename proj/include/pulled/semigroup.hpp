#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "pulled/error.hpp"
#include "pulled/fit.hpp"
#include "pulled/model.hpp"
#include "pulled/operator.hpp"
#include "pulled/parallel.hpp"

namespace pulled {

/// Local shape of the weighted border in the γ = √λ plane (Re γ ≥ 0):
/// γ_b = iγ₁a + γ₂a² + O(a³). c2 is the chosen arc curvature and a_star the arc half-length.
struct BorderTangency {
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double c2 = 0.0;
    double a_star = 0.0;
};

namespace detail {

inline cplx arc_gamma(double shift, double c2, double a) { return cplx(shift + c2 * a * a, a); }

/// True if every sampled arc node (excluding the touching point a = 0) lies in the
/// index-0 region right of both borders.
inline bool arc_admissible(const ScalarModel& m, const SpreadingSpeed& ss, double c2, double a_star,
                           double shift = 0.0, int samples = 200) {
    for (int j = -samples; j <= samples; ++j) {
        const double a = a_star * double(j) / double(samples);
        if (shift == 0.0 && std::abs(a) < 1e-3 * a_star) continue;
        const cplx g = arc_gamma(shift, c2, a);
        if (!right_of_borders(m, ss, g * g)) return false;
    }
    return true;
}

inline bool ray_admissible(const ScalarModel& m, const SpreadingSpeed& ss, cplx start, double theta, double length,
                           int samples = 200) {
    const cplx dir = std::polar(1.0, theta);
    for (int j = 1; j <= samples; ++j)
        if (!right_of_borders(m, ss, start + dir * (length * double(j) / double(samples)))) return false;
    return true;
}

}  // namespace detail

/// Fits γ₁, γ₂ from border samples near k = 0, picks c₂ = max(2γ₂/γ₁², 0.1), then
/// doubles c₂ (up to 4 times) and halves a* until the whole arc is admissible.
[[nodiscard]] inline BorderTangency fit_border_tangency(const ScalarModel& model, const SpreadingSpeed& ss,
                                                        double a_star = 0.5, double k0 = 0.05) {
    if (!(a_star > 0.0)) throw Error(ErrorCode::TangencyFitFailed, "empty arc (a* = 0)");
    std::vector<double> ks;
    for (int j = 1; j <= 20; ++j) {
        ks.push_back(k0 * double(j) / 20.0);
        ks.push_back(-k0 * double(j) / 20.0);
    }
    const auto lam = fredholm_border(model, ss.c_star, ss.eta_star, BorderSide::right, ks);
    // least squares through the origin: |Im γ| = γ₁|k|, Re γ = (γ₂/γ₁²) a²
    double skk = 0.0, ska = 0.0, saa = 0.0, sar = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        const cplx g = std::sqrt(lam[i]);
        const double a = g.imag();
        skk += ks[i] * ks[i];
        ska += std::abs(ks[i]) * std::abs(a);
        saa += a * a * a * a;
        sar += a * a * g.real();
    }
    BorderTangency bt;
    bt.gamma1 = ska / skk;
    const double curv = sar / saa;
    bt.gamma2 = curv * bt.gamma1 * bt.gamma1;
    if (!std::isfinite(bt.gamma1) || !(bt.gamma1 > 0.0))
        throw Error(ErrorCode::TangencyFitFailed, "border does not leave the origin along the imaginary axis");
    bt.c2 = std::max(2.0 * curv, 0.1);
    bt.a_star = a_star;
    for (int halvings = 0; halvings < 12; ++halvings, bt.a_star *= 0.5) {
        double c2 = bt.c2;
        for (int grow = 0; grow <= 4; ++grow, c2 *= 2.0) {
            if (detail::arc_admissible(model, ss, c2, bt.a_star)) {
                bt.c2 = c2;
                return bt;
            }
        }
    }
    throw Error(ErrorCode::TangencyFitFailed, "no admissible arc found");
}

enum class ContourKind { tangent, keyhole };

/// Upper half of a conjugation-symmetric contour; the lower half is implied for real data.
/// Tangent: λ = (shift + ia + c₂a²)², a ∈ [0, a*], then a ray. Keyhole: λ = (c₀/t)e^{iφ},
/// φ ∈ [0, φ₀], then the ray along e^{iφ₀}. Ray angles (and φ₀) step down by π/40, to no
/// less than 0.55π, until every sampled ray node is right of both borders.
struct ContourSpec {
    ContourKind kind = ContourKind::tangent;
    double a_star = 0.5;
    double c2 = 0.1;
    double shift = 0.0;
    double c0 = 1.0;
    double phi0 = 0.9 * std::numbers::pi;
    double ray_angle = 0.75 * std::numbers::pi;  ///< first angle tried for the tangent ray
    unsigned nodes = 64;                          ///< Gauss–Legendre nodes per segment, doubled to converge
    double ray_decay = 40.0;                      ///< ray ends where Re λ·t = −ray_decay
    double tol = 1e-6;
};

[[nodiscard]] inline ContourSpec tangent_contour(const BorderTangency& bt) {
    ContourSpec c;
    c.kind = ContourKind::tangent;
    c.a_star = bt.a_star;
    c.c2 = bt.c2;
    return c;
}

[[nodiscard]] inline ContourSpec keyhole_contour(double c0 = 1.0, double phi0 = 0.9 * std::numbers::pi) {
    ContourSpec c;
    c.kind = ContourKind::keyhole;
    c.c0 = c0;
    c.phi0 = phi0;
    return c;
}

/// One evaluation of e^{Lt}g. norm_h1_m2 is ‖u‖_{H¹_{−2}}.
struct SemigroupSample {
    double t = 0.0;
    std::vector<double> g;
    std::vector<double> u;
    std::string method;
    double norm_h1_m2 = 0.0;
    unsigned nodes = 0;         ///< contour: converged nodes per segment
    double ray_angle = 0.0;     ///< contour: angle actually used
    std::size_t steps = 0;      ///< time stepping: accepted steps
    std::size_t rejected = 0;
};

namespace detail {

struct Segment {
    std::function<cplx(double)> lambda;
    std::function<cplx(double)> dlambda;
    double lo = 0.0, hi = 0.0;
};

inline std::vector<Segment> contour_segments(const WeightedOperator& op, const ContourSpec& cs, double t,
                                             double& theta_used) {
    constexpr double pi = std::numbers::pi;
    const bool tangent = cs.kind == ContourKind::tangent;
    if (tangent && !(cs.a_star > 0.0)) throw Error(ErrorCode::TangencyFitFailed, "empty arc (a* = 0)");
    const double theta0 = tangent ? cs.ray_angle : cs.phi0;
    // the keyhole's arc ends where its ray starts, so lowering the angle shortens the arc too
    for (double th = theta0; th >= 0.55 * pi - 1e-12; th -= 0.025 * pi) {
        std::vector<Segment> segs;
        cplx end;
        if (tangent) {
            const double sh = cs.shift, c2 = cs.c2;
            segs.push_back({[=](double a) { const cplx g = arc_gamma(sh, c2, a); return g * g; },
                            [=](double a) { return 2.0 * arc_gamma(sh, c2, a) * cplx(2.0 * c2 * a, 1.0); }, 0.0,
                            cs.a_star});
            const cplx g = arc_gamma(sh, c2, cs.a_star);
            end = g * g;
        } else {
            const double rho = cs.c0 / t;
            segs.push_back({[=](double p) { return std::polar(rho, p); },
                            [=](double p) { return cplx(0.0, 1.0) * std::polar(rho, p); }, 0.0, th});
            end = std::polar(rho, th);
        }
        const double len = (cs.ray_decay / t + end.real()) / std::abs(std::cos(th));
        if (!ray_admissible(op.model, op.ss, end, th, len)) continue;
        const cplx dir = std::polar(1.0, th);
        segs.push_back({[=](double s) { return end + dir * s; }, [=](double) { return dir; }, 0.0, len});
        theta_used = th;
        return segs;
    }
    throw Error(ErrorCode::TangencyFitFailed, "no ray angle keeps the contour right of the borders");
}

inline std::vector<double> contour_sum(const WeightedOperator& op, const std::vector<Segment>& segs, double t,
                                       std::span<const double> g, unsigned nodes) {
    const auto q = gauss_legendre(nodes);
    struct Node {
        cplx lambda, weight;
    };
    std::vector<Node> all;
    for (const auto& s : segs) {
        const double mid = 0.5 * (s.lo + s.hi), half = 0.5 * (s.hi - s.lo);
        for (std::size_t j = 0; j < q.nodes.size(); ++j) {
            const double p = mid + half * q.nodes[j];
            const cplx lam = s.lambda(p);
            all.push_back({lam, half * q.weights[j] * s.dlambda(p) * std::exp(lam * t)});
        }
    }
    const auto gc = to_complex(g);
    std::vector<CVector> parts(all.size());
    parallel_for(all.size(), [&](std::size_t j) {
        ShiftedSolver S(op, all[j].lambda);
        parts[j] = S.solve(gc);
        for (auto& v : parts[j]) v *= all[j].weight;
    });
    std::vector<double> u(op.n(), 0.0);
    for (const auto& p : parts)
        for (std::size_t i = 0; i < u.size(); ++i) u[i] -= p[i].imag() / std::numbers::pi;
    return u;
}

inline double sup_diff_rel(std::span<const double> a, std::span<const double> b) {
    double d = 0.0, s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, std::abs(a[i] - b[i]));
        s = std::max(s, std::abs(b[i]));
    }
    return s > 0.0 ? d / s : d;
}

}  // namespace detail

/// e^{Lt}g = −(1/2πi)∫ e^{λt}(L − λ)^{-1}g dλ for real g, from the upper half contour.
/// Nodes per segment double from cs.nodes until successive results agree to cs.tol.
[[nodiscard]] inline SemigroupSample apply_semigroup_contour(const WeightedOperator& op, const ContourSpec& cs, double t,
                                                             std::span<const double> g, unsigned max_nodes = 1024) {
    if (g.size() != op.n()) throw Error(ErrorCode::GridMismatch, "data size differs from operator grid");
    if (!(t > 0.0)) throw Error(ErrorCode::QuadratureUnconverged, "contour evaluation needs t > 0");
    SemigroupSample out;
    out.t = t;
    out.g.assign(g.begin(), g.end());
    out.method = cs.kind == ContourKind::tangent ? "contour-tangent" : "contour-keyhole";
    const auto segs = detail::contour_segments(op, cs, t, out.ray_angle);
    auto prev = detail::contour_sum(op, segs, t, g, cs.nodes);
    for (unsigned n = 2 * cs.nodes; n <= max_nodes; n *= 2) {
        auto cur = detail::contour_sum(op, segs, t, g, n);
        if (detail::sup_diff_rel(prev, cur) <= cs.tol) {
            out.u = std::move(cur);
            out.nodes = n;
            out.norm_h1_m2 = h1_norm(op.grid, to_complex(out.u), -2.0);
            return out;
        }
        prev = std::move(cur);
    }
    throw Error(ErrorCode::QuadratureUnconverged, "contour quadrature did not settle at " + std::to_string(max_nodes) +
                                                      " nodes per segment");
}

/// Step control for the BDF2 integrator. Time is kept in integer ticks of
/// dt0·2^{min_level}; every step is a power-of-two number of ticks.
struct StepControl {
    double dt0 = 1.0 / 16384.0;
    int min_level = -20;
    int max_level = 16;      ///< dt ≤ dt0·2^max_level
    double tol = 1e-8;
    std::size_t max_steps = 2'000'000;
    /// Far-field rows are frozen at this λ for every step. Rows that follow a₀/dt would
    /// be exact per step but make full and half steps solve different boundary problems,
    /// which the step-doubling estimate reads as error once the solution reaches x = ±L.
    double bc_lambda = 0.0;
};

/// Explicit part N(u) for IMEX runs; empty for the linear flow.
using Nonlinearity = std::function<std::vector<double>(std::span<const double>)>;

/// Called after each accepted step with (t, u, N(u) or empty).
using StepObserver = std::function<void(double, std::span<const double>, std::span<const double>)>;

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    std::size_t steps = 0;
    std::size_t rejected = 0;
};

/// Variable-step BDF2 (SBDF2 when N is given) with a backward-Euler first step and
/// step-doubling error control. Each implicit solve is (L − a₀/dt)u = rhs with
/// far-field rows frozen at StepControl::bc_lambda.
class Bdf2Integrator {
public:
    Bdf2Integrator(const WeightedOperator& op, StepControl ctl = {}, Nonlinearity N = {})
        : op_(&op), ctl_(ctl), N_(std::move(N)) {
        tick_ = ctl_.dt0 * std::ldexp(1.0, ctl_.min_level);
    }

    /// Integrates from g at t = 0 and records the state at each requested time (ascending).
    [[nodiscard]] Trajectory run(std::span<const double> g, std::span<const double> times,
                                 const StepObserver& observe = {}) {
        if (g.size() != op_->n()) throw Error(ErrorCode::GridMismatch, "data size differs from operator grid");
        Trajectory tr;
        State s;
        s.u.assign(g.begin(), g.end());
        s.Nu = eval_N(s.u);
        std::int64_t now = 0;
        int level = 0;
        for (double tout : times) {
            const auto target = std::int64_t(std::llround(tout / ctl_.dt0)) * ticks(0);  // outputs snap to dt0
            if (target < now) throw Error(ErrorCode::StepsizeUnderflow, "output times must be ascending");
            while (now < target) {
                if (tr.steps >= ctl_.max_steps) throw Error(ErrorCode::StepsizeUnderflow, "step budget exhausted");
                int lev = level;
                while (ticks(lev) > target - now) --lev;
                for (;;) {
                    if (lev < ctl_.min_level + 1)
                        throw Error(ErrorCode::StepsizeUnderflow, "error control demands dt below the floor");
                    const std::int64_t H = ticks(lev);
                    State full = step(s, H);
                    State half = step(s, H / 2);
                    State two = step(half, H / 2);
                    const double err = detail::sup_diff_rel(full.u, two.u) / 3.0;
                    if (err <= ctl_.tol) {
                        now += H;
                        s = std::move(two);
                        ++tr.steps;
                        if (observe) observe(double(now) * tick_, s.u, s.Nu);
                        level = (err < ctl_.tol / 16.0 && lev < ctl_.max_level) ? lev + 1 : lev;
                        break;
                    }
                    ++tr.rejected;
                    --lev;
                }
            }
            tr.times.push_back(double(now) * tick_);
            tr.states.push_back(s.u);
        }
        return tr;
    }

private:
    struct State {
        std::vector<double> u, u_prev, Nu, N_prev;
        std::int64_t h_prev = 0;  ///< 0 until a step has been taken
    };

    [[nodiscard]] std::int64_t ticks(int level) const { return std::int64_t(1) << (level - ctl_.min_level); }

    [[nodiscard]] std::vector<double> eval_N(std::span<const double> u) const {
        return N_ ? N_(u) : std::vector<double>{};
    }

    const ShiftedSolver& solver(double lambda) {
        auto it = cache_.find(lambda);
        if (it != cache_.end()) return it->second;
        if (cache_.size() >= 24) cache_.clear();
        return cache_.emplace(lambda, ShiftedSolver(*op_, lambda, ctl_.bc_lambda)).first->second;
    }

    [[nodiscard]] State step(const State& s, std::int64_t H) {
        const double dt = double(H) * tick_;
        const std::size_t n = s.u.size();
        CVector rhs(n);
        double a0;
        if (s.h_prev == 0) {
            a0 = 1.0;
            for (std::size_t i = 0; i < n; ++i) rhs[i] = -s.u[i] / dt - (N_ ? s.Nu[i] : 0.0);
        } else {
            const double w = double(H) / double(s.h_prev);
            a0 = (1.0 + 2.0 * w) / (1.0 + w);
            const double a1 = 1.0 + w, a2 = w * w / (1.0 + w);
            for (std::size_t i = 0; i < n; ++i) {
                rhs[i] = -(a1 * s.u[i] - a2 * s.u_prev[i]) / dt;
                if (N_) rhs[i] -= (1.0 + w) * s.Nu[i] - w * s.N_prev[i];
            }
        }
        const auto x = solver(a0 / dt).solve(rhs);
        State out;
        out.u = real_part(x);
        out.u_prev = s.u;
        out.Nu = eval_N(out.u);
        out.N_prev = s.Nu;
        out.h_prev = H;
        return out;
    }

    const WeightedOperator* op_;
    StepControl ctl_;
    Nonlinearity N_;
    double tick_;
    std::map<double, ShiftedSolver> cache_;
};

[[nodiscard]] inline SemigroupSample apply_semigroup_timestep(const WeightedOperator& op, double t,
                                                              std::span<const double> g, StepControl ctl = {}) {
    SemigroupSample out;
    out.t = t;
    out.g.assign(g.begin(), g.end());
    out.method = "bdf2";
    if (t == 0.0) {
        out.u = out.g;
    } else {
        Bdf2Integrator I(op, ctl);
        const double ts[] = {t};
        auto tr = I.run(g, ts);
        out.u = std::move(tr.states.back());
        out.t = tr.times.back();
        out.steps = tr.steps;
        out.rejected = tr.rejected;
    }
    out.norm_h1_m2 = h1_norm(op.grid, to_complex(out.u), -2.0);
    return out;
}

/// Leading-order check e^{Lt}g ≈ (1/(2√π)) t^{−3/2} κψ with κψ = R₁g.
struct AsymptoticsReport {
    double coefficient = 0.0;                ///< κ from the resolvent expansion
    double nonproportionality = 0.0;
    std::vector<double> times;
    std::vector<double> norms;               ///< ‖u(t)‖_{H¹_{−r}}
    std::vector<double> predicted_norms;
    std::vector<double> remainder_norms;
    std::vector<double> measured_coefficients;  ///< 2√π t^{3/2}⟨u, ψ⟩/⟨ψ, ψ⟩ per time
    LineFit norm_fit;
    LineFit remainder_fit;
};

[[nodiscard]] inline AsymptoticsReport verify_semigroup_asymptotics(const WeightedOperator& op,
                                                                    std::span<const double> psi, double r,
                                                                    std::span<const double> g,
                                                                    std::span<const double> times,
                                                                    StepControl ctl = {}) {
    AsymptoticsReport rep;
    const auto R1 = extract_R1(op, psi, to_complex(g), r);
    rep.coefficient = R1.coefficient;
    rep.nonproportionality = R1.nonproportionality;
    Bdf2Integrator I(op, ctl);
    const auto tr = I.run(g, times);
    const WeightedNorm N{AlgebraicWeight::uniform(-r), 1};
    const double pp = N.inner(op.grid, psi, psi);
    const double k = 1.0 / (2.0 * std::sqrt(std::numbers::pi));
    std::vector<double> rem(op.n());
    for (std::size_t j = 0; j < tr.times.size(); ++j) {
        const double t = tr.times[j];
        const auto& u = tr.states[j];
        const double amp = k * std::pow(t, -1.5) * rep.coefficient;
        for (std::size_t i = 0; i < rem.size(); ++i) rem[i] = u[i] - amp * psi[i];
        rep.times.push_back(t);
        rep.norms.push_back(N(op.grid, u));
        rep.predicted_norms.push_back(std::abs(amp) * std::sqrt(pp));
        rep.remainder_norms.push_back(N(op.grid, rem));
        rep.measured_coefficients.push_back(N.inner(op.grid, std::span<const double>(u), psi) / pp / k *
                                            std::pow(t, 1.5));
    }
    rep.norm_fit = fit_loglog(rep.times, rep.norms);
    rep.remainder_fit = fit_loglog(rep.times, rep.remainder_norms);
    return rep;
}

/// Decay of ‖e^{Lt}g‖_{H¹_s} for weakly localized data, by time stepping, with the
/// keyhole contour evaluated at a few spot times as a cross-check.
struct KeyholeReport {
    std::vector<double> times;
    std::vector<double> norms;
    LineFit fit;
    double exponent = std::numeric_limits<double>::quiet_NaN();  ///< −slope
    double threshold = std::numeric_limits<double>::quiet_NaN();  ///< 1 − β_max/2 − margin
    bool pass = false;
    std::vector<double> spot_times;
    std::vector<double> spot_rel_diff;  ///< ‖u_contour − u_step‖_{H¹_s} / ‖u_step‖_{H¹_s}
};

[[nodiscard]] inline KeyholeReport keyhole_decay(const WeightedOperator& op, const ContourSpec& keyhole, double s,
                                                 std::span<const double> times, std::span<const double> g,
                                                 double beta_max, double margin = 0.1,
                                                 std::span<const double> spot_times = {}, StepControl ctl = {}) {
    KeyholeReport rep;
    Bdf2Integrator I(op, ctl);
    const auto tr = I.run(g, times);
    const WeightedNorm N{AlgebraicWeight::uniform(s), 1};
    for (std::size_t j = 0; j < tr.times.size(); ++j) {
        rep.times.push_back(tr.times[j]);
        rep.norms.push_back(N(op.grid, tr.states[j]));
    }
    rep.fit = fit_loglog(rep.times, rep.norms);
    rep.exponent = -rep.fit.slope;
    rep.threshold = 1.0 - 0.5 * beta_max - margin;
    rep.pass = rep.exponent >= rep.threshold;
    for (double ts : spot_times) {
        const auto c = apply_semigroup_contour(op, keyhole, ts, g);
        const double tt[] = {ts};
        Bdf2Integrator J(op, ctl);
        const auto st = J.run(g, tt).states.back();
        std::vector<double> d(st.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = c.u[i] - st[i];
        rep.spot_times.push_back(ts);
        rep.spot_rel_diff.push_back(N(op.grid, d) / N(op.grid, st));
    }
    return rep;
}

}  // namespace pulled
