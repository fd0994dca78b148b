#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "pulled/banded.hpp"
#include "pulled/error.hpp"
#include "pulled/fd.hpp"
#include "pulled/fit.hpp"
#include "pulled/kernel.hpp"
#include "pulled/model.hpp"
#include "pulled/weights.hpp"

namespace pulled {

/// Critical front q* on a uniform grid, phase-locked so that q*(0) = phase_value.
struct FrontProfile {
    Grid grid;
    std::vector<double> q;
    std::vector<std::vector<double>> dq;  ///< dq[k-1] = k-th derivative, k = 1..2m−1
    double c_star = 0.0;
    double eta_star = 0.0;
    std::size_t phase = 0;                ///< node nearest x = 0
    int iterations = 0;
    double residual = 0.0;                ///< sup of the equation residual on equation rows
    bool monotone = true;                 ///< informational; false in the pushed regime

    [[nodiscard]] const std::vector<double>& derivative(int k) const { return dq.at(std::size_t(k - 1)); }
};

enum class FrontInitKind { automatic, tanh, profile, shooting };

struct FrontInit {
    FrontInitKind kind = FrontInitKind::automatic;
    std::vector<double> profile;  ///< used with FrontInitKind::profile, same grid
};

struct FrontOptions {
    int max_iter = 60;
    double tol = 1e-11;
    double phase_value = 0.5;
};

namespace detail {

/// Residual and Jacobian of the front problem. Row layout: m left rows at node 0,
/// equation rows for nodes m..n−m−1 (shifted down by one from the phase row on),
/// the phase row at index `phase`, then m−1 right Robin rows at node n−1.
class FrontSystem {
public:
    FrontSystem(const ScalarModel& model, double c, double eta, const Grid& g, double phase_value)
        : model_(model), c_(c), eta_(eta), g_(g), phase_value_(phase_value), m_(model.half_order()) {
        for (int k = 1; k <= model.order; ++k) tabs_.emplace_back(g, k);
        phase_ = std::clamp(g.nearest(0.0), std::size_t(m_ + 1), g.n - std::size_t(m_) - 3);
        const double off[] = {g.x(phase_ - 1), g.x(phase_), g.x(phase_ + 1), g.x(phase_ + 2)};
        phase_w_ = fornberg_weights(0.0, off, 0)[0];
        for (int j = 0; j < m_; ++j) {
            left_.push_back(boundary_stencil(g, j, true));
            right_.push_back(boundary_stencil(g, j, false));
        }
    }

    [[nodiscard]] std::size_t phase() const noexcept { return phase_; }
    [[nodiscard]] int bandwidth() const noexcept { return model_.order + 4; }

    [[nodiscard]] std::size_t row_of_node(std::size_t i) const noexcept { return i < phase_ ? i : i + 1; }

    /// Σ p_k D^k q + c D q at node i (no reaction term).
    [[nodiscard]] double linear_part(std::span<const double> q, std::size_t i) const {
        double acc = 0.0;
        for (int k = 1; k <= model_.order; ++k) {
            const double a = model_.p[std::size_t(k)] + (k == 1 ? c_ : 0.0);
            if (a == 0.0) continue;
            const auto st = tabs_[std::size_t(k - 1)].at(i);
            double d = 0.0;
            for (std::size_t s = 0; s < st.w.size(); ++s) d += st.w[s] * q[st.first + s];
            acc += a * d;
        }
        return acc;
    }

    void residual(std::span<const double> q, std::vector<double>& F) const {
        const std::size_t n = g_.n;
        F.assign(n, 0.0);
        auto apply = [&](const Stencil& st) {
            double d = 0.0;
            for (std::size_t s = 0; s < st.w.size(); ++s) d += st.w[s] * q[st.first + s];
            return d;
        };
        F[0] = q[0] - 1.0;
        for (int j = 1; j < m_; ++j) F[std::size_t(j)] = apply(left_[std::size_t(j)]);
        for (std::size_t i = std::size_t(m_); i + std::size_t(m_) < n; ++i)
            F[row_of_node(i)] = linear_part(q, i) + model_.f_value(q[i]);
        double ph = -phase_value_;
        for (int s = 0; s < 4; ++s) ph += phase_w_[std::size_t(s)] * q[phase_ - 1 + std::size_t(s)];
        F[phase_] = ph;
        for (int j = 1; j < m_; ++j)
            F[n - std::size_t(m_) + std::size_t(j)] = apply(right_[std::size_t(j)]) + eta_ * apply(right_[std::size_t(j - 1)]);
    }

    [[nodiscard]] BandMatrix<double> jacobian(std::span<const double> q) const {
        const std::size_t n = g_.n;
        BandMatrix<double> J(n, bandwidth(), bandwidth());
        auto put = [&](std::size_t row, const Stencil& st, double scale) {
            for (std::size_t s = 0; s < st.w.size(); ++s) J(row, st.first + s) += scale * st.w[s];
        };
        J(0, 0) = 1.0;
        for (int j = 1; j < m_; ++j) put(std::size_t(j), left_[std::size_t(j)], 1.0);
        for (std::size_t i = std::size_t(m_); i + std::size_t(m_) < n; ++i) {
            const std::size_t r = row_of_node(i);
            for (int k = 1; k <= model_.order; ++k) {
                const double a = model_.p[std::size_t(k)] + (k == 1 ? c_ : 0.0);
                if (a != 0.0) put(r, tabs_[std::size_t(k - 1)].at(i), a);
            }
            J(r, i) += model_.f_derivative(q[i], 1);
        }
        for (int s = 0; s < 4; ++s) J(phase_, phase_ - 1 + std::size_t(s)) += phase_w_[std::size_t(s)];
        for (int j = 1; j < m_; ++j) {
            const std::size_t r = n - std::size_t(m_) + std::size_t(j);
            put(r, right_[std::size_t(j)], 1.0);
            put(r, right_[std::size_t(j - 1)], eta_);
        }
        return J;
    }

    [[nodiscard]] double equation_residual(std::span<const double> q) const {
        double r = 0.0;
        for (std::size_t i = std::size_t(m_); i + std::size_t(m_) < g_.n; ++i)
            r = std::max(r, std::abs(linear_part(q, i) + model_.f_value(q[i])));
        return r;
    }

private:
    const ScalarModel& model_;
    double c_, eta_;
    Grid g_;
    double phase_value_;
    int m_;
    std::vector<StencilTable> tabs_;
    std::size_t phase_ = 0;
    std::vector<double> phase_w_;
    std::vector<Stencil> left_, right_;
};

inline double sup_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

}  // namespace detail

/// Independent second-order route: integrate p₂q'' + (p₁ + c)q' + f(q) = 0 along the
/// unstable manifold of q = 1 (adaptive Dormand–Prince), place q = phase_value at x = 0
/// and sample on the grid. Valid only for order-2 models.
[[nodiscard]] inline std::vector<double> shoot_front(const ScalarModel& model, double c, const Grid& g,
                                                     double phase_value = 0.5) {
    if (model.order != 2) throw Error(ErrorCode::InvalidModel, "shooting oracle needs a second-order model");
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 2>;
    const double p2 = model.p[2], b = model.p[1] + c;
    const double fp1 = model.fp1();
    const double mu_u = (-b + std::sqrt(b * b - 4.0 * p2 * fp1)) / (2.0 * p2);
    const double delta = 1e-9;
    auto rhs = [&](const State& y, State& dy, double) {
        dy[0] = y[1];
        dy[1] = -(b * y[1] + model.f_value(y[0])) / p2;
    };
    auto stepper = odeint::make_dense_output(1e-40, 1e-13, odeint::runge_kutta_dopri5<State>());
    const State y0{1.0 - delta, -delta * mu_u};
    stepper.initialize(y0, 0.0, 1e-3);
    while (stepper.current_state()[0] > phase_value) {
        stepper.do_step(rhs);
        if (stepper.current_time() > 1e4) throw Error(ErrorCode::NoConvergence, "shooting never reached the phase level");
    }
    // bisect the crossing inside the last step with the dense output
    double lo = stepper.previous_time(), hi = stepper.current_time();
    State ym;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        stepper.calc_state(mid, ym);
        (ym[0] > phase_value ? lo : hi) = mid;
    }
    const double t_half = 0.5 * (lo + hi);

    std::vector<double> q(g.n);
    std::vector<double> times;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < g.n; ++i) {
        const double tau = g.x(i) + t_half;
        if (tau <= 0.0)
            q[i] = 1.0 - delta * std::exp(mu_u * tau);
        else {
            times.push_back(tau);
            idx.push_back(i);
        }
    }
    if (!times.empty()) {
        State y = y0;
        std::size_t k = 0;
        auto obs = [&](const State& s, double) {
            if (k < idx.size()) q[idx[k++]] = s[0];
        };
        times.insert(times.begin(), 0.0);
        idx.insert(idx.begin(), idx.front());  // first observation is the start state, overwritten next
        odeint::integrate_times(odeint::make_dense_output(1e-40, 1e-13, odeint::runge_kutta_dopri5<State>()), rhs, y,
                                times.begin(), times.end(), 1e-3, obs);
    }
    return q;
}

namespace detail {

inline FrontProfile newton_front(const ScalarModel& model, double c, double eta, const Grid& g, std::vector<double> q,
                                 const FrontOptions& opt) {
    FrontSystem sys(model, c, eta, g, opt.phase_value);
    std::vector<double> F, Ft;
    sys.residual(q, F);
    double res = sup_norm(F);
    int it = 0;
    while (res > opt.tol && it < opt.max_iter) {
        BandLU<double> lu(sys.jacobian(q));
        std::vector<double> d(F.size());
        for (std::size_t i = 0; i < F.size(); ++i) d[i] = -F[i];
        lu.solve_in_place(std::span<double>(d));
        double lam = 1.0;
        std::vector<double> qt(q.size());
        double rt = res;
        for (int h = 0; h <= 20; ++h) {
            for (std::size_t i = 0; i < q.size(); ++i) qt[i] = q[i] + lam * d[i];
            sys.residual(qt, Ft);
            rt = sup_norm(Ft);
            if (rt < (1.0 - 1e-4 * lam) * res || h == 20) break;
            lam *= 0.5;
        }
        ++it;
        const double step = lam * sup_norm(d);
        q.swap(qt);
        F.swap(Ft);
        res = rt;
        if (step < 1e-15) break;
    }
    FrontProfile out;
    out.grid = g;
    out.c_star = c;
    out.eta_star = eta;
    out.phase = sys.phase();
    out.iterations = it;
    out.residual = sys.equation_residual(q);
    if (!(res <= std::max(opt.tol, 1e-8)))
        throw Error(ErrorCode::NoConvergence, "front Newton residual " + std::to_string(res) + " after " +
                                                  std::to_string(it) + " iterations");
    for (int k = 1; k <= std::max(model.order - 1, 1); ++k)
        out.dq.push_back(differentiate(g, std::span<const double>(q), k));
    for (std::size_t i = 1; i < q.size(); ++i)
        if (q[i] > q[i - 1] + 1e-12) out.monotone = false;
    out.q = std::move(q);
    return out;
}

}  // namespace detail

/// Spreading speed of the discretized far field: the (c, η) at which the centered
/// stencil symbol D_h(μ) = Σ p_k M_k(μ) + c M_1(μ) + f'(0), M_k(μ) = Σ_j w_j e^{μ j h},
/// has a double root at μ = −η. It differs from the continuous pair by O(h⁴), and with
/// it constants and linear functions solve the discrete weighted far-field equation
/// exactly. Without it the small-λ resolvent sees a spurious potential of size O(h⁴).
[[nodiscard]] inline SpreadingSpeed grid_spreading_speed(const ScalarModel& model, const SpreadingSpeed& ss, double h) {
    struct Mult {
        std::vector<double> w, off;
    };
    std::vector<Mult> mk(std::size_t(model.order) + 1);
    for (int k = 1; k <= model.order; ++k) {
        const Grid g{0.0, h, 64};
        const auto st = StencilTable(g, k).at(32);
        mk[std::size_t(k)].w = st.w;
        for (std::size_t j = 0; j < st.w.size(); ++j) mk[std::size_t(k)].off.push_back((double(st.first + j) - 32.0) * h);
    }
    // d-th μ-derivative of M_k
    auto M = [&](int k, double mu, int d) {
        double s = 0.0;
        for (std::size_t j = 0; j < mk[std::size_t(k)].w.size(); ++j) {
            const double o = mk[std::size_t(k)].off[j];
            s += mk[std::size_t(k)].w[j] * std::pow(o, d) * std::exp(mu * o);
        }
        return s;
    };
    auto D = [&](double c, double mu, int d) {
        double s = d == 0 ? model.fp0() : 0.0;
        for (int k = 1; k <= model.order; ++k) s += (model.p[std::size_t(k)] + (k == 1 ? c : 0.0)) * M(k, mu, d);
        return s;
    };
    SpreadingSpeed out = ss;
    double c = ss.c_star, eta = ss.eta_star;
    for (int it = 0; it < 50; ++it) {
        const double mu = -eta;
        const double F1 = D(c, mu, 0), F2 = D(c, mu, 1);
        const double J11 = M(1, mu, 0), J12 = -F2, J21 = M(1, mu, 1), J22 = -D(c, mu, 2);
        const double det = J11 * J22 - J12 * J21;
        if (det == 0.0) throw Error(ErrorCode::DegenerateDoubleRoot, "discrete double root is degenerate");
        const double dc = (F1 * J22 - F2 * J12) / det, de = (J11 * F2 - J21 * F1) / det;
        c -= dc;
        eta -= de;
        out.iterations = it + 1;
        if (std::abs(dc) + std::abs(de) < 1e-15 * (1.0 + std::abs(c) + eta)) break;
    }
    out.c_star = c;
    out.eta_star = eta;
    out.alpha = 0.5 * D(c, -eta, 2);
    out.newton_residual = std::abs(D(c, -eta, 0)) + std::abs(D(c, -eta, 1));
    return out;
}

/// Damped Newton on the fourth-order finite-difference discretization of
/// P(∂)q + c*q' + f(q) = 0 on [−L, L] with q(−L) = 1, q^{(j)}(−L) = 0 (j < m),
/// q^{(j)}(L) + η* q^{(j−1)}(L) = 0 (1 ≤ j < m) and the phase row.
[[nodiscard]] inline FrontProfile solve_front(const ScalarModel& model, const SpreadingSpeed& ss, double L,
                                              std::size_t n, const FrontInit& init = {}, const FrontOptions& opt = {}) {
    const Grid g = Grid::symmetric(L, n);
    if (n < std::size_t(4 * model.order + 8)) throw Error(ErrorCode::GridTooCoarse, "front grid too coarse");
    std::vector<double> q0;
    auto tanh_guess = [&] {
        std::vector<double> q(n);
        const double kappa = ss.eta_star / 2.0;
        for (std::size_t i = 0; i < n; ++i) q[i] = 0.5 * (1.0 - std::tanh(kappa * g.x(i)));
        return q;
    };
    switch (init.kind) {
        case FrontInitKind::profile:
            if (init.profile.size() != n) throw Error(ErrorCode::GridMismatch, "initial profile size differs from grid");
            q0 = init.profile;
            break;
        case FrontInitKind::tanh: q0 = tanh_guess(); break;
        case FrontInitKind::shooting: q0 = shoot_front(model, ss.c_star, g, opt.phase_value); break;
        case FrontInitKind::automatic:
            if (model.order == 2) {
                q0 = shoot_front(model, ss.c_star, g, opt.phase_value);
            } else {
                // continue in s, scaling p_k (k ≥ 3), from the second-order truncation
                ScalarModel m2;
                m2.order = 2;
                m2.p = {0.0, model.p[1], model.p[2]};
                m2.f = model.f;
                const auto s2 = find_spreading_speed(m2, ss.c_star, ss.eta_star);
                q0 = shoot_front(m2, s2.c_star, g, opt.phase_value);
                double s = 0.0, ds = 0.25, c = s2.c_star, eta = s2.eta_star;
                while (s < 1.0) {
                    const double sn = std::min(1.0, s + ds);
                    ScalarModel ms = model;
                    for (std::size_t k = 3; k < ms.p.size(); ++k) ms.p[k] *= sn;
                    try {
                        const auto ssn = find_spreading_speed(ms, c, eta);
                        auto fr = detail::newton_front(ms, ssn.c_star, ssn.eta_star, g, q0, opt);
                        q0 = std::move(fr.q);
                        c = ssn.c_star;
                        eta = ssn.eta_star;
                        s = sn;
                    } catch (const Error&) {
                        ds *= 0.5;
                        if (ds < 1.0 / 256.0) throw Error(ErrorCode::NoConvergence, "front continuation stalled");
                    }
                }
            }
            break;
    }
    const auto sh = grid_spreading_speed(model, ss, g.h);
    return detail::newton_front(model, sh.c_star, sh.eta_star, g, std::move(q0), opt);
}

/// q*(x) e^{η*x} ≈ a + b x on a right window.
struct DecayFit {
    double a = 0.0;
    double b = 0.0;
    double rms_log_residual = 0.0;
    double linear_fraction = 0.0;  ///< |b| x₁ / (|a| + |b| x₁): 0 for a pure exponential tail
    bool gap_ok = false;
    bool consistent = false;
    std::size_t samples = 0;
};

/// Gap test: every non-central root of d^+(0, ν − η*) has Re ν ≤ 0 or Re ν ≥ η*,
/// i.e. no stable spatial eigenvalue decays slower than the double root.
[[nodiscard]] inline bool spectral_gap_ok(const ScalarModel& model, const SpreadingSpeed& ss, double tol = 1e-9) {
    const auto s = shift_symbol(model, ss);
    for (cplx r : detail::strong_roots_at_zero(s))
        if (r.real() > tol && r.real() < ss.eta_star - tol) return false;
    return true;
}

[[nodiscard]] inline DecayFit front_decay_fit(const FrontProfile& front, const SpreadingSpeed& ss, const ScalarModel& model,
                                              double x0, double x1) {
    const Grid& g = front.grid;
    if (!(x0 > 0.0 && x1 > x0 && x1 < g.x_max() - 5.0 + 1e-12))
        throw Error(ErrorCode::WindowUnderflow, "fit window must lie inside (0, L - 5)");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < g.n; ++i) {
        const double x = g.x(i);
        if (x < x0 || x > x1) continue;
        if (std::abs(front.q[i]) < 1e-14)
            throw Error(ErrorCode::WindowUnderflow, "front below 1e-14 inside the fit window");
        xs.push_back(x);
        ys.push_back(front.q[i] * std::exp(ss.eta_star * x));
    }
    DecayFit fit;
    fit.samples = xs.size();
    fit.gap_ok = spectral_gap_ok(model, ss);
    if (xs.size() < 3) return fit;
    // relative least squares: minimize Σ ((a + b x)/y − 1)²
    Eigen::MatrixXd A(xs.size(), 2);
    Eigen::VectorXd rhs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        A(Eigen::Index(i), 0) = 1.0 / ys[i];
        A(Eigen::Index(i), 1) = xs[i] / ys[i];
        rhs(Eigen::Index(i)) = 1.0;
    }
    Eigen::Vector2d ab = A.colPivHouseholderQr().solve(rhs);
    // Gauss–Newton on log|y| − log|a + b x|
    for (int it = 0; it < 20; ++it) {
        Eigen::MatrixXd Jm(xs.size(), 2);
        Eigen::VectorXd r(xs.size());
        bool ok = true;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double v = ab(0) + ab(1) * xs[i];
            if (v * ys[i] <= 0.0) {
                ok = false;
                break;
            }
            r(Eigen::Index(i)) = std::log(std::abs(ys[i])) - std::log(std::abs(v));
            Jm(Eigen::Index(i), 0) = -1.0 / v;
            Jm(Eigen::Index(i), 1) = -xs[i] / v;
        }
        if (!ok) break;
        const Eigen::Vector2d step = Jm.colPivHouseholderQr().solve(-r);
        ab += step;
        if (step.norm() <= 1e-14 * (1.0 + ab.norm())) break;
    }
    fit.a = ab(0);
    fit.b = ab(1);
    double ss2 = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double v = fit.a + fit.b * xs[i];
        const double r = (v * ys[i] > 0.0) ? std::log(std::abs(ys[i] / v)) : 1.0;
        ss2 += r * r;
    }
    fit.rms_log_residual = std::sqrt(ss2 / double(xs.size()));
    fit.linear_fraction = std::abs(fit.b) * x1 / (std::abs(fit.a) + std::abs(fit.b) * x1);
    fit.consistent = fit.rms_log_residual < 1e-2;
    return fit;
}

/// ψ = ω_{η*} q*' rescaled so that ψ(x)/x → 1; the raw linear coefficients are kept.
/// Beyond the fit window ψ is continued by the fitted line: there ωq*' is linear up to
/// terms of size x²e^{−η*x}, while the discrete tail of q* has lost its relative accuracy.
/// On the lower half of the window ψ is exactly the rescaled ωq*'.
struct PsiProfile {
    Grid grid;
    std::vector<double> psi;
    double mu0 = 0.0;          ///< intercept after normalization
    double mu1 = 0.0;          ///< slope of ω q*' before normalization
    double fitted_slope = 0.0; ///< slope of the normalized ψ on the fit window
    double window_lo = 0.0;
    double window_hi = 0.0;
};

[[nodiscard]] inline std::vector<double> weighted_front_derivative(const FrontProfile& front) {
    const ExponentialWeight w{front.eta_star};
    const auto& dq = front.derivative(1);
    std::vector<double> out(dq.size());
    for (std::size_t i = 0; i < dq.size(); ++i) {
        const double a = std::abs(dq[i]);
        out[i] = a == 0.0 ? 0.0 : std::copysign(std::exp(w.log_value(front.grid.x(i)) + std::log(a)), dq[i]);
    }
    return out;
}

/// Default ψ fit window: η*x ∈ [20, 35], clipped to the grid.
[[nodiscard]] inline std::pair<double, double> default_psi_window(const FrontProfile& front) {
    const double L = front.grid.x_max();
    const double hi = std::min(35.0 / front.eta_star, 0.9 * L);
    return {std::min(20.0 / front.eta_star, 0.5 * hi), hi};
}

[[nodiscard]] inline PsiProfile compute_psi(const FrontProfile& front, const SpreadingSpeed& ss, const ScalarModel& model,
                                            std::optional<std::pair<double, double>> window = std::nullopt) {
    if (!spectral_gap_ok(model, ss))
        throw Error(ErrorCode::GapFails, "slower stable spatial eigenvalue present; psi via q*' unavailable");
    PsiProfile out;
    out.grid = front.grid;
    auto raw = weighted_front_derivative(front);
    const auto [xa, xb] = window.value_or(default_psi_window(front));
    out.window_lo = xa;
    out.window_hi = xb;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double x = front.grid.x(i);
        if (x >= xa && x <= xb) {
            xs.push_back(x);
            ys.push_back(raw[i]);
        }
    }
    const auto lf = fit_line(xs, ys);
    if (!(std::abs(lf.slope) > 0.0) || !std::isfinite(lf.slope))
        throw Error(ErrorCode::PsiUnavailable, "omega q*' has no linear growth on the fit window");
    out.mu1 = lf.slope;
    out.mu0 = lf.intercept / lf.slope;
    // Hand over to the line across the upper half of the window with a C³ step, so that
    // no derivative up to the third jumps where the discrete tail is dropped.
    const double xm = 0.5 * (xa + xb);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double x = front.grid.x(i);
        const double t = std::clamp((x - xm) / (xb - xm), 0.0, 1.0);
        const double w = t * t * t * t * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t * t * t);
        raw[i] = (1.0 - w) * raw[i] / lf.slope + w * (out.mu0 + x);
    }
    out.psi = std::move(raw);
    for (auto& y : ys) y /= lf.slope;
    out.fitted_slope = fit_line(xs, ys).slope;
    return out;
}

}  // namespace pulled
