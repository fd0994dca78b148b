#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pulled/kernel.hpp"
#include "pulled/model.hpp"
#include "pulled/simulate.hpp"

namespace pulled::cli {

using json = nlohmann::ordered_json;

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> s{"speed",     "spectrum",  "kernel",   "front",     "resolvent",
                                            "semigroup", "simulate", "sweep", "verify-all"};
    return s;
}

// ---------------------------------------------------------------- config reading

/// Typed access to one JSON object. Every read records the key and writes the resolved
/// value back, so the manifest echoes defaults too; finish() rejects unread keys.
class Fields {
public:
    Fields(json& obj, std::string path) : obj_(&obj), path_(std::move(path)) {
        if (obj_->is_null()) *obj_ = json::object();
        if (!obj_->is_object()) fail("", "expected an object");
    }

    [[nodiscard]] double number(const std::string& key, std::optional<double> def = std::nullopt) {
        auto& v = slot(key, def ? json(*def) : json());
        if (!v.is_number()) fail(key, "expected a number");
        return v.get<double>();
    }

    [[nodiscard]] double positive(const std::string& key, std::optional<double> def = std::nullopt) {
        const double v = number(key, def);
        if (!(v > 0.0)) fail(key, "must be positive");
        return v;
    }

    [[nodiscard]] std::size_t count(const std::string& key, std::optional<std::size_t> def = std::nullopt,
                                    std::size_t min = 1) {
        auto& v = slot(key, def ? json(*def) : json());
        if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min))
            fail(key, "expected an integer >= " + std::to_string(min));
        return v.get<std::size_t>();
    }

    [[nodiscard]] bool flag(const std::string& key, bool def) {
        auto& v = slot(key, json(def));
        if (!v.is_boolean()) fail(key, "expected true or false");
        return v.get<bool>();
    }

    [[nodiscard]] std::string text(const std::string& key, std::optional<std::string> def = std::nullopt,
                                   const std::set<std::string>& allowed = {}) {
        auto& v = slot(key, def ? json(*def) : json());
        if (!v.is_string()) fail(key, "expected a string");
        auto s = v.get<std::string>();
        if (!allowed.empty() && !allowed.contains(s)) {
            std::string opts;
            for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
            fail(key, "'" + s + "' is not one of {" + opts + "}");
        }
        return s;
    }

    [[nodiscard]] std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> def = {},
                                              std::size_t min_size = 1) {
        auto& v = slot(key, def ? json(*def) : json());
        if (!v.is_array() || v.size() < min_size)
            fail(key, "expected an array of at least " + std::to_string(min_size) + " numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) fail(key, "array entries must be numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    [[nodiscard]] Fields child(const std::string& key) {
        seen_.insert(key);
        if (!obj_->contains(key)) (*obj_)[key] = json::object();
        return Fields((*obj_)[key], join(key));
    }

    [[nodiscard]] bool has(const std::string& key) const { return obj_->contains(key); }
    [[nodiscard]] json& raw(const std::string& key) {
        seen_.insert(key);
        return (*obj_)[key];
    }

    void finish() const {
        for (auto it = obj_->begin(); it != obj_->end(); ++it)
            if (!seen_.contains(it.key())) fail(it.key(), "unknown field");
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw Error(ErrorCode::ConfigInvalid, "field '" + join(key) + "': " + msg);
    }

private:
    json& slot(const std::string& key, const json& def) {
        seen_.insert(key);
        if (!obj_->contains(key)) {
            if (def.is_null()) fail(key, "required");
            (*obj_)[key] = def;
        }
        return (*obj_)[key];
    }

    [[nodiscard]] std::string join(const std::string& key) const {
        if (key.empty()) return path_;
        return path_.empty() ? key : path_ + "." + key;
    }

    json* obj_;
    std::string path_;
    std::set<std::string> seen_;
};

/// Parses JSON text; syntax errors become ConfigInvalid with line and column.
[[nodiscard]] inline json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // byte offset -> line/column
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw Error(ErrorCode::ConfigInvalid,
                    origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
    }
}

[[nodiscard]] inline json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path);
}

struct RunConfig {
    json resolved;  ///< input with every default filled in
    ScalarModel model;
    double init_c = 0.0, init_eta = 0.0;
    double L = 200.0;
    std::size_t n = 4001;
    double r = 2.0, s = -2.0;
    std::string output_dir;
    std::uint64_t seed = 1;
};

[[nodiscard]] inline ScalarModel parse_model(Fields& f) {
    const auto name = f.text("name", std::nullopt, {"fisher-kpp", "extended-fkpp", "bistable", "eighth-order", "custom"});
    try {
        if (name == "fisher-kpp") return fisher_kpp();
        if (name == "extended-fkpp") return extended_fkpp(f.positive("eps", 0.1));
        if (name == "bistable") {
            const double mu = f.number("mu");
            if (!(mu > 0.0 && mu < 0.5)) f.fail("mu", "must lie in (0, 1/2)");
            return bistable(mu);
        }
        if (name == "eighth-order") return eighth_order_amplitude(f.positive("eps", 0.1), f.number("b1", 3.0), f.number("d", 4.0));
        const int order = int(f.count("order", std::nullopt, 2));
        const auto p = f.numbers("p");
        const auto fc = f.numbers("f", std::nullopt, 2);
        return ScalarModel::create(order, p, fc, f.text("label", "custom"));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigInvalid) throw;
        throw Error(ErrorCode::ConfigInvalid, "field 'model': " + std::string(e.what()));
    }
}

/// Validates the shared blocks. The experiment block is validated by each subcommand
/// before it computes anything.
[[nodiscard]] inline RunConfig parse_run_config(json input) {
    RunConfig rc;
    rc.resolved = std::move(input);
    Fields top(rc.resolved, "");
    {
        auto m = top.child("model");
        rc.model = parse_model(m);
        // second-order truncation gives the exact pair when P = p₁ν + p₂ν²
        const double p2 = rc.model.p[2] > 0.0 ? rc.model.p[2] : 1.0;
        rc.init_eta = m.positive("init_eta", std::sqrt(rc.model.fp0() / p2));
        rc.init_c = m.number("init_c", 2.0 * std::sqrt(p2 * rc.model.fp0()) - rc.model.p[1]);
        m.finish();
    }
    {
        auto g = top.child("grid");
        rc.L = g.positive("L", 200.0);
        rc.n = g.count("n", 4001, 64);
        if (rc.n % 2 == 0) g.fail("n", "must be odd so that x = 0 is a node");
        g.finish();
    }
    {
        auto w = top.child("weights");
        rc.r = w.number("r", 2.0);
        rc.s = w.number("s", -2.0);
        w.finish();
    }
    rc.output_dir = top.text("output_dir", "pulled-out");
    rc.seed = top.count("seed", 1, 0);
    (void)top.child("experiment");
    top.finish();
    return rc;
}

// ---------------------------------------------------------------- results

/// CSV table; cells are preformatted strings.
struct CsvTable {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Round-trip decimal (17 significant digits).
[[nodiscard]] inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

[[nodiscard]] inline std::string to_csv(const CsvTable& t) {
    std::string out;
    for (std::size_t j = 0; j < t.header.size(); ++j) out += (j ? "," : "") + t.header[j];
    out += "\n";
    for (const auto& r : t.rows) {
        for (std::size_t j = 0; j < r.size(); ++j) out += (j ? "," : "") + r[j];
        out += "\n";
    }
    return out;
}

/// NaN and infinities have no JSON form; they are written as null.
[[nodiscard]] inline json jnum(double v) { return std::isfinite(v) ? json(v) : json(); }

[[nodiscard]] inline json jvec(std::span<const double> v) {
    json a = json::array();
    for (double x : v) a.push_back(jnum(x));
    return a;
}

[[nodiscard]] inline json jfit(const LineFit& f) {
    return {{"slope", jnum(f.slope)}, {"intercept", jnum(f.intercept)}, {"slope_stderr", jnum(f.slope_stderr)},
            {"samples", f.samples}};
}

[[nodiscard]] inline bool within_closed(double v, double lo, double hi) { return v >= lo && v <= hi; }

[[nodiscard]] inline json jcplx(cplx z) { return json::array({jnum(z.real()), jnum(z.imag())}); }

struct RunResult {
    json report = json::object();
    std::vector<CsvTable> tables;
    bool verified = true;  ///< false maps to exit code 2
};

// ---------------------------------------------------------------- shared setup

/// Lazily built objects every subcommand may need.
class Context {
public:
    explicit Context(const RunConfig& rc) : rc_(rc) {}

    const SpreadingSpeed& speed() {
        if (!ss_) ss_ = find_spreading_speed(rc_.model, rc_.init_c, rc_.init_eta);
        return *ss_;
    }
    const FrontProfile& front() {
        if (!front_) front_ = solve_front(rc_.model, speed(), rc_.L, rc_.n);
        return *front_;
    }
    const WeightedOperator& op() {
        if (!op_) op_ = build_operator(rc_.model, speed(), front(), front().grid);
        return *op_;
    }
    const PsiProfile& psi() {
        if (!psi_) psi_ = compute_psi(front(), speed(), rc_.model);
        return *psi_;
    }
    [[nodiscard]] const RunConfig& config() const { return rc_; }

private:
    const RunConfig& rc_;
    std::optional<SpreadingSpeed> ss_;
    std::optional<FrontProfile> front_;
    std::optional<WeightedOperator> op_;
    std::optional<PsiProfile> psi_;
};

[[nodiscard]] inline json jspeed(const SpreadingSpeed& s) {
    return {{"c_star", jnum(s.c_star)},          {"eta_star", jnum(s.eta_star)},   {"alpha", jnum(s.alpha)},
            {"newton_residual", jnum(s.newton_residual)}, {"iterations", s.iterations},
            {"used_continuation", s.used_continuation}};
}

struct GaussianData {
    double center = 4.0, width = 1.5;
};

[[nodiscard]] inline GaussianData parse_gaussian(Fields& ex, const std::string& key) {
    auto d = ex.child(key);
    GaussianData g{d.number("center", 4.0), d.positive("width", 1.5)};
    d.finish();
    return g;
}

[[nodiscard]] inline std::vector<double> gaussian_on(const Grid& g, const GaussianData& d) {
    std::vector<double> v(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        const double z = (g.x(i) - d.center) / d.width;
        v[i] = std::exp(-z * z);
    }
    return v;
}

// ---------------------------------------------------------------- subcommands

inline RunResult run_speed(Context& cx, Fields& ex) {
    const auto& m = cx.config().model;
    const double lmax = ex.positive("lambda_max", default_lambda_max(m));
    const auto steps = ex.count("steps", 400, 2);
    ex.finish();
    RunResult res;
    const auto& ss = cx.speed();
    res.report["speed"] = jspeed(ss);
    try {
        const auto p = verify_pinching(m, ss, lmax, int(steps));
        res.report["pinching"] = {{"pinched", p.pinched}, {"max_path_residual", jnum(p.max_path_residual)}, {"note", p.note}};
        CsvTable t{"pinching", {"lambda", "re_nu_plus", "im_nu_plus", "re_nu_minus", "im_nu_minus"}, {}};
        for (std::size_t i = 0; i < p.lambda.size(); ++i)
            t.rows.push_back({num(p.lambda[i]), num(p.nu_plus[i].real()), num(p.nu_plus[i].imag()),
                              num(p.nu_minus[i].real()), num(p.nu_minus[i].imag())});
        res.tables.push_back(std::move(t));
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NotPinched && e.code() != ErrorCode::RootCollision) throw;
        res.report["pinching"] = {{"pinched", false}, {"error", e.what()}};
        res.verified = false;
    }
    return res;
}

inline RunResult run_spectrum(Context& cx, Fields& ex) {
    const auto& m = cx.config().model;
    const double kmax = ex.positive("k_max", 10.0);
    const auto samples = ex.count("samples", 4001, 3);
    const double detune = ex.number("detune", 0.0);
    const bool scan = ex.flag("eigen_scan", false);
    const double scan_k = ex.positive("scan_k_max", 4.0);
    const auto border_samples = ex.count("border_samples", 2001, 3);
    ex.finish();
    RunResult res;
    const auto& ss = cx.speed();
    const double eta = ss.eta_star + detune;
    const auto rep = spectrum_hypothesis_report(m, ss, kmax, int(samples), eta);
    res.report["speed"] = jspeed(ss);
    res.report["spectrum"] = {{"eta", eta},
                              {"critical_ok", rep.critical_ok},
                              {"touches_origin", rep.touches_origin},
                              {"left_ok", rep.left_ok},
                              {"max_re_plus", jnum(rep.max_re_plus)},
                              {"k_at_max_plus", jnum(rep.k_at_max_plus)},
                              {"lambda_plus_zero", jcplx(rep.lambda_plus_zero)},
                              {"max_re_minus", jnum(rep.max_re_minus)},
                              {"k_at_max_minus", jnum(rep.k_at_max_minus)},
                              {"failed_clause", rep.failed_clause()}};
    res.verified = rep.passed();
    std::vector<double> ks(samples);
    for (std::size_t j = 0; j < samples; ++j) ks[j] = -kmax + 2.0 * kmax * double(j) / double(samples - 1);
    const auto br = fredholm_border(m, ss.c_star, eta, BorderSide::right, ks);
    const auto bl = fredholm_border(m, ss.c_star, eta, BorderSide::left, ks);
    CsvTable t{"borders", {"k", "re_right", "im_right", "re_left", "im_left"}, {}};
    for (std::size_t j = 0; j < samples; ++j)
        t.rows.push_back({num(ks[j]), num(br[j].real()), num(br[j].imag()), num(bl[j].real()), num(bl[j].imag())});
    res.tables.push_back(std::move(t));
    if (scan) {
        const auto er = eigen_scan(cx.op(), scan_k, int(border_samples));
        json cands = json::array(), flagged = json::array();
        for (const auto& c : er.candidates) cands.push_back({{"lambda", jcplx(c.lambda)}, {"border_distance", c.border_distance}});
        for (const auto& c : er.flagged) flagged.push_back({{"lambda", jcplx(c.lambda)}, {"border_distance", c.border_distance}});
        res.report["eigen_scan"] = {{"unstable_eigenvalue", er.unstable_eigenvalue},
                                    {"resonance", er.resonance},
                                    {"tube_radius", er.tube_radius},
                                    {"kernel_linear_fraction", jnum(er.kernel_element.linear_fraction)},
                                    {"candidates", cands},
                                    {"flagged", flagged}};
        CsvTable e{"eigenvalues", {"re", "im"}, {}};
        for (cplx z : er.eigenvalues) e.rows.push_back({num(z.real()), num(z.imag())});
        res.tables.push_back(std::move(e));
        res.verified = res.verified && !er.unstable_eigenvalue && !er.resonance;
    }
    return res;
}

inline RunResult run_kernel(Context& cx, Fields& ex) {
    const auto gammas = ex.numbers("gammas", std::vector<double>{0.2, 0.1, 0.05, 0.025, 0.0125}, 2);
    const double x_min = ex.number("x_min", -50.0), x_max = ex.number("x_max", 50.0);
    const double dx = ex.positive("dx", 0.25);
    const auto k = ex.count("derivative", 0, 0);
    const double growth = ex.positive("growth_tol", 0.2);
    if (!(x_max > x_min)) ex.fail("x_max", "must exceed x_min");
    for (double g : gammas)
        if (!(g > 0.0)) ex.fail("gammas", "entries must be positive");
    ex.finish();
    const auto s = shift_symbol(cx.config().model, cx.speed());
    if (int(k) >= s.order()) throw Error(ErrorCode::ConfigInvalid, "field 'experiment.derivative': must be < 2m");
    std::vector<double> x;
    for (double v = x_min; v <= x_max + 1e-12; v += dx) x.push_back(v);
    RunResult res;
    const auto rep = kernel_bound_report(s, gammas, x, growth);
    json checks = json::array();
    for (const auto& c : rep.checks)
        checks.push_back({{"name", c.name}, {"gammas", jvec(c.gammas)}, {"ratios", jvec(c.ratios)},
                          {"max_growth", jnum(c.max_growth)}, {"bounded", c.bounded}});
    res.report["speed"] = jspeed(cx.speed());
    res.report["beta_closed_form"] = beta_closed_form(s);
    res.report["nu2"] = {{"plus", rep.nu2.nu2_plus}, {"minus", rep.nu2.nu2_minus}};
    res.report["bounds"] = checks;
    res.verified = rep.all_bounded();
    const CMatrix P = pole_matrix(s);
    CsvTable t{"kernel",
               {"gamma", "x", "derivative", "re_heat", "im_heat", "re_center_minus_heat", "im_center_minus_heat",
                "re_center_tilde", "im_center_tilde", "re_strong", "im_strong"},
               {}};
    for (double g : gammas) {
        const auto sp = frobenius_projections(s, g, P);
        const auto kd = eval_kernel_pieces(sp, s, g, x, int(k));
        for (std::size_t i = 0; i < x.size(); ++i)
            t.rows.push_back({num(g), num(x[i]), std::to_string(k), num(kd.heat[i].real()), num(kd.heat[i].imag()),
                              num(kd.c_minus_heat[i].real()), num(kd.c_minus_heat[i].imag()), num(kd.tilde_c[i].real()),
                              num(kd.tilde_c[i].imag()), num(kd.h[i].real()), num(kd.h[i].imag())});
    }
    res.tables.push_back(std::move(t));
    return res;
}

inline RunResult run_front(Context& cx, Fields& ex) {
    const auto& fr0 = cx.front();
    const auto& ss = cx.speed();
    const auto [dlo, dhi] = default_psi_window(fr0);
    const auto dw = ex.numbers("decay_window", std::vector<double>{dlo, dhi}, 2);
    const auto pw = ex.numbers("psi_window", std::vector<double>{dlo, dhi}, 2);
    ex.finish();
    RunResult res;
    const auto& fr = cx.front();
    res.report["speed"] = jspeed(ss);
    res.report["front"] = {{"iterations", fr.iterations}, {"residual", jnum(fr.residual)}, {"monotone", fr.monotone},
                           {"c_grid", fr.c_star},          {"eta_grid", fr.eta_star}};
    const auto df = front_decay_fit(fr, ss, cx.config().model, dw[0], dw[1]);
    res.report["decay_fit"] = {{"a", jnum(df.a)},
                               {"b", jnum(df.b)},
                               {"rms_log_residual", jnum(df.rms_log_residual)},
                               {"linear_fraction", jnum(df.linear_fraction)},
                               {"gap_ok", df.gap_ok},
                               {"consistent", df.consistent}};
    res.verified = df.consistent;
    std::optional<PsiProfile> psi;
    try {
        psi = compute_psi(fr, ss, cx.config().model, std::make_pair(pw[0], pw[1]));
        res.report["psi"] = {{"mu0", psi->mu0},
                             {"mu1", psi->mu1},
                             {"fitted_slope", psi->fitted_slope},
                             {"window", {psi->window_lo, psi->window_hi}}};
    } catch (const Error& e) {
        if (e.code() != ErrorCode::GapFails && e.code() != ErrorCode::PsiUnavailable) throw;
        res.report["psi"] = {{"error", e.what()}};
    }
    CsvTable t{"front", {"x", "q", "dq", "psi"}, {}};
    for (std::size_t i = 0; i < fr.grid.n; ++i)
        t.rows.push_back({num(fr.grid.x(i)), num(fr.q[i]), num(fr.derivative(1)[i]),
                          psi ? num(psi->psi[i]) : std::string("nan")});
    res.tables.push_back(std::move(t));
    return res;
}

inline RunResult run_resolvent(Context& cx, Fields& ex) {
    const auto data = parse_gaussian(ex, "data");
    const auto gammas = ex.numbers("gammas", std::vector<double>{0.1, 0.05, 0.025, 0.0125, 0.00625}, 2);
    const double lo = ex.number("slope_min", 0.9), hi = ex.number("slope_max", 1.1);
    const double r1_weight = ex.number("r1_weight", 3.0);
    const double gamma0 = ex.positive("gamma0", 0.02);
    const auto levels = ex.count("levels", 3, 1);
    const auto blowup_gammas = ex.numbers("blowup_gammas", std::vector<double>{0.2, 0.1, 0.05, 0.025}, 2);
    const double tail_r = ex.number("tail_r", 0.0);
    ex.finish();
    const auto& rc = cx.config();
    const auto& op = cx.op();
    RunResult res;
    const auto g = to_complex(gaussian_on(op.grid, data));
    const auto lip = verify_R0_lipschitz(op, g, rc.r, gammas);
    res.report["lipschitz"] = {{"r", rc.r}, {"fit", jfit(lip.fit)}, {"window", {lo, hi}}};
    bool ok = within_closed(lip.fit.slope, lo, hi);
    CsvTable t{"resolvent", {"gamma", "difference_h1_minus_r"}, {}};
    for (std::size_t i = 0; i < lip.gammas.size(); ++i) t.rows.push_back({num(lip.gammas[i]), num(lip.differences[i])});
    res.tables.push_back(std::move(t));
    try {
        const auto e = extract_R1(op, cx.psi().psi, g, r1_weight, gamma0, int(levels));
        res.report["first_order"] = {{"coefficient", e.coefficient},
                                     {"nonproportionality", e.nonproportionality},
                                     {"level_coefficients", jvec(e.level_coefficients)}};
    } catch (const Error& e) {
        if (e.code() != ErrorCode::GapFails && e.code() != ErrorCode::PsiUnavailable) throw;
        res.report["first_order"] = {{"error", e.what()}};
    }
    // blowup for data with tail ⟨x⟩^{−tail_r−0.6} on the right, measured in H¹_s
    CVector tail(op.n());
    for (std::size_t i = 0; i < op.n(); ++i) {
        const double x = op.grid.x(i);
        tail[i] = right_indicator(x) * std::pow(japanese(x), -tail_r - 0.6) * right_taper(x, op.grid.x_max());
    }
    const auto bl = verify_resolvent_blowup(op, tail, tail_r, rc.s, blowup_gammas);
    res.report["blowup"] = {{"r", tail_r},
                            {"s", rc.s},
                            {"exponent", jnum(bl.exponent)},
                            {"window", {bl.window_lo, bl.window_hi}},
                            {"in_window", bl.in_window}};
    CsvTable b{"blowup", {"gamma", "ratio"}, {}};
    for (std::size_t i = 0; i < bl.gammas.size(); ++i) b.rows.push_back({num(bl.gammas[i]), num(bl.ratios[i])});
    res.tables.push_back(std::move(b));
    res.verified = ok;
    return res;
}

/// Signed distance in the γ = √λ plane from γ to the sampled right border; positive in
/// the admissible region.
[[nodiscard]] inline double border_margin(const ScalarModel& m, const SpreadingSpeed& ss, cplx gamma,
                                          std::span<const cplx> border_gamma) {
    double d = std::numeric_limits<double>::infinity();
    for (cplx b : border_gamma) d = std::min(d, std::abs(gamma - b));
    return right_of_borders(m, ss, gamma * gamma) ? d : -d;
}

inline RunResult run_semigroup(Context& cx, Fields& ex) {
    const auto data = parse_gaussian(ex, "data");
    const auto times = ex.numbers("times", std::vector<double>{2.0, 5.0, 20.0});
    const double agree = ex.positive("agreement_tol", 1e-4);
    const double t_from = ex.positive("asymptotic_from", 20.0), t_to = ex.positive("asymptotic_to", 200.0);
    const auto t_count = ex.count("asymptotic_samples", 12, 3);
    const double rw = ex.number("remainder_weight", 2.6);
    const double slo = ex.number("remainder_slope_min", -2.4), shi = ex.number("remainder_slope_max", -1.6);
    for (double t : times)
        if (!(t > 0.0)) ex.fail("times", "entries must be positive");
    if (!(t_to > t_from)) ex.fail("asymptotic_to", "must exceed asymptotic_from");
    ex.finish();
    const auto& rc = cx.config();
    const auto& op = cx.op();
    const auto& ss = cx.speed();
    RunResult res;
    const auto bt = fit_border_tangency(rc.model, ss);
    const auto cs = tangent_contour(bt);
    res.report["tangency"] = {{"gamma1", bt.gamma1}, {"gamma2", bt.gamma2}, {"c2", bt.c2}, {"a_star", bt.a_star}};
    const auto g = gaussian_on(op.grid, data);
    json cmp = json::array();
    double worst = 0.0;
    for (double t : times) {
        const auto c = apply_semigroup_contour(op, cs, t, g);
        const auto st = apply_semigroup_timestep(op, t, g);
        std::vector<cplx> d(op.n());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = c.u[i] - st.u[i];
        const double rel = h1_norm(op.grid, d, -2.0) / st.norm_h1_m2;
        worst = std::max(worst, rel);
        cmp.push_back({{"t", t},
                       {"contour_norm", c.norm_h1_m2},
                       {"step_norm", st.norm_h1_m2},
                       {"relative_difference", rel},
                       {"nodes", c.nodes},
                       {"ray_angle", c.ray_angle},
                       {"steps", st.steps}});
    }
    res.report["contour_vs_step"] = cmp;
    const auto ts = logspace(t_from, t_to, t_count);
    bool asym_ok = true;
    try {
        const auto ar = verify_semigroup_asymptotics(op, cx.psi().psi, rw, g, ts);
        res.report["asymptotics"] = {{"remainder_weight", rw},
                                     {"coefficient", ar.coefficient},
                                     {"nonproportionality", ar.nonproportionality},
                                     {"norm_fit", jfit(ar.norm_fit)},
                                     {"remainder_fit", jfit(ar.remainder_fit)}};
        asym_ok = within_closed(ar.remainder_fit.slope, slo, shi);
        CsvTable t{"asymptotics", {"t", "norm", "predicted_norm", "remainder"}, {}};
        for (std::size_t j = 0; j < ar.times.size(); ++j)
            t.rows.push_back({num(ar.times[j]), num(ar.norms[j]), num(ar.predicted_norms[j]), num(ar.remainder_norms[j])});
        res.tables.push_back(std::move(t));
    } catch (const Error& e) {
        if (e.code() != ErrorCode::GapFails && e.code() != ErrorCode::PsiUnavailable) throw;
        res.report["asymptotics"] = {{"error", e.what()}};
    }
    // contour dump: the arc in the γ plane with its distance to the border
    std::vector<double> ks;
    for (int j = -400; j <= 400; ++j) ks.push_back(0.005 * j);
    std::vector<cplx> bg;
    for (cplx l : fredholm_border(rc.model, ss.c_star, ss.eta_star, BorderSide::right, ks)) bg.push_back(std::sqrt(l));
    CsvTable dump{"contour", {"a", "re_gamma", "im_gamma", "border_margin"}, {}};
    for (int j = 1; j <= 100; ++j) {
        const double a = bt.a_star * j / 100.0;
        const cplx gm(bt.c2 * a * a, a);
        dump.rows.push_back({num(a), num(gm.real()), num(gm.imag()), num(border_margin(rc.model, ss, gm, bg))});
    }
    res.tables.push_back(std::move(dump));
    res.verified = worst <= agree && asym_ok;
    return res;
}

[[nodiscard]] inline PerturbationConfig parse_perturbation(Fields& ex, const RunConfig& rc) {
    PerturbationConfig c;
    const auto recipe = ex.text("recipe", "gaussian", {"gaussian", "algebraic_tail", "shifted_front"});
    c.recipe = recipe == "gaussian" ? DataRecipe::gaussian
               : recipe == "algebraic_tail" ? DataRecipe::algebraic_tail
                                            : DataRecipe::shifted_front;
    c.amplitude = ex.number("amplitude", 1e-2);
    c.center = ex.number("center", 4.0);
    c.width = ex.positive("width", 1.5);
    c.shift = ex.number("shift", 0.5);
    c.horizon = ex.positive("horizon", 300.0);
    c.t_fit_min = ex.positive("t_fit_min", 10.0);
    c.fit_end_fraction = ex.positive("fit_end_fraction", 0.8);
    c.samples = ex.count("samples", 16, 12);
    c.nonlinear = ex.flag("nonlinear", true);
    c.r = rc.r;
    c.s = rc.s;
    if (!(c.t_fit_min < c.fit_end_fraction * c.horizon)) ex.fail("t_fit_min", "fit window is empty");
    const auto w = regime_window(c.r, c.s);
    c.regime = w.regime;
    c.window_lo = ex.number("window_lo", w.lo);
    // an open upper window (one-sided bound) has no JSON form and stays implicit
    c.window_hi = (ex.has("window_hi") || std::isfinite(w.hi)) ? ex.number("window_hi", w.hi) : w.hi;
    return c;
}

[[nodiscard]] inline json jexperiment(const DecayExperiment& e) {
    return {{"regime", e.config.regime},
            {"exponent", jnum(e.exponent)},
            {"exponent_stderr", jnum(e.exponent_stderr)},
            {"window", {jnum(e.config.window_lo), jnum(e.config.window_hi)}},
            {"pass", e.pass},
            {"theta_bounded", e.theta_bounded},
            {"k_ratio_max", jnum(e.k_ratio_max)},
            {"integral_tail_bound", jnum(e.integral_tail_bound)},
            {"p0_norm_r", jnum(e.p0_norm_r)},
            {"steps", e.steps}};
}

inline RunResult run_simulate(Context& cx, Fields& ex) {
    const auto& rc = cx.config();
    const auto cfg = parse_perturbation(ex, rc);
    const bool alpha = ex.flag("alpha_star", cfg.regime == "localized" && cfg.recipe == DataRecipe::gaussian);
    const double rw = ex.number("remainder_weight", 2.6);
    ex.finish();
    RunResult res;
    const PsiProfile* psi = nullptr;
    if (cfg.recipe == DataRecipe::shifted_front || alpha) psi = &cx.psi();
    const auto e = run_perturbation(cx.op(), cx.front(), cfg, psi);
    res.report["verdict"] = jexperiment(e);
    res.verified = e.pass;
    CsvTable t{"timeseries", {"t", "norm_h1_s", "theta"}, {}};
    for (std::size_t j = 0; j < e.times.size(); ++j) t.rows.push_back({num(e.times[j]), num(e.norms[j]), num(e.theta[j])});
    res.tables.push_back(std::move(t));
    if (alpha) {
        const auto a = estimate_alpha_star(cx.op(), e, *psi, rw);
        res.report["alpha_star"] = {{"alpha_star", a.alpha_star},
                                    {"alpha_star_one_term", a.alpha_star_one_term},
                                    {"alpha_linear", a.alpha_linear},
                                    {"alpha_linear_levels", jvec(a.alpha_linear_levels)},
                                    {"relative_mismatch", a.relative_mismatch},
                                    {"remainder_slope", jnum(a.remainder_slope)}};
    }
    return res;
}

inline RunResult run_sweep(Context& cx, Fields& ex) {
    const auto& rc = cx.config();
    auto& pj = ex.raw("pairs");
    if (pj.is_null()) pj = json::array({json::array({1.0, -1.5}), json::array({0.0, -3.0}), json::array({2.0, -2.0})});
    std::vector<std::pair<double, double>> pairs;
    if (!pj.is_array() || pj.empty()) ex.fail("pairs", "expected a non-empty array of [r, s] pairs");
    for (const auto& p : pj) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
            ex.fail("pairs", "each entry must be [r, s]");
        pairs.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    auto base = parse_perturbation(ex, rc);
    ex.finish();
    RunResult res;
    // independent experiments; one per worker
    std::vector<SweepEntry> entries(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) {
        entries[i] = localization_sweep(cx.op(), cx.front(), std::span(&pairs[i], 1), base).front();
    });
    json arr = json::array();
    CsvTable t{"sweep", {"r", "s", "regime", "best_rate", "window_lo", "window_hi", "exponent", "exponent_stderr", "consistent"}, {}};
    for (const auto& e : entries) {
        arr.push_back({{"r", e.r},
                       {"s", e.s},
                       {"regime", e.window.regime},
                       {"best_rate", e.window.best_rate},
                       {"window", {jnum(e.window.lo), jnum(e.window.hi)}},
                       {"exponent", jnum(e.exponent)},
                       {"exponent_stderr", jnum(e.exponent_stderr)},
                       {"consistent", e.consistent}});
        t.rows.push_back({num(e.r), num(e.s), e.window.regime, num(e.window.best_rate), num(e.window.lo),
                          num(e.window.hi), num(e.exponent), num(e.exponent_stderr), e.consistent ? "1" : "0"});
        res.verified = res.verified && e.consistent;
    }
    res.report["sweep"] = arr;
    res.tables.push_back(std::move(t));
    return res;
}

/// Composition of the module checks on one model: spectrum sampling, kernel bounds,
/// resolvent Lipschitz slope, linear decay of a seeded Gaussian ensemble, remainder of the
/// linear asymptotics and one nonlinear localized run.
inline RunResult run_verify_all(Context& cx, Fields& ex) {
    const auto ensemble = ex.count("ensemble", 4, 1);
    const double horizon = ex.positive("horizon", 300.0);
    ex.finish();
    const auto& rc = cx.config();
    RunResult res;
    json checks = json::array();
    auto record = [&](const std::string& name, bool pass, json detail) {
        checks.push_back({{"check", name}, {"pass", pass}, {"detail", std::move(detail)}});
        res.verified = res.verified && pass;
    };
    const auto& ss = cx.speed();
    res.report["speed"] = jspeed(ss);
    {
        const auto rep = spectrum_hypothesis_report(rc.model, ss, 10.0, 4001, ss.eta_star);
        record("spectrum", rep.passed(), {{"max_re_plus", rep.max_re_plus}, {"max_re_minus", rep.max_re_minus}});
    }
    {
        const auto s = shift_symbol(rc.model, ss);
        std::vector<double> x;
        for (int i = -400; i <= 400; ++i) x.push_back(0.25 * i);
        const std::vector<double> gs{0.2, 0.1, 0.05, 0.025, 0.0125};
        const auto rep = kernel_bound_report(s, gs, x);
        json d = json::object();
        for (const auto& c : rep.checks) d[c.name] = c.max_growth;
        record("kernel_bounds", rep.all_bounded(), d);
    }
    const auto& op = cx.op();
    const auto g = gaussian_on(op.grid, {4.0, 1.5});
    {
        std::vector<double> gs;
        for (int j = 0; j < 5; ++j) gs.push_back(0.1 * std::ldexp(1.0, -j));
        const auto lip = verify_R0_lipschitz(op, to_complex(g), 2.0, gs);
        record("resolvent_lipschitz", within_closed(lip.fit.slope, 0.9, 1.1), {{"slope", lip.fit.slope}});
    }
    {
        std::mt19937_64 rng(rc.seed);
        std::uniform_real_distribution<double> center(2.0, 8.0), width(0.75, 2.5);
        const auto ts = logspace(10.0, horizon, 16);
        const WeightedNorm N{AlgebraicWeight::uniform(-2.0), 1};
        json slopes = json::array();
        bool ok = true;
        for (std::size_t k = 0; k < ensemble; ++k) {
            const GaussianData d{center(rng), width(rng)};
            Bdf2Integrator I(op);
            const auto tr = I.run(gaussian_on(op.grid, d), ts);
            std::vector<double> nr;
            for (const auto& u : tr.states) nr.push_back(N(op.grid, u));
            const double sl = fit_loglog(tr.times, nr).slope;
            ok = ok && within_closed(sl, -1.7, -1.35);
            slopes.push_back({{"center", d.center}, {"width", d.width}, {"slope", sl}});
        }
        record("linear_decay", ok, slopes);
    }
    {
        const auto ar = verify_semigroup_asymptotics(op, cx.psi().psi, 2.6, g, logspace(20.0, 200.0, 12));
        record("linear_asymptotics", within_closed(ar.remainder_fit.slope, -2.4, -1.6),
               {{"coefficient", ar.coefficient}, {"remainder_slope", ar.remainder_fit.slope}});
    }
    {
        PerturbationConfig c;
        c.horizon = horizon;
        const auto e = run_perturbation(op, cx.front(), c, &cx.psi());
        record("nonlinear_localized", e.pass && e.theta_bounded, jexperiment(e));
    }
    res.report["checks"] = checks;
    return res;
}

// ---------------------------------------------------------------- orchestration

/// FNV-1a over the resolved config; run ids derive from it so identical configs share one.
[[nodiscard]] inline std::string config_digest(const json& resolved) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : resolved.dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct Invocation {
    std::string subcommand;
    json config;
    std::optional<std::string> outdir;  ///< flag override
    std::optional<std::string> run_id;
};

struct Outcome {
    int exit_code = 0;
    std::filesystem::path run_dir;
    json report;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + p.string());
}

/// Runs one subcommand and writes <outdir>/<run-id>/{manifest.json, report.json, *.csv}.
/// Files land in a temporary sibling first and are renamed into place together.
[[nodiscard]] inline Outcome execute(const Invocation& inv) {
    const auto& subs = subcommands();
    if (std::find(subs.begin(), subs.end(), inv.subcommand) == subs.end())
        throw Error(ErrorCode::ConfigInvalid, "unknown subcommand '" + inv.subcommand + "'");
    RunConfig rc = parse_run_config(inv.config);
    Context cx(rc);
    Fields ex(rc.resolved["experiment"], "experiment");
    RunResult res;
    if (inv.subcommand == "speed") res = run_speed(cx, ex);
    else if (inv.subcommand == "spectrum") res = run_spectrum(cx, ex);
    else if (inv.subcommand == "kernel") res = run_kernel(cx, ex);
    else if (inv.subcommand == "front") res = run_front(cx, ex);
    else if (inv.subcommand == "resolvent") res = run_resolvent(cx, ex);
    else if (inv.subcommand == "semigroup") res = run_semigroup(cx, ex);
    else if (inv.subcommand == "simulate") res = run_simulate(cx, ex);
    else if (inv.subcommand == "sweep") res = run_sweep(cx, ex);
    else res = run_verify_all(cx, ex);

    std::string outdir = rc.output_dir;
    if (const char* env = std::getenv("PULLED_OUTDIR"); env && *env) outdir = env;
    if (inv.outdir) outdir = *inv.outdir;
    const std::string run_id = inv.run_id.value_or(inv.subcommand + "-" + config_digest(rc.resolved));

    Outcome oc;
    oc.exit_code = res.verified ? 0 : 2;
    json head{{"subcommand", inv.subcommand}, {"verified", res.verified}, {"exit_code", oc.exit_code}};
    head.update(res.report);
    res.report = std::move(head);
    oc.report = res.report;
    json files = json::array({"manifest.json", "report.json"});
    for (const auto& t : res.tables) files.push_back(t.name + ".csv");
    const json manifest{{"tool", "pulled"},     {"version", "1.0.0"}, {"subcommand", inv.subcommand},
                        {"run_id", run_id},     {"config", rc.resolved}, {"config_digest", config_digest(rc.resolved)},
                        {"files", files}};

    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    oc.run_dir = fs::path(outdir) / run_id;
    const fs::path tmp = fs::path(outdir) / ("." + run_id + ".tmp");
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    write_file(tmp / "manifest.json", manifest.dump(2) + "\n");
    write_file(tmp / "report.json", res.report.dump(2) + "\n");
    for (const auto& t : res.tables) write_file(tmp / (t.name + ".csv"), to_csv(t));
    fs::remove_all(oc.run_dir);
    fs::rename(tmp, oc.run_dir);
    return oc;
}

}  // namespace pulled::cli
