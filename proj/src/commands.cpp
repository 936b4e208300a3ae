#include "mexp/commands.hpp"

#include "mexp/errors.hpp"
#include "mexp/montecarlo.hpp"
#include "mexp/tauberian.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace mexp {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Reads arguments with defaults and records the resolved values.
class Args {
public:
    Args(const json& in, json& out) : in_(in), out_(out) {}

    double num(const std::string& k, double def) {
        double v = def;
        if (in_.contains(k)) {
            if (!in_.at(k).is_number()) throw io::UsageError("argument '" + k + "' must be a number");
            v = in_.at(k).get<double>();
        }
        out_[k] = v;
        return v;
    }
    long long integer(const std::string& k, long long def) {
        long long v = def;
        if (in_.contains(k)) {
            if (!in_.at(k).is_number_integer()) throw io::UsageError("argument '" + k + "' must be an integer");
            v = in_.at(k).get<long long>();
        }
        out_[k] = v;
        return v;
    }
    std::string str(const std::string& k, const std::string& def) {
        std::string v = def;
        if (in_.contains(k)) {
            if (!in_.at(k).is_string()) throw io::UsageError("argument '" + k + "' must be a string");
            v = in_.at(k).get<std::string>();
        }
        out_[k] = v;
        return v;
    }
    std::vector<double> list(const std::string& k, std::vector<double> def = {}) {
        std::vector<double> v = std::move(def);
        if (in_.contains(k)) {
            const auto& j = in_.at(k);
            if (!j.is_array()) throw io::UsageError("argument '" + k + "' must be a list of numbers");
            v.clear();
            for (const auto& e : j) {
                if (!e.is_number()) throw io::UsageError("argument '" + k + "' must be a list of numbers");
                v.push_back(e.get<double>());
            }
        }
        if (v.empty()) throw io::UsageError("argument '" + k + "' is required");
        out_[k] = v;
        return v;
    }

private:
    const json& in_;
    json& out_;
};

void require_type(const ModelSpec& m, std::initializer_list<const char*> types, const std::string& cmd) {
    for (const char* t : types) {
        if (m.type == t) return;
    }
    throw DomainError("command '" + cmd + "' does not support model type '" + m.type + "'");
}

FixedPointConfig fixed_point_config(Args& a, double T) {
    FixedPointConfig c;
    c.T = T;
    c.M = a.num("M", 0.0);
    c.X_max = a.num("X_max", c.X_max);
    c.nx = static_cast<int>(a.integer("nx", c.nx));
    c.tol = a.num("tol", c.tol);
    c.max_iter = static_cast<int>(a.integer("max_iter", c.max_iter));
    c.order = parse_order(a.str("fp_order", "leading"));
    return c;
}

SimConfig sim_config(Args& a, double horizon) {
    SimConfig c;
    c.horizon = horizon;
    c.n_paths = static_cast<std::size_t>(a.integer("paths", 100000));
    c.n_steps = static_cast<int>(a.integer("steps", 500));
    c.seed = static_cast<std::uint64_t>(a.integer("seed", 20240611));
    c.scheme = parse_scheme(a.str("scheme", "euler_full_truncation"));
    return c;
}

/// Log-MGF source for the analytic routes (CIR, CEV) or the fixed-point route (custom).
LogMgf model_log_mgf(const ModelSpec& m, Args& a) {
    if (m.type == "cir") return LogMgf::cir(m.cir());
    if (m.type == "cev") return cev_log_mgf_hat(cev_params(m), m.t, static_cast<int>(a.integer("n_terms", 30)));
    return custom_log_mgf(m, fixed_point_config(a, m.t));
}

CommandOutput cmd_critical_moment(Args& a) {
    const double b = a.num("b", 1.0), s = a.num("sigma", 1.0), t = a.num("t", 1.0);
    CommandOutput o;
    const double v = critical_moment(b, s, t);
    o.table.columns = {"b", "sigma", "t", "mu_star"};
    o.table.add({b, s, t, v});
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    o.text = buf;
    return o;
}

CommandOutput cmd_cir_mgf(const ModelSpec& m, Args& a) {
    require_type(m, {"cir"}, "cir-mgf");
    const auto p = m.cir();
    CommandOutput o;
    o.table.columns = {"mu", "log_mgf", "mu_star"};
    for (double mu : a.list("mu")) o.table.add({mu, cir_log_mgf(p, mu), p.mu_star()});
    return o;
}

CommandOutput cmd_cir_ccdf(const ModelSpec& m, Args& a) {
    require_type(m, {"cir"}, "cir-ccdf");
    const auto p = m.cir();
    CommandOutput o;
    o.table.columns = {"x", "ccdf", "log_ccdf"};
    for (double x : a.list("x")) {
        const double l = cir_exact_log_ccdf(p, x);
        o.table.add({x, std::exp(l), l});
    }
    return o;
}

CommandOutput cmd_legendre(const ModelSpec& m, Args& a) {
    const auto xs = a.list("x");
    const LogMgf src = model_log_mgf(m, a);
    const LegendreData data(src, *std::min_element(xs.begin(), xs.end()), *std::max_element(xs.begin(), xs.end()));
    CommandOutput o;
    o.table.columns = {"x", "p_star", "p_star_prime", "lambda_star"};
    for (double x : xs) {
        const auto c = data.at(x);
        o.table.add({x, c.p_star, c.p_star_prime, c.lambda_star});
    }
    return o;
}

CommandOutput cmd_tail(const ModelSpec& m, Args& a) {
    const auto xs = a.list("x");
    const Order order = parse_order(a.str("order", "leading"));
    const LogMgf src = model_log_mgf(m, a);
    const LegendreData data(src, *std::min_element(xs.begin(), xs.end()), *std::max_element(xs.begin(), xs.end()));
    const TailExpansion e = ccdf_expansion(data, xs, order);
    CommandOutput o;
    o.table.columns = {"x", "lambda_star", "leading", "correction", "estimate", "exact_oracle", "ratio", "reliable"};
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double exact = kNaN, ratio = kNaN;
        if (m.type == "cir") {
            const double le = cir_exact_log_ccdf(m.cir(), xs[i]);
            exact = std::exp(le);
            ratio = std::exp(e.log_estimate[i] - le);
        }
        o.table.add({xs[i], e.lambda_star[i], e.leading[i], e.correction[i], e.estimate[i], exact, ratio,
                     e.reliable[i] ? 1.0 : 0.0});
    }
    o.diagnostics = {{"alpha", e.alpha}, {"mu_star", e.mu_star}};
    return o;
}

CommandOutput cmd_tilt_ratio(const ModelSpec& m, Args& a) {
    const auto xs = a.list("x");
    const Order order = parse_order(a.str("order", "leading"));
    const WeightFunction g = WeightFunction::parse(a.str("weight", "identity"));
    const LogMgf src = model_log_mgf(m, a);
    const LegendreData data(src, src.d1_gap(src.top_gap()), src.d1_gap(src.top_gap()));
    CommandOutput o;
    o.table.columns = {"x", "z", "ratio"};
    for (double x : xs) o.table.add({x, src.d1_gap(1.0 / x), tilt_ratio(g, data, x, order)});
    return o;
}

CommandOutput cmd_fixed_point(const ModelSpec& m, Args& a) {
    require_type(m, {"cir", "custom"}, "fixed-point");
    if (m.sigma != 1.0) throw DomainError("the fixed-point solver works in square-root form with sigma = 1");
    const FixedPointConfig cfg = fixed_point_config(a, m.t);
    const SdeSpec spec = m.type == "cir" ? SdeSpec::affine(m.a, m.b) : custom_spec(m);
    const GammaSolution s = solve_gamma(spec, m.x0, cfg);
    CommandOutput o;
    o.table.columns = {"t", "x", "R", "Gamma", "dx_Gamma"};
    const auto& g = s.grid;
    for (std::size_t i = 0; i < g.nt(); ++i) {
        for (std::size_t j = 0; j < g.nx(); ++j) {
            o.table.add({g.t_nodes[i], g.x_nodes[j], g.at(i, j), s.gamma_value(i, j), s.dx_gamma[i * g.nx() + j]});
        }
    }
    o.diagnostics = {{"gamma", g.gamma},           {"M", s.M},
                     {"attempted_M", s.attempted_M}, {"contraction", s.contraction},
                     {"iterations", s.iterations},   {"banach_norm", s.banach_norm},
                     {"residual_history", s.residual_history}};
    return o;
}

CommandOutput cmd_cev(const ModelSpec& m, Args& a) {
    require_type(m, {"cev"}, "cev");
    const CevParams p = cev_params(m);
    const auto xs = a.list("x");
    const int n_terms = static_cast<int>(a.integer("n_terms", 30));
    const CevTail lead = cev_ccdf(p, m.t, xs, Order::leading, n_terms);
    const CevTail ref = cev_ccdf(p, m.t, xs, Order::refined, n_terms);
    CommandOutput o;
    o.table.columns = {"x", "delta_hat", "lambda_star", "ccdf_leading", "ccdf_refined", "validity_flag"};
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double th = lead.validity_threshold;
        double dh = kNaN;
        try {
            dh = cev_log_mgf_asym(p, m.t, xs[i], n_terms).value;
        } catch (const RangeError&) {
        }
        const double flag = std::isnan(th) ? kNaN : (xs[i] > th ? 1.0 : 0.0);
        o.table.add({xs[i], dh, lead.expansion.lambda_star[i], lead.expansion.estimate[i], ref.expansion.estimate[i],
                     flag});
    }
    o.diagnostics = {{"validity_threshold", lead.validity_threshold}, {"mu_star", p.mu_star(m.t)}};
    return o;
}

CommandOutput cmd_mc(const ModelSpec& m, Args& a) {
    const std::string mode = a.str("mode", "ccdf");
    if (mode != "ccdf" && mode != "mgf") throw io::UsageError("argument 'mode' must be ccdf or mgf");
    const auto pts = a.list(mode == "ccdf" ? "x" : "mu");
    const SimConfig cfg = sim_config(a, m.t);
    SimResult sim;
    std::function<double(double)> oracle;
    if (m.type == "cir") {
        const CirParams p = m.cir();
        sim = simulate(p, cfg);
        if (mode == "ccdf") {
            oracle = [p](double x) { return cir_exact_ccdf(p, x); };
        } else {
            oracle = [p](double mu) { return cir_log_mgf(p, mu); };
        }
    } else if (m.type == "cev") {
        const CevParams p = cev_params(m);
        sim = simulate(p, cfg);
        const double lam = p.lambda();
        for (double& v : sim.samples) v = std::pow(v, lam);
    } else {
        SdeSpec spec = custom_spec(m);
        sim = simulate(spec, m.x0, cfg);
    }
    CommandOutput o;
    o.table.columns = {mode == "ccdf" ? "x" : "mu", "estimate", "stderr", "bound_low", "bound_high", "pass"};
    json ess = json::array();
    for (double v : pts) {
        double est, se, lo, hi;
        if (mode == "ccdf") {
            const auto e = empirical_ccdf(sim.samples, v);
            est = e.value;
            se = e.std_error;
            lo = e.lower;
            hi = e.upper;
        } else {
            const auto e = empirical_log_mgf(sim.samples, v);
            est = e.value;
            se = e.std_error;
            lo = est - 3.0 * se;
            hi = est + 3.0 * se;
            ess.push_back(e.effective_sample_size);
        }
        double pass = kNaN;
        if (oracle) pass = std::fabs(oracle(v) - est) <= 3.0 * se ? 1.0 : 0.0;
        o.table.add({v, est, se, lo, hi, pass});
    }
    o.diagnostics = {{"requested", sim.requested}, {"flagged", sim.flagged}, {"effective_sample_size", ess}};
    return o;
}

CommandOutput cmd_squeeze(const ModelSpec& m, Args& a) {
    require_type(m, {"custom"}, "squeeze");
    if (m.sigma != 1.0) throw DomainError("the squeeze construction requires sigma = 1");
    const double x = a.num("x", 1000.0);
    const SimConfig cfg = sim_config(a, m.t);
    const SdeSpec target = custom_spec(m);
    const SqueezeSpec sq = build_squeeze(target, m.x0, m.t, x);
    const std::string source = a.str("sandwich_source", "fixed-point");
    std::function<double(double)> model;
    std::shared_ptr<GammaSolution> sol;
    if (source == "fixed-point") {
        FixedPointConfig fc = fixed_point_config(a, m.t);
        sol = std::make_shared<GammaSolution>(solve_gamma(target, m.x0, fc));
        model = [sol, t = m.t](double mu) { return log_mgf_from_gamma(*sol, t, mu); };
    } else if (source != "empirical") {
        throw io::UsageError("argument 'sandwich_source' must be fixed-point or empirical");
    }
    const SqueezeReport r = squeeze_check(sq, cfg, {}, model);
    CommandOutput o;
    o.table.columns = {"x",           "lower_ccdf",  "target_ccdf",    "upper_ccdf",
                       "lower_exact", "upper_exact", "target_stderr", "ordered"};
    for (const auto& p : r.points) {
        o.table.add({p.x, p.lower.value, p.target.value, p.upper.value, p.lower_exact, p.upper_exact,
                     p.target.std_error, p.ordered ? 1.0 : 0.0});
    }
    o.diagnostics = {{"Z", sq.Z},
                     {"m", sq.m},
                     {"c", sq.c},
                     {"lower_cir", {{"a", sq.lower_cir.a}, {"kappa", sq.lower_cir.b}}},
                     {"upper_cir", {{"a", sq.upper_cir.a}, {"kappa", sq.upper_cir.b}}},
                     {"mu", r.mu},
                     {"lower_log_mgf", r.lower_log_mgf},
                     {"target_log_mgf", r.target_log_mgf},
                     {"upper_log_mgf", r.upper_log_mgf},
                     {"empirical_log_mgf", r.empirical.value},
                     {"empirical_ess", r.empirical.effective_sample_size},
                     {"omega1", r.omega1},
                     {"omega2", r.omega2},
                     {"pathwise_violations", r.pathwise_violations},
                     {"paths", r.paths},
                     {"ordering_holds", r.ordering_holds},
                     {"sandwich_holds", r.sandwich_holds},
                     {"worst_excess_stderr", r.worst_excess}};
    return o;
}

}  // namespace

CevParams cev_params(const ModelSpec& m) {
    CevParams p;
    p.a = m.a;
    p.b = m.b;
    p.sigma = m.sigma;
    p.v0 = m.x0;
    p.p = m.p;
    p.validate();
    return p;
}

SdeSpec custom_spec(const ModelSpec& m) {
    if (!(m.b > 0.0)) throw DomainError("b must be > 0");
    if (!(m.beta < 1.0)) throw DomainError("beta must be < 1");
    SdeSpec s = SdeSpec::power_perturbed(m.b, m.c, m.beta, m.M);
    const double sig = m.sigma;
    s.diffusion = [sig](double y) { return sig * std::sqrt(std::max(y, 0.0)); };
    return s;
}

double log_mgf_from_gamma(const GammaSolution& sol, double t, double mu) {
    const double b = sol.b;
    const double ms = critical_moment(b, 1.0, t);
    if (!(mu < ms)) throw ExplosionError("moment at or beyond the critical moment", ms);
    const double im = inverse_critical_moment(b, 1.0, t);
    const double xi = std::exp(b * t) * im * im;
    const double x = 1.0 / ((ms - mu) * xi) - ms;
    return sol.gamma_at(x);
}

LogMgf custom_log_mgf(const ModelSpec& m, const FixedPointConfig& config) {
    if (m.sigma != 1.0) throw DomainError("the fixed-point solver works in square-root form with sigma = 1");
    FixedPointConfig cfg = config;
    cfg.T = m.t;
    auto sol = std::make_shared<GammaSolution>(solve_gamma(custom_spec(m), m.x0, cfg));
    const double b = sol->b;
    const double ms = critical_moment(b, 1.0, m.t);
    const double im = inverse_critical_moment(b, 1.0, m.t);
    const double xi = std::exp(b * m.t) * im * im;
    const double x_lo = sol->grid.x_nodes.front() * 1.0001;
    const double x_hi = sol->grid.x_nodes.back() / 1.0001;
    const double u_lo = -std::log(xi * (x_hi + ms));
    const double u_hi = -std::log(xi * (x_lo + ms));
    constexpr int n = 400;
    const double du = (u_hi - u_lo) / (n - 1);
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i) vals[i] = log_mgf_from_gamma(*sol, m.t, ms - std::exp(u_lo + i * du));
    LogMgf out = LogMgf::from_samples(ms, u_lo, du, vals);
    out.gap_ceiling = std::exp(u_lo + (n - 1) * du);
    return out;
}

CommandOutput run_command(const json& request) {
    if (!request.is_object() || !request.contains("command") || !request.at("command").is_string()) {
        throw io::UsageError("request needs a 'command' string");
    }
    const std::string cmd = request.at("command").get<std::string>();
    const json args_in = request.value("args", json::object());
    json args_out = json::object();
    Args a(args_in, args_out);
    ModelSpec m;
    const bool needs_model = cmd != "critical-moment";
    if (needs_model) m = io::parse_model_spec(request.value("model", json::object()));

    CommandOutput o;
    if (cmd == "critical-moment") {
        o = cmd_critical_moment(a);
    } else if (cmd == "cir-mgf") {
        o = cmd_cir_mgf(m, a);
    } else if (cmd == "cir-ccdf") {
        o = cmd_cir_ccdf(m, a);
    } else if (cmd == "legendre") {
        o = cmd_legendre(m, a);
    } else if (cmd == "tail") {
        o = cmd_tail(m, a);
    } else if (cmd == "tilt-ratio") {
        o = cmd_tilt_ratio(m, a);
    } else if (cmd == "fixed-point") {
        o = cmd_fixed_point(m, a);
    } else if (cmd == "cev") {
        o = cmd_cev(m, a);
    } else if (cmd == "mc") {
        o = cmd_mc(m, a);
    } else if (cmd == "squeeze") {
        o = cmd_squeeze(m, a);
    } else {
        throw io::UsageError("unknown command '" + cmd + "'");
    }
    for (const auto& item : args_in.items()) {
        if (!args_out.contains(item.key())) throw io::UsageError("unknown argument '" + item.key() + "' for " + cmd);
    }
    o.manifest = {{"command", cmd}, {"args", args_out}, {"version", io::tool_version()}};
    if (needs_model) o.manifest["model"] = io::to_json(m);
    return o;
}

json read_manifest(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw io::UsageError("cannot open '" + csv_path + "'");
    std::string line;
    std::getline(in, line);
    const std::string tag = "# manifest: ";
    if (line.rfind(tag, 0) != 0) throw io::UsageError("'" + csv_path + "' has no manifest line");
    try {
        return json::parse(line.substr(tag.size()));
    } catch (const json::parse_error& e) {
        throw io::UsageError("manifest in '" + csv_path + "' is not valid JSON: " + e.what());
    }
}

}  // namespace mexp
