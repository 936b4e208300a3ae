#include "mexp/acceptance.hpp"

#include "mexp/cev.hpp"
#include "mexp/commands.hpp"
#include "mexp/errors.hpp"
#include "mexp/fixedpoint.hpp"
#include "mexp/legendre.hpp"
#include "mexp/models.hpp"
#include "mexp/montecarlo.hpp"
#include "mexp/tauberian.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <boost/math/tools/minima.hpp>

namespace mexp {

namespace {

using nlohmann::json;

// Reference CIR used by criteria 1 to 4.
const CirParams kCir{0.4, 1.0, 1.0, 0.5, 1.0};

std::string num(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    return buf;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

/// Slope and intercept of the least-squares line through (x, y).
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

Outcome criterion1() {
    constexpr double kSigmas = 3.0;
    SimConfig cfg;
    cfg.n_paths = 1000000;
    cfg.n_steps = 1000;
    cfg.horizon = kCir.t;
    cfg.seed = 1001;
    const SimResult sim = simulate(kCir, cfg);
    const double ms = kCir.mu_star();
    Outcome o{true, ""};
    for (double f : {0.25, 0.5, 0.75}) {
        const double mu = f * ms;
        const MgfEstimate e = empirical_log_mgf(sim.samples, mu);
        const double exact = cir_log_mgf(kCir, mu);
        const double z = std::fabs(e.value - exact) / e.std_error;
        o.pass = o.pass && z <= kSigmas;
        o.detail += num(f, 2) + "mu*: |d|/se=" + num(z, 3) + " ";
    }
    return o;
}

Outcome criterion2() {
    constexpr double kLeadingTol = 0.10;
    constexpr double kMinX2pp = 100.0;
    constexpr double kRefineFactor = 2.0;
    const std::vector<double> xs{1e3, 3e3, 1e4, 3e4, 1e5, 3e5, 1e6};
    const LegendreData data(LogMgf::cir(kCir), xs.front(), xs.back());
    const TailExpansion lead = ccdf_expansion(data, xs, Order::leading);
    const TailExpansion ref = ccdf_expansion(data, xs, Order::refined);
    Outcome o{true, ""};
    double worst = 0.0;
    int checked = 0;
    double err_lead = 0.0, err_ref = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double le = cir_exact_log_ccdf(kCir, xs[i]);
        const double rl = std::exp(lead.log_estimate[i] - le) - 1.0;
        const double rr = std::exp(ref.log_estimate[i] - le) - 1.0;
        if (lead.x2_pprime[i] >= kMinX2pp) {
            ++checked;
            worst = std::max(worst, std::fabs(rl));
        }
        err_lead = std::fabs(rl);
        err_ref = std::fabs(rr);
    }
    const bool lead_ok = checked > 0 && worst <= kLeadingTol;
    const bool ref_ok = err_ref * kRefineFactor <= err_lead;
    o.pass = lead_ok && ref_ok;
    o.detail = "max|ratio-1| leading=" + num(worst) + " over " + std::to_string(checked) +
               " points; at x=" + num(xs.back()) + " leading " + num(err_lead) + " refined " + num(err_ref);
    return o;
}

Outcome criterion3() {
    constexpr double kLeadingTol = 0.02;
    constexpr double kRefineFactor = 5.0;
    constexpr double kMinX2pp = 1e4;
    const std::vector<double> xs{1e9, 1e10};
    const LegendreData data(LogMgf::cir(kCir), xs.front(), xs.back());
    Outcome o{true, ""};
    for (double x : xs) {
        const ChiKernel kernel(data, x);
        if (kernel.x2_pprime() < kMinX2pp) {
            o.pass = false;
            o.detail += "x=" + num(x) + " below x^2p*'=1e4; ";
            continue;
        }
        for (const char* name : {"one", "identity", "power:0.3333333333333333"}) {
            const WeightFunction g = WeightFunction::parse(name);
            const LaplaceResult r = laplace_integral(g, kernel, Order::refined);
            const double el = std::fabs(r.quadrature / r.leading - 1.0);
            const double er = std::fabs(r.quadrature / r.refined - 1.0);
            bool ok = el <= kLeadingTol;
            // For g = 1 both orders coincide at alpha = 1, so only the leading bound applies.
            if (g.gamma != 0.0) ok = ok && er * kRefineFactor <= el;
            o.pass = o.pass && ok;
            o.detail += g.name + "@" + num(x, 2) + ": lead " + num(el, 2) + " ref " + num(er, 2) + "; ";
        }
    }
    return o;
}

Outcome criterion4() {
    constexpr double kBiconjTol = 1e-8;
    constexpr double kClosedFormTol = 1e-10;
    const LogMgf src = LogMgf::cir(kCir);
    const double ms = src.mu_star;
    const LegendreData data(src, src.d1_gap(ms), 1e14);

    double worst_bi = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double g = ms * 0.5 * std::pow(1e-6, i / 49.0);
        const double p = ms - g;
        const double target = src.value_gap(g);
        const double x_opt = src.d1_gap(g);
        auto neg = [&](double u) {
            const double x = std::exp(u);
            return -(p * x - data.lambda_star(x));
        };
        const double lo = std::max(std::log(data.x_min()), std::log(x_opt) - 3.0);
        const auto r = boost::math::tools::brent_find_minima(neg, lo, std::log(x_opt) + 3.0, 50);
        worst_bi = std::max(worst_bi, std::fabs(-r.second - target) / std::fabs(target));
    }

    CirParams c0 = kCir;
    c0.a = 0.0;
    const LogMgf closed = LogMgf::cir(c0);
    LogMgf numeric = closed;
    numeric.affine_k.reset();
    const LegendreData dc(closed, closed.d1_gap(closed.mu_star), 1e7);
    const LegendreData dn(numeric, numeric.d1_gap(numeric.mu_star), 1e7);
    double worst_cf = 0.0;
    for (double x = 1.0; x <= 1e6; x *= 1.7) {
        const auto a = dc.at(x), b = dn.at(x);
        worst_cf = std::max({worst_cf, std::fabs(a.gap / b.gap - 1.0), std::fabs(a.lambda_star / b.lambda_star - 1.0),
                             std::fabs(a.p_star_prime / b.p_star_prime - 1.0)});
    }

    const std::vector<double> xs{1e2, 1e3, 1e4, 1e5, 1e6};
    LogMgf env_src = src;
    const double g_lo = data.gap(xs.back()) / 10.0;
    const double g_hi = std::min(0.5 * ms, data.gap(xs.front()) * 10.0);
    env_src.envelope = fit_envelope(src, 1.0, 1.0, g_lo, g_hi);
    const LegendreData de(env_src, xs.front(), xs.back());
    const EnvelopeReport env = check_pstar_envelope(de, xs);

    Outcome o;
    o.pass = worst_bi <= kBiconjTol && worst_cf <= kClosedFormTol && env.pass;
    o.detail = "biconjugation " + num(worst_bi, 3) + ", closed form vs numeric " + num(worst_cf, 3) +
               ", envelope slack " + num(env.worst_slack, 4) + (env.pass ? " (holds)" : " (violated)");
    return o;
}

Outcome criterion5() {
    constexpr double kRelTol = 1e-6;
    constexpr double kContraction = 0.9;
    FixedPointConfig cfg;
    cfg.T = kCir.t;
    const GammaSolution s = solve_gamma(SdeSpec::affine(kCir.a, kCir.b), kCir.x0, cfg);
    double worst = 0.0;
    const auto& g = s.grid;
    for (std::size_t i = 0; i < g.nt(); ++i) {
        const double t = g.t_nodes[i];
        for (std::size_t j = 0; j < g.nx(); ++j) {
            const double x = g.x_nodes[j];
            double exact;
            if (t == 0.0) {
                exact = (2.0 * kCir.b + x) * kCir.x0;
            } else {
                CirParams p = kCir;
                p.t = t;
                const double ms = p.mu_star();
                exact = cir_log_mgf(p, ms - 1.0 / (g.xi[i] * (x + ms)));
            }
            worst = std::max(worst, std::fabs(s.gamma_value(i, j) - exact) / std::fabs(exact));
        }
    }
    Outcome o;
    o.pass = s.converged && worst <= kRelTol && s.contraction <= kContraction;
    o.detail = "max rel err " + num(worst, 3) + ", iterations " + std::to_string(s.iterations) + ", contraction " +
               num(s.contraction, 3) + ", M " + num(s.M);
    return o;
}

Outcome criterion6() {
    constexpr double kExponentTol = 0.05;
    constexpr double kCoefTol = 0.05;
    constexpr double beta = 1.0 / 3.0, c = 1.0, b = 1.0, x0 = 0.5, T = 3.0;
    FixedPointConfig cfg;
    cfg.T = T;
    cfg.X_max = 1e7;
    cfg.nx = 240;
    const GammaSolution s = solve_gamma(SdeSpec::power_perturbed(b, c, beta), x0, cfg);
    std::vector<double> ly, lr;
    double y_top = 0.0, r_top = 0.0;
    for (double y = 1e4; y <= 1e6 * 1.0001; y *= std::pow(10.0, 0.25)) {
        const double r = s.R_at(y - 2.0 * b) / x0;
        ly.push_back(std::log(y));
        lr.push_back(std::log(r));
        y_top = y;
        r_top = r;
    }
    const double slope = fit_line(ly, lr).first;
    const double tau = std::exp(b * beta * T);
    const double coef = power_drift_coefficient(beta, c, b, 1.0, x0, tau);
    const double fitted = r_top / std::pow(y_top, 2.0 * beta);
    Outcome o;
    o.pass = std::fabs(slope - 2.0 * beta) <= kExponentTol && std::fabs(fitted / coef - 1.0) <= kCoefTol;
    o.detail = "exponent " + num(slope, 4) + " (target 0.6667), coefficient " + num(fitted, 5) + " vs omega " +
               num(coef, 5);
    return o;
}

Outcome criterion7() {
    constexpr double kSlopeTol = 0.15;
    Outcome o{true, ""};
    // Exact rational oracle against floating point.
    double worst = 0.0;
    const std::vector<std::pair<long, long>> lams{{1, 2}, {4, 3}, {3, 2}};
    for (const auto& [nn, dd] : lams) {
        const auto exact = nu_coefficients_exact(nn, dd, 10);
        const NuSeries fl = nu_coefficients(static_cast<double>(nn) / dd, 10);
        for (int i = 0; i < 10; ++i) {
            const double e = static_cast<double>(exact[i].numerator()) / static_cast<double>(exact[i].denominator());
            const double d = std::fabs(fl.nu[i] - e) / std::max(1e-300, std::fabs(e));
            if (e == 0.0) {
                worst = std::max(worst, std::fabs(fl.nu[i]));
            } else {
                worst = std::max(worst, d);
            }
        }
    }
    const auto n32 = nu_coefficients_exact(3, 2, 2);
    const auto n43 = nu_coefficients_exact(4, 3, 2);
    const bool literal = n32[1] == Rational(2, 81) && n43[1] == Rational(0);
    const bool series_ok = literal && worst <= 1e-12;
    o.detail = "nu oracle max rel diff " + num(worst, 3) + (literal ? ", nu2 values exact" : ", nu2 mismatch");

    // Delta-hat against the fixed-point solution of the square-root form.
    const CevParams p;  // a=0.3, b=1, sigma=0.5, v0=0.5, p=0.75
    const double t = 1.0;
    const SdeSpec spec = cev_square_root_spec(p);
    FixedPointConfig cfg;
    cfg.T = t;
    cfg.X_max = 1e7;
    cfg.nx = 240;
    const GammaSolution s = solve_gamma(spec, p.y0(), cfg);
    std::vector<double> lx, ld;
    const double lam = p.lambda();
    for (double xp = 0.5; xp <= 64.0; xp *= 2.0) {
        const double x = cev_fixed_point_coordinate(p, t, xp);
        if (x < s.grid.x_nodes.front() || x > s.grid.x_nodes.back()) continue;
        const double diff = cev_log_mgf_asym(p, t, xp).value - s.gamma_at(x);
        lx.push_back(std::log(xp));
        ld.push_back(std::log(std::fabs(diff)));
    }
    double slope = std::numeric_limits<double>::quiet_NaN();
    if (lx.size() >= 3) slope = fit_line(lx, ld).first;
    const double want = -(2.0 - lam) / lam;
    const bool slope_ok = std::fabs(slope - want) <= kSlopeTol;
    o.pass = series_ok && slope_ok;
    o.detail += "; Delta-hat minus Gamma slope " + num(slope, 4) + " (target " + num(want, 4) + ", " +
                std::to_string(lx.size()) + " points, last |diff| " +
                (ld.empty() ? std::string("n/a") : num(std::exp(ld.back()), 4)) + ")";
    return o;
}

Outcome criterion8() {
    constexpr double kSigmas = 3.0;
    constexpr double kMinProb = 1e-5;
    const CevParams p;
    const double t = 1.0;
    SimConfig cfg;
    cfg.n_paths = 10000000;
    cfg.n_steps = 250;
    cfg.horizon = t;
    cfg.seed = 8008;
    SimResult sim = simulate(p, cfg);
    const double lam = p.lambda();
    for (double& v : sim.samples) v = std::pow(v, lam);

    std::vector<double> xs;
    for (int k = 0; k <= 16; ++k) xs.push_back(0.45 + 0.05 * k);
    const CevTail tail = cev_ccdf(p, t, xs, Order::refined);
    Outcome o{true, ""};
    int compared = 0, outside = 0, markov_bad = 0;
    double worst_log_offset = 0.0;
    const double n = static_cast<double>(sim.samples.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const CcdfEstimate e = empirical_ccdf(sim.samples, xs[i]);
        const double pred = tail.expansion.estimate[i];
        const double se_pred = std::sqrt(std::max(pred, 0.0) * (1.0 - std::min(pred, 1.0)) / n);
        if (pred >= kMinProb) {
            ++compared;
            if (std::fabs(e.value - pred) > kSigmas * std::max(se_pred, e.std_error)) ++outside;
            if (e.count > 0) worst_log_offset = std::max(worst_log_offset, std::fabs(std::log(e.value / pred)));
        }
        const double markov = std::exp(-tail.expansion.lambda_star[i]);
        if (e.value > markov + kSigmas * e.std_error) ++markov_bad;
    }
    o.pass = compared > 0 && outside == 0 && markov_bad == 0;
    o.detail = std::to_string(outside) + "/" + std::to_string(compared) + " points outside 3 stderr, max |log(emp/pred)| " +
               num(worst_log_offset, 3) + ", Markov violations " + std::to_string(markov_bad) + "/" +
               std::to_string(xs.size()) + ", flagged paths " + std::to_string(sim.flagged);
    return o;
}

Outcome criterion9() {
    constexpr double b = 1.0, x0 = 0.5, t = 1.0;
    const SdeSpec target = SdeSpec::power_perturbed(b, 1.0, 1.0 / 3.0);
    FixedPointConfig fc;
    fc.T = t;
    const GammaSolution sol = solve_gamma(target, x0, fc);
    auto model = [&sol](double mu) { return log_mgf_from_gamma(sol, 1.0, mu); };
    SimConfig cfg;
    cfg.n_paths = 200000;
    cfg.n_steps = 500;
    cfg.seed = 9009;
    Outcome o{true, ""};
    for (double x : {1e2, 1e3}) {
        const SqueezeSpec sq = build_squeeze(target, x0, t, x);
        const SqueezeReport r = squeeze_check(sq, cfg, {}, model);
        o.pass = o.pass && r.pass;
        o.detail += "x=" + num(x) + ": ordering " + (r.ordering_holds ? "ok" : "violated") + " (worst " +
                    num(r.worst_excess, 3) + " se), sandwich " + num(r.lower_log_mgf, 5) + " <= " +
                    num(r.target_log_mgf, 5) + " <= " + num(r.upper_log_mgf, 5) + "; ";
    }
    return o;
}

Outcome criterion10() {
    const json cir = {{"type", "cir"}, {"a", 0.4}, {"b", 1.0}, {"sigma", 1.0}, {"x0", 0.5}, {"t", 1.0}};
    const json custom = {{"type", "custom"}, {"b", 1.0}, {"c", 1.0}, {"beta", 1.0 / 3.0}, {"x0", 0.5}, {"t", 1.0}};
    const json cev = {{"type", "cev"}, {"a", 0.3}, {"b", 1.0}, {"sigma", 0.5}, {"x0", 0.5}, {"p", 0.75}, {"t", 1.0}};
    const std::vector<json> requests{
        {{"command", "tail"}, {"model", cir}, {"args", {{"x", {10.0, 100.0, 1000.0}}, {"order", "refined"}}}},
        {{"command", "mc"}, {"model", cir}, {"args", {{"x", {0.5, 1.0, 2.0}}, {"paths", 20000}, {"steps", 200}}}},
        {{"command", "fixed-point"}, {"model", custom}, {"args", {{"nx", 120}}}},
        {{"command", "cev"}, {"model", cev}, {"args", {{"x", {0.5, 0.7, 0.9}}}}},
    };
    Outcome o{true, ""};
    for (const auto& req : requests) {
        const CommandOutput first = run_command(req);
        const CommandOutput replay = run_command(first.manifest);
        const bool same = first.csv() == replay.csv();
        o.pass = o.pass && same;
        o.detail += req.at("command").get<std::string>() + (same ? " identical; " : " DIFFERS; ");
    }
    SimConfig cfg;
    cfg.n_paths = 5000;
    cfg.n_steps = 100;
    cfg.threads = 1;
    const auto one = simulate(kCir, cfg).samples;
    cfg.threads = 3;
    const auto three = simulate(kCir, cfg).samples;
    const bool sched = one == three;
    o.pass = o.pass && sched;
    o.detail += std::string("1 vs 3 threads ") + (sched ? "identical" : "DIFFERS");
    return o;
}

struct Entry {
    const char* name;
    double budget_seconds;
    Outcome (*fn)();
};

const Entry kEntries[] = {
    {"CIR log-MGF vs Monte Carlo", 60.0, criterion1},
    {"tail expansion vs exact CIR law", 10.0, criterion2},
    {"Laplace integral asymptotics", 10.0, criterion3},
    {"Legendre machinery", 5.0, criterion4},
    {"fixed-point exactness on CIR", 30.0, criterion5},
    {"power-drift tail law", 60.0, criterion6},
    {"CEV series cross-validation", 120.0, criterion7},
    {"CEV tail vs Monte Carlo", 600.0, criterion8},
    {"squeeze verification", 120.0, criterion9},
    {"determinism", 120.0, criterion10},
};

}  // namespace

CriterionResult run_criterion(int id) {
    if (id < 1 || id > 10) throw DomainError("criterion id must be in 1..10");
    const Entry& e = kEntries[id - 1];
    CriterionResult r;
    r.id = id;
    r.name = e.name;
    const auto start = std::chrono::steady_clock::now();
    try {
        const Outcome o = e.fn();
        r.pass = o.pass;
        r.detail = o.detail;
    } catch (const std::exception& ex) {
        r.pass = false;
        r.detail = std::string("error: ") + ex.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r.seconds > e.budget_seconds) {
        r.pass = false;
        r.detail += " (runtime " + num(r.seconds, 3) + " s exceeds " + num(e.budget_seconds, 3) + " s)";
    }
    return r;
}

std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids) {
    std::vector<CriterionResult> out;
    for (int id : ids) out.push_back(run_criterion(id));
    return out;
}

std::string format_result(const CriterionResult& r) {
    std::ostringstream os;
    os << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << " (" << r.name << "): " << r.detail << " ["
       << num(r.seconds, 3) << " s]";
    return os.str();
}

}  // namespace mexp
