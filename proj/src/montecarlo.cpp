#include "mexp/montecarlo.hpp"

#include "mexp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include <boost/random/normal_distribution.hpp>

namespace mexp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kFlagLimit = 1e-3;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(8);
    os << v;
    return os.str();
}

/// Runs body(i) for i in [0, n) on the configured number of workers, in contiguous blocks.
template <class Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

int resolve_threads(const SimConfig& cfg) { return cfg.threads > 0 ? cfg.threads : default_threads(); }

/// Euler step for one process; returns the new (untruncated) state.
template <class Drift, class Diff>
inline double euler_step(double x, double dt, double dw, Scheme scheme, const Drift& drift, const Diff& diff) {
    if (scheme == Scheme::euler_full_truncation) {
        const double xp = x > 0.0 ? x : 0.0;
        return x + drift(xp) * dt + diff(xp) * dw;
    }
    return std::fabs(x + drift(x) * dt + diff(x) * dw);
}

template <class Drift, class Diff>
SimResult run_single(double x0, const SimConfig& cfg, const Drift& drift, const Diff& diff) {
    cfg.validate();
    const std::size_t n = cfg.n_paths;
    const double dt = cfg.horizon / cfg.n_steps;
    const double sdt = std::sqrt(dt);
    std::vector<double> out(n);
    parallel_for(n, resolve_threads(cfg), [&](std::size_t i) {
        std::mt19937_64 eng(path_seed(cfg.seed, i));
        boost::random::normal_distribution<double> normal;
        double x = x0;
        for (int k = 0; k < cfg.n_steps; ++k) {
            x = euler_step(x, dt, sdt * normal(eng), cfg.scheme, drift, diff);
            if (!std::isfinite(x)) break;
        }
        out[i] = std::isfinite(x) ? std::max(x, 0.0) : kNaN;
    });
    SimResult r;
    r.requested = n;
    r.samples.reserve(n);
    for (double v : out) {
        if (std::isnan(v)) {
            ++r.flagged;
        } else {
            r.samples.push_back(v);
        }
    }
    if (static_cast<double>(r.flagged) > kFlagLimit * static_cast<double>(n)) {
        throw NumericError(std::to_string(r.flagged) + " of " + std::to_string(n) +
                           " paths produced non-finite values");
    }
    return r;
}

double wilson_bound(double phat, double n, double z, int sign) {
    const double z2 = z * z;
    const double centre = phat + z2 / (2.0 * n);
    const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
    return std::clamp((centre + sign * half) / (1.0 + z2 / n), 0.0, 1.0);
}

}  // namespace

Scheme parse_scheme(const std::string& s) {
    if (s == "euler_full_truncation" || s == "full_truncation") return Scheme::euler_full_truncation;
    if (s == "euler_reflection" || s == "reflection") return Scheme::euler_reflection;
    throw DomainError("unknown scheme '" + s + "'");
}

std::string to_string(Scheme s) {
    return s == Scheme::euler_full_truncation ? "euler_full_truncation" : "euler_reflection";
}

void SimConfig::validate() const {
    if (n_paths < 1) throw DomainError("n_paths must be >= 1");
    if (n_steps < 1) throw DomainError("n_steps must be >= 1");
    if (!(horizon > 0.0)) throw DomainError("horizon must be > 0");
}

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (path + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

int default_threads() {
    if (const char* env = std::getenv("MEXP_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 64) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

SimResult simulate(const SdeSpec& spec, double x0, const SimConfig& config) {
    if (!spec.drift || !spec.diffusion) throw DomainError("drift and diffusion are required");
    if (!(x0 >= 0.0)) throw DomainError("x0 must be >= 0");
    return run_single(x0, config, spec.drift, spec.diffusion);
}

SimResult simulate(const CirParams& params, const SimConfig& config) {
    if (!(params.sigma > 0.0) || !(params.x0 > 0.0) || !(params.a >= 0.0)) {
        throw DomainError("invalid CIR parameters");
    }
    const double a = params.a, b = params.b, s = params.sigma;
    return run_single(
        params.x0, config, [a, b](double x) { return a - b * x; }, [s](double x) { return s * std::sqrt(x); });
}

SimResult simulate(const CevParams& params, const SimConfig& config) {
    params.validate();
    const double a = params.a, b = params.b, s = params.sigma, p = params.p;
    return run_single(
        params.v0, config, [a, b](double v) { return a - b * v; },
        [s, p](double v) { return v > 0.0 ? s * std::pow(v, p) : 0.0; });
}

std::vector<SimResult> simulate_coupled(const std::vector<CoupledProcess>& processes, const SimConfig& config) {
    config.validate();
    if (processes.empty()) throw DomainError("no processes to simulate");
    const std::size_t n = config.n_paths, K = processes.size();
    const double dt = config.horizon / config.n_steps;
    const double sdt = std::sqrt(dt);
    std::vector<double> out(n * K);
    parallel_for(n, resolve_threads(config), [&](std::size_t i) {
        std::mt19937_64 eng(path_seed(config.seed, i));
        boost::random::normal_distribution<double> normal;
        std::vector<double> x(K);
        for (std::size_t k = 0; k < K; ++k) x[k] = processes[k].x0;
        for (int step = 0; step < config.n_steps; ++step) {
            const double dw = sdt * normal(eng);
            for (std::size_t k = 0; k < K; ++k) {
                x[k] = euler_step(x[k], dt, dw, config.scheme, processes[k].drift, processes[k].diffusion);
            }
        }
        for (std::size_t k = 0; k < K; ++k) out[i * K + k] = std::isfinite(x[k]) ? std::max(x[k], 0.0) : kNaN;
    });
    std::vector<SimResult> res(K);
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < n; ++i) {
        bool bad = false;
        for (std::size_t k = 0; k < K; ++k) bad = bad || std::isnan(out[i * K + k]);
        if (bad) {
            ++flagged;
            continue;
        }
        for (std::size_t k = 0; k < K; ++k) res[k].samples.push_back(out[i * K + k]);
    }
    for (auto& r : res) {
        r.requested = n;
        r.flagged = flagged;
    }
    if (static_cast<double>(flagged) > kFlagLimit * static_cast<double>(n)) {
        throw NumericError(std::to_string(flagged) + " of " + std::to_string(n) + " coupled paths were flagged");
    }
    return res;
}

MgfEstimate empirical_log_mgf(const std::vector<double>& samples, double mu) {
    if (samples.empty()) throw DomainError("no samples");
    const std::size_t n = samples.size();
    double m = -std::numeric_limits<double>::infinity();
    for (double s : samples) {
        if (!std::isfinite(s)) throw DomainError("non-finite sample");
        m = std::max(m, mu * s);
    }
    std::vector<double> w(n), w2(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::exp(mu * samples[i] - m);
        w2[i] = w[i] * w[i];
    }
    const double sw = pairwise_sum(w.data(), n);
    const double sw2 = pairwise_sum(w2.data(), n);
    const double nd = static_cast<double>(n);
    const double mean = sw / nd;
    MgfEstimate e;
    e.value = m + std::log(mean);
    const double var = n > 1 ? std::max(0.0, (sw2 - sw * mean) / (nd - 1.0)) : 0.0;
    e.std_error = std::sqrt(var / nd) / mean;
    e.effective_sample_size = sw * sw / sw2;
    e.unstable = e.effective_sample_size < 0.01 * nd;
    return e;
}

CcdfEstimate empirical_ccdf(const std::vector<double>& samples, double x, double z) {
    if (samples.empty()) throw DomainError("no samples");
    CcdfEstimate e;
    e.n = samples.size();
    for (double s : samples) {
        if (s >= x) ++e.count;
    }
    const double n = static_cast<double>(e.n);
    e.value = static_cast<double>(e.count) / n;
    e.std_error = std::sqrt(e.value * (1.0 - e.value) / n);
    e.lower = e.count == 0 ? 0.0 : wilson_bound(e.value, n, z, -1);
    e.upper = e.count == e.n ? 1.0 : wilson_bound(e.value, n, z, +1);
    return e;
}

SqueezeSpec build_squeeze(const SdeSpec& target, double x0, double t, double x) {
    if (!(x > std::exp(1.0))) throw DomainError("tilt level must exceed e, got " + fmt(x));
    if (!(target.beta < 1.0)) throw DomainError("beta must be < 1");
    if (!(x0 > 0.0) || !(t > 0.0)) throw DomainError("x0 and t must be > 0");
    SqueezeSpec s;
    s.target = target;
    s.x0 = x0;
    s.t = t;
    s.x = x;
    s.monotone_class = target.monotone_class;
    const double beta = target.beta;
    const double b = target.b_limit;
    s.Z = std::pow(x * std::log(x), 1.0 / (1.0 - beta));
    const double slope = target.bbar(s.Z) / s.Z;  // B(Z)/Z = -b + slope
    const double zb = std::pow(s.Z, beta);

    std::vector<double> grid{0.0};
    const double top = std::max(100.0 * s.Z, 100.0 * target.M);
    for (int i = 0; i <= 4000; ++i) grid.push_back(1e-8 * std::pow(top / 1e-8, i / 4000.0));

    double m = 0.0, cc = 0.0;
    for (double y : grid) {
        const double bb = target.bbar(y);
        const double gap = bb - slope * y;
        if (s.monotone_class == MonotoneClass::decreasing) {
            m = std::max(m, -bb);
            cc = std::max(cc, gap / zb);
        } else {
            m = std::max(m, bb);
            if (zb > 1.0) cc = std::max(cc, -gap / (zb - 1.0));
        }
    }
    s.m = m;
    s.c = cc;
    const double kappa = b - slope;
    if (s.monotone_class == MonotoneClass::decreasing) {
        s.lower_cir = CirParams{-m, b, 1.0, x0, t};
        s.upper_cir = CirParams{cc * zb, kappa, 1.0, x0, t};
    } else {
        s.lower_cir = CirParams{cc - cc * zb, kappa, 1.0, x0, t};
        s.upper_cir = CirParams{m, b, 1.0, x0, t};
    }
    return s;
}

SqueezeReport squeeze_check(const SqueezeSpec& spec, const SimConfig& config, const std::vector<double>& x_grid,
                            const std::function<double(double)>& target_log_mgf) {
    SimConfig cfg = config;
    cfg.horizon = spec.t;
    auto sq = [](double y) { return std::sqrt(y); };
    auto cir_drift = [](const CirParams& p) {
        return std::function<double(double)>([a = p.a, b = p.b](double y) { return a - b * y; });
    };
    const std::vector<CoupledProcess> procs{
        {cir_drift(spec.lower_cir), sq, spec.x0},
        {spec.target.drift, spec.target.diffusion, spec.x0},
        {cir_drift(spec.upper_cir), sq, spec.x0},
    };
    const auto sims = simulate_coupled(procs, cfg);
    const auto& lo = sims[0].samples;
    const auto& tg = sims[1].samples;
    const auto& up = sims[2].samples;

    SqueezeReport r;
    r.paths = tg.size();
    for (std::size_t i = 0; i < tg.size(); ++i) {
        const double tol = 1e-9 * (1.0 + std::fabs(tg[i]));
        if (lo[i] > tg[i] + tol || tg[i] > up[i] + tol) ++r.pathwise_violations;
    }

    std::vector<double> pts = x_grid;
    if (pts.empty()) {
        std::vector<double> sorted = tg;
        std::sort(sorted.begin(), sorted.end());
        for (int k = 1; k <= 9; ++k) pts.push_back(sorted[(sorted.size() * k) / 10]);
    }
    const bool lower_valid = spec.lower_cir.a >= 0.0;
    const bool upper_valid = spec.upper_cir.a >= 0.0;
    r.ordering_holds = true;
    r.worst_excess = -std::numeric_limits<double>::infinity();
    for (double x : pts) {
        SqueezePoint p;
        p.x = x;
        p.lower = empirical_ccdf(lo, x);
        p.target = empirical_ccdf(tg, x);
        p.upper = empirical_ccdf(up, x);
        p.lower_exact = lower_valid ? cir_exact_ccdf(spec.lower_cir, x) : kNaN;
        p.upper_exact = upper_valid ? cir_exact_ccdf(spec.upper_cir, x) : kNaN;
        const double se_t = std::max(p.target.std_error, 1.0 / static_cast<double>(p.target.n));
        auto excess = [&](double smaller, double larger, double se) { return (smaller - larger) / se; };
        double worst = std::max(
            excess(p.lower.value, p.target.value, std::hypot(p.lower.std_error, se_t)),
            excess(p.target.value, p.upper.value, std::hypot(p.upper.std_error, se_t)));
        if (lower_valid) worst = std::max(worst, excess(p.lower_exact, p.target.value, se_t));
        if (upper_valid) worst = std::max(worst, excess(p.target.value, p.upper_exact, se_t));
        p.ordered = worst <= 2.0;
        if (worst > r.worst_excess) {
            r.worst_excess = worst;
            r.worst_x = x;
        }
        r.ordering_holds = r.ordering_holds && p.ordered;
        r.points.push_back(p);
    }

    const double mu_star = critical_moment(spec.target.b_limit, 1.0, spec.t);
    const double g = 1.0 / spec.x;
    r.mu = mu_star - g;
    r.empirical = empirical_log_mgf(tg, r.mu);
    r.target_from_model = static_cast<bool>(target_log_mgf);
    r.target_log_mgf = r.target_from_model ? target_log_mgf(r.mu) : r.empirical.value;
    r.lower_log_mgf = lower_valid ? cir_log_mgf(spec.lower_cir, r.mu) : kNaN;
    r.upper_log_mgf = upper_valid && r.mu < spec.upper_cir.mu_star() ? cir_log_mgf(spec.upper_cir, r.mu)
                                                                     : std::numeric_limits<double>::infinity();
    const double beta = spec.target.beta;
    r.omega1 = r.lower_log_mgf * g;
    const double expo = std::max(beta / (beta - 1.0), 1.0);
    r.omega2 = r.upper_log_mgf * std::pow(g, expo) / std::pow(std::fabs(std::log(g)), 1.0 / (1.0 - beta));
    const bool lower_ok = !lower_valid || r.lower_log_mgf <= r.target_log_mgf;
    const bool upper_ok = r.target_log_mgf <= r.upper_log_mgf;
    r.sandwich_holds = lower_ok && upper_ok;
    r.pass = r.ordering_holds && r.sandwich_holds;
    return r;
}

}  // namespace mexp
