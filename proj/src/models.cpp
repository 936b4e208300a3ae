#include "mexp/models.hpp"

#include "mexp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

namespace mexp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

/// ln Q(s, y) for the regularized upper incomplete gamma, s > 0.
double log_gamma_q(double s, double y) {
    if (y <= 0.0) return 0.0;
    const double q = boost::math::gamma_q(s, y);
    if (q > 1e-250 || y <= s + 1.0) return std::log(q);
    // Modified Lentz continued fraction for Gamma(s, y), evaluated in log space.
    constexpr double tiny = 1e-300;
    double b = y + 1.0 - s;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) {
            return -y + s * std::log(y) - std::lgamma(s) + std::log(h);
        }
    }
    throw NumericError("incomplete gamma continued fraction did not converge at s=" + fmt(s) +
                       ", y=" + fmt(y));
}

double log_add(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

}  // namespace

void CirParams::validate() const {
    if (!(sigma > 0.0)) throw DomainError("sigma must be > 0, got " + fmt(sigma));
    if (!(t > 0.0)) throw DomainError("t must be > 0, got " + fmt(t));
    if (!(x0 > 0.0)) throw DomainError("x0 must be > 0, got " + fmt(x0));
    if (!(a >= 0.0)) throw DomainError("a must be >= 0, got " + fmt(a));
    if (!std::isfinite(b)) throw DomainError("b must be finite");
}

double CirParams::mu_star() const { return critical_moment(b, sigma, t); }

double critical_moment(double b, double sigma, double t) {
    if (!(sigma > 0.0)) throw DomainError("sigma must be > 0, got " + fmt(sigma));
    if (!(t > 0.0)) throw DomainError("t must be > 0, got " + fmt(t));
    const double s2 = sigma * sigma;
    const double bt = b * t;
    if (std::fabs(bt) < 1e-8) {
        return 2.0 / (s2 * t) * (1.0 + bt / 2.0 + bt * bt / 12.0);
    }
    return 2.0 * b / (s2 * -std::expm1(-bt));
}

double inverse_critical_moment(double b, double sigma, double t) {
    if (!(sigma > 0.0)) throw DomainError("sigma must be > 0, got " + fmt(sigma));
    if (!(t >= 0.0)) throw DomainError("t must be >= 0, got " + fmt(t));
    const double s2 = sigma * sigma;
    const double bt = b * t;
    if (std::fabs(bt) < 1e-8) {
        return s2 * t / 2.0 * (1.0 - bt / 2.0 + bt * bt / 6.0);
    }
    return s2 * -std::expm1(-bt) / (2.0 * b);
}

CirLogMgf::CirLogMgf(const CirParams& p) : p_(p) {
    p_.validate();
    mu_star_ = p_.mu_star();
    decay_ = std::exp(-p_.b * p_.t);
    k_ = p_.x0 * decay_ * mu_star_ * mu_star_;
    A_ = 2.0 * p_.a / (p_.sigma * p_.sigma);
}

double CirLogMgf::value_gap(double g) const {
    if (!(g > 0.0)) throw ExplosionError("moment at or beyond the critical moment " + fmt(mu_star_), mu_star_);
    const double mu = mu_star_ - g;
    const double lin = p_.x0 * decay_ * mu_star_ * mu / g;
    double lg;
    if (std::fabs(mu) < 0.5 * g) {
        lg = std::log1p(mu / g);
    } else {
        lg = std::log(mu_star_ / g);
    }
    return lin + A_ * lg;
}

double CirLogMgf::d1_gap(double g) const {
    if (!(g > 0.0)) throw ExplosionError("moment at or beyond the critical moment " + fmt(mu_star_), mu_star_);
    return k_ / (g * g) + A_ / g;
}

double CirLogMgf::d2_gap(double g) const {
    if (!(g > 0.0)) throw ExplosionError("moment at or beyond the critical moment " + fmt(mu_star_), mu_star_);
    return 2.0 * k_ / (g * g * g) + A_ / (g * g);
}

double cir_log_mgf(const CirParams& p, double mu) {
    CirLogMgf f(p);
    if (!(mu < f.mu_star())) {
        throw ExplosionError("mu = " + fmt(mu) + " is not below the critical moment " + fmt(f.mu_star()),
                             f.mu_star());
    }
    if (mu == 0.0) return 0.0;
    return f.value_gap(f.mu_star() - mu);
}

double cir_log_mgf_gap(const CirParams& p, double gap) { return CirLogMgf(p).value_gap(gap); }

double cir_exact_log_ccdf(const CirParams& p, double x) {
    p.validate();
    if (!(x > 0.0)) return 0.0;
    const double mu_star = p.mu_star();
    const double half_nc = mu_star * std::exp(-p.b * p.t) * p.x0;
    const double shape0 = 2.0 * p.a / (p.sigma * p.sigma);
    const double y = x * mu_star;
    const double log_nc = std::log(half_nc);
    const double peak = std::sqrt(half_nc * y);
    const long j_cap = static_cast<long>(10.0 * half_nc + 10.0 * peak + 2000.0);

    double total = -kInf;
    double prev = -kInf;
    for (long j = 0; j <= j_cap; ++j) {
        const double s = shape0 + static_cast<double>(j);
        const double log_w = -half_nc + j * log_nc - std::lgamma(static_cast<double>(j) + 1.0);
        double term = -kInf;
        if (s > 0.0) term = log_w + log_gamma_q(s, y);
        total = log_add(total, term);
        if (static_cast<double>(j) > half_nc && total > -kInf && term < total - 45.0 &&
            term - prev < -std::log(2.0)) {
            return std::min(total, 0.0);
        }
        prev = term;
    }
    throw NumericError("noncentral chi-squared series did not converge within " + std::to_string(j_cap) +
                       " terms at x=" + fmt(x));
}

double cir_exact_ccdf(const CirParams& p, double x) { return std::exp(cir_exact_log_ccdf(p, x)); }

double cir_mean(const CirParams& p) {
    p.validate();
    const double bt = p.b * p.t;
    const double w = std::fabs(bt) < 1e-12 ? p.t : -std::expm1(-bt) / p.b;
    return p.x0 * std::exp(-bt) + p.a * w;
}

SigmaTransform sigma_transform(std::function<double(double)> sigma_fn, std::function<double(double)> drift_fn) {
    auto integrand = [sigma_fn](double u) { return 1.0 / (2.0 * sigma_fn(u)); };
    auto root_integral = [integrand](double x) {
        if (x <= 0.0) return 0.0;
        boost::math::quadrature::tanh_sinh<double> ts(15);
        return ts.integrate(integrand, 0.0, x, 1e-15);
    };
    double unit = 0.0;
    try {
        unit = root_integral(1.0);
    } catch (const std::exception&) {
        unit = kInf;
    }
    if (!std::isfinite(unit)) throw DomainError("1/sigma is not integrable near 0");

    SigmaTransform st;
    st.sigma_fn = sigma_fn;
    st.Sigma = [root_integral](double x) {
        const double r = root_integral(x);
        return r * r;
    };
    st.Sigma_prime = [root_integral, sigma_fn](double x) { return root_integral(x) / sigma_fn(x); };
    auto Sigma = st.Sigma;
    st.Sigma_inv = [Sigma](double y) {
        if (y <= 0.0) return 0.0;
        double lo = 0.0, hi = 1.0;
        while (Sigma(hi) < y) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e300) throw NumericError("Sigma inverse bracket overflow");
        }
        boost::uintmax_t it = 200;
        auto f = [&](double x) { return Sigma(x) - y; };
        auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), it);
        return 0.5 * (r.first + r.second);
    };
    auto Sigma_prime = st.Sigma_prime;
    auto Sigma_inv = st.Sigma_inv;
    st.transformed_drift = [=](double y) {
        const double x = Sigma_inv(y);
        const double h = 1e-3 * x;
        const double ds = (-sigma_fn(x + 2 * h) + 8 * sigma_fn(x + h) - 8 * sigma_fn(x - h) + sigma_fn(x - 2 * h)) /
                          (12.0 * h);
        const double s = sigma_fn(x);
        const double sp = Sigma_prime(x);
        const double spp = 1.0 / (2.0 * s * s) - std::sqrt(y) * ds / (s * s);
        return 0.5 * spp / (sp * sp) * y + drift_fn(x) * sp;
    };
    return st;
}

SigmaTransform sigma_transform_power(double s, double p, std::function<double(double)> drift_fn) {
    if (!(s > 0.0)) throw DomainError("diffusion scale must be > 0");
    if (!(p < 1.0)) throw DomainError("1/sigma is not integrable near 0 for exponent p >= 1");
    const double lam = 2.0 * (1.0 - p);
    const double scale = (s * lam) * (s * lam);
    SigmaTransform st;
    st.sigma_fn = [s, p](double x) { return s * std::pow(x, p); };
    st.Sigma = [lam, scale](double x) { return std::pow(x, lam) / scale; };
    st.Sigma_inv = [lam, scale](double y) { return std::pow(scale * y, 1.0 / lam); };
    st.Sigma_prime = [lam, scale](double x) { return lam * std::pow(x, lam - 1.0) / scale; };
    st.transformed_drift = [=](double y) {
        const double x = std::pow(scale * y, 1.0 / lam);
        return (lam - 1.0) / (2.0 * lam) + drift_fn(x) * lam * std::pow(x, lam - 1.0) / scale;
    };
    return st;
}

double SdeSpec::bbar(double y) const {
    if (perturbation) return perturbation(y);
    return drift(y) + b_limit * y;
}

SdeSpec SdeSpec::affine(double a, double b) {
    SdeSpec s;
    s.drift = [a, b](double y) { return a - b * y; };
    s.diffusion = [](double y) { return std::sqrt(std::max(y, 0.0)); };
    s.perturbation = [a](double) { return a; };
    s.beta = 0.0;
    s.M = 1.0;
    s.monotone_class = MonotoneClass::decreasing;
    s.b_limit = b;
    return s;
}

SdeSpec SdeSpec::power_perturbed(double b, double c, double beta, double M) {
    SdeSpec s;
    s.drift = [b, c, beta](double y) { return -b * y + c * std::pow(std::max(y, 0.0), beta); };
    s.diffusion = [](double y) { return std::sqrt(std::max(y, 0.0)); };
    s.perturbation = [c, beta](double y) { return c * std::pow(std::max(y, 0.0), beta); };
    s.beta = beta;
    s.M = M;
    s.monotone_class = c >= 0.0 ? MonotoneClass::decreasing : MonotoneClass::increasing;
    s.b_limit = b;
    return s;
}

DriftReport validate_drift(const SdeSpec& spec, const std::vector<double>& grid) {
    DriftReport r;
    if (grid.size() < 100) {
        r.messages.push_back("grid has fewer than 100 points");
        return r;
    }
    std::vector<double> ys(grid);
    std::sort(ys.begin(), ys.end());

    double sup0 = std::fabs(spec.drift(0.0));
    for (int i = 0; i <= 200; ++i) {
        const double y = spec.M * std::pow(10.0, -8.0 + 8.0 * i / 200.0);
        sup0 = std::max(sup0, std::fabs(spec.drift(y)));
    }
    r.sup_abs_near_zero = sup0;
    r.bounded_near_zero = std::isfinite(sup0) && sup0 < 1e12;
    if (!r.bounded_near_zero) r.messages.push_back("drift is not bounded on [0, M]");

    int up = 0, down = 0;
    for (std::size_t i = 1; i < ys.size(); ++i) {
        const double d = spec.drift(ys[i]) / ys[i] - spec.drift(ys[i - 1]) / ys[i - 1];
        const double tol = 1e-13 * (std::fabs(spec.drift(ys[i]) / ys[i]) + 1.0);
        if (d > tol) ++up;
        if (d < -tol) ++down;
    }
    r.monotone = (up == 0 || down == 0);
    r.detected_class = up > down ? MonotoneClass::increasing : MonotoneClass::decreasing;
    if (!r.monotone) r.messages.push_back("B(y)/y is not monotone on the grid");
    if (r.monotone && (up + down) > 0 && r.detected_class != spec.monotone_class) {
        r.messages.push_back("declared monotone class disagrees with the grid");
    }

    r.fitted_b = -spec.drift(ys.back()) / ys.back();

    const std::size_t start = ys.size() / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    bool all_zero = true;
    for (std::size_t i = start; i < ys.size(); ++i) {
        const double v = std::fabs(spec.bbar(ys[i]));
        if (!(v > 0.0) || !std::isfinite(v)) continue;
        all_zero = false;
        const double lx = std::log(ys[i]), ly = std::log(v);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (all_zero || n < 2) {
        r.fitted_beta = 0.0;
    } else {
        const double den = n * sxx - sx * sx;
        r.fitted_beta = den > 0 ? (n * sxy - sx * sy) / den : 0.0;
        if (std::fabs(r.fitted_beta) < 1e-9) r.fitted_beta = 0.0;
    }
    if (std::fabs(r.fitted_beta - spec.beta) > 0.05) {
        r.beta_mismatch_warning = true;
        r.messages.push_back("fitted perturbation exponent " + fmt(r.fitted_beta) + " differs from declared " +
                             fmt(spec.beta));
    }
    r.condition_iii = !(r.detected_class == MonotoneClass::increasing && r.fitted_beta > 0.5 + 0.02);
    if (!r.condition_iii) r.messages.push_back("increasing class requires exponent <= 1/2");
    r.pass = r.bounded_near_zero && r.monotone && r.condition_iii;
    return r;
}

}  // namespace mexp
