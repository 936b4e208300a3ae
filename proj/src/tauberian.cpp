#include "mexp/tauberian.hpp"

#include "mexp/errors.hpp"

#include <cmath>
#include <limits>

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace mexp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kSqrt2Pi = boost::math::constants::root_two_pi<double>();

double resolve_alpha(const LegendreData& data, std::optional<double> alpha, double y_max) {
    if (alpha) return *alpha;
    if (data.source().alpha) return *data.source().alpha;
    return fit_alpha(data.source(), y_max);
}

}  // namespace

Order parse_order(const std::string& s) {
    if (s == "leading") return Order::leading;
    if (s == "refined") return Order::refined;
    throw std::invalid_argument("order must be 'leading' or 'refined', got '" + s + "'");
}

std::string to_string(Order o) { return o == Order::leading ? "leading" : "refined"; }

double tail_correction_constant(double alpha) { return 2.0 + alpha / ((alpha + 1.0) * (alpha + 1.0)); }

TailExpansion ccdf_expansion(const LegendreData& data, const std::vector<double>& xs, Order order,
                             std::optional<double> alpha) {
    TailExpansion te;
    te.order = order;
    te.mu_star = data.source().mu_star;
    double x_max = 0.0;
    for (double x : xs) x_max = std::max(x_max, x);
    if (xs.empty()) return te;
    te.alpha = resolve_alpha(data, alpha, 1.0 / data.gap(x_max));
    const double C = tail_correction_constant(te.alpha);

    for (double x : xs) {
        const ConjugatePoint c = data.at(x);
        const double lead = std::sqrt(c.p_star_prime) / (c.p_star * kSqrt2Pi);
        const double corr = -C / (24.0 * te.mu_star * kSqrt2Pi) / (x * x * std::sqrt(c.p_star_prime));
        const double bracket = order == Order::refined ? lead + corr : lead;
        const double x2 = x * x * c.p_star_prime;
        bool reliable = x2 >= 10.0 && c.p_star > 0.0 && x2 > C * c.p_star / (24.0 * te.mu_star);
        double log_est = -kInf;
        if (bracket > 0.0) {
            log_est = -c.lambda_star + std::log(bracket);
        } else {
            reliable = false;
        }
        bool clamped = false;
        if (log_est > 0.0) {
            log_est = 0.0;
            clamped = true;
            reliable = false;
        }
        te.x.push_back(x);
        te.lambda_star.push_back(c.lambda_star);
        te.p_star.push_back(c.p_star);
        te.p_star_prime.push_back(c.p_star_prime);
        te.leading.push_back(lead);
        te.correction.push_back(corr);
        te.log_estimate.push_back(log_est);
        te.estimate.push_back(std::exp(log_est));
        te.x2_pprime.push_back(x2);
        te.reliable.push_back(reliable);
        te.clamped.push_back(clamped);
    }
    return te;
}

WeightFunction WeightFunction::one() {
    return {[](double) { return 1.0; }, [](double) { return 0.0; }, 0.0, "one"};
}

WeightFunction WeightFunction::identity() {
    return {[](double y) { return y; }, [](double) { return 1.0; }, 1.0, "identity"};
}

WeightFunction WeightFunction::power(double r) {
    return {[r](double y) { return std::pow(y, r); }, [r](double y) { return r * std::pow(y, r - 1.0); }, r,
            "power:" + std::to_string(r)};
}

WeightFunction WeightFunction::parse(const std::string& s) {
    if (s == "one" || s == "1") return one();
    if (s == "identity" || s == "z") return identity();
    if (s.rfind("power:", 0) == 0) {
        std::size_t pos = 0;
        const std::string num = s.substr(6);
        double r = 0.0;
        try {
            r = std::stod(num, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != num.size() || num.empty()) throw std::invalid_argument("bad weight exponent in '" + s + "'");
        return power(r);
    }
    throw std::invalid_argument("weight must be one, identity or power:r, got '" + s + "'");
}

ChiKernel::ChiKernel(const LegendreData& data, double x, double window_sd) : data_(data), x_(x) {
    g_x_ = data_.gap(x);
    lam_x_ = data_.source().value_gap(g_x_);
    pprime_ = 1.0 / data_.source().d2_gap(g_x_);
    x2pp_ = x * x * pprime_;
    window_ = window_sd / std::sqrt(x2pp_);
    z_min_ = data_.x_min() / x;
}

double ChiKernel::operator()(double z) const {
    const double g = data_.gap(x_ * z);
    return (g - g_x_) * x_ * z + data_.source().value_gap(g) - lam_x_;
}

double ChiKernel::derivative(double z) const { return (data_.gap(x_ * z) - g_x_) * x_; }

double c_alpha(double alpha) {
    const double q = 1.0 + 1.0 / (alpha + 1.0);
    return -0.25 * q * (q + 1.0) + 5.0 / 12.0 * q * q;
}

LaplaceResult laplace_integral(const WeightFunction& g, const ChiKernel& kernel, Order order,
                               std::optional<double> alpha) {
    const double x = kernel.x();
    const double x2 = kernel.x2_pprime();
    const double a = resolve_alpha(kernel.data(), alpha, 1.0 / kernel.data().gap(x));

    LaplaceResult r;
    r.x2_pprime = x2;
    r.reliable = x2 >= 10.0;
    r.leading = kSqrt2Pi * g.f(x) / (x * std::sqrt(kernel.p_star_prime()));
    r.refined = r.leading * (1.0 + (g.gamma * g.gamma + g.gamma / (a + 1.0) + c_alpha(a)) / (2.0 * x2));
    r.asymptotic = order == Order::refined ? r.refined : r.leading;

    const double h = kernel.window();
    const double lo = std::max(1.0 - h, kernel.z_min() * (1.0 + 1e-12));
    const double hi = 1.0 + h;
    auto f = [&](double z) { return g.f(x * z) * std::exp(kernel(z)); };
    double err = 0.0;
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double left = GK::integrate(f, lo, 1.0, 12, 1e-10, &err);
    const double right = GK::integrate(f, 1.0, hi, 12, 1e-10, &err);
    r.quadrature = left + right;
    if (!std::isfinite(r.quadrature)) throw NumericError("Laplace quadrature produced a non-finite value");

    double tail = std::fabs(g.f(x * hi)) * std::exp(kernel(hi)) / std::fabs(kernel.derivative(hi));
    if (lo > kernel.z_min() * (1.0 + 1e-9)) {
        tail += std::fabs(g.f(x * lo)) * std::exp(kernel(lo)) / std::fabs(kernel.derivative(lo));
    }
    r.tail_estimate = tail;
    return r;
}

double tilt_ratio(const WeightFunction& g, const LegendreData& data, double x, Order order) {
    const auto& src = data.source();
    if (!(x > 1.0 / src.mu_star)) throw DomainError("tilt parameter too small: mu* - 1/x must be positive");
    const double gap = 1.0 / x;
    const double d1 = src.d1_gap(gap);
    const double d2 = src.d2_gap(gap);
    if (order == Order::leading) return g.f(d1) + g.df(d1) / (src.mu_star - gap);
    return g.f(d1) * (1.0 + (g.gamma * g.gamma - g.gamma) * d2 / (2.0 * d1 * d1));
}

}  // namespace mexp
