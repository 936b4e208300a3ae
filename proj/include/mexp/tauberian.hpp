#pragma once

#include "mexp/legendre.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mexp {

enum class Order { leading, refined };

Order parse_order(const std::string& s);
std::string to_string(Order o);

/// CCDF asymptotics P(X >= x) ~ exp(-Lambda*(x)) (leading + correction).
struct TailExpansion {
    Order order = Order::leading;
    double alpha = 1.0;
    double mu_star = 0.0;
    std::vector<double> x;
    std::vector<double> lambda_star;
    std::vector<double> p_star;
    std::vector<double> p_star_prime;
    std::vector<double> leading;
    std::vector<double> correction;
    /// ln of the estimate; -inf when the bracket is nonpositive.
    std::vector<double> log_estimate;
    std::vector<double> estimate;
    std::vector<double> x2_pprime;
    std::vector<bool> reliable;
    std::vector<bool> clamped;
};

/// (2 + alpha/(alpha+1)^2), the numerator of the second-order CCDF term.
double tail_correction_constant(double alpha);

/// alpha is taken from the source when known, else fitted over the top two decades.
TailExpansion ccdf_expansion(const LegendreData& data, const std::vector<double>& xs, Order order,
                             std::optional<double> alpha = std::nullopt);

/// Smooth weight g with regular-variation index gamma (x g'(x)/g(x) -> gamma).
struct WeightFunction {
    std::function<double(double)> f;
    std::function<double(double)> df;
    double gamma = 0.0;
    std::string name;

    static WeightFunction one();
    static WeightFunction identity();
    static WeightFunction power(double r);
    /// "one", "identity" or "power:r".
    static WeightFunction parse(const std::string& s);
};

/// chi_x(z) = (p*(x) - p*(xz)) x z + Lambda(p*(xz)) - Lambda(p*(x)).
class ChiKernel {
public:
    ChiKernel(const LegendreData& data, double x, double window_sd = 8.0);

    double operator()(double z) const;
    /// d chi_x / dz = (p*(x) - p*(xz)) x.
    double derivative(double z) const;
    double x() const { return x_; }
    double x2_pprime() const { return x2pp_; }
    double p_star_prime() const { return pprime_; }
    /// Half-width of the quadrature window around z = 1.
    double window() const { return window_; }
    double z_min() const { return z_min_; }
    const LegendreData& data() const { return data_; }

private:
    LegendreData data_;
    double x_, g_x_, lam_x_, pprime_, x2pp_, window_, z_min_;
};

/// c_alpha = -q(q+1)/4 + 5q^2/12 with q = 1 + 1/(alpha+1).
double c_alpha(double alpha);

struct LaplaceResult {
    double leading = 0.0;
    double refined = 0.0;
    double asymptotic = 0.0;  ///< value at the requested order
    double quadrature = 0.0;
    double tail_estimate = 0.0;
    double x2_pprime = 0.0;
    bool reliable = false;
};

/// Asymptotic and quadrature values of the integral of g(xz) exp(chi_x(z)) dz.
LaplaceResult laplace_integral(const WeightFunction& g, const ChiKernel& kernel, Order order,
                               std::optional<double> alpha = std::nullopt);

/// E(g(X) e^{pX}) / E(e^{pX}) at p = mu* - 1/x.
double tilt_ratio(const WeightFunction& g, const LegendreData& data, double x, Order order);

}  // namespace mexp
