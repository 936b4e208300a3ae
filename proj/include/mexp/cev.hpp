#pragma once

#include "mexp/legendre.hpp"
#include "mexp/models.hpp"
#include "mexp/tauberian.hpp"

#include <cmath>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

namespace mexp {

/// Mean-reverting CEV process dV = (a - bV)dt + sigma V^p dW.
struct CevParams {
    double a = 0.3;
    double b = 1.0;
    double sigma = 0.5;
    double v0 = 0.5;
    double p = 0.75;

    void validate() const;
    /// lambda = 2(1 - p); V^lambda has an exploding MGF.
    double lambda() const { return 2.0 * (1.0 - p); }
    /// Critical moment of V_t^lambda.
    double mu_star(double t) const;
    /// Y = V^lambda / (sigma lambda)^2 is a sigma = 1 square-root process.
    double y_scale() const;
    double y0() const { return std::pow(v0, lambda()) / y_scale(); }
};

struct NuSeries {
    double lambda = 1.0;
    std::vector<double> nu;              ///< nu[0] = nu_1
    std::vector<double> c_k;             ///< c_k[0] = C_1
    std::vector<double> nu_over_factor;  ///< nu_i / (1 - i (2-lambda)/lambda), finite at removable zeros
};

NuSeries nu_coefficients(double lambda, int n);

using Rational = boost::rational<boost::multiprecision::cpp_int>;

/// Exact rational recursion for lambda = num/den by explicit enumeration of compositions (n <= 10).
std::vector<Rational> nu_coefficients_exact(long num, long den, int n);

/// omega(tau) for lambda in (1, 2); a = 0 or tau = 1 give 0.
double omega(const CevParams& params, double tau);

struct DeltaHat {
    double value = 0.0;
    int kept_terms = 0;
    int first_omitted_index = 1;
    double first_omitted_magnitude = 0.0;
    /// x > omega^{lambda/(2-lambda)}; NaN when omega is undefined (lambda < 1).
    double validity_threshold = 0.0;
    /// Exponent e in the error order O(x^{-e}).
    double error_order = 0.0;
};

/// Three explicit terms plus the omega-series; deep = true keeps terms with nonpositive exponent.
DeltaHat cev_log_mgf_asym(const CevParams& params, double t, double x, int n_terms = 30, bool deep = false);

/// Lambda-hat(p) = Delta-hat(t, 1/(mu* - p)) as a LogMgf in the gap variable.
LogMgf cev_log_mgf_hat(const CevParams& params, double t, int n_terms = 30);

struct CevTail {
    TailExpansion expansion;
    std::vector<double> v_level;    ///< x^{1/lambda}
    std::vector<double> delta_hat;  ///< Lambda-hat at the conjugate tilt of each x
    double validity_threshold = 0.0;
};

/// P(V_t^lambda >= x) from the conjugate of Lambda-hat.
CevTail cev_ccdf(const CevParams& params, double t, const std::vector<double>& xs, Order order, int n_terms = 30);

/// Square-root form in Y = V^lambda/(sigma lambda)^2: rate b lambda and the matching perturbation.
SdeSpec cev_square_root_spec(const CevParams& params);

/// Fixed-point grid coordinate x for the CEV tilt level x' (mu = mu*_V - 1/x').
double cev_fixed_point_coordinate(const CevParams& params, double t, double x_prime);

}  // namespace mexp
