#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mexp {

/// Cox-Ingersoll-Ross process dX = (a - bX)dt + sigma sqrt(X) dW, observed at t.
struct CirParams {
    double a = 0.0;
    double b = 0.0;
    double sigma = 1.0;
    double x0 = 1.0;
    double t = 1.0;

    void validate() const;
    double mu_star() const;
};

/// mu*_t = 2b / (sigma^2 (1 - e^{-bt})), with the series limit near b t = 0.
double critical_moment(double b, double sigma, double t);

/// 1 / mu*_t computed without cancellation: -expm1(-bt) sigma^2 / (2b).
double inverse_critical_moment(double b, double sigma, double t);

/// Log-MGF in the gap variable g = mu* - mu > 0.
///
/// Lambda(g) = x0 e^{-bt} mu* (mu* - g) / g + (2a / sigma^2) ln(mu* / g).
/// d1 and d2 are derivatives with respect to mu (not g).
class CirLogMgf {
public:
    explicit CirLogMgf(const CirParams& p);

    double mu_star() const { return mu_star_; }
    double value_gap(double g) const;
    double d1_gap(double g) const;
    double d2_gap(double g) const;

    /// Coefficient k in Lambda'(g) = k / g^2 + A / g.
    double k() const { return k_; }
    /// Coefficient A = 2a / sigma^2.
    double A() const { return A_; }

private:
    CirParams p_;
    double mu_star_, k_, A_, decay_;
};

/// ln E exp(mu X_t). Throws ExplosionError for mu >= mu*.
double cir_log_mgf(const CirParams& p, double mu);
/// Same, parametrized by the gap g = mu* - mu.
double cir_log_mgf_gap(const CirParams& p, double gap);

/// P(X_t >= x) from the noncentral chi-squared series.
double cir_exact_ccdf(const CirParams& p, double x);
/// ln P(X_t >= x); finite deep in the tail where the probability underflows.
double cir_exact_log_ccdf(const CirParams& p, double x);
/// E X_t.
double cir_mean(const CirParams& p);

/// Square-root form of a general diffusion: Y = Sigma(X) has diffusion sqrt(Y).
struct SigmaTransform {
    std::function<double(double)> sigma_fn;
    std::function<double(double)> Sigma;
    std::function<double(double)> Sigma_inv;
    std::function<double(double)> Sigma_prime;
    std::function<double(double)> transformed_drift;
};

/// Generic path: quadrature for Sigma, root finding for its inverse and
/// finite differences of sigma for the second derivative.
SigmaTransform sigma_transform(std::function<double(double)> sigma_fn,
                               std::function<double(double)> drift_fn);

/// Analytic path for sigma(x) = s x^p, p < 1.
SigmaTransform sigma_transform_power(double s, double p, std::function<double(double)> drift_fn);

enum class MonotoneClass { increasing, decreasing };

/// One-dimensional square-root SDE with drift B = -b y + Bbar(y).
struct SdeSpec {
    std::function<double(double)> drift;
    std::function<double(double)> diffusion;
    /// Bbar(y) = B(y) + b y; kept separately to avoid cancellation at large y.
    std::function<double(double)> perturbation;
    double beta = 0.0;
    double M = 1.0;
    MonotoneClass monotone_class = MonotoneClass::decreasing;
    double b_limit = 1.0;

    double bbar(double y) const;

    static SdeSpec affine(double a, double b);
    /// B(y) = -b y + c y^beta.
    static SdeSpec power_perturbed(double b, double c, double beta, double M = 1.0);
};

struct DriftReport {
    bool bounded_near_zero = false;
    double sup_abs_near_zero = 0.0;
    MonotoneClass detected_class = MonotoneClass::decreasing;
    bool monotone = false;
    double fitted_b = 0.0;
    double fitted_beta = 0.0;
    bool beta_mismatch_warning = false;
    bool condition_iii = false;
    bool pass = false;
    std::vector<std::string> messages;
};

/// Numerical check of the drift regularity assumptions on a sample grid.
DriftReport validate_drift(const SdeSpec& spec, const std::vector<double>& grid);

/// Model description shared by all front-end commands.
struct ModelSpec {
    std::string type = "cir";
    double a = 0.4, b = 1.0, sigma = 1.0, p = 0.5, x0 = 0.5, t = 1.0;
    double beta = 0.0, M = 1.0, c = 0.0;

    CirParams cir() const { return CirParams{a, b, sigma, x0, t}; }
};

}  // namespace mexp
