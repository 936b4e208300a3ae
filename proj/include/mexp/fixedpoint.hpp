#pragma once

#include "mexp/models.hpp"
#include "mexp/tauberian.hpp"

#include <functional>
#include <vector>

namespace mexp {

struct FixedPointConfig {
    double T = 1.0;
    /// Lower edge of the x-grid; 0 selects 10 (2b + mu*_T) and doubles on failure.
    double M = 0.0;
    double X_max = 1e6;
    int nx = 200;
    int uniform_panels = 20;
    int gl_order = 8;
    double tol = 1e-10;
    int max_iter = 50;
    /// Norm exponent; 0 selects max(1, beta/(1-beta)) + 0.25.
    double gamma = 0.0;
    Order order = Order::leading;
    double contraction_limit = 0.9;
    int max_doublings = 6;
};

/// Remainder R(t, x) on panel edges in time and a log-spaced x-grid.
struct RGrid {
    std::vector<double> t_nodes;
    std::vector<double> x_nodes;
    std::vector<double> xi;      ///< xi_t = e^{bt} / mu*_t^2 on t_nodes
    std::vector<double> values;  ///< row-major, values[i * nx + j] = R(t_i, x_j)
    double gamma = 1.25;

    std::size_t nt() const { return t_nodes.size(); }
    std::size_t nx() const { return x_nodes.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * x_nodes.size() + j]; }
};

struct GammaSolution {
    RGrid grid;
    double b = 0.0;
    double x0 = 0.0;
    double M = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> residual_history;
    double contraction = 0.0;
    double banach_norm = 0.0;
    std::vector<double> dx_gamma;  ///< same layout as grid.values
    std::vector<double> attempted_M;

    double gamma_value(std::size_t i, std::size_t j) const;
    /// R(T, x) by cubic interpolation in ln x on the final time row.
    double R_at(double x) const;
    /// Gamma(T, x) = (2b + x) x0 + R(T, x).
    double gamma_at(double x) const;
};

/// Tilted drift expectation from the tilted mean lambda1 = Lambda' and variance lambda2 = Lambda''.
double btilde_moments(const std::function<double(double)>& bbar, double beta, double lambda1, double lambda2,
                      Order order);

/// B~ at (t, x) given dx Gamma and dxx Gamma of the current iterate.
double btilde(const std::function<double(double)>& bbar, double beta, double b, double t, double x,
              double dx_gamma, double dxx_gamma, Order order);

/// Picard iteration for the remainder equation (sigma = 1 square-root form).
GammaSolution solve_gamma(const SdeSpec& spec, double x0, const FixedPointConfig& config);

/// sup_k sup x^{k-gamma} |d^k u / dx^k| over all rows of a grid.
double banach_norm(const RGrid& grid, int k_max);

/// int_1^tau (1 - s^{-kappa})^e ds for kappa > 0, e > -1.
double power_singular_integral(double kappa, double e, double tau);

/// omega_tau = c x0^{beta-1} (2b/sigma^2)^{1-2beta} / (b beta) int_1^tau (1 - s^{-1/beta})^{2beta-1} ds.
double power_drift_omega(double beta, double c, double b, double sigma, double x0, double tau);

/// Three-branch tail coefficient c_tau of R~(tau, y) ~ c_tau y^{2beta v beta/(1-beta)}.
double power_drift_coefficient(double beta, double c, double b, double sigma, double x0, double tau);

}  // namespace mexp
