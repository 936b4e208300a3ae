#include "mexp/fixedpoint.hpp"

#include "mexp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>

namespace mexp {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

struct GaussRule {
    std::vector<double> nodes, weights;  // on [-1, 1], ascending
    std::vector<double> integration;     // Q[q * m + l] = int_{-1}^{nodes[q]} L_l
};

GaussRule make_gauss_rule(int m) {
    GaussRule r;
    const auto zeros = boost::math::legendre_p_zeros<double>(m);
    std::vector<double> nodes;
    for (double z : zeros) {
        if (z != 0.0) nodes.push_back(-z);
        nodes.push_back(z);
    }
    std::sort(nodes.begin(), nodes.end());
    r.nodes = nodes;
    for (double z : nodes) {
        const double dp = boost::math::legendre_p_prime(m, z);
        r.weights.push_back(2.0 / ((1.0 - z * z) * dp * dp));
    }
    auto lagrange = [&](int l, double z) {
        double v = 1.0;
        for (int i = 0; i < m; ++i) {
            if (i != l) v *= (z - nodes[i]) / (nodes[l] - nodes[i]);
        }
        return v;
    };
    r.integration.assign(static_cast<std::size_t>(m * m), 0.0);
    for (int q = 0; q < m; ++q) {
        const double half = 0.5 * (nodes[q] + 1.0);
        for (int l = 0; l < m; ++l) {
            double s = 0.0;
            for (int k = 0; k < m; ++k) s += r.weights[k] * lagrange(l, -1.0 + half * (nodes[k] + 1.0));
            r.integration[q * m + l] = half * s;
        }
    }
    return r;
}

std::vector<double> graded_edges(double T, double X_max, int uniform_panels) {
    const double hu = T / uniform_panels;
    std::vector<double> e{0.0};
    double h = std::min(0.1 / X_max, hu);
    while (e.back() + h < hu) {
        e.push_back(e.back() + h);
        h *= 2.0;
    }
    for (int i = 1; i <= uniform_panels; ++i) {
        const double v = T * i / uniform_panels;
        if (v > e.back() + 1e-15 * T) e.push_back(v);
    }
    e.back() = T;
    return e;
}

/// First derivative in u, fourth order, one-sided at both ends.
void d_u(const double* R, double* d, int n, double du) {
    const double c = 1.0 / (12.0 * du);
    for (int i = 2; i < n - 2; ++i) d[i] = (-R[i + 2] + 8 * R[i + 1] - 8 * R[i - 1] + R[i - 2]) * c;
    d[0] = (-25 * R[0] + 48 * R[1] - 36 * R[2] + 16 * R[3] - 3 * R[4]) * c;
    d[1] = (-3 * R[0] - 10 * R[1] + 18 * R[2] - 6 * R[3] + R[4]) * c;
    d[n - 1] = (25 * R[n - 1] - 48 * R[n - 2] + 36 * R[n - 3] - 16 * R[n - 4] + 3 * R[n - 5]) * c;
    d[n - 2] = (3 * R[n - 1] + 10 * R[n - 2] - 18 * R[n - 3] + 6 * R[n - 4] - R[n - 5]) * c;
}

/// Second derivative in u, fourth order, one-sided at both ends.
void d_uu(const double* R, double* d, int n, double du) {
    const double c = 1.0 / (12.0 * du * du);
    for (int i = 2; i < n - 2; ++i) d[i] = (-R[i + 2] + 16 * R[i + 1] - 30 * R[i] + 16 * R[i - 1] - R[i - 2]) * c;
    d[0] = (45 * R[0] - 154 * R[1] + 214 * R[2] - 156 * R[3] + 61 * R[4] - 10 * R[5]) * c;
    d[1] = (10 * R[0] - 15 * R[1] - 4 * R[2] + 14 * R[3] - 6 * R[4] + R[5]) * c;
    d[n - 1] = (45 * R[n - 1] - 154 * R[n - 2] + 214 * R[n - 3] - 156 * R[n - 4] + 61 * R[n - 5] - 10 * R[n - 6]) * c;
    d[n - 2] = (10 * R[n - 1] - 15 * R[n - 2] - 4 * R[n - 3] + 14 * R[n - 4] - 6 * R[n - 5] + R[n - 6]) * c;
}

double estimate_contraction(const std::vector<double>& res) {
    constexpr double floor = 1e-13;
    std::vector<double> ratios;
    for (std::size_t n = 1; n < res.size(); ++n) {
        if (res[n - 1] > floor) ratios.push_back(res[n] / res[n - 1]);
    }
    if (ratios.empty()) return 0.0;
    const std::size_t take = std::min<std::size_t>(3, ratios.size());
    double lg = 0.0;
    for (std::size_t i = ratios.size() - take; i < ratios.size(); ++i) {
        if (ratios[i] <= 0.0) return 0.0;
        lg += std::log(ratios[i]);
    }
    return std::exp(lg / static_cast<double>(take));
}

GammaSolution solve_fixed_M(const SdeSpec& spec, double x0, const FixedPointConfig& cfg, double M, double gamma) {
    const double b = spec.b_limit;
    const int nx = cfg.nx;
    const int m = cfg.gl_order;
    if (nx < 10) throw DomainError("x-grid needs at least 10 points");
    if (!(cfg.X_max > M)) throw DomainError("X_max must exceed M");

    const GaussRule rule = make_gauss_rule(m);
    const std::vector<double> edges = graded_edges(cfg.T, cfg.X_max, cfg.uniform_panels);
    const int P = static_cast<int>(edges.size()) - 1;

    const double u0 = std::log(M), u1 = std::log(cfg.X_max);
    const double du = (u1 - u0) / (nx - 1);
    std::vector<double> x(nx);
    for (int j = 0; j < nx; ++j) x[j] = std::exp(u0 + j * du);

    const std::size_t rows = static_cast<std::size_t>(P) * m;
    std::vector<double> es(rows), im(rows), half(P);
    std::vector<double> fac(rows * nx), pre(rows * nx);
    for (int k = 0; k < P; ++k) {
        half[k] = 0.5 * (edges[k + 1] - edges[k]);
        for (int q = 0; q < m; ++q) {
            const std::size_t r = static_cast<std::size_t>(k) * m + q;
            const double s = edges[k] + half[k] * (rule.nodes[q] + 1.0);
            es[r] = std::exp(b * s);
            im[r] = inverse_critical_moment(b, 1.0, s);
            for (int j = 0; j < nx; ++j) {
                const double w = 1.0 + x[j] * im[r];
                fac[r * nx + j] = (x[j] + 2.0 * b) / w;
                pre[r * nx + j] = es[r] * w * w;
            }
        }
    }

    const bool refined = cfg.order == Order::refined;
    const double beta = spec.beta;
    std::vector<double> R(rows * nx, 0.0), Rn(rows * nx), F(rows * nx), dR(rows * nx), ddR;
    std::vector<double> E(static_cast<std::size_t>(P + 1) * nx, 0.0), En(E.size());
    if (refined) ddR.assign(rows * nx, 0.0);

    GammaSolution sol;
    sol.b = b;
    sol.x0 = x0;
    sol.M = M;
    for (int it = 0; it < cfg.max_iter; ++it) {
        for (std::size_t r = 0; r < rows; ++r) {
            d_u(&R[r * nx], &dR[r * nx], nx, du);
            if (refined) d_uu(&R[r * nx], &ddR[r * nx], nx, du);
            for (int j = 0; j < nx; ++j) {
                const std::size_t idx = r * nx + j;
                const double dx = dR[idx] / x[j];
                const double gx = x0 + dx;
                const double arg = pre[idx] * gx;
                if (!(arg > 0.0)) {
                    throw DomainError("nonpositive drift argument at x = " + fmt(x[j]) + "; increase M");
                }
                double bt = spec.bbar(arg);
                if (refined) {
                    const double dxx = (ddR[idx] - dR[idx]) / (x[j] * x[j]);
                    const double w = 1.0 + x[j] * im[r];
                    const double l2_over = (2.0 * es[r] * im[r] * w * gx + pre[idx] * dxx) / (2.0 * arg * gx);
                    bt *= 1.0 + (beta * beta - beta) * l2_over;
                }
                F[idx] = fac[idx] * bt;
            }
        }
        std::fill(En.begin(), En.begin() + nx, 0.0);
        for (int k = 0; k < P; ++k) {
            const double* Ek = &En[static_cast<std::size_t>(k) * nx];
            double* Ek1 = &En[static_cast<std::size_t>(k + 1) * nx];
            for (int j = 0; j < nx; ++j) Ek1[j] = Ek[j];
            for (int q = 0; q < m; ++q) {
                double* out = &Rn[(static_cast<std::size_t>(k) * m + q) * nx];
                for (int j = 0; j < nx; ++j) out[j] = Ek[j];
                for (int l = 0; l < m; ++l) {
                    const double c = half[k] * rule.integration[q * m + l];
                    const double* f = &F[(static_cast<std::size_t>(k) * m + l) * nx];
                    for (int j = 0; j < nx; ++j) out[j] += c * f[j];
                }
            }
            for (int l = 0; l < m; ++l) {
                const double c = half[k] * rule.weights[l];
                const double* f = &F[(static_cast<std::size_t>(k) * m + l) * nx];
                for (int j = 0; j < nx; ++j) Ek1[j] += c * f[j];
            }
        }
        double res = 0.0;
        for (std::size_t i = 0; i < Rn.size(); ++i) {
            res = std::max(res, std::fabs(Rn[i] - R[i]) / std::max(1.0, std::fabs(Rn[i])));
        }
        for (std::size_t i = 0; i < En.size(); ++i) {
            res = std::max(res, std::fabs(En[i] - E[i]) / std::max(1.0, std::fabs(En[i])));
        }
        if (!std::isfinite(res)) throw NumericError("fixed-point iterate became non-finite");
        R.swap(Rn);
        E.swap(En);
        sol.residual_history.push_back(res);
        sol.iterations = it + 1;
        if (res < cfg.tol) {
            sol.converged = true;
            break;
        }
    }
    sol.contraction = estimate_contraction(sol.residual_history);

    RGrid& g = sol.grid;
    g.t_nodes = edges;
    g.x_nodes = x;
    g.gamma = gamma;
    g.values = E;
    for (double t : edges) {
        g.xi.push_back(t > 0.0 ? std::exp(b * t) * std::pow(inverse_critical_moment(b, 1.0, t), 2) : 0.0);
    }
    sol.dx_gamma.assign(E.size(), 0.0);
    std::vector<double> tmp(nx);
    for (int i = 0; i <= P; ++i) {
        d_u(&E[static_cast<std::size_t>(i) * nx], tmp.data(), nx, du);
        for (int j = 0; j < nx; ++j) sol.dx_gamma[static_cast<std::size_t>(i) * nx + j] = x0 + tmp[j] / x[j];
    }
    sol.banach_norm = banach_norm(g, 2);
    return sol;
}

}  // namespace

double GammaSolution::gamma_value(std::size_t i, std::size_t j) const {
    return (2.0 * b + grid.x_nodes[j]) * x0 + grid.at(i, j);
}

double GammaSolution::R_at(double x) const {
    const std::size_t nx = grid.nx();
    const double u0 = std::log(grid.x_nodes.front());
    const double u1 = std::log(grid.x_nodes.back());
    const double u = std::log(x);
    if (u < u0 - 1e-12 || u > u1 + 1e-12) {
        throw RangeError("x outside the solved grid", grid.x_nodes.front(), grid.x_nodes.back());
    }
    const double du = (u1 - u0) / static_cast<double>(nx - 1);
    const double* row = &grid.values[(grid.nt() - 1) * nx];
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline(row, nx, u0, du);
    return spline(std::clamp(u, u0, u1));
}

double GammaSolution::gamma_at(double x) const { return (2.0 * b + x) * x0 + R_at(x); }

double btilde_moments(const std::function<double(double)>& bbar, double beta, double lambda1, double lambda2,
                      Order order) {
    if (!(lambda1 > 0.0)) throw DomainError("nonpositive drift argument; increase M");
    const double v = bbar(lambda1);
    if (order == Order::leading) return v;
    return v * (1.0 + (beta * beta - beta) * lambda2 / (2.0 * lambda1 * lambda1));
}

double btilde(const std::function<double(double)>& bbar, double beta, double b, double t, double x,
              double dx_gamma, double dxx_gamma, Order order) {
    const double es = std::exp(b * t);
    const double im = inverse_critical_moment(b, 1.0, t);
    const double w = 1.0 + x * im;
    const double pre = es * w * w;
    const double l1 = pre * dx_gamma;
    const double l2 = pre * (2.0 * es * im * w * dx_gamma + pre * dxx_gamma);
    return btilde_moments(bbar, beta, l1, l2, order);
}

GammaSolution solve_gamma(const SdeSpec& spec, double x0, const FixedPointConfig& config) {
    if (!(x0 > 0.0)) throw DomainError("x0 must be > 0");
    if (!(config.T > 0.0)) throw DomainError("T must be > 0");
    const double beta = spec.beta;
    const double gamma =
        config.gamma > 0.0 ? config.gamma : std::max(1.0, beta < 1.0 ? beta / (1.0 - beta) : 1.0) + 0.25;
    if (config.M > 0.0) {
        GammaSolution s = solve_fixed_M(spec, x0, config, config.M, gamma);
        s.attempted_M.push_back(config.M);
        if (!s.converged) {
            std::ostringstream os;
            os << "fixed-point iteration did not converge in " << config.max_iter << " iterations; residuals:";
            for (double r : s.residual_history) os << ' ' << r;
            throw NumericError(os.str());
        }
        return s;
    }
    double M = 10.0 * (2.0 * spec.b_limit + critical_moment(spec.b_limit, 1.0, config.T));
    std::vector<double> tried;
    GammaSolution last;
    for (int d = 0; d <= config.max_doublings; ++d) {
        if (!(M * 100.0 < config.X_max)) break;
        tried.push_back(M);
        last = solve_fixed_M(spec, x0, config, M, gamma);
        if (last.converged && last.contraction <= config.contraction_limit && last.banach_norm <= 1.0) {
            last.attempted_M = tried;
            return last;
        }
        M *= 2.0;
    }
    std::ostringstream os;
    os << "no admissible M found (last contraction " << last.contraction << ", norm " << last.banach_norm
       << "); increase X_max or M. Residuals:";
    for (double r : last.residual_history) os << ' ' << r;
    throw NumericError(os.str());
}

double banach_norm(const RGrid& grid, int k_max) {
    if (k_max < 0 || k_max > 3) throw DomainError("derivative depth must be in [0, 3]");
    const int nx = static_cast<int>(grid.nx());
    if (nx < 10) throw NumericError("grid too coarse for the requested derivative depth");
    const double u0 = std::log(grid.x_nodes.front());
    const double du = (std::log(grid.x_nodes.back()) - u0) / (nx - 1);
    std::vector<double> d1(nx), d2(nx), d3(nx);
    double norm = 0.0;
    for (std::size_t i = 0; i < grid.nt(); ++i) {
        const double* row = &grid.values[i * nx];
        d_u(row, d1.data(), nx, du);
        d_uu(row, d2.data(), nx, du);
        if (k_max >= 3) d_uu(d1.data(), d3.data(), nx, du);
        const int lo = k_max >= 3 ? 3 : 0;
        const int hi = k_max >= 3 ? nx - 3 : nx;
        for (int j = lo; j < hi; ++j) {
            const double x = grid.x_nodes[j];
            const double xg = std::pow(x, -grid.gamma);
            norm = std::max(norm, xg * std::fabs(row[j]));
            if (k_max >= 1) norm = std::max(norm, xg * std::fabs(d1[j]));
            if (k_max >= 2) norm = std::max(norm, xg * std::fabs(d2[j] - d1[j]));
            if (k_max >= 3) norm = std::max(norm, xg * std::fabs(d3[j] - 3.0 * d2[j] + 2.0 * d1[j]));
        }
    }
    return norm;
}

double power_singular_integral(double kappa, double e, double tau) {
    if (!(kappa > 0.0) || !(e > -1.0)) throw DomainError("power_singular_integral needs kappa > 0 and e > -1");
    if (!(tau >= 1.0)) throw DomainError("tau must be >= 1");
    if (tau == 1.0) return 0.0;
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    // Near s = 1: s = (1-u)^{-1/kappa}, v = u^{e+1} removes the endpoint singularity; used while u <= 1/2.
    const double u_tau = -std::expm1(-kappa * std::log(tau));
    const double u_c = std::min(0.5, u_tau);
    auto near = [kappa, e](double v) {
        return std::pow(1.0 - std::pow(v, 1.0 / (e + 1.0)), -1.0 / kappa - 1.0) / (kappa * (e + 1.0));
    };
    double err = 0.0;
    double I = GK::integrate(near, 0.0, std::pow(u_c, e + 1.0), 15, 1e-12, &err);
    if (u_tau > u_c) {
        // Smooth remainder in w = ln s.
        auto far = [kappa, e](double w) { return std::pow(-std::expm1(-kappa * w), e) * std::exp(w); };
        I += GK::integrate(far, std::log(2.0) / kappa, std::log(tau), 15, 1e-12, &err);
    }
    return I;
}

double power_drift_omega(double beta, double c, double b, double sigma, double x0, double tau) {
    if (!(beta > 0.0 && beta < 1.0)) throw DomainError("beta must lie in (0, 1)");
    if (!(tau >= 1.0)) throw DomainError("tau must be >= 1");
    if (!(b > 0.0)) throw DomainError("b must be > 0");
    if (tau == 1.0 || c == 0.0) return 0.0;
    const double I = power_singular_integral(1.0 / beta, 2.0 * beta - 1.0, tau);
    const double s2 = sigma * sigma;
    return c * std::pow(x0, beta - 1.0) * std::pow(2.0 * b / s2, 1.0 - 2.0 * beta) / (b * beta) * I;
}

double power_drift_coefficient(double beta, double c, double b, double sigma, double x0, double tau) {
    if (beta == 1.0) throw DomainError("beta = 1 is not admissible");
    const double w = power_drift_omega(beta, c, b, sigma, x0, tau);
    if (w == 0.0) return 0.0;
    if (beta < 0.5) return w;
    if (beta == 0.5) return (1.0 + 0.5 * w) * (1.0 + 0.5 * w) - 1.0;
    const double g = beta / (1.0 - beta);
    return std::pow(std::pow(g, beta) * (1.0 - beta), 1.0 / (1.0 - beta)) * std::pow(w, 1.0 / (1.0 - beta));
}

}  // namespace mexp
