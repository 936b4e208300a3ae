#pragma once

#include "mexp/cev.hpp"
#include "mexp/models.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mexp {

enum class Scheme { euler_full_truncation, euler_reflection };

Scheme parse_scheme(const std::string& s);
std::string to_string(Scheme s);

struct SimConfig {
    std::size_t n_paths = 100000;
    int n_steps = 1000;
    double horizon = 1.0;
    std::uint64_t seed = 20240611;
    Scheme scheme = Scheme::euler_full_truncation;
    /// 0 reads MEXP_THREADS, falling back to the hardware concurrency.
    int threads = 0;

    void validate() const;
};

/// Terminal values of the surviving paths, in path order.
struct SimResult {
    std::vector<double> samples;
    std::size_t requested = 0;
    std::size_t flagged = 0;
};

/// SplitMix64 finalizer of (seed, path); seeds the per-path engine.
std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path);

/// Worker count from MEXP_THREADS or the hardware.
int default_threads();

/// Sum with pairwise reduction; the result does not depend on the thread schedule.
double pairwise_sum(const double* v, std::size_t n);

/// Paths of dX = drift(X)dt + diffusion(X)dW from x0 up to config.horizon.
SimResult simulate(const SdeSpec& spec, double x0, const SimConfig& config);
/// CIR paths up to config.horizon (params.t is ignored).
SimResult simulate(const CirParams& params, const SimConfig& config);
/// CEV paths of V up to config.horizon.
SimResult simulate(const CevParams& params, const SimConfig& config);

/// One diffusion driven by the shared noise of a coupled simulation.
struct CoupledProcess {
    std::function<double(double)> drift;
    std::function<double(double)> diffusion;
    double x0 = 1.0;
};

/// All processes use identical Brownian increments on each path; a path flagged in any
/// process is dropped from every output so that the samples stay aligned.
std::vector<SimResult> simulate_coupled(const std::vector<CoupledProcess>& processes, const SimConfig& config);

struct MgfEstimate {
    double value = 0.0;
    double std_error = 0.0;
    /// (sum w)^2 / sum w^2 for the weights w = e^{mu s}.
    double effective_sample_size = 0.0;
    /// Set when the effective sample size is below 1% of the sample count.
    bool unstable = false;
};

/// ln of the sample mean of e^{mu s} with a delta-method standard error.
MgfEstimate empirical_log_mgf(const std::vector<double>& samples, double mu);

struct CcdfEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
    std::size_t n = 0;
};

/// Proportion of samples >= x with a Wilson interval at the given z.
CcdfEstimate empirical_ccdf(const std::vector<double>& samples, double x, double z = 1.96);

/// Target diffusion squeezed between two CIR processes for a tilt level x.
struct SqueezeSpec {
    SdeSpec target;
    double x0 = 1.0;
    double t = 1.0;
    double x = 0.0;
    double Z = 0.0;
    double m = 0.0;
    double c = 0.0;
    CirParams lower_cir;
    CirParams upper_cir;
    MonotoneClass monotone_class = MonotoneClass::decreasing;
};

/// Z = (x ln x)^{1/(1-beta)}; m and c by maximization over a construction grid.
SqueezeSpec build_squeeze(const SdeSpec& target, double x0, double t, double x);

struct SqueezePoint {
    double x = 0.0;
    CcdfEstimate lower, target, upper;
    double lower_exact = 0.0;  ///< NaN when the bounding CIR has a < 0
    double upper_exact = 0.0;
    bool ordered = false;
};

struct SqueezeReport {
    std::vector<SqueezePoint> points;
    std::size_t pathwise_violations = 0;
    std::size_t paths = 0;
    bool ordering_holds = false;
    double worst_x = 0.0;
    double worst_excess = 0.0;  ///< largest ordering violation in units of stderr

    double mu = 0.0;
    double lower_log_mgf = 0.0;
    double upper_log_mgf = 0.0;
    double target_log_mgf = 0.0;
    bool target_from_model = false;
    MgfEstimate empirical;
    double omega1 = 0.0;
    double omega2 = 0.0;
    bool sandwich_holds = false;
    bool pass = false;
};

/// Coupled simulation of the target and both bounds. x_grid empty means the target deciles.
/// target_log_mgf (mu -> ln E e^{mu X_t}) replaces the empirical estimate in the sandwich when given.
SqueezeReport squeeze_check(const SqueezeSpec& spec, const SimConfig& config, const std::vector<double>& x_grid,
                            const std::function<double(double)>& target_log_mgf = {});

}  // namespace mexp
