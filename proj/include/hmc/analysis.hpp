#pragma once

#include "hmc/hmc_chain.hpp"
#include "hmc/potentials.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace hmc
{

/// Batches used for batch-means standard errors.
inline constexpr int kDefaultBatches = 32;

/// Lag-1 autocorrelation of a scalar series with a batch-means standard error.
struct AutocorrEstimate
{
    double lag1 = 0;
    double std_err = 0;
    std::int64_t n_samples = 0;
    std::int64_t burn_in = 0;
    int batches = 0;

    /// 1 / (1 - lag1).
    double relaxation() const { return 1.0 / (1.0 - lag1); }
    /// Delta-method standard error of relaxation().
    double relaxation_std_err() const { return std_err / ((1.0 - lag1) * (1.0 - lag1)); }
};

/// Sample lag-1 autocorrelation about the global mean after dropping
/// `burn_in` values. The standard error treats the estimator as a ratio of
/// means and applies batch means to its linearization. Needs >= 1000
/// post-burn-in samples and batches >= 20.
AutocorrEstimate lag1_autocorrelation(std::span<double const> samples,
                                      std::size_t burn_in,
                                      int batches = kDefaultBatches);

/// Spectral quantities of ideal HMC on diag(mu, L) with T = 1/(c sqrt(L)).
struct GaussianGap
{
    double gap_slow = 0;          ///< 1 - |cos(T sqrt(mu))|
    double gap_fast = 0;          ///< 1 - |cos(T sqrt(L))|
    double relaxation_lower = 0;  ///< 2 c^2 L / mu
};

GaussianGap gaussian_chain_exact_gap(double mu, double lipschitz, double c);

/// Exact k-step transition of ideal HMC on a quadratic, per eigenmode of A:
/// given x, the k-step position is b + coefficient * (x - b) + noise with
/// per-mode variance `variance`.
struct GaussianKernel
{
    Vector coefficient;
    Vector variance;
};

GaussianKernel exact_gaussian_hmc_kernel(Potential const& p, double step_size, std::int64_t steps);

/// Draw from the kernel starting at x. Consumes d normals in eigenmode order.
Vector sample_gaussian_kernel(Potential const& p,
                              GaussianKernel const& kernel,
                              Vector const& x,
                              RandomStream& stream);

/// Draw from the target N(b, A^{-1}) of a quadratic potential.
Vector sample_quadratic_target(Potential const& p, RandomStream& stream);

/// Worst squared distance ratios of synchronously coupled flows.
struct ContractionReport
{
    std::vector<double> t_grid;
    std::vector<double> worst_ratio;
    std::vector<double> bound;  ///< 1 - (mu/4) t^2
    std::int64_t pairs_tested = 0;
    double tolerance = 1e-6;

    double max_excess() const;
    bool passed() const { return max_excess() <= tolerance; }
};

/// Two-sided extremes of the same ratios against [1/2, 2].
struct CrudeBoundReport
{
    std::vector<double> t_grid;
    std::vector<double> min_ratio;
    std::vector<double> max_ratio;
    std::int64_t pairs_tested = 0;
    double tolerance = 1e-6;

    double lower_violation() const;  ///< max(0, 1/2 - min ratio)
    double upper_violation() const;  ///< max(0, max ratio - 2)
    bool passed() const { return lower_violation() <= tolerance && upper_violation() <= tolerance; }
};

struct CouplingSweepOptions
{
    unsigned threads = 1;
    double rel_tol = kCouplingRelativeTolerance;
    double tolerance = 1e-6;
};

/// Uniform grid of `points` times on [0, 1/(2 sqrt(L))].
std::vector<double> contraction_grid(Potential const& p, std::size_t points = 64);

/// Pair i draws x0 = x* + z/sqrt(mu), y0 = x* + z'/sqrt(mu), v0 ~ N(0, I) from
/// stream (seed, i). Both reports come from the same coupled trajectories.
struct CouplingSweep
{
    ContractionReport contraction;
    CrudeBoundReport crude;
};

CouplingSweep coupling_sweep(Potential const& p,
                             std::size_t pairs,
                             std::vector<double> const& t_grid,
                             std::uint64_t seed,
                             CouplingSweepOptions const& options = {});

ContractionReport contraction_sweep(Potential const& p,
                                    std::size_t pairs,
                                    std::vector<double> const& t_grid,
                                    std::uint64_t seed,
                                    CouplingSweepOptions const& options = {});

/// Crude bound on the 64-point grid of [0, 1/(2 sqrt(L))].
CrudeBoundReport crude_bound_sweep(Potential const& p,
                                   std::size_t pairs,
                                   std::uint64_t seed,
                                   CouplingSweepOptions const& options = {});

/// Closed-form 2-Wasserstein distance between two Gaussians.
double gaussian_w2(Vector const& mean1, Matrix const& cov1, Vector const& mean2, Matrix const& cov2);

/// Symmetric PSD square root with eigenvalues clamped at 0. Throws
/// InputError for eigenvalues below -1e-8.
Matrix psd_sqrt(Matrix const& m);

struct W2Report
{
    Vector empirical_mean;
    Matrix empirical_cov;
    double w2 = 0;
    double target_bound = 0;  ///< eps / sqrt(mu)
    std::int64_t replicas = 0;
    std::int64_t steps = 0;
    double c_n = 0;
    SolverKind solver = SolverKind::exact;

    bool passed() const { return w2 <= target_bound; }
};

struct W2Options
{
    double c_n = 2.0;
    /// exact: ideal HMC at the discretized schedule's T, endpoint drawn from
    /// the exact N-step kernel. adaptive/collocation: chains are stepped.
    SolverKind solver = SolverKind::exact;
    /// Replaces the scheduled N when positive.
    std::int64_t steps_override = 0;
    unsigned threads = 1;
};

/// Fewer replicas leave the empirical covariance too noisy for the bound.
inline constexpr std::int64_t kMinW2Replicas = 10000;

/// Empirical moments of x^(N) over `replicas` chains (chain i uses stream
/// (seed, i)) compared with the target N(b, A^{-1}).
W2Report w2_convergence_experiment(std::shared_ptr<Potential const> p,
                                   double epsilon,
                                   std::int64_t replicas,
                                   std::uint64_t seed,
                                   W2Options const& options = {});

/// Runs with options.c_n; if the bound fails, reruns once with 2 c_n.
/// Returns every attempt in order.
std::vector<W2Report> w2_with_fallback(std::shared_ptr<Potential const> p,
                                       double epsilon,
                                       std::int64_t replicas,
                                       std::uint64_t seed,
                                       W2Options const& options = {});

struct GradientStats
{
    double mean_per_step = 0;
    double mean_grad_norm_sq = 0;
};

GradientStats amortized_gradient_stats(GradientLedger const& ledger);

/// Pools several ledgers (per-step mean over all steps of all chains).
GradientStats amortized_gradient_stats(std::span<GradientLedger const> ledgers);

struct LogLogFit
{
    double slope = 0;
    double intercept = 0;
    double rms_residual = 0;
};

/// Least-squares fit of log y against log x; needs >= 3 points.
LogLogFit fit_log_log(std::span<double const> x, std::span<double const> y);

struct ScalingReport
{
    std::vector<double> kappas;
    std::vector<double> measurements;
    std::vector<double> predicted;
    std::vector<AutocorrEstimate> estimates;
    double fitted_exponent = 0;
    double fit_residual = 0;
};

/// Burn-in used before autocorrelation measurements: 10 ceil(2 c^2 kappa).
std::int64_t default_burn_in(double kappa, double c);

/// Scalar series of one coordinate along an ideal chain, after burn_in steps
/// from the minimizer. Uses stream (seed, chain_index).
std::vector<double> coordinate_series(ChainConfig const& config,
                                      Eigen::Index coordinate,
                                      std::int64_t burn_in,
                                      std::int64_t samples,
                                      std::uint64_t chain_index = 0);

/// For each kappa: ideal HMC on diag(1, kappa) with the exact flow and
/// T = 1/(c sqrt(kappa)); relaxation estimate 1/(1 - lag1) of coordinate 0;
/// log-log fit against kappa. Kappa i uses stream (seed, i).
ScalingReport relaxation_scaling_experiment(std::vector<double> const& kappas,
                                            double c,
                                            std::int64_t samples_per_chain,
                                            std::uint64_t seed,
                                            unsigned threads = 1);

/// Noise-free counterpart using 1 / gap_slow.
ScalingReport closed_form_relaxation_scaling(std::vector<double> const& kappas, double c);

struct GradientScalingRow
{
    double kappa = 0;
    double epsilon = 0;
    double mean_grads_per_step = 0;
    double mean_grad_norm_sq = 0;
    std::int64_t steps = 0;
    std::int64_t chains = 0;
};

struct GradientScalingOptions
{
    Eigen::Index dim = 1000;
    double mu = 1.0;
    PotentialKind kind = PotentialKind::quadratic;
    std::int64_t steps = 100;
    std::int64_t chains = 4;
    unsigned threads = 1;
};

/// Discretized chains (collocation, default schedule with N replaced by
/// options.steps) over every (kappa, eps) pair.
std::vector<GradientScalingRow> gradient_scaling_experiment(std::vector<double> const& kappas,
                                                            std::vector<double> const& epsilons,
                                                            std::uint64_t seed,
                                                            GradientScalingOptions const& options = {});

struct OdeCheckRow
{
    std::int64_t trial = 0;
    double delta = 0;
    double error = 0;
    std::int64_t gradients = 0;
    std::int64_t pieces = 0;
    int iterations = 0;
    /// gradients / (m (D + 1) log(C t / delta + 2)).
    double gradient_constant = 0;
};

/// Collocation at t = 1/(16000 sqrt(L)) from random (x0, v0) against the exact
/// flow (quadratic) or adaptive leapfrog at delta / 100. Trial i of delta
/// index k uses stream (seed, k * trials + i).
std::vector<OdeCheckRow> ode_check_experiment(Potential const& p,
                                              std::vector<double> const& deltas,
                                              std::int64_t trials,
                                              std::uint64_t seed,
                                              int degree = 0);

/// Per-step distance between a discretized step and the ideal step from the
/// same point with the same velocity, along the discretized chain.
struct FidelityReport
{
    std::vector<double> distances;
    double delta = 0;

    double max_distance() const;
    bool passed() const { return max_distance() <= delta; }
};

FidelityReport discretization_fidelity(std::shared_ptr<Potential const> p,
                                       double epsilon,
                                       std::int64_t steps,
                                       std::uint64_t seed);

/// One exact step started from the target; per-coordinate moments.
struct StationarityReport
{
    Vector mean;
    Vector variance;
    Vector target_variance;
    Vector mean_std_err;
    Vector variance_std_err;
    std::int64_t replicas = 0;

    bool passed(double z = 3.0) const;
};

StationarityReport gaussian_stationarity_check(std::shared_ptr<Potential const> p,
                                               double c,
                                               std::int64_t replicas,
                                               std::uint64_t seed);

}  // namespace hmc
