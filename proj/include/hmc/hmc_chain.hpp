#pragma once

#include "hmc/hamiltonian_flow.hpp"
#include "hmc/potentials.hpp"
#include "hmc/rng.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace hmc
{

enum class ChainMode
{
    ideal,
    discretized
};

enum class SolverKind
{
    exact,
    adaptive,
    collocation
};

std::string_view to_string(ChainMode mode);
std::string_view to_string(SolverKind solver);
ChainMode parse_chain_mode(std::string_view name);
SolverKind parse_solver_kind(std::string_view name);

/// Step-size constant used by the discretized schedule: T = 1/(16000 sqrt(L)).
inline constexpr double kDiscretizedStepConstant = 16000.0;

/// Hyperparameters of one HMC run.
struct ChainConfig
{
    std::shared_ptr<Potential const> potential;
    double step_size = 0;       ///< T
    std::int64_t steps = 0;     ///< N
    double delta = 0;           ///< ODE tolerance; 0 in ideal mode
    double epsilon = 0.1;
    ChainMode mode = ChainMode::ideal;
    double c = 2.0;             ///< T = 1/(c sqrt(L)) when the schedule is derived
    std::uint64_t seed = 0;
    SolverKind solver = SolverKind::exact;
    int collocation_degree = 0;
    /// Overrides the minimizer start when set.
    std::optional<Vector> start;

    /// Throws InputError / OutOfContractError on an inconsistent config.
    void validate() const;
};

/// Per-step accounting for amortized gradient costs.
struct GradientLedger
{
    std::vector<std::int64_t> per_step;
    std::vector<double> v0_norms;
    std::vector<double> grad_norms;

    std::size_t size() const { return per_step.size(); }
};

struct ChainTrajectory
{
    std::vector<Vector> points;
    GradientLedger ledger;
    std::uint64_t seed = 0;
    std::uint64_t chain_index = 0;
};

struct Minimum
{
    Vector point;
    std::int64_t gradient_evaluations = 0;
    std::int64_t iterations = 0;
};

/// Gradient descent from 0 with fixed step 1/L until |grad f| <= tol.
Minimum find_minimizer(Potential const& p, double tol, std::int64_t max_iterations = 1'000'000);

/// Minimizer tolerance used to start chains: 1e-8 sqrt(d L).
double start_tolerance(Potential const& p);

/// Discretized schedule: T = 1/(16000 sqrt(L)), delta = sqrt(mu) T^2 eps / 16,
/// N = ceil(c_n log(d/eps) / (mu T^2)), collocation solver.
ChainConfig default_config(std::shared_ptr<Potential const> p,
                           double epsilon,
                           std::uint64_t seed,
                           double c_n = 2.0);

/// Ideal schedule with T = 1/(c sqrt(L)), exact (quadratic) or adaptive flow.
ChainConfig ideal_config(std::shared_ptr<Potential const> p,
                         double c,
                         std::int64_t steps,
                         std::uint64_t seed,
                         double epsilon = 0.1);

struct StepOutcome
{
    Vector position;
    std::int64_t gradient_evaluations = 0;
    double v0_norm = 0;
    double grad_norm = 0;
    std::optional<double> certified_error;
};

/// One HMC transition: draws v ~ N(0, I) (d normals, coordinate order) and
/// flows (x, v) for time T with the configured solver.
StepOutcome hmc_step(ChainConfig const& config, Vector const& x, RandomStream& stream);

/// Same transition with a caller-supplied velocity.
StepOutcome hmc_step_with_velocity(ChainConfig const& config, Vector const& x, Vector const& v);

/// Tolerance used for the adaptive solver in ideal mode.
double ideal_adaptive_delta(Potential const& p, Vector const& x);

/// Run N steps from the minimizer (or config.start). Chain `chain_index`
/// draws from stream (seed, chain_index). With keep_points == false only the
/// start and end points are stored.
ChainTrajectory run_chain(ChainConfig const& config,
                          std::uint64_t chain_index = 0,
                          bool keep_points = true);

/// Independent chains 0..count-1, in index order.
std::vector<ChainTrajectory> run_chains(ChainConfig const& config,
                                        std::size_t count,
                                        unsigned threads,
                                        bool keep_points = false);

/// Relative accuracy of the flows used for synchronous coupling.
inline constexpr double kCouplingRelativeTolerance = 1e-9;

/// Two flows sharing initial velocity v0, evaluated at each grid time.
///
/// Times must be non-negative, ascending and at most 1/(2 sqrt(L)). Uses the
/// exact flow for quadratics and adaptive leapfrog, segment by segment,
/// otherwise with total tolerance rel_tol * |x0 - y0|.
std::vector<std::pair<Vector, Vector>> coupled_pair_trajectory(
    Potential const& p,
    Vector const& x0,
    Vector const& y0,
    Vector const& v0,
    std::vector<double> const& times,
    double rel_tol = kCouplingRelativeTolerance);

std::pair<Vector, Vector> coupled_pair_flow(Potential const& p,
                                            Vector const& x0,
                                            Vector const& y0,
                                            Vector const& v0,
                                            double t,
                                            double rel_tol = kCouplingRelativeTolerance);

/// Largest time for which the contraction and crude bounds hold.
double contraction_time_limit(Potential const& p);

}  // namespace hmc
