#pragma once

#include "hmc/potentials.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace hmc
{

/// Largest sqrt(L) * t for which collocation_flow is valid.
inline constexpr double kCollocationTimeLimit = 1.0 / 16000.0;

/// Default step-count ceiling for adaptive_reference_flow.
inline constexpr std::int64_t kDefaultMaxLeapfrogSteps = std::int64_t{1} << 24;

/// Outcome of a numerical flow.
struct FlowResult
{
    PhaseState final;
    std::int64_t gradient_evaluations = 0;
    /// Bound on |x~(t) - x(t)|; empty when the method does not certify.
    std::optional<double> certified_error;
    /// Picard iterations (collocation) or doublings (adaptive).
    int iterations = 0;
    /// Pieces used by collocation; 0 otherwise.
    std::int64_t pieces = 0;
};

/// Piecewise polynomial trajectory on [T_0, T_m].
///
/// Piece j holds per-coordinate coefficients in the local variable
/// s = (t - T_j) / (T_{j+1} - T_j) in [0, 1], lowest order first.
struct PiecewisePolynomial
{
    std::vector<double> breakpoints;
    int degree = 0;
    /// coefficients[j] is d x (degree + 1).
    std::vector<Matrix> coefficients;

    std::size_t pieces() const { return coefficients.size(); }
    Vector evaluate(double t) const;
};

/// Collocation output: the endpoint plus the position polynomial x~(t).
/// The position polynomial has degree D + 2 where D is the degree of the
/// acceleration approximation.
struct CollocationSolution
{
    FlowResult result;
    PiecewisePolynomial position;
};

/// Closed-form flow of a quadratic potential, mode by mode in A's eigenbasis.
/// No gradient evaluations. Throws UnsupportedMethodError for other kinds.
PhaseState exact_quadratic_flow(Potential const& p, PhaseState const& s0, double t);

/// Velocity Verlet (kick-drift-kick) with `steps` uniform steps; uses
/// steps + 1 gradient evaluations. Time-reversible.
FlowResult leapfrog_flow(Potential const& p, PhaseState const& s0, double t, std::int64_t steps);

/// Leapfrog with step doubling until two successive endpoints agree within
/// delta / 10. Returns the finer endpoint; certified_error is the final
/// endpoint difference.
FlowResult adaptive_reference_flow(Potential const& p,
                                   PhaseState const& s0,
                                   double t,
                                   double delta,
                                   std::int64_t max_steps = kDefaultMaxLeapfrogSteps);

/// Adaptive leapfrog sampled at ascending times (first >= 0). Segment j
/// between consecutive times gets its own step count; all counts double
/// together until every sampled position agrees with the previous level
/// within delta / 10. Returns one state per time; certified_error and
/// gradient_evaluations on the last entry cover the whole trajectory.
std::vector<FlowResult> adaptive_reference_trajectory(Potential const& p,
                                                      PhaseState const& s0,
                                                      std::vector<double> const& times,
                                                      double delta,
                                                      std::int64_t max_steps = kDefaultMaxLeapfrogSteps);

/// Pieces needed for a piecewise-constant approximation of x'' accurate to
/// delta / t^2: max(1, ceil(2 L t^3 / delta * (|v0| + t |grad f(x0)|))).
std::int64_t piece_count(double v0_norm, double grad0_norm, double lipschitz, double t,
                         double delta);

/// Picard iteration on a piecewise polynomial representation of x''(t).
///
/// Requires sqrt(L) * t <= 1/16000. Each iteration evaluates the gradient at
/// degree + 1 collocation nodes per piece, sweeping pieces in order and
/// carrying (position, velocity) across breakpoints. Iteration stops when
/// successive accelerations agree to delta / (10 t^2) in sup norm; the
/// iteration budget is ceil(log2(C t / delta)) + 8 with
/// C = |v0| + t |grad f(x0)|.
///
/// gradient_evaluations counts m (D + 1) per iteration plus one for
/// grad f(x0) unless `grad0` is supplied.
CollocationSolution collocation_solve(Potential const& p,
                                      PhaseState const& s0,
                                      double t,
                                      double delta,
                                      std::int64_t pieces,
                                      int degree = 0,
                                      std::optional<Vector> grad0 = {});

FlowResult collocation_flow(Potential const& p,
                            PhaseState const& s0,
                            double t,
                            double delta,
                            std::int64_t pieces,
                            int degree = 0,
                            std::optional<Vector> grad0 = {});

/// Iteration budget used by collocation_flow.
int collocation_iteration_cap(double c_const, double t, double delta);

}  // namespace hmc
