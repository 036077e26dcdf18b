#include "hmc/hmc_chain.hpp"

#include "hmc/errors.hpp"
#include "hmc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hmc
{

std::string_view to_string(ChainMode mode)
{
    return mode == ChainMode::ideal ? "ideal" : "discretized";
}

std::string_view to_string(SolverKind solver)
{
    switch (solver)
    {
        case SolverKind::exact:
            return "exact";
        case SolverKind::adaptive:
            return "adaptive";
        case SolverKind::collocation:
            return "collocation";
    }
    return "unknown";
}

ChainMode parse_chain_mode(std::string_view name)
{
    if (name == "ideal")
    {
        return ChainMode::ideal;
    }
    if (name == "discretized")
    {
        return ChainMode::discretized;
    }
    throw InputError("unknown mode '" + std::string(name) + "'");
}

SolverKind parse_solver_kind(std::string_view name)
{
    if (name == "exact")
    {
        return SolverKind::exact;
    }
    if (name == "adaptive")
    {
        return SolverKind::adaptive;
    }
    if (name == "collocation")
    {
        return SolverKind::collocation;
    }
    throw InputError("unknown solver '" + std::string(name) + "'");
}

void ChainConfig::validate() const
{
    if (!potential)
    {
        throw InputError("chain config has no potential");
    }
    auto const& p = *potential;
    if (!(step_size > 0) || !std::isfinite(step_size))
    {
        throw InputError("step size T must be positive");
    }
    if (steps < 0)
    {
        throw InputError("number of steps N must be non-negative");
    }
    if (!(epsilon > 0) || !(epsilon < std::sqrt(static_cast<double>(p.dim()))))
    {
        throw InputError("epsilon must satisfy 0 < eps < sqrt(d)");
    }
    if (!(c > 0))
    {
        throw InputError("step-size constant c must be positive");
    }
    if (delta < 0)
    {
        throw InputError("delta must be non-negative");
    }
    if (collocation_degree < 0 || collocation_degree > 8)
    {
        throw InputError("collocation degree must be in [0, 8]");
    }
    if (solver == SolverKind::exact && p.kind() != PotentialKind::quadratic)
    {
        throw UnsupportedMethodError("exact solver needs a quadratic potential");
    }
    if (mode == ChainMode::ideal && solver == SolverKind::collocation)
    {
        throw InputError("ideal mode needs the exact or adaptive solver");
    }
    if (mode == ChainMode::discretized)
    {
        if (!(delta > 0))
        {
            throw InputError("discretized mode needs delta > 0");
        }
        if (solver == SolverKind::collocation
            && std::sqrt(p.lipschitz()) * step_size > kCollocationTimeLimit * (1 + 1e-12))
        {
            throw OutOfContractError("collocation requires T sqrt(L) <= 1/16000");
        }
    }
    if (start && start->size() != p.dim())
    {
        throw InputError("start point has wrong length");
    }
}

Minimum find_minimizer(Potential const& p, double tol, std::int64_t max_iterations)
{
    if (!(tol > 0))
    {
        throw InputError("minimizer tolerance must be positive");
    }
    double const step = 1.0 / p.lipschitz();
    Minimum m;
    m.point = Vector::Zero(p.dim());
    Vector g(p.dim());
    p.gradient(m.point, g);
    m.gradient_evaluations = 1;
    while (g.norm() > tol)
    {
        if (m.iterations >= max_iterations)
        {
            throw ConvergenceError("gradient descent did not reach |grad f| <= "
                                   + std::to_string(tol));
        }
        m.point -= step * g;
        p.gradient(m.point, g);
        ++m.gradient_evaluations;
        ++m.iterations;
    }
    return m;
}

double start_tolerance(Potential const& p)
{
    return 1e-8 * std::sqrt(static_cast<double>(p.dim()) * p.lipschitz());
}

ChainConfig default_config(std::shared_ptr<Potential const> p,
                           double epsilon,
                           std::uint64_t seed,
                           double c_n)
{
    if (!p)
    {
        throw InputError("default_config needs a potential");
    }
    double const d = static_cast<double>(p->dim());
    if (!(epsilon > 0) || !(epsilon < std::sqrt(d)))
    {
        throw InputError("epsilon must satisfy 0 < eps < sqrt(d)");
    }
    if (!(c_n > 0))
    {
        throw InputError("C_N must be positive");
    }
    ChainConfig cfg;
    cfg.c = kDiscretizedStepConstant;
    cfg.step_size = 1.0 / (kDiscretizedStepConstant * std::sqrt(p->lipschitz()));
    double const t2 = cfg.step_size * cfg.step_size;
    cfg.delta = std::sqrt(p->mu()) * t2 * epsilon / 16.0;
    cfg.steps = static_cast<std::int64_t>(std::ceil(c_n * std::log(d / epsilon) / (p->mu() * t2)));
    cfg.epsilon = epsilon;
    cfg.mode = ChainMode::discretized;
    cfg.solver = SolverKind::collocation;
    cfg.seed = seed;
    cfg.potential = std::move(p);
    return cfg;
}

ChainConfig ideal_config(std::shared_ptr<Potential const> p,
                         double c,
                         std::int64_t steps,
                         std::uint64_t seed,
                         double epsilon)
{
    if (!p)
    {
        throw InputError("ideal_config needs a potential");
    }
    if (!(c > 0))
    {
        throw InputError("step-size constant c must be positive");
    }
    ChainConfig cfg;
    cfg.c = c;
    cfg.step_size = 1.0 / (c * std::sqrt(p->lipschitz()));
    cfg.steps = steps;
    cfg.delta = 0;
    cfg.epsilon = epsilon;
    cfg.mode = ChainMode::ideal;
    cfg.solver = p->kind() == PotentialKind::quadratic ? SolverKind::exact : SolverKind::adaptive;
    cfg.seed = seed;
    cfg.potential = std::move(p);
    return cfg;
}

double ideal_adaptive_delta(Potential const& p, Vector const& x)
{
    return 1e-10 * (1.0 + (x - p.minimizer()).norm());
}

StepOutcome hmc_step_with_velocity(ChainConfig const& config, Vector const& x, Vector const& v)
{
    auto const& p = *config.potential;
    if (x.size() != p.dim() || v.size() != p.dim())
    {
        throw InputError("hmc_step: dimension mismatch");
    }
    StepOutcome out;
    Vector grad = p.gradient(x);
    out.gradient_evaluations = 1;
    out.grad_norm = grad.norm();
    out.v0_norm = v.norm();

    PhaseState const s0{x, v};
    double const t = config.step_size;
    switch (config.solver)
    {
        case SolverKind::exact:
            out.position = exact_quadratic_flow(p, s0, t).position;
            out.certified_error = 0.0;
            break;
        case SolverKind::adaptive: {
            double const tol = config.mode == ChainMode::ideal ? ideal_adaptive_delta(p, x)
                                                               : config.delta;
            auto r = adaptive_reference_flow(p, s0, t, tol);
            out.position = std::move(r.final.position);
            out.gradient_evaluations += r.gradient_evaluations;
            out.certified_error = r.certified_error;
            break;
        }
        case SolverKind::collocation: {
            auto const pieces = piece_count(out.v0_norm, out.grad_norm, p.lipschitz(), t, config.delta);
            auto r = collocation_flow(p, s0, t, config.delta, pieces, config.collocation_degree,
                                      std::move(grad));
            out.position = std::move(r.final.position);
            out.gradient_evaluations += r.gradient_evaluations;
            out.certified_error = r.certified_error;
            break;
        }
    }
    return out;
}

StepOutcome hmc_step(ChainConfig const& config, Vector const& x, RandomStream& stream)
{
    Vector v(config.potential->dim());
    for (Eigen::Index i = 0; i < v.size(); ++i)
    {
        v[i] = stream.normal();
    }
    return hmc_step_with_velocity(config, x, v);
}

ChainTrajectory run_chain(ChainConfig const& config, std::uint64_t chain_index, bool keep_points)
{
    config.validate();
    auto const& p = *config.potential;
    ChainTrajectory traj;
    traj.seed = config.seed;
    traj.chain_index = chain_index;

    Vector x = config.start ? *config.start : find_minimizer(p, start_tolerance(p)).point;
    auto const n = static_cast<std::size_t>(config.steps);
    if (keep_points)
    {
        traj.points.reserve(n + 1);
    }
    traj.points.push_back(x);
    traj.ledger.per_step.reserve(n);
    traj.ledger.v0_norms.reserve(n);
    traj.ledger.grad_norms.reserve(n);

    RandomStream stream(config.seed, chain_index);
    for (std::size_t k = 0; k < n; ++k)
    {
        auto step = hmc_step(config, x, stream);
        x = std::move(step.position);
        traj.ledger.per_step.push_back(step.gradient_evaluations);
        traj.ledger.v0_norms.push_back(step.v0_norm);
        traj.ledger.grad_norms.push_back(step.grad_norm);
        if (keep_points)
        {
            traj.points.push_back(x);
        }
    }
    if (!keep_points && n > 0)
    {
        traj.points.push_back(std::move(x));
    }
    return traj;
}

std::vector<ChainTrajectory> run_chains(ChainConfig const& config,
                                        std::size_t count,
                                        unsigned threads,
                                        bool keep_points)
{
    config.validate();
    std::vector<ChainTrajectory> out(count);
    parallel_for(count, threads, [&](std::size_t i) { out[i] = run_chain(config, i, keep_points); });
    return out;
}

double contraction_time_limit(Potential const& p)
{
    return 1.0 / (2.0 * std::sqrt(p.lipschitz()));
}

std::vector<std::pair<Vector, Vector>> coupled_pair_trajectory(Potential const& p,
                                                               Vector const& x0,
                                                               Vector const& y0,
                                                               Vector const& v0,
                                                               std::vector<double> const& times,
                                                               double rel_tol)
{
    if (x0.size() != p.dim() || y0.size() != p.dim() || v0.size() != p.dim())
    {
        throw InputError("coupled flow: dimension mismatch");
    }
    double const gap = (x0 - y0).norm();
    if (gap == 0)
    {
        throw DegenerateInputError("coupled flow needs x0 != y0");
    }
    if (!(rel_tol > 0))
    {
        throw InputError("coupling tolerance must be positive");
    }
    double const limit = contraction_time_limit(p);
    double prev = 0;
    for (double t : times)
    {
        if (!(t >= prev))
        {
            throw InputError("coupled flow times must be non-negative and ascending");
        }
        if (t > limit * (1 + 1e-12))
        {
            throw OutOfContractError("coupled flow time " + std::to_string(t)
                                     + " exceeds 1/(2 sqrt(L)) = " + std::to_string(limit));
        }
        prev = t;
    }

    std::vector<std::pair<Vector, Vector>> out;
    out.reserve(times.size());
    if (p.kind() == PotentialKind::quadratic)
    {
        for (double t : times)
        {
            out.emplace_back(exact_quadratic_flow(p, {x0, v0}, t).position,
                             exact_quadratic_flow(p, {y0, v0}, t).position);
        }
        return out;
    }

    double const delta = rel_tol * gap;
    auto const xs = adaptive_reference_trajectory(p, {x0, v0}, times, delta);
    auto const ys = adaptive_reference_trajectory(p, {y0, v0}, times, delta);
    for (std::size_t j = 0; j < times.size(); ++j)
    {
        out.emplace_back(xs[j].final.position, ys[j].final.position);
    }
    return out;
}

std::pair<Vector, Vector> coupled_pair_flow(Potential const& p,
                                            Vector const& x0,
                                            Vector const& y0,
                                            Vector const& v0,
                                            double t,
                                            double rel_tol)
{
    if (!(t >= 0))
    {
        throw InputError("coupled flow time must be non-negative");
    }
    return std::move(coupled_pair_trajectory(p, x0, y0, v0, {t}, rel_tol).front());
}

}  // namespace hmc
