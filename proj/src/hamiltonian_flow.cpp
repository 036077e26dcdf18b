#include "hmc/hamiltonian_flow.hpp"

#include "hmc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace hmc
{
namespace
{
constexpr int kMaxCollocationDegree = 8;

void check_state(Potential const& p, PhaseState const& s)
{
    if (s.position.size() != p.dim() || s.velocity.size() != p.dim())
    {
        throw InputError("phase state has length (" + std::to_string(s.position.size()) + ", "
                         + std::to_string(s.velocity.size()) + "), expected "
                         + std::to_string(p.dim()));
    }
    if (!s.position.allFinite() || !s.velocity.allFinite())
    {
        throw InputError("phase state must be finite");
    }
}

void check_time(double t)
{
    if (!(t >= 0) || !std::isfinite(t))
    {
        throw InputError("flow time must be finite and non-negative");
    }
}

// Quadrature weights for one collocation piece on s in [0, 1]. Node values of
// the acceleration map linearly onto the double integral at each node and
// onto the single/double integral over the whole piece.
struct CollocationWeights
{
    Vector nodes;
    Matrix to_monomial;   // monomial coefficients = to_monomial * node values
    Matrix node_position; // (D+1) x (D+1): node value j -> double integral at node k
    Vector end_position;
    Vector end_velocity;

    explicit CollocationWeights(int degree)
    {
        int const n = degree + 1;
        nodes.resize(n);
        if (degree == 0)
        {
            nodes[0] = 0.5;
        }
        else
        {
            for (int k = 0; k < n; ++k)
            {
                nodes[k] = 0.5 * (1.0 - std::cos((2.0 * k + 1.0) * std::numbers::pi / (2.0 * n)));
            }
        }
        Matrix vandermonde(n, n);
        for (int k = 0; k < n; ++k)
        {
            for (int i = 0; i < n; ++i)
            {
                vandermonde(k, i) = std::pow(nodes[k], i);
            }
        }
        to_monomial = vandermonde.inverse();

        Matrix integrate_twice(n, n);
        end_position.resize(n);
        end_velocity.resize(n);
        Vector mono_end_pos(n);
        Vector mono_end_vel(n);
        for (int i = 0; i < n; ++i)
        {
            for (int k = 0; k < n; ++k)
            {
                integrate_twice(i, k) = std::pow(nodes[k], i + 2) / ((i + 1.0) * (i + 2.0));
            }
            mono_end_pos[i] = 1.0 / ((i + 1.0) * (i + 2.0));
            mono_end_vel[i] = 1.0 / (i + 1.0);
        }
        node_position = to_monomial.transpose() * integrate_twice;
        end_position = to_monomial.transpose() * mono_end_pos;
        end_velocity = to_monomial.transpose() * mono_end_vel;
    }
};

CollocationWeights const& weights_for(int degree)
{
    static std::vector<CollocationWeights> const table = [] {
        std::vector<CollocationWeights> w;
        for (int d = 0; d <= kMaxCollocationDegree; ++d)
        {
            w.emplace_back(d);
        }
        return w;
    }();
    return table.at(static_cast<std::size_t>(degree));
}
}  // namespace

Vector PiecewisePolynomial::evaluate(double t) const
{
    if (coefficients.empty())
    {
        throw InputError("empty piecewise polynomial");
    }
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
    auto j = static_cast<std::ptrdiff_t>(it - breakpoints.begin()) - 1;
    j = std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(pieces()) - 1);
    double const lo = breakpoints[j];
    double const hi = breakpoints[j + 1];
    double const s = (hi > lo) ? (t - lo) / (hi - lo) : 0.0;
    Matrix const& c = coefficients[j];
    // Horner.
    Vector out = c.col(c.cols() - 1);
    for (Eigen::Index k = c.cols() - 2; k >= 0; --k)
    {
        out = out * s + c.col(k);
    }
    return out;
}

PhaseState exact_quadratic_flow(Potential const& p, PhaseState const& s0, double t)
{
    auto const* q = p.quadratic();
    if (q == nullptr)
    {
        throw UnsupportedMethodError("exact flow is only available for quadratic potentials");
    }
    check_state(p, s0);
    check_time(t);
    if (t == 0)
    {
        return s0;
    }

    // Per mode with frequency w = sqrt(a): x(t) = x0 cos(wt) + v0 sin(wt)/w.
    Vector const omega = q->eigenvalues.cwiseSqrt();
    Vector const cos_wt = (omega * t).array().cos();
    Vector const sin_wt = (omega * t).array().sin();

    Vector dx = s0.position - q->center;
    Vector v = s0.velocity;
    if (!q->diagonal())
    {
        dx = q->eigenvectors.transpose() * dx;
        v = q->eigenvectors.transpose() * v;
    }
    Vector x_t = dx.cwiseProduct(cos_wt) + v.cwiseProduct(sin_wt).cwiseQuotient(omega);
    Vector v_t = -dx.cwiseProduct(omega).cwiseProduct(sin_wt) + v.cwiseProduct(cos_wt);
    if (!q->diagonal())
    {
        x_t = q->eigenvectors * x_t;
        v_t = q->eigenvectors * v_t;
    }
    return {x_t + q->center, v_t};
}

FlowResult leapfrog_flow(Potential const& p, PhaseState const& s0, double t, std::int64_t steps)
{
    check_state(p, s0);
    if (!std::isfinite(t))
    {
        throw InputError("flow time must be finite");
    }
    if (steps < 1)
    {
        throw InputError("leapfrog needs at least one step");
    }
    double const h = t / static_cast<double>(steps);
    Vector x = s0.position;
    Vector v = s0.velocity;
    Vector g(p.dim());
    // Compensated (Kahan) accumulation keeps round-off from growing with the
    // step count, which the adaptive reference flow relies on.
    Vector x_carry = Vector::Zero(p.dim());
    Vector v_carry = Vector::Zero(p.dim());
    auto accumulate = [](Vector& sum, Vector& carry, Vector const& increment) {
        for (Eigen::Index i = 0; i < sum.size(); ++i)
        {
            double const y = increment[i] - carry[i];
            double const t = sum[i] + y;
            carry[i] = (t - sum[i]) - y;
            sum[i] = t;
        }
    };
    Vector inc(p.dim());
    p.gradient(x, g);
    for (std::int64_t k = 0; k < steps; ++k)
    {
        inc = (-0.5 * h) * g;
        accumulate(v, v_carry, inc);
        inc = h * v;
        accumulate(x, x_carry, inc);
        p.gradient(x, g);
        inc = (-0.5 * h) * g;
        accumulate(v, v_carry, inc);
    }
    FlowResult r;
    r.final = {std::move(x), std::move(v)};
    r.gradient_evaluations = steps + 1;
    return r;
}

FlowResult adaptive_reference_flow(Potential const& p,
                                   PhaseState const& s0,
                                   double t,
                                   double delta,
                                   std::int64_t max_steps)
{
    check_state(p, s0);
    check_time(t);
    if (!(delta > 0))
    {
        throw InputError("delta must be positive");
    }
    if (t == 0)
    {
        FlowResult r;
        r.final = s0;
        r.certified_error = 0.0;
        return r;
    }

    // Start with h * sqrt(L) <= 1/2, well inside leapfrog's stability region.
    auto steps = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::ceil(2.0 * t * std::sqrt(p.lipschitz()))));
    FlowResult coarse = leapfrog_flow(p, s0, t, steps);
    std::int64_t total = coarse.gradient_evaluations;
    int doublings = 0;
    while (true)
    {
        steps *= 2;
        if (steps > max_steps)
        {
            throw ConvergenceError("adaptive leapfrog did not reach delta = " + std::to_string(delta)
                                   + " within " + std::to_string(max_steps) + " steps");
        }
        FlowResult fine = leapfrog_flow(p, s0, t, steps);
        total += fine.gradient_evaluations;
        ++doublings;
        double const diff = (fine.final.position - coarse.final.position).norm();
        if (diff <= delta / 10)
        {
            fine.gradient_evaluations = total;
            fine.certified_error = diff;
            fine.iterations = doublings;
            return fine;
        }
        coarse = std::move(fine);
    }
}

std::vector<FlowResult> adaptive_reference_trajectory(Potential const& p,
                                                      PhaseState const& s0,
                                                      std::vector<double> const& times,
                                                      double delta,
                                                      std::int64_t max_steps)
{
    check_state(p, s0);
    if (!(delta > 0))
    {
        throw InputError("delta must be positive");
    }
    double prev = 0;
    for (double t : times)
    {
        check_time(t);
        if (t < prev)
        {
            throw InputError("trajectory times must be ascending");
        }
        prev = t;
    }
    if (times.empty())
    {
        return {};
    }
    double const horizon = times.back();
    double const sqrt_l = std::sqrt(p.lipschitz());

    // Base step count per segment: h sqrt(L) <= 1/2 and at least one step.
    std::vector<std::int64_t> base(times.size(), 0);
    prev = 0;
    for (std::size_t j = 0; j < times.size(); ++j)
    {
        double const dt = times[j] - prev;
        if (dt > 0)
        {
            base[j] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(2.0 * dt * sqrt_l)));
        }
        prev = times[j];
    }

    auto run = [&](std::int64_t factor, std::int64_t& evaluations) {
        std::vector<FlowResult> states;
        states.reserve(times.size());
        PhaseState s = s0;
        double last = 0;
        for (std::size_t j = 0; j < times.size(); ++j)
        {
            if (base[j] > 0)
            {
                auto r = leapfrog_flow(p, s, times[j] - last, base[j] * factor);
                evaluations += r.gradient_evaluations;
                s = std::move(r.final);
            }
            FlowResult entry;
            entry.final = s;
            states.push_back(std::move(entry));
            last = times[j];
        }
        return states;
    };

    std::int64_t evaluations = 0;
    if (horizon == 0)
    {
        auto states = run(1, evaluations);
        states.back().certified_error = 0.0;
        return states;
    }
    std::int64_t const widest = *std::max_element(base.begin(), base.end());
    std::int64_t factor = 1;
    auto coarse = run(factor, evaluations);
    int doublings = 0;
    while (true)
    {
        factor *= 2;
        if (widest * factor > max_steps)
        {
            throw ConvergenceError("adaptive leapfrog trajectory did not reach delta = "
                                   + std::to_string(delta) + " within " + std::to_string(max_steps)
                                   + " steps per segment");
        }
        auto fine = run(factor, evaluations);
        ++doublings;
        double diff = 0;
        for (std::size_t j = 0; j < times.size(); ++j)
        {
            diff = std::max(diff, (fine[j].final.position - coarse[j].final.position).norm());
        }
        if (diff <= delta / 10)
        {
            for (auto& entry : fine)
            {
                entry.certified_error = diff;
                entry.iterations = doublings;
            }
            fine.back().gradient_evaluations = evaluations;
            return fine;
        }
        coarse = std::move(fine);
    }
}

std::int64_t piece_count(double v0_norm, double grad0_norm, double lipschitz, double t, double delta)
{
    if (!(delta > 0))
    {
        throw InputError("delta must be positive");
    }
    double const raw = 2.0 * lipschitz * t * t * t / delta * (v0_norm + t * grad0_norm);
    if (!std::isfinite(raw))
    {
        throw InputError("piece count overflow");
    }
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(raw)));
}

int collocation_iteration_cap(double c_const, double t, double delta)
{
    double const ratio = std::max(c_const * t / delta, 1.0);
    return static_cast<int>(std::ceil(std::log2(ratio))) + 8;
}

CollocationSolution collocation_solve(Potential const& p,
                                      PhaseState const& s0,
                                      double t,
                                      double delta,
                                      std::int64_t pieces,
                                      int degree,
                                      std::optional<Vector> grad0)
{
    check_state(p, s0);
    check_time(t);
    if (!(delta > 0))
    {
        throw InputError("delta must be positive");
    }
    if (pieces < 1)
    {
        throw InputError("collocation needs at least one piece");
    }
    if (degree < 0 || degree > kMaxCollocationDegree)
    {
        throw InputError("collocation degree must be in [0, "
                         + std::to_string(kMaxCollocationDegree) + "]");
    }
    if (std::sqrt(p.lipschitz()) * t > kCollocationTimeLimit * (1 + 1e-12))
    {
        throw OutOfContractError("collocation requires sqrt(L) * t <= 1/16000; got "
                                 + std::to_string(std::sqrt(p.lipschitz()) * t));
    }

    auto const d = p.dim();
    int const nodes = degree + 1;
    CollocationSolution out;
    if (t == 0)
    {
        out.result.final = s0;
        out.result.certified_error = 0.0;
        out.result.pieces = pieces;
        out.position.breakpoints = {0.0, 0.0};
        out.position.degree = degree + 2;
        Matrix c = Matrix::Zero(d, degree + 3);
        c.col(0) = s0.position;
        out.position.coefficients.push_back(std::move(c));
        return out;
    }

    std::int64_t gradients = 0;
    if (!grad0)
    {
        grad0 = p.gradient(s0.position);
        ++gradients;
    }
    else if (grad0->size() != d)
    {
        throw InputError("grad0 has wrong length");
    }

    double const c_const = s0.velocity.norm() + t * grad0->norm();
    int const cap = collocation_iteration_cap(c_const, t, delta);
    double const tolerance = delta / (10.0 * t * t);
    double const h = t / static_cast<double>(pieces);
    auto const& w = weights_for(degree);

    // accel[j] holds node values of x'' on piece j, one column per node.
    std::vector<Matrix> accel(static_cast<std::size_t>(pieces),
                              (-*grad0).replicate(1, nodes).eval());
    Matrix fresh(d, nodes);
    Vector node_pos(d);
    Vector x;
    Vector v;
    int iterations = 0;
    double last_change = 0;
    while (true)
    {
        x = s0.position;
        v = s0.velocity;
        last_change = 0;
        for (auto& q : accel)
        {
            Matrix const doubled = q * w.node_position;
            for (int k = 0; k < nodes; ++k)
            {
                node_pos = x + (h * w.nodes[k]) * v + (h * h) * doubled.col(k);
                p.gradient(node_pos, fresh.col(k));
            }
            fresh = -fresh;
            for (int k = 0; k < nodes; ++k)
            {
                last_change = std::max(last_change, (fresh.col(k) - q.col(k)).norm());
            }
            q = fresh;
            x += h * v + (h * h) * (q * w.end_position);
            v += h * (q * w.end_velocity);
        }
        gradients += pieces * nodes;
        ++iterations;
        if (last_change <= tolerance)
        {
            break;
        }
        if (iterations >= cap)
        {
            throw ConvergenceError("collocation did not converge in " + std::to_string(cap)
                                   + " iterations (last change "
                                   + std::to_string(last_change) + ")");
        }
    }

    // Under-resolved piece counts scale the first-order interpolation bound.
    auto const needed = piece_count(s0.velocity.norm(), grad0->norm(), p.lipschitz(), t, delta);
    double const resolution = std::max(1.0, static_cast<double>(needed) / pieces);

    out.result.final = {std::move(x), std::move(v)};
    out.result.gradient_evaluations = gradients;
    out.result.iterations = iterations;
    out.result.pieces = pieces;
    out.result.certified_error = delta * resolution;

    // Rebuild x~(t) from the converged accelerations.
    out.position.degree = degree + 2;
    out.position.breakpoints.resize(static_cast<std::size_t>(pieces) + 1);
    Vector px = s0.position;
    Vector pv = s0.velocity;
    for (std::int64_t j = 0; j < pieces; ++j)
    {
        out.position.breakpoints[j] = j * h;
        Matrix const& q = accel[static_cast<std::size_t>(j)];
        Matrix const mono = q * w.to_monomial.transpose();
        Matrix c(d, degree + 3);
        c.col(0) = px;
        c.col(1) = h * pv;
        for (int i = 0; i <= degree; ++i)
        {
            c.col(i + 2) = (h * h / ((i + 1.0) * (i + 2.0))) * mono.col(i);
        }
        out.position.coefficients.push_back(std::move(c));
        px += h * pv + (h * h) * (q * w.end_position);
        pv += h * (q * w.end_velocity);
    }
    out.position.breakpoints.back() = t;
    return out;
}

FlowResult collocation_flow(Potential const& p,
                            PhaseState const& s0,
                            double t,
                            double delta,
                            std::int64_t pieces,
                            int degree,
                            std::optional<Vector> grad0)
{
    return collocation_solve(p, s0, t, delta, pieces, degree, std::move(grad0)).result;
}

}  // namespace hmc
