// Acceptance suite: one PASS/FAIL line per criterion. Seed k is used for
// criterion k.

#include "hmc/analysis.hpp"
#include "hmc/hamiltonian_flow.hpp"
#include "hmc/hmc_chain.hpp"
#include "hmc/parallel.hpp"
#include "hmc/potentials.hpp"
#include "hmc/rng.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

using namespace hmc;

namespace
{
struct Verdict
{
    bool passed = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

std::shared_ptr<Potential const> share(Potential p)
{
    return std::make_shared<Potential const>(std::move(p));
}

Vector normals(RandomStream& s, Eigen::Index d, double scale = 1.0)
{
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i)
    {
        v(i) = scale * s.normal();
    }
    return v;
}

Matrix random_spd(RandomStream& s, Eigen::Index d, double lo, double hi)
{
    Matrix g(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
    {
        for (Eigen::Index j = 0; j < d; ++j)
        {
            g(i, j) = s.normal();
        }
    }
    Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
    Vector ev(d);
    for (Eigen::Index i = 0; i < d; ++i)
    {
        ev(i) = lo * std::pow(hi / lo, s.uniform());
    }
    ev(0) = lo;
    ev(d - 1) = hi;
    return q * ev.asDiagonal() * q.transpose();
}

unsigned threads()
{
    return resolve_threads(0);
}

// 1. |H(t) - H(0)| <= 1e-9 (1 + H(0)) along exact quadratic flows.
Verdict energy_conservation()
{
    RandomStream s(1, 0);
    double worst = 0;
    for (int k = 0; k < 100; ++k)
    {
        Eigen::Index const d = 1 + k % 10;
        auto const p = d == 1 ? Potential::quadratic_diagonal(Vector::Constant(1, 0.1 + 100 * s.uniform()))
                              : Potential::quadratic_matrix(random_spd(s, d, 0.1, 100.0), normals(s, d));
        PhaseState const s0{normals(s, d, 3.0), normals(s, d)};
        double const h0 = hamiltonian_energy(p, s0);
        for (int j = 0; j < 100; ++j)
        {
            double const t = 100.0 * s.uniform();
            double const dh = std::abs(hamiltonian_energy(p, exact_quadratic_flow(p, s0, t)) - h0);
            worst = std::max(worst, dh / (1 + h0));
        }
    }
    return {worst <= 1e-9, fmt::format("max |dH|/(1+H0) = {:.3e} over 100 states x 100 times (limit 1e-9)", worst)};
}

// 2 and 3 share one sweep.
struct CouplingOutcome
{
    Verdict contraction;
    Verdict crude;
};

CouplingOutcome coupling_suite()
{
    double worst_excess = -1;
    double worst_lower = 0, worst_upper = 0;
    bool bound_end_ok = true;
    std::string where;
    CouplingSweepOptions opts;
    opts.threads = threads();
    for (auto kind : {PotentialKind::quadratic, PotentialKind::logcosh})
    {
        for (double kappa : {1.0, 10.0, 100.0})
        {
            auto const p = kind == PotentialKind::quadratic ? Potential::quadratic_spread(3, 1.0, kappa)
                                                            : Potential::logcosh(3, 1.0, kappa);
            auto const sweep = coupling_sweep(p, 1000, contraction_grid(p, 64), 2, opts);
            double const excess = sweep.contraction.max_excess();
            if (excess > worst_excess)
            {
                worst_excess = excess;
                where = fmt::format("{} kappa={}", to_string(kind), kappa);
            }
            worst_lower = std::max(worst_lower, sweep.crude.lower_violation());
            worst_upper = std::max(worst_upper, sweep.crude.upper_violation());
            double const end_bound = sweep.contraction.bound.back();
            bound_end_ok = bound_end_ok && std::abs(end_bound - (1 - 1 / (16 * kappa))) <= 1e-15;
        }
    }
    CouplingOutcome o;
    o.contraction = {worst_excess <= 1e-6 && bound_end_ok,
                     fmt::format("max(ratio - bound) = {:.3e} ({}), slack 1e-6; end bound = 1 - 1/(16 kappa): {}",
                                 worst_excess, where, bound_end_ok ? "yes" : "no")};
    o.crude = {worst_lower <= 1e-6 && worst_upper <= 1e-6,
               fmt::format("violations below 1/2: {:.3e}, above 2: {:.3e} (slack 1e-6)", worst_lower, worst_upper)};
    return o;
}

// 4. Slow-coordinate lag-1 autocorrelation of the two-scale Gaussian chain.
Verdict lower_bound()
{
    auto const p = share(Potential::quadratic_spread(2, 1.0, 100.0));
    double const c = 2.0;
    auto const cfg = ideal_config(p, c, 0, 4);
    auto const series = coordinate_series(cfg, 0, default_burn_in(100.0, c), 1'000'000);
    auto const est = lag1_autocorrelation(series, 0);
    double const exact = std::cos(1.0 / 20.0);
    double const z = (est.lag1 - exact) / est.std_err;
    double const tau = est.relaxation();
    bool const ok = std::abs(z) <= 3.0 && tau >= 0.95 * 800.0;
    return {ok, fmt::format("lag1 = {:.6f} +- {:.2e} vs cos(1/20) = {:.6f} (z = {:+.2f}); 1/(1-lag1) = {:.1f} "
                            "(need >= 760)",
                            est.lag1, est.std_err, exact, z, tau)};
}

// 5. Relaxation time grows linearly in kappa.
Verdict relaxation_scaling()
{
    auto const r = relaxation_scaling_experiment({16, 64, 256}, 2.0, 4'000'000, 5, threads());
    auto const closed = closed_form_relaxation_scaling({16, 64, 256}, 2.0);
    std::string taus;
    for (std::size_t i = 0; i < r.kappas.size(); ++i)
    {
        taus += fmt::format("{}tau({})={:.1f}", i ? ", " : "", r.kappas[i], r.measurements[i]);
    }
    bool const ok = r.fitted_exponent >= 0.9 && r.fitted_exponent <= 1.1;
    return {ok, fmt::format("slope = {:.4f} (closed form {:.4f}), need [0.9, 1.1]; {}", r.fitted_exponent,
                            closed.fitted_exponent, taus)};
}

// 6. Collocation error and gradient counts against reference flows.
Verdict ode_solver()
{
    std::vector<double> const deltas{1e-6, 1e-8};
    double worst = 0;
    double constant = 0;
    bool counts_ok = true;
    for (auto const& p : {Potential::quadratic_spread(3, 1.0, 1.0), Potential::logcosh(3, 0.5, 1.0)})
    {
        auto const rows = ode_check_experiment(p, deltas, 50, 6);
        for (auto const& r : rows)
        {
            worst = std::max(worst, r.error / r.delta);
            constant = std::max(constant, r.gradient_constant);
            counts_ok = counts_ok && r.gradients > 0 && std::isfinite(r.gradient_constant);
        }
    }
    return {worst <= 10.0 && counts_ok,
            fmt::format("max error/delta = {:.3e} (limit 10) over 200 trials; gradient constant = {:.3f}", worst,
                        constant)};
}

// 7. W2 of x^(N) against the target; exact-kernel variant.
Verdict w2_convergence()
{
    auto const p = share(Potential::quadratic_spread(10, 1.0, 10.0));
    W2Options o;
    o.c_n = 2.0;
    o.threads = threads();
    auto const attempts = w2_with_fallback(p, 0.1, 20000, 7, o);
    std::string detail;
    for (auto const& a : attempts)
    {
        detail += fmt::format("C_N={}: N={} w2={:.4f} ({}); ", a.c_n, a.steps, a.w2, a.passed() ? "pass" : "fail");
    }
    auto const& last = attempts.back();
    detail += last.passed() ? fmt::format("passed with C_N={}", last.c_n) : "no constant passed";
    return {last.passed(), detail + ", bound 0.1"};
}

// 8. Amortized gradient cost: sqrt(kappa) and 1/eps trends.
Verdict gradient_trend()
{
    GradientScalingOptions o;
    o.dim = 1000;
    o.steps = 20;
    o.chains = 2;
    o.threads = threads();
    auto const rows = gradient_scaling_experiment({16, 64}, {0.05, 0.1}, 8, o);
    auto at = [&](double k, double e) {
        for (auto const& r : rows)
        {
            if (r.kappa == k && r.epsilon == e)
            {
                return r.mean_grads_per_step;
            }
        }
        return std::nan("");
    };
    double const k1 = at(64, 0.1) / at(16, 0.1);
    double const k2 = at(64, 0.05) / at(16, 0.05);
    double const e1 = at(16, 0.05) / at(16, 0.1);
    double const e2 = at(64, 0.05) / at(64, 0.1);
    auto in = [](double r) { return r >= 1.4 && r <= 2.9; };
    bool const ok = in(k1) && in(k2) && in(e1) && in(e2);
    return {ok, fmt::format("kappa 16->64: {:.3f} (eps 0.1), {:.3f} (eps 0.05); eps 0.1->0.05: {:.3f} (kappa 16), "
                            "{:.3f} (kappa 64); window [1.4, 2.9]",
                            k1, k2, e1, e2)};
}

// 9. Discretized vs ideal step under shared randomness.
Verdict fidelity()
{
    std::string detail;
    bool ok = true;
    for (auto const& p : {share(Potential::logcosh(3, 1.0, 100.0)), share(Potential::quadratic_spread(3, 1.0, 100.0))})
    {
        auto const r = discretization_fidelity(p, 0.1, 100, 9);
        ok = ok && r.passed() && r.distances.size() == 100;
        detail += fmt::format("{}: max {:.3e} <= delta {:.3e}; ", to_string(p->kind()), r.max_distance(), r.delta);
    }
    return {ok, detail + "100 steps each"};
}

// 10. One exact step from the target leaves it invariant.
Verdict stationarity()
{
    std::string detail;
    bool ok = true;
    for (auto const& p : {share(Potential::quadratic_spread(2, 1.0, 100.0)),
                          share(Potential::quadratic_spread(10, 1.0, 50.0))})
    {
        auto const r = gaussian_stationarity_check(p, 2.0, 10000, 10);
        double zm = 0, zv = 0;
        for (Eigen::Index i = 0; i < p->dim(); ++i)
        {
            zm = std::max(zm, std::abs(r.mean(i)) / r.mean_std_err(i));
            zv = std::max(zv, std::abs(r.variance(i) - r.target_variance(i)) / r.variance_std_err(i));
        }
        ok = ok && r.passed();
        detail += fmt::format("d={}: max |z| mean {:.2f}, variance {:.2f}; ", p->dim(), zm, zv);
    }
    return {ok, detail + "limit 3"};
}

int report(int id, std::string const& name, Verdict const& v, double seconds)
{
    std::cout << fmt::format("[{}] {:>2}. {}: {} ({:.1f} s)", v.passed ? "PASS" : "FAIL", id, name, v.detail, seconds)
              << std::endl;
    return v.passed ? 0 : 1;
}

template<class F>
auto timed(F&& f)
{
    auto const start = Clock::now();
    auto result = f();
    return std::pair{result, std::chrono::duration<double>(Clock::now() - start).count()};
}

}  // namespace

int main()
{
    int failures = 0;
    auto guarded = [&](int id, std::string const& name, std::function<Verdict()> const& f) {
        try
        {
            auto const [v, s] = timed(f);
            failures += report(id, name, v, s);
        }
        catch (std::exception const& e)
        {
            failures += report(id, name, {false, std::string("exception: ") + e.what()}, 0);
        }
    };

    guarded(1, "energy conservation", energy_conservation);
    try
    {
        auto const [o, s] = timed(coupling_suite);
        failures += report(2, "contraction bound", o.contraction, s);
        failures += report(3, "crude bound", o.crude, 0);
    }
    catch (std::exception const& e)
    {
        failures += report(2, "contraction bound", {false, e.what()}, 0);
        failures += report(3, "crude bound", {false, e.what()}, 0);
    }
    guarded(4, "relaxation lower bound", lower_bound);
    guarded(5, "relaxation scaling in kappa", relaxation_scaling);
    guarded(6, "ODE solver contract", ode_solver);
    guarded(7, "W2 convergence (exact kernel)", w2_convergence);
    guarded(8, "gradient cost trend", gradient_trend);
    guarded(9, "discretization fidelity", fidelity);
    guarded(10, "Gaussian stationarity", stationarity);

    std::cout << fmt::format("{} of 10 criteria passed", 10 - failures) << std::endl;
    return failures == 0 ? 0 : 1;
}
