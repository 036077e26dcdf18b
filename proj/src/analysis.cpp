#include "hmc/analysis.hpp"

#include "hmc/errors.hpp"
#include "hmc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace hmc
{
namespace
{
Vector standard_normals(Eigen::Index n, RandomStream& stream)
{
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        z[i] = stream.normal();
    }
    return z;
}

QuadraticParams const& require_quadratic(Potential const& p, char const* what)
{
    auto const* q = p.quadratic();
    if (q == nullptr)
    {
        throw UnsupportedMethodError(std::string(what) + " needs a quadratic potential");
    }
    return *q;
}

Vector to_modes(QuadraticParams const& q, Vector const& dx)
{
    return q.diagonal() ? dx : Vector(q.eigenvectors.transpose() * dx);
}

Vector from_modes(QuadraticParams const& q, Vector const& y)
{
    return q.diagonal() ? y : Vector(q.eigenvectors * y);
}

Matrix target_covariance(QuadraticParams const& q)
{
    Vector const inv = q.eigenvalues.cwiseInverse();
    if (q.diagonal())
    {
        return inv.asDiagonal();
    }
    return q.eigenvectors * inv.asDiagonal() * q.eigenvectors.transpose();
}

void check_symmetric(Matrix const& m, char const* what)
{
    if (m.rows() != m.cols())
    {
        throw InputError(std::string(what) + " must be square");
    }
    if (!m.allFinite())
    {
        throw InputError(std::string(what) + " must be finite");
    }
    double const scale = 1.0 + m.cwiseAbs().maxCoeff();
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    {
        throw InputError(std::string(what) + " must be symmetric");
    }
}
}  // namespace

AutocorrEstimate lag1_autocorrelation(std::span<double const> samples, std::size_t burn_in, int batches)
{
    if (batches < 20)
    {
        throw InputError("batch-means standard errors need at least 20 batches");
    }
    if (samples.size() < burn_in + 1000)
    {
        throw InputError("lag-1 autocorrelation needs at least 1000 post-burn-in samples");
    }
    auto const x = samples.subspan(burn_in);
    std::size_t const n = x.size();
    double const mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);

    double cross = 0;
    double square = 0;
    for (std::size_t t = 0; t < n; ++t)
    {
        double const a = x[t] - mean;
        square += a * a;
        if (t + 1 < n)
        {
            cross += a * (x[t + 1] - mean);
        }
    }
    if (!(square > 0))
    {
        throw DegenerateInputError("lag-1 autocorrelation of a constant series is undefined");
    }
    double const r = cross / square;

    // Linearized ratio estimator: z_t = a_t a_{t+1} - r a_t^2, batched.
    std::size_t const terms = n - 1;
    std::size_t const per_batch = terms / static_cast<std::size_t>(batches);
    std::vector<double> batch_mean(static_cast<std::size_t>(batches), 0.0);
    for (int b = 0; b < batches; ++b)
    {
        double sum = 0;
        for (std::size_t k = 0; k < per_batch; ++k)
        {
            std::size_t const t = static_cast<std::size_t>(b) * per_batch + k;
            double const a = x[t] - mean;
            sum += a * (x[t + 1] - mean) - r * a * a;
        }
        batch_mean[static_cast<std::size_t>(b)] = sum / static_cast<double>(per_batch);
    }
    double const grand = std::accumulate(batch_mean.begin(), batch_mean.end(), 0.0) / batches;
    double ss = 0;
    for (double m : batch_mean)
    {
        ss += (m - grand) * (m - grand);
    }
    double const se_z = std::sqrt(ss / (batches - 1) / batches);

    AutocorrEstimate est;
    est.lag1 = r;
    est.std_err = se_z / (square / static_cast<double>(n));
    est.n_samples = static_cast<std::int64_t>(n);
    est.burn_in = static_cast<std::int64_t>(burn_in);
    est.batches = batches;
    return est;
}

GaussianGap gaussian_chain_exact_gap(double mu, double lipschitz, double c)
{
    if (!(c > 0) || !(mu > 0) || !(lipschitz >= mu))
    {
        throw InputError("gap needs c > 0 and 0 < mu <= L");
    }
    double const t = 1.0 / (c * std::sqrt(lipschitz));
    GaussianGap g;
    // 1 - cos(x) = 2 sin^2(x/2) avoids cancellation for small angles.
    auto gap = [](double angle) {
        double const cs = std::cos(angle);
        if (cs >= 0)
        {
            double const s = std::sin(0.5 * angle);
            return 2.0 * s * s;
        }
        return 1.0 + cs;
    };
    g.gap_slow = gap(t * std::sqrt(mu));
    g.gap_fast = gap(t * std::sqrt(lipschitz));
    g.relaxation_lower = 2.0 * c * c * lipschitz / mu;
    return g;
}

GaussianKernel exact_gaussian_hmc_kernel(Potential const& p, double step_size, std::int64_t steps)
{
    auto const& q = require_quadratic(p, "exact Gaussian kernel");
    if (!(step_size > 0) || steps < 0)
    {
        throw InputError("kernel needs T > 0 and steps >= 0");
    }
    auto const d = p.dim();
    GaussianKernel k;
    k.coefficient.resize(d);
    k.variance.resize(d);
    auto const n = static_cast<double>(steps);
    for (Eigen::Index i = 0; i < d; ++i)
    {
        double const a = q.eigenvalues[i];
        double const angle = std::sqrt(a) * step_size;
        double const cs = std::cos(angle);
        double log_abs;
        if (cs > 0)
        {
            double const s = std::sin(0.5 * angle);
            log_abs = std::log1p(-2.0 * s * s);
        }
        else
        {
            log_abs = std::log(std::abs(cs));
        }
        double const sign = (cs < 0 && steps % 2 == 1) ? -1.0 : 1.0;
        k.coefficient[i] = steps == 0 ? 1.0 : sign * std::exp(n * log_abs);
        k.variance[i] = steps == 0 ? 0.0 : -std::expm1(2.0 * n * log_abs) / a;
    }
    return k;
}

Vector sample_gaussian_kernel(Potential const& p,
                              GaussianKernel const& kernel,
                              Vector const& x,
                              RandomStream& stream)
{
    auto const& q = require_quadratic(p, "exact Gaussian kernel");
    if (x.size() != p.dim())
    {
        throw InputError("kernel start has wrong length");
    }
    Vector const modes = to_modes(q, x - q.center);
    Vector const z = standard_normals(p.dim(), stream);
    Vector const next = kernel.coefficient.cwiseProduct(modes) + kernel.variance.cwiseSqrt().cwiseProduct(z);
    return from_modes(q, next) + q.center;
}

Vector sample_quadratic_target(Potential const& p, RandomStream& stream)
{
    auto const& q = require_quadratic(p, "target sampling");
    Vector const z = standard_normals(p.dim(), stream);
    return from_modes(q, z.cwiseQuotient(q.eigenvalues.cwiseSqrt())) + q.center;
}

double ContractionReport::max_excess() const
{
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < worst_ratio.size(); ++i)
    {
        worst = std::max(worst, worst_ratio[i] - bound[i]);
    }
    return worst;
}

double CrudeBoundReport::lower_violation() const
{
    double v = 0;
    for (double r : min_ratio)
    {
        v = std::max(v, 0.5 - r);
    }
    return v;
}

double CrudeBoundReport::upper_violation() const
{
    double v = 0;
    for (double r : max_ratio)
    {
        v = std::max(v, r - 2.0);
    }
    return v;
}

std::vector<double> contraction_grid(Potential const& p, std::size_t points)
{
    if (points < 2)
    {
        throw InputError("contraction grid needs at least 2 points");
    }
    double const limit = contraction_time_limit(p);
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i)
    {
        grid[i] = limit * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    grid.back() = limit;
    return grid;
}

CouplingSweep coupling_sweep(Potential const& p,
                             std::size_t pairs,
                             std::vector<double> const& t_grid,
                             std::uint64_t seed,
                             CouplingSweepOptions const& options)
{
    if (pairs == 0)
    {
        throw InputError("coupling sweep needs at least one pair");
    }
    if (t_grid.empty())
    {
        throw InputError("coupling sweep needs a non-empty time grid");
    }
    double const limit = contraction_time_limit(p);
    for (double t : t_grid)
    {
        if (t > limit * (1 + 1e-12))
        {
            throw OutOfContractError("time " + std::to_string(t) + " exceeds 1/(2 sqrt(L)) = "
                                     + std::to_string(limit));
        }
    }
    if (!std::is_sorted(t_grid.begin(), t_grid.end()) || t_grid.front() < 0)
    {
        throw InputError("time grid must be non-negative and ascending");
    }

    std::size_t const nt = t_grid.size();
    std::vector<std::vector<double>> ratios(pairs);
    double const spread = 1.0 / std::sqrt(p.mu());
    Vector const center = p.minimizer();
    parallel_for(pairs, options.threads, [&](std::size_t i) {
        RandomStream stream(seed, i);
        Vector const x0 = center + spread * standard_normals(p.dim(), stream);
        Vector const y0 = center + spread * standard_normals(p.dim(), stream);
        Vector const v0 = standard_normals(p.dim(), stream);
        auto const traj = coupled_pair_trajectory(p, x0, y0, v0, t_grid, options.rel_tol);
        double const d0 = (x0 - y0).squaredNorm();
        auto& out = ratios[i];
        out.resize(nt);
        for (std::size_t j = 0; j < nt; ++j)
        {
            out[j] = (traj[j].first - traj[j].second).squaredNorm() / d0;
        }
    });

    CouplingSweep sweep;
    auto& c = sweep.contraction;
    auto& crude = sweep.crude;
    c.t_grid = crude.t_grid = t_grid;
    c.pairs_tested = crude.pairs_tested = static_cast<std::int64_t>(pairs);
    c.tolerance = crude.tolerance = options.tolerance;
    c.worst_ratio.assign(nt, -std::numeric_limits<double>::infinity());
    crude.max_ratio.assign(nt, -std::numeric_limits<double>::infinity());
    crude.min_ratio.assign(nt, std::numeric_limits<double>::infinity());
    c.bound.resize(nt);
    for (std::size_t j = 0; j < nt; ++j)
    {
        c.bound[j] = 1.0 - 0.25 * p.mu() * t_grid[j] * t_grid[j];
    }
    for (auto const& r : ratios)
    {
        for (std::size_t j = 0; j < nt; ++j)
        {
            c.worst_ratio[j] = std::max(c.worst_ratio[j], r[j]);
            crude.max_ratio[j] = std::max(crude.max_ratio[j], r[j]);
            crude.min_ratio[j] = std::min(crude.min_ratio[j], r[j]);
        }
    }
    return sweep;
}

ContractionReport contraction_sweep(Potential const& p,
                                    std::size_t pairs,
                                    std::vector<double> const& t_grid,
                                    std::uint64_t seed,
                                    CouplingSweepOptions const& options)
{
    return coupling_sweep(p, pairs, t_grid, seed, options).contraction;
}

CrudeBoundReport crude_bound_sweep(Potential const& p,
                                   std::size_t pairs,
                                   std::uint64_t seed,
                                   CouplingSweepOptions const& options)
{
    return coupling_sweep(p, pairs, contraction_grid(p, 64), seed, options).crude;
}

Matrix psd_sqrt(Matrix const& m)
{
    check_symmetric(m, "covariance");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
    if (eig.info() != Eigen::Success)
    {
        throw InputError("eigendecomposition failed");
    }
    if (eig.eigenvalues().size() > 0 && eig.eigenvalues().minCoeff() < -1e-8)
    {
        throw InputError("covariance is not positive semidefinite (eigenvalue "
                         + std::to_string(eig.eigenvalues().minCoeff()) + ")");
    }
    Vector const root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double gaussian_w2(Vector const& mean1, Matrix const& cov1, Vector const& mean2, Matrix const& cov2)
{
    auto const d = mean1.size();
    if (mean2.size() != d || cov1.rows() != d || cov2.rows() != d)
    {
        throw InputError("gaussian_w2: dimension mismatch");
    }
    // Fixed argument order so the result is exactly symmetric.
    bool const swap = std::lexicographical_compare(cov2.data(), cov2.data() + cov2.size(), cov1.data(),
                                                   cov1.data() + cov1.size());
    Matrix const s1 = psd_sqrt(swap ? cov2 : cov1);
    Matrix const s2 = psd_sqrt(swap ? cov1 : cov2);
    // Bures term as min over orthogonal U of |S1 - S2 U|_F, attained at the
    // polar factor of S1 S2. Equivalent to
    // tr(C1 + C2 - 2 (S2 C1 S2)^{1/2}) without its cancellation near 0.
    Eigen::JacobiSVD<Matrix> svd(s1 * s2, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Matrix const u = svd.matrixV() * svd.matrixU().transpose();
    double const bures2 = (s1 - s2 * u).squaredNorm();
    return std::sqrt((mean1 - mean2).squaredNorm() + std::max(bures2, 0.0));
}

W2Report w2_convergence_experiment(std::shared_ptr<Potential const> p,
                                   double epsilon,
                                   std::int64_t replicas,
                                   std::uint64_t seed,
                                   W2Options const& options)
{
    if (!p)
    {
        throw InputError("w2 experiment needs a potential");
    }
    auto const& q = require_quadratic(*p, "W2 experiment");
    if (replicas < kMinW2Replicas)
    {
        throw InputError("w2 experiment needs at least 10^4 replicas");
    }
    ChainConfig cfg = default_config(p, epsilon, seed, options.c_n);
    if (options.steps_override > 0)
    {
        cfg.steps = options.steps_override;
    }

    auto const n = static_cast<std::size_t>(replicas);
    std::vector<Vector> endpoints(n);
    if (options.solver == SolverKind::exact)
    {
        cfg.mode = ChainMode::ideal;
        cfg.solver = SolverKind::exact;
        cfg.delta = 0;
        cfg.validate();
        auto const kernel = exact_gaussian_hmc_kernel(*p, cfg.step_size, cfg.steps);
        Vector const start = find_minimizer(*p, start_tolerance(*p)).point;
        parallel_for(n, options.threads, [&](std::size_t i) {
            RandomStream stream(seed, i);
            endpoints[i] = sample_gaussian_kernel(*p, kernel, start, stream);
        });
    }
    else
    {
        cfg.solver = options.solver;
        auto chains = run_chains(cfg, n, options.threads, false);
        for (std::size_t i = 0; i < n; ++i)
        {
            endpoints[i] = std::move(chains[i].points.back());
        }
    }

    auto const d = p->dim();
    W2Report r;
    r.empirical_mean = Vector::Zero(d);
    for (auto const& x : endpoints)
    {
        r.empirical_mean += x;
    }
    r.empirical_mean /= static_cast<double>(n);
    r.empirical_cov = Matrix::Zero(d, d);
    for (auto const& x : endpoints)
    {
        Vector const dx = x - r.empirical_mean;
        r.empirical_cov.noalias() += dx * dx.transpose();
    }
    r.empirical_cov /= static_cast<double>(n - 1);
    r.w2 = gaussian_w2(r.empirical_mean, r.empirical_cov, q.center, target_covariance(q));
    r.target_bound = epsilon / std::sqrt(p->mu());
    r.replicas = replicas;
    r.steps = cfg.steps;
    r.c_n = options.c_n;
    r.solver = options.solver;
    return r;
}

std::vector<W2Report> w2_with_fallback(std::shared_ptr<Potential const> p,
                                       double epsilon,
                                       std::int64_t replicas,
                                       std::uint64_t seed,
                                       W2Options const& options)
{
    std::vector<W2Report> attempts;
    attempts.push_back(w2_convergence_experiment(p, epsilon, replicas, seed, options));
    if (!attempts.back().passed())
    {
        W2Options doubled = options;
        doubled.c_n *= 2;
        attempts.push_back(w2_convergence_experiment(p, epsilon, replicas, seed, doubled));
    }
    return attempts;
}

GradientStats amortized_gradient_stats(GradientLedger const& ledger)
{
    return amortized_gradient_stats(std::span<GradientLedger const>(&ledger, 1));
}

GradientStats amortized_gradient_stats(std::span<GradientLedger const> ledgers)
{
    double grads = 0;
    double norm_sq = 0;
    std::size_t steps = 0;
    for (auto const& l : ledgers)
    {
        if (l.grad_norms.size() != l.per_step.size())
        {
            throw InputError("ledger columns differ in length");
        }
        for (std::size_t k = 0; k < l.size(); ++k)
        {
            grads += static_cast<double>(l.per_step[k]);
            norm_sq += l.grad_norms[k] * l.grad_norms[k];
        }
        steps += l.size();
    }
    if (steps == 0)
    {
        throw InputError("gradient ledger is empty");
    }
    return {grads / static_cast<double>(steps), norm_sq / static_cast<double>(steps)};
}

LogLogFit fit_log_log(std::span<double const> x, std::span<double const> y)
{
    if (x.size() != y.size())
    {
        throw InputError("fit inputs differ in length");
    }
    if (x.size() < 3)
    {
        throw InputError("log-log fit needs at least 3 points");
    }
    auto const n = static_cast<double>(x.size());
    std::vector<double> lx(x.size());
    std::vector<double> ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        if (!(x[i] > 0) || !(y[i] > 0))
        {
            throw InputError("log-log fit needs positive values");
        }
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    double const mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    double const my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0;
    double sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i)
    {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0))
    {
        throw DegenerateInputError("log-log fit needs distinct x values");
    }
    LogLogFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < lx.size(); ++i)
    {
        double const e = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ss += e * e;
    }
    fit.rms_residual = std::sqrt(ss / n);
    return fit;
}

std::int64_t default_burn_in(double kappa, double c)
{
    return 10 * static_cast<std::int64_t>(std::ceil(2.0 * c * c * kappa));
}

std::vector<double> coordinate_series(ChainConfig const& config,
                                      Eigen::Index coordinate,
                                      std::int64_t burn_in,
                                      std::int64_t samples,
                                      std::uint64_t chain_index)
{
    config.validate();
    auto const& p = *config.potential;
    if (coordinate < 0 || coordinate >= p.dim())
    {
        throw InputError("coordinate out of range");
    }
    if (burn_in < 0 || samples < 0)
    {
        throw InputError("burn-in and sample counts must be non-negative");
    }
    Vector x = config.start ? *config.start : find_minimizer(p, start_tolerance(p)).point;
    RandomStream stream(config.seed, chain_index);
    for (std::int64_t k = 0; k < burn_in; ++k)
    {
        x = hmc_step(config, x, stream).position;
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(samples));
    for (std::int64_t k = 0; k < samples; ++k)
    {
        x = hmc_step(config, x, stream).position;
        out.push_back(x[coordinate]);
    }
    return out;
}

ScalingReport relaxation_scaling_experiment(std::vector<double> const& kappas,
                                            double c,
                                            std::int64_t samples_per_chain,
                                            std::uint64_t seed,
                                            unsigned threads)
{
    if (kappas.size() < 3)
    {
        throw InputError("relaxation scaling needs at least 3 kappa values");
    }
    for (double k : kappas)
    {
        if (!(k >= 1))
        {
            throw InputError("kappa must be at least 1");
        }
    }
    ScalingReport r;
    r.kappas = kappas;
    r.measurements.resize(kappas.size());
    r.predicted.resize(kappas.size());
    r.estimates.resize(kappas.size());
    parallel_for(kappas.size(), threads, [&](std::size_t i) {
        auto p = std::make_shared<Potential const>(Potential::quadratic_spread(2, 1.0, kappas[i]));
        auto cfg = ideal_config(p, c, samples_per_chain, seed);
        auto const series = coordinate_series(cfg, 0, default_burn_in(kappas[i], c), samples_per_chain, i);
        r.estimates[i] = lag1_autocorrelation(series, 0);
        r.measurements[i] = r.estimates[i].relaxation();
        r.predicted[i] = 1.0 / gaussian_chain_exact_gap(1.0, kappas[i], c).gap_slow;
    });
    auto const fit = fit_log_log(r.kappas, r.measurements);
    r.fitted_exponent = fit.slope;
    r.fit_residual = fit.rms_residual;
    return r;
}

ScalingReport closed_form_relaxation_scaling(std::vector<double> const& kappas, double c)
{
    ScalingReport r;
    r.kappas = kappas;
    for (double k : kappas)
    {
        double const tau = 1.0 / gaussian_chain_exact_gap(1.0, k, c).gap_slow;
        r.measurements.push_back(tau);
        r.predicted.push_back(tau);
    }
    auto const fit = fit_log_log(r.kappas, r.measurements);
    r.fitted_exponent = fit.slope;
    r.fit_residual = fit.rms_residual;
    return r;
}

std::vector<GradientScalingRow> gradient_scaling_experiment(std::vector<double> const& kappas,
                                                            std::vector<double> const& epsilons,
                                                            std::uint64_t seed,
                                                            GradientScalingOptions const& options)
{
    if (kappas.empty() || epsilons.empty())
    {
        throw InputError("gradient scaling needs kappa and epsilon values");
    }
    if (options.steps < 1 || options.chains < 1)
    {
        throw InputError("gradient scaling needs steps >= 1 and chains >= 1");
    }
    std::vector<GradientScalingRow> rows;
    for (double kappa : kappas)
    {
        if (!(kappa >= 1))
        {
            throw InputError("kappa must be at least 1");
        }
        double const lipschitz = options.mu * kappa;
        auto p = std::make_shared<Potential const>(
            options.kind == PotentialKind::quadratic
                ? Potential::quadratic_spread(options.dim, options.mu, lipschitz)
                : Potential::logcosh(options.dim, options.mu, lipschitz));
        for (double eps : epsilons)
        {
            auto cfg = default_config(p, eps, seed);
            cfg.steps = options.steps;
            auto const chains = run_chains(cfg, static_cast<std::size_t>(options.chains), options.threads, false);
            std::vector<GradientLedger> ledgers;
            ledgers.reserve(chains.size());
            for (auto const& ch : chains)
            {
                ledgers.push_back(ch.ledger);
            }
            auto const stats = amortized_gradient_stats(ledgers);
            rows.push_back({kappa, eps, stats.mean_per_step, stats.mean_grad_norm_sq, options.steps,
                            options.chains});
        }
    }
    return rows;
}

std::vector<OdeCheckRow> ode_check_experiment(Potential const& p,
                                              std::vector<double> const& deltas,
                                              std::int64_t trials,
                                              std::uint64_t seed,
                                              int degree)
{
    if (trials < 1)
    {
        throw InputError("ode check needs at least one trial");
    }
    double const t = kCollocationTimeLimit / std::sqrt(p.lipschitz());
    double const spread = 1.0 / std::sqrt(p.mu());
    std::vector<OdeCheckRow> rows;
    for (std::size_t k = 0; k < deltas.size(); ++k)
    {
        double const delta = deltas[k];
        if (!(delta > 0))
        {
            throw InputError("ode check deltas must be positive");
        }
        for (std::int64_t i = 0; i < trials; ++i)
        {
            RandomStream stream(seed, k * static_cast<std::uint64_t>(trials) + static_cast<std::uint64_t>(i));
            PhaseState s0;
            s0.position = p.minimizer() + spread * standard_normals(p.dim(), stream);
            s0.velocity = standard_normals(p.dim(), stream);
            Vector const g0 = p.gradient(s0.position);
            auto const pieces = piece_count(s0.velocity.norm(), g0.norm(), p.lipschitz(), t, delta);
            auto const r = collocation_flow(p, s0, t, delta, pieces, degree);
            Vector const reference = p.kind() == PotentialKind::quadratic
                                         ? exact_quadratic_flow(p, s0, t).position
                                         : adaptive_reference_flow(p, s0, t, delta / 100).final.position;
            double const c_const = s0.velocity.norm() + t * g0.norm();
            OdeCheckRow row;
            row.trial = i;
            row.delta = delta;
            row.error = (r.final.position - reference).norm();
            row.gradients = r.gradient_evaluations;
            row.pieces = pieces;
            row.iterations = r.iterations;
            row.gradient_constant = static_cast<double>(r.gradient_evaluations)
                                    / (static_cast<double>(pieces) * (degree + 1)
                                       * std::log(c_const * t / delta + 2.0));
            rows.push_back(row);
        }
    }
    return rows;
}

double FidelityReport::max_distance() const
{
    return distances.empty() ? 0.0 : *std::max_element(distances.begin(), distances.end());
}

FidelityReport discretization_fidelity(std::shared_ptr<Potential const> p,
                                       double epsilon,
                                       std::int64_t steps,
                                       std::uint64_t seed)
{
    auto cfg = default_config(p, epsilon, seed);
    cfg.steps = steps;
    cfg.validate();
    FidelityReport report;
    report.delta = cfg.delta;
    Vector x = find_minimizer(*p, start_tolerance(*p)).point;
    RandomStream stream(seed, 0);
    for (std::int64_t k = 0; k < steps; ++k)
    {
        Vector const v = standard_normals(p->dim(), stream);
        auto step = hmc_step_with_velocity(cfg, x, v);
        Vector const ideal = p->kind() == PotentialKind::quadratic
                                 ? exact_quadratic_flow(*p, {x, v}, cfg.step_size).position
                                 : adaptive_reference_flow(*p, {x, v}, cfg.step_size, cfg.delta / 100).final.position;
        report.distances.push_back((step.position - ideal).norm());
        x = std::move(step.position);
    }
    return report;
}

bool StationarityReport::passed(double z) const
{
    for (Eigen::Index i = 0; i < mean.size(); ++i)
    {
        if (std::abs(mean[i]) > z * mean_std_err[i])
        {
            return false;
        }
        if (std::abs(variance[i] - target_variance[i]) > z * variance_std_err[i])
        {
            return false;
        }
    }
    return true;
}

StationarityReport gaussian_stationarity_check(std::shared_ptr<Potential const> p,
                                               double c,
                                               std::int64_t replicas,
                                               std::uint64_t seed)
{
    auto const& q = require_quadratic(*p, "stationarity check");
    if (replicas < 2)
    {
        throw InputError("stationarity check needs at least 2 replicas");
    }
    auto cfg = ideal_config(p, c, 1, seed);
    auto const d = p->dim();
    auto const n = static_cast<double>(replicas);
    Vector sum = Vector::Zero(d);
    Vector sum_sq = Vector::Zero(d);
    for (std::int64_t i = 0; i < replicas; ++i)
    {
        RandomStream stream(seed, static_cast<std::uint64_t>(i));
        Vector const x0 = sample_quadratic_target(*p, stream);
        Vector const dx = hmc_step(cfg, x0, stream).position - q.center;
        sum += dx;
        sum_sq += dx.cwiseAbs2();
    }
    StationarityReport r;
    r.replicas = replicas;
    r.mean = sum / n;
    r.variance = (sum_sq - n * r.mean.cwiseAbs2()) / (n - 1);
    r.target_variance = target_covariance(q).diagonal();
    r.mean_std_err = (r.target_variance / n).cwiseSqrt();
    r.variance_std_err = r.target_variance * std::sqrt(2.0 / (n - 1));
    return r;
}

}  // namespace hmc
