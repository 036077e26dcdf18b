#include "hmc/cli.hpp"

#include "hmc/analysis.hpp"
#include "hmc/errors.hpp"
#include "hmc/experiment_config.hpp"
#include "hmc/hmc_chain.hpp"
#include "hmc/parallel.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

namespace hmc::cli
{
namespace
{
using nlohmann::json;
namespace fs = std::filesystem;

std::string num(double x)
{
    return fmt::format("{:.17g}", x);
}

class CsvFile
{
public:
    CsvFile(fs::path const& path, std::string const& header) : path_(path), file_(path, std::ios::binary)
    {
        if (!file_)
        {
            throw InputError("cannot open " + path.string() + " for writing");
        }
        file_ << header << '\n';
    }

    template<class... Fields>
    void row(Fields const&... fields)
    {
        std::string line;
        bool first = true;
        ((line += (first ? "" : ","), line += cell(fields), first = false), ...);
        file_ << line << '\n';
    }

    fs::path const& path() const { return path_; }

private:
    static std::string cell(double x) { return num(x); }
    static std::string cell(std::int64_t x) { return std::to_string(x); }
    static std::string cell(std::uint64_t x) { return std::to_string(x); }
    static std::string cell(int x) { return std::to_string(x); }
    static std::string cell(std::string const& s) { return s; }

    fs::path path_;
    std::ofstream file_;
};

/// Outcome of one subcommand: results for the JSON summary plus a verdict.
struct Outcome
{
    json results = json::object();
    bool criterion_ok = true;
};

// Flag registration: every flag writes into a JSON patch only when given, so
// defaults < config file < flags.
class Flags
{
public:
    explicit Flags(CLI::App& app) : app_(app) {}

    template<class T>
    void add(std::string const& names, std::string const& key, std::string const& help)
    {
        auto store = std::make_shared<T>();
        CLI::Option* opt = app_.add_option(names, *store, help);
        if constexpr (std::is_same_v<T, std::vector<double>>)
        {
            opt->delimiter(',');
        }
        emit_.push_back([opt, store, key](json& j) {
            if (opt->count() > 0)
            {
                j[key] = *store;
            }
        });
    }

    json patch() const
    {
        json j = json::object();
        for (auto const& e : emit_)
        {
            e(j);
        }
        return j;
    }

private:
    CLI::App& app_;
    std::vector<std::function<void(json&)>> emit_;
};

void register_flags(Flags& f)
{
    using Doubles = std::vector<double>;
    f.add<std::string>("--potential", "potential", "quadratic | logcosh");
    f.add<std::int64_t>("--dim", "dim", "dimension d");
    f.add<double>("--mu", "mu", "strong convexity mu");
    f.add<double>("--L", "L", "smoothness L");
    f.add<double>("--kappa", "kappa", "condition number; sets L = mu * kappa");
    f.add<Doubles>("--eigenvalues", "eigenvalues", "quadratic spectrum, comma separated");
    f.add<Doubles>("--center", "center", "quadratic minimizer b, comma separated");
    f.add<double>("--eps", "eps", "target accuracy epsilon");
    f.add<Doubles>("--epsilons", "epsilons", "gradscaling accuracies, comma separated");
    f.add<std::int64_t>("--steps", "steps", "number of HMC steps N");
    f.add<std::int64_t>("--chains", "chains", "independent chains");
    f.add<std::uint64_t>("--seed", "seed", "RNG seed");
    f.add<double>("--c", "c", "step-size constant, T = 1/(c sqrt(L))");
    f.add<std::string>("--mode", "mode", "ideal | discretized");
    f.add<std::string>("--solver", "solver", "auto | exact | adaptive | collocation");
    f.add<std::int64_t>("--degree", "degree", "collocation degree D");
    f.add<double>("--c-n,--c_n", "c_n", "step-count constant C_N");
    f.add<Doubles>("--delta", "delta", "ODE tolerances, comma separated");
    f.add<std::int64_t>("--pairs", "pairs", "coupled pairs");
    f.add<std::int64_t>("--t-points,--t_points", "t_points", "time grid size");
    f.add<double>("--t-max,--t_max", "t_max", "largest grid time");
    f.add<std::int64_t>("--replicas", "replicas", "independent replicas for w2");
    f.add<Doubles>("--kappas", "kappas", "condition numbers, comma separated");
    f.add<std::int64_t>("--burn-in,--burn_in", "burn_in", "discarded steps");
    f.add<std::int64_t>("--trials", "trials", "odecheck trials per delta");
    f.add<std::int64_t>("--max-rows,--max_rows", "max_rows", "cap on chains x steps");
    f.add<std::string>("--out", "out", "output directory");
    f.add<std::int64_t>("--threads", "threads", "worker threads (default HMC_THREADS, then all cores)");
}

json load_json_file(std::string const& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw InputError("cannot read config file " + path);
    }
    try
    {
        return json::parse(in);
    }
    catch (json::parse_error const& e)
    {
        throw InputError(std::string("config file is not valid JSON: ") + e.what());
    }
}

void require_positive(std::int64_t v, char const* name)
{
    if (v <= 0)
    {
        throw InputError(std::string(name) + " must be positive");
    }
}

unsigned threads_of(ExperimentConfig const& cfg)
{
    return resolve_threads(static_cast<int>(cfg.threads));
}

/// Chain configuration for `sample`, honouring mode, solver, c and steps.
ChainConfig chain_config(ExperimentConfig const& cfg, std::shared_ptr<Potential const> p)
{
    auto const mode = parse_chain_mode(cfg.mode);
    double const d = static_cast<double>(p->dim());
    ChainConfig cc;
    if (mode == ChainMode::discretized)
    {
        cc = default_config(p, cfg.eps, cfg.seed, cfg.c_n);
        if (cfg.c)
        {
            cc.c = *cfg.c;
            cc.step_size = 1.0 / (*cfg.c * std::sqrt(p->lipschitz()));
            double const t2 = cc.step_size * cc.step_size;
            cc.delta = std::sqrt(p->mu()) * t2 * cfg.eps / 16.0;
            cc.steps = static_cast<std::int64_t>(std::ceil(cfg.c_n * std::log(d / cfg.eps) / (p->mu() * t2)));
        }
    }
    else
    {
        double const c = cfg.c.value_or(2.0);
        double const t = 1.0 / (c * std::sqrt(p->lipschitz()));
        auto const n = static_cast<std::int64_t>(std::ceil(cfg.c_n * std::log(d / cfg.eps) / (p->mu() * t * t)));
        cc = ideal_config(p, c, n, cfg.seed, cfg.eps);
    }
    if (cfg.solver != "auto")
    {
        cc.solver = parse_solver_kind(cfg.solver);
    }
    if (cfg.steps >= 0)
    {
        cc.steps = cfg.steps;
    }
    cc.collocation_degree = static_cast<int>(cfg.degree);
    cc.validate();
    return cc;
}

Outcome cmd_sample(ExperimentConfig const& cfg, fs::path const& out)
{
    auto p = cfg.make_potential();
    ChainConfig const cc = chain_config(cfg, p);
    require_positive(cfg.chains, "chains");
    double const work = static_cast<double>(cfg.chains) * static_cast<double>(cc.steps + 1);
    if (work > static_cast<double>(cfg.max_rows))
    {
        throw InputError(fmt::format("{} chains x {} steps exceeds --max-rows {}; pass --steps to shorten the run",
                                     cfg.chains, cc.steps, cfg.max_rows));
    }
    auto const chains = run_chains(cc, static_cast<std::size_t>(cfg.chains), threads_of(cfg), true);

    std::string header = "chain,step";
    for (Eigen::Index i = 0; i < p->dim(); ++i)
    {
        header += fmt::format(",x{}", i);
    }
    header += ",grads";
    CsvFile traj(out / "trajectory.csv", header);
    CsvFile ledger(out / "ledger.csv", "chain,step,grads,v0_norm,grad_norm");
    for (auto const& ch : chains)
    {
        for (std::size_t k = 0; k < ch.points.size(); ++k)
        {
            std::string line = fmt::format("{},{}", ch.chain_index, k);
            for (Eigen::Index i = 0; i < p->dim(); ++i)
            {
                line += "," + num(ch.points[k](i));
            }
            std::int64_t const g = k == 0 ? 0 : ch.ledger.per_step[k - 1];
            traj.row(line, g);
        }
        for (std::size_t k = 0; k < ch.ledger.size(); ++k)
        {
            ledger.row(ch.chain_index, static_cast<std::uint64_t>(k + 1), ch.ledger.per_step[k],
                       ch.ledger.v0_norms[k], ch.ledger.grad_norms[k]);
        }
    }
    std::vector<GradientLedger> ledgers;
    for (auto const& ch : chains)
    {
        ledgers.push_back(ch.ledger);
    }
    auto const stats = amortized_gradient_stats(std::span<GradientLedger const>(ledgers));

    Outcome o;
    o.results = {{"step_size", cc.step_size},
                 {"steps", cc.steps},
                 {"delta", cc.delta},
                 {"mode", to_string(cc.mode)},
                 {"solver", to_string(cc.solver)},
                 {"mean_grads_per_step", stats.mean_per_step},
                 {"mean_grad_norm_sq", stats.mean_grad_norm_sq},
                 {"files", {traj.path().string(), ledger.path().string()}}};
    return o;
}

Outcome cmd_contraction(ExperimentConfig const& cfg, fs::path const& out)
{
    auto p = cfg.make_potential();
    require_positive(cfg.pairs, "pairs");
    if (cfg.t_points < 2)
    {
        throw InputError("t-points must be at least 2");
    }
    std::vector<double> grid;
    if (cfg.t_max)
    {
        double const limit = contraction_time_limit(*p);
        if (!(*cfg.t_max > 0) || *cfg.t_max > limit * (1 + 1e-12))
        {
            throw OutOfContractError(fmt::format("t-max must lie in (0, 1/(2 sqrt(L))] = (0, {}]", num(limit)));
        }
        for (std::int64_t i = 0; i < cfg.t_points; ++i)
        {
            grid.push_back(*cfg.t_max * static_cast<double>(i) / static_cast<double>(cfg.t_points - 1));
        }
    }
    else
    {
        grid = contraction_grid(*p, static_cast<std::size_t>(cfg.t_points));
    }
    CouplingSweepOptions opts;
    opts.threads = threads_of(cfg);
    auto const sweep = coupling_sweep(*p, static_cast<std::size_t>(cfg.pairs), grid, cfg.seed, opts);

    CsvFile con(out / "contraction.csv", "t,worst_ratio,bound");
    CsvFile crude(out / "crude.csv", "t,min_ratio,max_ratio");
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        con.row(sweep.contraction.t_grid[i], sweep.contraction.worst_ratio[i], sweep.contraction.bound[i]);
        crude.row(sweep.crude.t_grid[i], sweep.crude.min_ratio[i], sweep.crude.max_ratio[i]);
    }
    Outcome o;
    o.criterion_ok = sweep.contraction.passed() && sweep.crude.passed();
    o.results = {{"pairs", sweep.contraction.pairs_tested},
                 {"max_excess", sweep.contraction.max_excess()},
                 {"contraction_passed", sweep.contraction.passed()},
                 {"crude_lower_violation", sweep.crude.lower_violation()},
                 {"crude_upper_violation", sweep.crude.upper_violation()},
                 {"crude_passed", sweep.crude.passed()},
                 {"files", {con.path().string(), crude.path().string()}}};
    return o;
}

Outcome cmd_lowerbound(ExperimentConfig const& cfg, fs::path const& out)
{
    auto p = cfg.make_potential();
    if (p->kind() != PotentialKind::quadratic || p->quadratic()->eigenvectors.size() != 0)
    {
        throw UnsupportedMethodError("lowerbound needs a diagonal quadratic potential");
    }
    require_positive(cfg.steps, "steps");
    double const c = cfg.c.value_or(2.0);
    ChainConfig cc = ideal_config(p, c, cfg.steps, cfg.seed, cfg.eps);
    cc.validate();
    double const kappa = p->kappa();
    std::int64_t const burn_in = cfg.burn_in >= 0 ? cfg.burn_in : default_burn_in(kappa, c);

    auto const& eig = p->quadratic()->eigenvalues;
    Eigen::Index slow = 0;
    eig.minCoeff(&slow);

    CsvFile csv(out / "autocorr.csv", "coord,lag1,std_err,exact");
    json coords = json::array();
    AutocorrEstimate slow_est;
    for (Eigen::Index i = 0; i < p->dim(); ++i)
    {
        auto const series = coordinate_series(cc, i, burn_in, cfg.steps);
        auto const est = lag1_autocorrelation(series, 0);
        double const exact = std::cos(cc.step_size * std::sqrt(eig(i)));
        csv.row(static_cast<std::int64_t>(i), est.lag1, est.std_err, exact);
        coords.push_back({{"coord", i}, {"lag1", est.lag1}, {"std_err", est.std_err}, {"exact", exact}});
        if (i == slow)
        {
            slow_est = est;
        }
    }
    double const tau = slow_est.relaxation();
    double const rel_se = slow_est.relaxation_std_err() / tau;
    double const bound = 2.0 * c * c * kappa;
    double const threshold = (1.0 - 3.0 * rel_se) * bound;

    Outcome o;
    o.criterion_ok = tau >= threshold;
    o.results = {{"burn_in", burn_in},
                 {"step_size", cc.step_size},
                 {"slow_coordinate", slow},
                 {"relaxation", tau},
                 {"relaxation_rel_std_err", rel_se},
                 {"lower_bound", bound},
                 {"threshold", threshold},
                 {"coordinates", coords},
                 {"files", {csv.path().string()}}};
    return o;
}

Outcome cmd_w2(ExperimentConfig const& cfg, fs::path const& out)
{
    auto p = cfg.make_potential();
    if (p->kind() != PotentialKind::quadratic)
    {
        throw UnsupportedMethodError("w2 needs a quadratic potential");
    }
    require_positive(cfg.replicas, "replicas");
    W2Options opts;
    opts.c_n = cfg.c_n;
    opts.solver = cfg.solver == "auto" ? SolverKind::exact : parse_solver_kind(cfg.solver);
    opts.steps_override = cfg.steps > 0 ? cfg.steps : 0;
    opts.threads = threads_of(cfg);
    if (opts.solver != SolverKind::exact)
    {
        // Stepped chains: guard against the full schedule length (fallback doubles N).
        std::int64_t const n = opts.steps_override > 0 ? opts.steps_override
                                                       : default_config(p, cfg.eps, cfg.seed, 2.0 * cfg.c_n).steps;
        if (static_cast<double>(n) * static_cast<double>(cfg.replicas) > static_cast<double>(cfg.max_rows))
        {
            throw InputError(fmt::format("{} replicas x {} steps exceeds --max-rows {}; pass --steps",
                                         cfg.replicas, n, cfg.max_rows));
        }
    }
    auto const reports = w2_with_fallback(p, cfg.eps, cfg.replicas, cfg.seed, opts);

    CsvFile csv(out / "w2.csv", "replicas,N,w2,bound");
    json attempts = json::array();
    for (auto const& r : reports)
    {
        csv.row(r.replicas, r.steps, r.w2, r.target_bound);
        attempts.push_back({{"c_n", r.c_n}, {"steps", r.steps}, {"w2", r.w2}, {"bound", r.target_bound},
                            {"passed", r.passed()}});
    }
    Outcome o;
    o.criterion_ok = reports.back().passed();
    o.results = {{"solver", to_string(opts.solver)},
                 {"attempts", attempts},
                 {"c_n_passed", o.criterion_ok ? json(reports.back().c_n) : json(nullptr)},
                 {"files", {csv.path().string()}}};
    return o;
}

Outcome cmd_gradscaling(ExperimentConfig const& cfg, fs::path const& out)
{
    if (cfg.kappas.empty())
    {
        throw InputError("gradscaling needs --kappas");
    }
    std::vector<double> eps = cfg.epsilons.empty() ? std::vector<double>{cfg.eps, 2.0 * cfg.eps} : cfg.epsilons;
    GradientScalingOptions opts;
    opts.dim = cfg.dim;
    opts.mu = cfg.mu;
    opts.kind = parse_potential_kind(cfg.potential);
    require_positive(cfg.steps, "steps");
    require_positive(cfg.chains, "chains");
    opts.steps = cfg.steps;
    opts.chains = cfg.chains;
    opts.threads = threads_of(cfg);
    auto const rows = gradient_scaling_experiment(cfg.kappas, eps, cfg.seed, opts);

    CsvFile csv(out / "gradscaling.csv", "kappa,eps,mean_grads_per_step");
    for (auto const& r : rows)
    {
        csv.row(r.kappa, r.epsilon, r.mean_grads_per_step);
    }

    // Ratios between neighbouring kappas (same eps) and neighbouring eps (same kappa).
    auto lookup = [&](double k, double e) {
        for (auto const& r : rows)
        {
            if (r.kappa == k && r.epsilon == e)
            {
                return r.mean_grads_per_step;
            }
        }
        throw std::logic_error("missing gradscaling row");
    };
    auto ks = cfg.kappas;
    std::sort(ks.begin(), ks.end());
    std::sort(eps.begin(), eps.end());
    json checks = json::array();
    bool ok = true;
    auto check = [&](std::string kind, double a, double b, double observed, double predicted) {
        double const q = observed / predicted;
        bool const pass = q >= 0.7 && q <= 1.45;
        ok = ok && pass;
        checks.push_back({{"kind", kind}, {"from", a}, {"to", b}, {"observed", observed},
                          {"predicted", predicted}, {"passed", pass}});
    };
    for (double e : eps)
    {
        for (std::size_t i = 1; i < ks.size(); ++i)
        {
            check("kappa", ks[i - 1], ks[i], lookup(ks[i], e) / lookup(ks[i - 1], e), std::sqrt(ks[i] / ks[i - 1]));
        }
    }
    for (double k : ks)
    {
        for (std::size_t i = 1; i < eps.size(); ++i)
        {
            check("eps", eps[i - 1], eps[i], lookup(k, eps[i - 1]) / lookup(k, eps[i]), eps[i] / eps[i - 1]);
        }
    }
    Outcome o;
    o.criterion_ok = ok;
    o.results = {{"checks", checks}, {"files", {csv.path().string()}}};
    return o;
}

Outcome cmd_odecheck(ExperimentConfig const& cfg, fs::path const& out)
{
    auto p = cfg.make_potential();
    if (cfg.delta.empty())
    {
        throw InputError("odecheck needs --delta");
    }
    require_positive(cfg.trials, "trials");
    auto const rows = ode_check_experiment(*p, cfg.delta, cfg.trials, cfg.seed, static_cast<int>(cfg.degree));

    CsvFile csv(out / "odecheck.csv", "trial,delta,error,grads");
    double worst = 0;
    double constant = 0;
    for (auto const& r : rows)
    {
        csv.row(r.trial, r.delta, r.error, r.gradients);
        worst = std::max(worst, r.error / r.delta);
        constant = std::max(constant, r.gradient_constant);
    }
    Outcome o;
    o.criterion_ok = worst <= 10.0;
    o.results = {{"max_error_over_delta", worst},
                 {"max_gradient_constant", constant},
                 {"files", {csv.path().string()}}};
    return o;
}

using Command = Outcome (*)(ExperimentConfig const&, fs::path const&);

struct CommandSpec
{
    char const* name;
    char const* help;
    Command fn;
};

constexpr CommandSpec kCommands[] = {
    {"sample", "run HMC chains and write trajectory.csv and ledger.csv", cmd_sample},
    {"contraction", "coupled-flow contraction and crude bounds", cmd_contraction},
    {"lowerbound", "relaxation time of the Gaussian chain", cmd_lowerbound},
    {"w2", "W2 distance of x^(N) to the Gaussian target", cmd_w2},
    {"gradscaling", "amortized gradient cost against kappa and eps", cmd_gradscaling},
    {"odecheck", "collocation error and gradient counts against a reference flow", cmd_odecheck},
};

}  // namespace

int run(std::vector<std::string> const& args, std::ostream& out, std::ostream& err)
{
    auto const started = std::chrono::steady_clock::now();
    CLI::App app("Hamiltonian Monte Carlo experiments", "hmc_experiments");
    app.require_subcommand(1);
    app.fallthrough();
    Flags flags(app);
    register_flags(flags);
    std::string config_path;
    app.add_option("--config", config_path, "JSON file of flag values");
    for (auto const& c : kCommands)
    {
        app.add_subcommand(c.name, c.help);
    }

    try
    {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    }
    catch (CLI::ParseError const& e)
    {
        std::ostringstream o, e2;
        int const code = app.exit(e, o, e2);
        out << o.str();
        err << e2.str();
        return code == 0 ? kOk : kConfigError;
    }

    std::string const command = app.get_subcommands().front()->get_name();
    Command fn = nullptr;
    for (auto const& c : kCommands)
    {
        if (command == c.name)
        {
            fn = c.fn;
        }
    }

    ExperimentConfig cfg;
    Outcome outcome;
    try
    {
        cfg = default_experiment_config(command);
        if (!config_path.empty())
        {
            cfg = merge_config(cfg, load_json_file(config_path));
        }
        cfg = merge_config(cfg, flags.patch());
        fs::path const dir(cfg.out);
        fs::create_directories(dir);
        outcome = fn(cfg, dir);
    }
    catch (InputError const& e)
    {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }
    catch (fs::filesystem_error const& e)
    {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }
    catch (std::exception const& e)
    {
        err << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    }

    int const code = outcome.criterion_ok ? kOk : kCriterionViolated;
    double const seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json summary = {{"command", command},
                    {"config", cfg},
                    {"git_describe", HMC_GIT_DESCRIBE},
                    {"duration_seconds", seconds},
                    {"results", outcome.results},
                    {"criterion_passed", outcome.criterion_ok},
                    {"exit_code", code}};
    out << summary.dump(2) << '\n';
    if (!outcome.criterion_ok)
    {
        err << "criterion violated\n";
    }
    return code;
}

int run(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace hmc::cli
