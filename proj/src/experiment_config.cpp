#include "hmc/experiment_config.hpp"

#include "hmc/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hmc
{
namespace
{
template<class T>
void put_optional(nlohmann::json& j, char const* key, std::optional<T> const& v)
{
    if (v)
    {
        j[key] = *v;
    }
}

template<class T>
void get(nlohmann::json const& j, char const* key, T& v)
{
    if (auto it = j.find(key); it != j.end() && !it->is_null())
    {
        it->get_to(v);
    }
}

template<class T>
void get_optional(nlohmann::json const& j, char const* key, std::optional<T>& v)
{
    if (auto it = j.find(key); it != j.end())
    {
        v = it->is_null() ? std::nullopt : std::optional<T>(it->get<T>());
    }
}

constexpr char const* kKeys[] = {"potential", "dim",    "mu",       "L",      "kappa",   "eigenvalues",
                                 "center",    "eps",    "steps",    "chains", "seed",    "c",
                                 "mode",      "solver", "degree",   "c_n",    "delta",   "epsilons", "pairs",
                                 "t_points",  "t_max",  "replicas", "kappas", "burn_in", "trials",
                                 "max_rows",  "out",    "threads"};
}  // namespace

void to_json(nlohmann::json& j, ExperimentConfig const& c)
{
    j = nlohmann::json{{"potential", c.potential},
                       {"dim", c.dim},
                       {"mu", c.mu},
                       {"L", c.L},
                       {"eigenvalues", c.eigenvalues},
                       {"center", c.center},
                       {"eps", c.eps},
                       {"steps", c.steps},
                       {"chains", c.chains},
                       {"seed", c.seed},
                       {"mode", c.mode},
                       {"solver", c.solver},
                       {"degree", c.degree},
                       {"c_n", c.c_n},
                       {"delta", c.delta},
                       {"epsilons", c.epsilons},
                       {"pairs", c.pairs},
                       {"t_points", c.t_points},
                       {"replicas", c.replicas},
                       {"kappas", c.kappas},
                       {"burn_in", c.burn_in},
                       {"trials", c.trials},
                       {"max_rows", c.max_rows},
                       {"out", c.out},
                       {"threads", c.threads}};
    put_optional(j, "kappa", c.kappa);
    put_optional(j, "c", c.c);
    put_optional(j, "t_max", c.t_max);
}

void from_json(nlohmann::json const& j, ExperimentConfig& c)
{
    if (!j.is_object())
    {
        throw InputError("experiment config must be a JSON object");
    }
    for (auto const& [key, value] : j.items())
    {
        if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys))
        {
            throw InputError("unknown config key '" + key + "'");
        }
    }
    try
    {
        get(j, "potential", c.potential);
        get(j, "dim", c.dim);
        get(j, "mu", c.mu);
        get(j, "L", c.L);
        get_optional(j, "kappa", c.kappa);
        get(j, "eigenvalues", c.eigenvalues);
        get(j, "center", c.center);
        get(j, "eps", c.eps);
        get(j, "steps", c.steps);
        get(j, "chains", c.chains);
        get(j, "seed", c.seed);
        get_optional(j, "c", c.c);
        get(j, "mode", c.mode);
        get(j, "solver", c.solver);
        get(j, "degree", c.degree);
        get(j, "c_n", c.c_n);
        get(j, "delta", c.delta);
        get(j, "epsilons", c.epsilons);
        get(j, "pairs", c.pairs);
        get(j, "t_points", c.t_points);
        get_optional(j, "t_max", c.t_max);
        get(j, "replicas", c.replicas);
        get(j, "kappas", c.kappas);
        get(j, "burn_in", c.burn_in);
        get(j, "trials", c.trials);
        get(j, "max_rows", c.max_rows);
        get(j, "out", c.out);
        get(j, "threads", c.threads);
    }
    catch (nlohmann::json::exception const& e)
    {
        throw InputError(std::string("bad config value: ") + e.what());
    }
}

ExperimentConfig merge_config(ExperimentConfig const& base, nlohmann::json const& patch)
{
    nlohmann::json j = base;
    if (!patch.is_object())
    {
        throw InputError("config patch must be a JSON object");
    }
    for (auto const& [key, value] : patch.items())
    {
        j[key] = value;
    }
    return j.get<ExperimentConfig>();
}

ExperimentConfig default_experiment_config(std::string const& command)
{
    ExperimentConfig c;
    if (command == "contraction")
    {
        c.potential = "logcosh";
        c.dim = 3;
        c.L = 100.0;
    }
    else if (command == "lowerbound")
    {
        c.L = 100.0;
        c.c = 2.0;
        c.mode = "ideal";
        c.solver = "exact";
        c.steps = 1'000'000;
    }
    else if (command == "w2")
    {
        c.dim = 10;
        c.L = 10.0;
        c.mode = "ideal";
        c.solver = "exact";
    }
    else if (command == "gradscaling")
    {
        c.dim = 1000;
        c.kappas = {16.0, 64.0};
        c.steps = 100;
        c.chains = 4;
    }
    else if (command == "odecheck")
    {
        c.L = 1.0;
        c.delta = {1e-6, 1e-8};
    }
    return c;
}

std::shared_ptr<Potential const> ExperimentConfig::make_potential() const
{
    auto const kind = parse_potential_kind(potential);
    double const lip = lipschitz();
    if (kind == PotentialKind::logcosh)
    {
        if (!eigenvalues.empty() || !center.empty())
        {
            throw InputError("eigenvalues/center apply only to the quadratic potential");
        }
        return std::make_shared<Potential const>(Potential::logcosh(dim, mu, lip));
    }
    Vector ctr;
    if (!center.empty())
    {
        ctr = Eigen::Map<Vector const>(center.data(), static_cast<Eigen::Index>(center.size()));
    }
    if (!eigenvalues.empty())
    {
        if (static_cast<std::int64_t>(eigenvalues.size()) != dim)
        {
            throw InputError("eigenvalue list length must equal dim");
        }
        Vector ev = Eigen::Map<Vector const>(eigenvalues.data(), static_cast<Eigen::Index>(eigenvalues.size()));
        return std::make_shared<Potential const>(Potential::quadratic_diagonal(ev, ctr, mu, lip));
    }
    return std::make_shared<Potential const>(Potential::quadratic_spread(dim, mu, lip, ctr));
}

}  // namespace hmc
