#pragma once

#include "hmc/potentials.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hmc
{

/// Flat parameter record shared by every experiment subcommand. JSON keys
/// are the flag names without dashes.
struct ExperimentConfig
{
    std::string potential = "quadratic";
    std::int64_t dim = 2;
    double mu = 1.0;
    double L = 100.0;
    std::optional<double> kappa;  ///< when set, L = mu * kappa
    std::vector<double> eigenvalues;
    std::vector<double> center;
    double eps = 0.1;
    std::int64_t steps = -1;  ///< -1: use the schedule's N
    std::int64_t chains = 1;
    std::uint64_t seed = 0;
    std::optional<double> c;  ///< unset: per-command default
    std::string mode = "discretized";
    std::string solver = "auto";  ///< auto: exact or adaptive when ideal, collocation when discretized
    std::int64_t degree = 0;
    double c_n = 2.0;
    std::vector<double> delta;
    std::vector<double> epsilons;  ///< gradscaling; empty: {eps, 2 eps}
    std::int64_t pairs = 1000;
    std::int64_t t_points = 64;
    std::optional<double> t_max;
    std::int64_t replicas = 20000;
    std::vector<double> kappas;
    std::int64_t burn_in = -1;  ///< -1: 10 ceil(2 c^2 kappa)
    std::int64_t trials = 50;
    std::int64_t max_rows = 10'000'000;  ///< cap on simulated chain steps (chains x N)
    std::string out = ".";
    std::int64_t threads = 0;

    double lipschitz() const { return kappa ? mu * *kappa : L; }

    /// Builds the configured potential; throws InputError on bad parameters.
    std::shared_ptr<Potential const> make_potential() const;
};

void to_json(nlohmann::json& j, ExperimentConfig const& c);
void from_json(nlohmann::json const& j, ExperimentConfig& c);

/// Applies keys of `patch` onto `base`; unknown keys throw InputError.
ExperimentConfig merge_config(ExperimentConfig const& base, nlohmann::json const& patch);

/// Per-subcommand defaults.
ExperimentConfig default_experiment_config(std::string const& command);

}  // namespace hmc
