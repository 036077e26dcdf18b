#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hmc::cli
{

/// Exit statuses of the experiment driver.
enum ExitCode : int
{
    kOk = 0,
    kConfigError = 1,
    kSolverFailure = 2,
    kCriterionViolated = 3,
};

/// Runs one subcommand. args excludes the program name. The JSON summary goes
/// to `out`, diagnostics to `err`.
int run(std::vector<std::string> const& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace hmc::cli
