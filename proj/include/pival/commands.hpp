#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pival/config.hpp"
#include "pival/priors.hpp"

namespace pival {

// Exit statuses of the pivalue tool.
enum ExitCode : int {
    exit_ok = 0,
    exit_domain = 2,    // domain, parse, support and improper-posterior errors
    exit_boundary = 3,  // boundary or non-converged fits not allowed by config
    exit_usage = 64,
    exit_io = 74,
};

// Per-coefficient priors: "flat", "student-t" (Cauchy intercept, t(2.5, 0, 1) slopes),
// "student-t-appendix" (t(2.5, 0, 1) intercept, Cauchy slopes), "diffuse-normal" (N(0, 50^2)).
std::vector<PriorSpec> prior_preset(const std::string& name, Eigen::Index p);

// The six location priors with sigma 1000, beta0 0, bounds +-200, sigma in [900, 1100], nu0 1, s 1000.
std::vector<std::pair<std::string, PriorSpec>> reference_priors();

std::string bundled_data_path();

// argv excludes the program name. `base` supplies defaults beneath --config and flags.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                const RunConfig& base = {});

}  // namespace pival
